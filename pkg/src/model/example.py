from pydantic import BaseModel, ConfigDict, Field


class Example(BaseModel):
    """Par de frases listo para el modelo.

    Attributes:
        target_lang (str): Idioma destino
        source_ids (tuple[int, ...]): [<2xx>] + ids de la fuente
        target_in (tuple[int, ...]): [<s>] + ids del destino
        target_out (tuple[int, ...]): ids del destino + [</s>]
        source_length (int): Subpalabras de la fuente sin especiales
        target_length (int): Subpalabras del destino sin especiales
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    target_lang: str
    source_ids: tuple[int, ...]
    target_in: tuple[int, ...]
    target_out: tuple[int, ...]
    source_length: int = Field(ge=0)
    target_length: int = Field(ge=1)
