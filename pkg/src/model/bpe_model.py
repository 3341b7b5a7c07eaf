from pydantic import BaseModel, ConfigDict, Field, field_validator

END_OF_WORD: str = "</w>"


class BpeModel(BaseModel):
    """Lista ordenada de fusiones BPE y el marcador de continuación.

    Attributes:
        merges (tuple[tuple[str, str], ...]): Pares (izquierda, derecha) en orden de aprendizaje
        marker (str): Sufijo de las subpalabras no finales
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    merges: tuple[tuple[str, str], ...] = ()
    marker: str = Field(default="@@", min_length=1)

    @field_validator("merges")
    @classmethod
    def check_unique(cls, merges: tuple[tuple[str, str], ...]) -> tuple[tuple[str, str], ...]:
        if len(set(merges)) != len(merges):
            raise ValueError("merge pairs must be unique")
        return merges

    @property
    def ranks(self) -> dict[tuple[str, str], int]:
        return {pair: rank for rank, pair in enumerate(self.merges)}
