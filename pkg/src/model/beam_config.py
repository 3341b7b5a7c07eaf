from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class BeamConfig(BaseModel):
    """Parámetros del beam search: anchura 5 y α = 1 por defecto.

    La longitud máxima de salida es la longitud de la fuente más `extra_length`,
    sin pasar de `max_position - 1` del modelo.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    width: int = Field(default=5, ge=1)
    alpha: float = Field(default=1.0, ge=0.0)
    extra_length: int = Field(default=50, ge=1)
    normalization: Literal["gnmt", "average"] = "gnmt"
