from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelConfig(BaseModel):
    """Hiperparámetros de la arquitectura Transformer.

    Los valores por defecto corresponden a la configuración "base"
    (6 capas, d_model=512, d_ff=2048, 8 cabezas, p_drop=0.1).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    num_layers: int = Field(default=6, ge=0)
    d_model: int = Field(default=512, ge=2)
    d_ff: int = Field(default=2048, ge=1)
    heads: int = Field(default=8, ge=1)
    vocab_size: int = Field(default=33200, ge=1)
    p_drop: float = Field(default=0.1, ge=0.0, lt=1.0)
    max_position: int = Field(default=1024, ge=1)
    ln_eps: float = Field(default=1e-6, gt=0.0)
    norm_placement: Literal["pre", "post"] = "pre"  # post = x + sublayer(x) y luego norm
    score_scale: Literal["head", "model"] = "head"  # 1/sqrt(d_model/heads) o 1/sqrt(d_model)

    @model_validator(mode="after")
    def check_heads_divide_width(self) -> "ModelConfig":
        if self.d_model % self.heads:
            raise ValueError(f"d_model={self.d_model} is not divisible by heads={self.heads}")
        return self

    @property
    def d_head(self) -> int:
        return self.d_model // self.heads
