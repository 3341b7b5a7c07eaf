from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class TrainConfig(BaseModel):
    """Hiperparámetros de entrenamiento.

    Los valores por defecto son los del modelo base: Adam con β1=0.9,
    β2=0.997, ε=1e-9, 16000 pasos de calentamiento, suavizado de etiquetas
    0.1 y lotes de unos 3000 tokens por lado.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    beta1: float = Field(default=0.9, ge=0.0, lt=1.0)
    beta2: float = Field(default=0.997, ge=0.0, lt=1.0)
    adam_eps: float = Field(default=1e-9, gt=0.0)
    bias_correction: bool = True
    warmup: int = Field(default=16000, ge=1)
    lr_scale: float = Field(default=2.0, gt=0.0)
    label_smoothing: float = Field(default=0.1, ge=0.0, lt=1.0)
    token_budget: int = Field(default=3000, ge=1)
    batch_mode: Literal["bilingual", "balanced"] = "balanced"
    loss_weighting: Literal["tokens", "sentences", "languages"] = "tokens"
    max_length: int = Field(default=70, ge=1)
    max_steps: int = Field(default=100000, ge=1)
    eval_interval: int = Field(default=1000, ge=1)
    log_interval: int = Field(default=100, ge=1)
    patience: int = Field(default=10, ge=1)
    seed: int = 1234
    prefetch: int = Field(default=4, ge=0)
