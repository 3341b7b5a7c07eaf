from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.model.model_config import ModelConfig
from src.model.train_config import TrainConfig


class CheckpointHeader(BaseModel):
    """Bloque de cabecera de un checkpoint, serializado como JSON.

    Attributes:
        architecture (ModelConfig): Arquitectura del modelo
        plan (dict): `SharingPlan.describe()`
        vocab_hash (str): Huella del vocabulario usado
        step (int): Último paso de optimización completado
        best_metric (float | None): Mejor BLEU medio de desarrollo
        best_loss (float | None): Pérdida de desarrollo del mejor checkpoint
        best_step (int | None): Paso del mejor checkpoint
        bad_evals (int): Evaluaciones seguidas sin mejora
        batches_consumed (int): Lotes ya consumidos del flujo de entrenamiento
        rng_state (dict | None): Estado del generador de dropout
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    architecture: ModelConfig
    plan: dict
    vocab_hash: str
    step: int = Field(default=0, ge=0)
    best_metric: float | None = None
    best_loss: float | None = None
    best_step: int | None = Field(default=None, ge=0)
    bad_evals: int = Field(default=0, ge=0)
    batches_consumed: int = Field(default=0, ge=0)
    adam_step: int = Field(default=0, ge=0)
    rng_state: dict | None = None
    training: TrainConfig | None = None


@dataclass
class Checkpoint:
    header: CheckpointHeader
    parameters: dict[str, np.ndarray]
    first_moments: dict[str, np.ndarray] = field(default_factory=dict)
    second_moments: dict[str, np.ndarray] = field(default_factory=dict)
