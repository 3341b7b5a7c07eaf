from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.model.beam_config import BeamConfig
from src.model.model_config import ModelConfig
from src.model.sharing_plan import Strategy
from src.model.train_config import TrainConfig


class PairConfig(BaseModel):
    """Ficheros paralelos de un par (fuente -> idioma destino)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    train_source: Path
    train_target: Path
    dev_source: Path | None = None
    dev_target: Path | None = None

    @model_validator(mode="after")
    def check_dev_pair(self) -> "PairConfig":
        if (self.dev_source is None) != (self.dev_target is None):
            raise ValueError("dev_source and dev_target must be given together")
        return self


class DataConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    bpe: Path | None = None
    vocab: Path | None = None
    merges: int = Field(default=32000, ge=0)
    marker: str = "@@"


class SharingConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    strategy: str = "FULL"
    plan_file: Path | None = None

    @field_validator("strategy")
    @classmethod
    def check_strategy(cls, name: str) -> str:
        if name.upper() not in Strategy.__members__:
            raise ValueError(f"unknown sharing strategy '{name}', expected one of {', '.join(Strategy)}")
        return name.upper()

    @model_validator(mode="after")
    def check_explicit_plan(self) -> "SharingConfig":
        if self.strategy == Strategy.EXPLICIT and self.plan_file is None:
            raise ValueError("strategy EXPLICIT needs a plan_file")
        return self


class OutputConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    directory: Path = Path("runs/default")
    progress: bool = False


class RunConfig(BaseModel):
    """Configuración completa de una ejecución, una sección por campo.

    Los pares se declaran en secciones `[pair.<idioma>]`; su orden define el
    orden de los idiomas destino del plan.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    data: DataConfig = DataConfig()
    model: ModelConfig = ModelConfig()
    sharing: SharingConfig = SharingConfig()
    training: TrainConfig = TrainConfig()
    decode: BeamConfig = BeamConfig()
    output: OutputConfig = OutputConfig()
    pairs: dict[str, PairConfig] = Field(default_factory=dict)

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(self.pairs)
