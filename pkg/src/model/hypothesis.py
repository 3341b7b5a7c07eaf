from pydantic import BaseModel, ConfigDict


class Hypothesis(BaseModel):
    """Secuencia candidata (sin el token de inicio) y su log-probabilidad acumulada."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tokens: tuple[int, ...] = ()
    log_prob: float = 0.0
    finished: bool = False
    score: float | None = None

    @property
    def length(self) -> int:
        return len(self.tokens)
