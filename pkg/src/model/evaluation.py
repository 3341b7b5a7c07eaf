from pydantic import BaseModel, ConfigDict


class LanguageEvaluation(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    lang: str
    loss: float
    token_accuracy: float
    bleu: float | None = None


class Evaluation(BaseModel):
    """Resultado de una evaluación en desarrollo: por idioma y agregado."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    step: int
    languages: tuple[LanguageEvaluation, ...]

    @property
    def mean_bleu(self) -> float:
        scores = [lang.bleu for lang in self.languages if lang.bleu is not None]
        return sum(scores) / len(scores) if scores else 0.0

    @property
    def loss(self) -> float:
        return sum(lang.loss for lang in self.languages) / len(self.languages) if self.languages else 0.0

    def improves_on(self, best_metric: float | None, best_loss: float | None) -> bool:
        """Mejor BLEU medio; a igual BLEU decide la menor pérdida de desarrollo."""
        if best_metric is None:
            return True
        if self.mean_bleu != best_metric:
            return self.mean_bleu > best_metric
        return best_loss is None or self.loss < best_loss


class TrainingSummary(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    steps: int
    final_loss: float
    best_step: int | None = None
    best_metric: float | None = None
    stopped_early: bool = False
