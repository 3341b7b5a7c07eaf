from pydantic import BaseModel, ConfigDict, Field


class BleuScore(BaseModel):
    """BLEU de corpus con sus componentes.

    Attributes:
        score (float): BLEU en [0, 100]
        precisions (tuple[float, ...]): Precisión modificada por orden, en porcentaje
        brevity_penalty (float): exp(min(0, 1 - r/c))
        hyp_length (int): Tokens de la hipótesis (c)
        ref_length (int): Tokens de la referencia (r)
        orders (int): Órdenes que participan en la media geométrica
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    score: float = Field(ge=0.0, le=100.0)
    precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_length: int
    ref_length: int
    orders: int

    def __str__(self) -> str:
        precisions = "/".join(f"{p:.1f}" for p in self.precisions)
        ratio = self.hyp_length / self.ref_length if self.ref_length else 0.0
        return (
            f"BLEU = {self.score:.2f} {precisions} (BP = {self.brevity_penalty:.3f} "
            f"ratio = {ratio:.3f} hyp_len = {self.hyp_length} ref_len = {self.ref_length})"
        )
