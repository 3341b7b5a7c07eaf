from pydantic import BaseModel, ConfigDict, Field


class WordFMeasure(BaseModel):
    """Coincidencias y recuentos agregados de un tipo de palabra (o de una cubeta)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    match: int = Field(default=0, ge=0)
    hyp_count: int = Field(default=0, ge=0)
    ref_count: int = Field(default=0, ge=0)

    @property
    def precision(self) -> float:
        return self.match / self.hyp_count if self.hyp_count else 0.0

    @property
    def recall(self) -> float:
        return self.match / self.ref_count if self.ref_count else 0.0

    @property
    def f(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "WordFMeasure") -> "WordFMeasure":
        return WordFMeasure(
            match=self.match + other.match,
            hyp_count=self.hyp_count + other.hyp_count,
            ref_count=self.ref_count + other.ref_count,
        )


class FMeasureBucket(WordFMeasure):
    """Cubeta de frecuencia [low, high]; high None significa sin cota superior."""

    low: int = Field(ge=0)
    high: int | None = None
    types: int = Field(default=0, ge=0)
