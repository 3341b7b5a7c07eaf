import csv
import logging
from collections import Counter
from collections.abc import Mapping, Sequence
from pathlib import Path

from sortedcontainers import SortedList

from src.model.errors import AlignmentError
from src.model.fmeasure import FMeasureBucket, WordFMeasure

logger = logging.getLogger(__name__)

# cotas inferiores: {0}, [1,4], [5,9], [10,99], [100,999], [1000,∞)
DEFAULT_BOUNDS: tuple[int, ...] = (0, 1, 5, 10, 100, 1000)


def word_fmeasures(hypotheses: Sequence[str], references: Sequence[str]) -> dict[str, WordFMeasure]:
    """Coincidencias por tipo: Σ_frases min(n_hyp, n_ref), junto a los totales de cada lado.

    Raises:
        AlignmentError: Si el número de líneas difiere
    """
    if len(hypotheses) != len(references):
        raise AlignmentError(AlignmentError.LINE_COUNT_MSG.format(n_hyp=len(hypotheses), n_ref=len(references)))
    match: Counter[str] = Counter()
    hyp_count: Counter[str] = Counter()
    ref_count: Counter[str] = Counter()
    for hypothesis, reference in zip(hypotheses, references):
        hyp, ref = Counter(hypothesis.split()), Counter(reference.split())
        hyp_count.update(hyp)
        ref_count.update(ref)
        for word, count in hyp.items():
            match[word] += min(count, ref[word])
    return {
        word: WordFMeasure(match=match[word], hyp_count=hyp_count[word], ref_count=ref_count[word])
        for word in sorted(set(hyp_count) | set(ref_count))
    }


def fmeasure_buckets(
    hypotheses: Sequence[str],
    references: Sequence[str],
    train_counts: Mapping[str, int],
    bounds: Sequence[int] = DEFAULT_BOUNDS,
) -> list[FMeasureBucket]:
    """F-measure micro-promediado por cubetas de frecuencia en entrenamiento.

    Cada tipo cae en la cubeta de la mayor cota inferior que no supera su
    frecuencia; las palabras ausentes del entrenamiento tienen frecuencia 0.

    Args:
        hypotheses (Sequence[str]): Traducciones, una por línea
        references (Sequence[str]): Referencias alineadas
        train_counts (Mapping[str, int]): Frecuencias de palabra en el destino de entrenamiento
        bounds (Sequence[int]): Cotas inferiores estrictamente crecientes, empezando en 0

    Returns:
        list[FMeasureBucket]: Una entrada por cubeta, también las vacías
    """
    assert bounds and bounds[0] == 0, "bucket bounds must start at 0"
    assert all(a < b for a, b in zip(bounds, bounds[1:])), "bucket bounds must be strictly ascending"
    lows = SortedList(bounds)
    totals = [WordFMeasure() for _ in bounds]
    types = [0] * len(bounds)
    for word, counts in word_fmeasures(hypotheses, references).items():
        index = lows.bisect_right(train_counts.get(word, 0)) - 1
        totals[index] = totals[index] + counts
        types[index] += 1

    return [
        FMeasureBucket(
            low=low,
            high=bounds[i + 1] - 1 if i + 1 < len(bounds) else None,
            types=types[i],
            **totals[i].model_dump(),
        )
        for i, low in enumerate(bounds)
    ]


def write_bucket_csv(buckets: Sequence[FMeasureBucket], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bucket_low", "bucket_high", "match", "hyp_count", "ref_count", "f"])
        for bucket in buckets:
            high = "" if bucket.high is None else bucket.high
            writer.writerow([bucket.low, high, bucket.match, bucket.hyp_count, bucket.ref_count, f"{bucket.f:.4f}"])
    logger.info("Wrote %d F-measure bucket(s) to %s", len(buckets), path)


def write_word_csv(words: Mapping[str, WordFMeasure], train_counts: Mapping[str, int], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["word", "train_freq", "match", "hyp_count", "ref_count", "f"])
        for word, counts in words.items():
            writer.writerow(
                [word, train_counts.get(word, 0), counts.match, counts.hyp_count, counts.ref_count, f"{counts.f:.4f}"]
            )
