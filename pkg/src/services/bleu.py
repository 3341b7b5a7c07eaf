import math
from collections import Counter
from collections.abc import Sequence

from src.model.bleu_score import BleuScore
from src.model.errors import AlignmentError, CorpusError


def ngrams(tokens: Sequence[str], n: int) -> Counter[tuple[str, ...]]:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses: Sequence[str], references: Sequence[str], max_n: int = 4) -> BleuScore:
    """BLEU de corpus sobre texto ya tokenizado, con una referencia y sin suavizado.

    Media geométrica de las precisiones modificadas (recortadas por el
    recuento en la referencia) por la penalización de brevedad
    exp(min(0, 1 - r/c)). Los órdenes sin ningún n-grama ni en hipótesis ni
    en referencia no participan, de modo que BLEU(x, x) = 100.

    Raises:
        AlignmentError: Si el número de líneas difiere
        CorpusError: Si no hay hipótesis
    """
    if len(hypotheses) != len(references):
        raise AlignmentError(AlignmentError.LINE_COUNT_MSG.format(n_hyp=len(hypotheses), n_ref=len(references)))
    if not hypotheses:
        raise CorpusError("cannot score an empty hypothesis corpus")

    matches, totals, ref_totals = [0] * max_n, [0] * max_n, [0] * max_n
    hyp_length = ref_length = 0
    for hypothesis, reference in zip(hypotheses, references):
        hyp_tokens, ref_tokens = hypothesis.split(), reference.split()
        hyp_length += len(hyp_tokens)
        ref_length += len(ref_tokens)
        for n in range(1, max_n + 1):
            hyp_counts, ref_counts = ngrams(hyp_tokens, n), ngrams(ref_tokens, n)
            matches[n - 1] += sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
            totals[n - 1] += max(len(hyp_tokens) - n + 1, 0)
            ref_totals[n - 1] += max(len(ref_tokens) - n + 1, 0)

    precisions = tuple(100.0 * m / t if t else 0.0 for m, t in zip(matches, totals))
    orders = [n for n in range(max_n) if totals[n] or ref_totals[n]]

    if hyp_length == 0:
        brevity_penalty = 1.0 if ref_length == 0 else 0.0
    else:
        brevity_penalty = math.exp(min(0.0, 1.0 - ref_length / hyp_length))

    if not orders:
        score = 100.0 if ref_length == hyp_length == 0 else 0.0
    elif any(matches[n] == 0 for n in orders):
        score = 0.0
    else:
        log_mean = sum(math.log(matches[n] / totals[n]) for n in orders) / len(orders)
        score = 100.0 * brevity_penalty * math.exp(log_mean)

    return BleuScore(
        score=min(score, 100.0),
        precisions=precisions,
        brevity_penalty=brevity_penalty,
        hyp_length=hyp_length,
        ref_length=ref_length,
        orders=len(orders),
    )
