import math

import pytest

from src.model.errors import AlignmentError, CorpusError
from src.services.bleu import corpus_bleu, ngrams

REFERENCES: list[str] = [
    "the cat is on the mat",
    "there is a small house near the river",
    "we walked home after dinner",
]
HYPOTHESES: list[str] = [
    "the cat sat on the mat",
    "there is a house near the river",
    "we walked home after the dinner",
]


def test_identical_corpus_scores_100() -> None:
    """Test BLEU(x, x) = 100 with a brevity penalty of one."""
    score = corpus_bleu(REFERENCES, REFERENCES)

    assert score.score == pytest.approx(100.0)
    assert score.brevity_penalty == 1.0


def test_unigram_clipping() -> None:
    """Test that seven copies of "the" only match twice: precision 2/7."""
    score = corpus_bleu(["the the the the the the the"], ["the cat is on the mat"])

    assert score.precisions[0] == pytest.approx(100 * 2 / 7)
    assert score.score == 0.0


def test_zero_four_gram_matches_give_zero() -> None:
    """Test the unsmoothed geometric mean."""
    score = corpus_bleu(["the cat sat on a mat"], ["the cat sat in a mat"])

    assert score.precisions[3] == 0.0
    assert score.score == 0.0


def test_brevity_penalty() -> None:
    """Test exp(1 - r/c) for a perfect but half-length hypothesis."""
    score = corpus_bleu(["a b c d"], ["a b c d e f g h"])

    assert score.brevity_penalty == pytest.approx(math.exp(-1.0))
    assert score.score == pytest.approx(100 * math.exp(-1.0))


def test_longer_hypothesis_is_not_penalized() -> None:
    """Test that BP = 1 when the hypothesis is longer than the reference."""
    assert corpus_bleu(["a b c d e"], ["a b c d"]).brevity_penalty == 1.0


def test_score_is_invariant_to_sentence_order() -> None:
    """Test that reordering aligned pairs leaves corpus statistics unchanged."""
    forward = corpus_bleu(HYPOTHESES, REFERENCES)
    backward = corpus_bleu(HYPOTHESES[::-1], REFERENCES[::-1])

    assert 0.0 < forward.score < 100.0
    assert backward.score == pytest.approx(forward.score)


def test_line_count_mismatch() -> None:
    """Test that unaligned corpora are refused."""
    with pytest.raises(AlignmentError, match="2 lines but reference has 3"):
        corpus_bleu(HYPOTHESES[:2], REFERENCES)


def test_empty_corpus() -> None:
    """Test that there is nothing to score without hypotheses."""
    with pytest.raises(CorpusError):
        corpus_bleu([], [])


def test_ngrams() -> None:
    """Test n-gram counting with repeats."""
    assert ngrams("a b a b".split(), 2) == {("a", "b"): 2, ("b", "a"): 1}
    assert not ngrams(["a"], 2)


def test_report_format() -> None:
    """Test the one-line report."""
    assert str(corpus_bleu(REFERENCES, REFERENCES)).startswith("BLEU = 100.00 100.0/100.0/100.0/100.0")
