from collections.abc import Iterator

import numpy as np
import pytest

from src.model.batch import Batch
from src.model.example import Example
from src.services.batcher import BatchBuilder, Prefetcher, epochs, make_batches

SENTENCE_LENGTH: int = 30
TOKEN_BUDGET: int = 3000
LANG_IDS: dict[str, int] = {"de": 4, "nl": 5}


def example(lang: str, source_length: int, target_length: int | None = None, token: int = 7) -> Example:
    """Builds an example of the given subword lengths.

    Args:
        lang (str): Target language
        source_length (int): Source subwords
        target_length (int | None): Target subwords (defaults to the source length)
        token (int): Id used for every subword

    Returns:
        Example: Ready-made example
    """
    target_length = source_length if target_length is None else target_length
    return Example(
        target_lang=lang,
        source_ids=(LANG_IDS[lang],) + (token,) * source_length,
        target_in=(1,) + (token,) * target_length,
        target_out=(token,) * target_length + (2,),
        source_length=source_length,
        target_length=target_length,
    )


@pytest.fixture
def uniform_examples() -> list[Example]:
    """Fixture for 250 German examples of length 30."""
    return [example("de", SENTENCE_LENGTH, token=7 + i % 5) for i in range(250)]


def test_budget_fills_batches_with_100_sentences(uniform_examples: list[Example]) -> None:
    """Test that length 30 with budget 3000 yields 100 sentences per full batch."""
    batches = make_batches(uniform_examples, TOKEN_BUDGET, "bilingual", np.random.default_rng(0))
    assert sorted(batch.size for batch in batches) == [50, 100, 100]


def test_balanced_mode_splits_batches_evenly() -> None:
    """Test that two languages contribute equally to every full batch."""
    examples = [example(lang, SENTENCE_LENGTH) for lang in ("de", "nl") for _ in range(200)]
    batches = make_batches(examples, TOKEN_BUDGET, "balanced", np.random.default_rng(1))

    assert len(batches) == 4
    for batch in batches:
        assert batch.sentence_counts == {"de": 50, "nl": 50}


def test_budget_of_one_gives_single_sentence_batches() -> None:
    """Test that an empty batch always accepts the next sentence."""
    batches = make_batches([example("de", 5) for _ in range(7)], token_budget=1)
    assert [batch.size for batch in batches] == [1] * 7


def test_builder_counts_padded_tokens_on_both_sides() -> None:
    """Test the cost rule n_sentences · max_length per side."""
    builder = BatchBuilder(token_budget=20)
    builder.add(example("de", 4, 9))

    assert builder.fits(example("de", 2, 10))
    assert not builder.fits(example("de", 2, 11))


def test_every_example_appears_exactly_once(uniform_examples: list[Example]) -> None:
    """Test that an epoch is a partition of the examples."""
    mixed = uniform_examples[:40] + [example("nl", n % 12 + 1) for n in range(60)]
    batches = make_batches(mixed, 200, "balanced", np.random.default_rng(2))
    assert sum(batch.size for batch in batches) == len(mixed)


def test_batches_are_reproducible_from_the_seed(uniform_examples: list[Example]) -> None:
    """Test that the same seed gives the same batch order and content."""
    first = make_batches(uniform_examples[:90], 300, "bilingual", np.random.default_rng(3))
    second = make_batches(uniform_examples[:90], 300, "bilingual", np.random.default_rng(3))

    assert len(first) == len(second)
    for left, right in zip(first, second):
        np.testing.assert_array_equal(left.source, right.source)


def test_padding_and_masks() -> None:
    """Test padded matrices and the token masks."""
    batch = Batch.from_examples([example("de", 2), example("de", 4)])

    assert batch.source.shape == (2, 5)
    assert batch.source_mask.sum() == 3 + 5
    assert batch.target_tokens == 3 + 5
    assert batch.source[0, 3:].tolist() == [0, 0]


def test_by_language_trims_each_part() -> None:
    """Test that per-language sub-batches drop the columns only the other language needed."""
    batch = Batch.from_examples([example("de", 2), example("nl", 6), example("de", 1)])
    parts = batch.by_language()

    assert list(parts) == ["de", "nl"]
    assert parts["de"].source.shape == (2, 3)
    assert parts["de"].target_out.shape == (2, 3)
    assert parts["nl"].source.shape == (1, 7)
    assert batch.token_counts == {"de": 3 + 2, "nl": 7}


def test_epochs_never_end() -> None:
    """Test that the stream restarts after each epoch."""
    stream = epochs([example("de", 3)], 100, "bilingual", np.random.default_rng(4))
    assert all(next(stream).size == 1 for _ in range(5))


def test_prefetcher_preserves_order() -> None:
    """Test that prefetching only changes timing, never content or order."""
    batches = [Batch.from_examples([example("de", n)]) for n in range(1, 12)]
    with Prefetcher(iter(batches), depth=2) as stream:
        received = list(stream)
    assert [b.source.shape[1] for b in received] == [b.source.shape[1] for b in batches]


def test_prefetcher_reraises_producer_errors() -> None:
    """Test that a failure in the background thread reaches the consumer."""

    def failing() -> Iterator[Batch]:
        yield Batch.from_examples([example("de", 1)])
        raise ValueError("broken corpus")

    with Prefetcher(failing(), depth=1) as stream:
        assert next(stream).size == 1
        with pytest.raises(ValueError, match="broken corpus"):
            next(stream)


def test_prefetcher_can_stop_an_infinite_stream() -> None:
    """Test that leaving the context stops a producer blocked on a full queue."""
    stream = epochs([example("de", 3)], 100, "bilingual", np.random.default_rng(5))
    with Prefetcher(stream, depth=1) as prefetched:
        next(prefetched)
