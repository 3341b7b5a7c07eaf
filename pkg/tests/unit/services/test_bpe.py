from pathlib import Path

import pytest

from src.model.bpe_model import BpeModel
from src.model.errors import CorpusError
from src.services.bpe import BpeCodec, BpeLearner, learn_bpe, load_bpe, save_bpe, word_counts

SAMPLE_COUNTS: dict[str, int] = {"newest": 6, "widest": 3}
SAMPLE_LINES: tuple[str, ...] = (
    "the lowest river runs under the newest bridge",
    "the widest river is low",
    "newer bridges are lower and wider",
)


@pytest.fixture
def learned() -> BpeModel:
    """Fixture for 40 merges learned on a handful of sentences."""
    return learn_bpe(SAMPLE_LINES, 40)


def test_first_merge_is_the_most_frequent_pair() -> None:
    """Test that (e, s) wins with count 6 + 3 = 9, tied pairs resolved lexicographically."""
    assert BpeLearner(SAMPLE_COUNTS).learn(1).merges == (("e", "s"),)


def test_zero_merges_segment_into_characters() -> None:
    """Test the character fallback with the continuation marker on all but the last symbol."""
    codec = BpeCodec(BpeLearner({"low": 1}).learn(0))
    assert codec.encode_word("low") == ("l@@", "o@@", "w")


def test_repeated_word_is_fully_merged_after_length_minus_one_merges() -> None:
    """Test that a single word of k characters becomes one symbol after k-1 merges, then learning stops."""
    model = BpeLearner({"abcd": 5}).learn(10)

    assert len(model.merges) == 3
    assert BpeCodec(model).encode_word("abcd") == ("abcd",)


def test_encoding_round_trips(learned: BpeModel) -> None:
    """Test that joining subwords restores every training line and a new one."""
    codec = BpeCodec(learned)
    for line in SAMPLE_LINES + ("unseen stones slowly rise",):
        assert codec.decode_tokens(codec.encode_line(line)) == line


def test_unseen_word_falls_back_to_known_pieces(learned: BpeModel) -> None:
    """Test that a word with no learned pairs is split into characters."""
    assert BpeCodec(learned).encode_word("xyz") == ("x@@", "y@@", "z")


def test_custom_marker() -> None:
    """Test that the continuation marker is configurable."""
    codec = BpeCodec(BpeLearner({"ab": 1}, marker="##").learn(0))

    assert codec.encode_word("ab") == ("a##", "b")
    assert codec.decode_tokens(["a##", "b", "c"]) == "ab c"


def test_learning_is_deterministic() -> None:
    """Test that the same corpus always yields the same merge list."""
    assert learn_bpe(SAMPLE_LINES, 25) == learn_bpe(reversed(SAMPLE_LINES), 25)


def test_save_and_load(learned: BpeModel, tmp_path: Path) -> None:
    """Test the merge file: header with marker and count, then one pair per line."""
    path = tmp_path / "bpe.codes"
    save_bpe(learned, path)
    lines = path.read_text(encoding="utf-8").splitlines()

    assert lines[0] == f"@@ {len(learned.merges)}"
    assert len(lines) == len(learned.merges) + 1
    assert load_bpe(path) == learned


def test_header_only_file_is_a_character_model(tmp_path: Path) -> None:
    """Test that a zero-merge file loads."""
    path = tmp_path / "empty.codes"
    path.write_text("@@ 0\n", encoding="utf-8")
    assert load_bpe(path).merges == ()


@pytest.mark.parametrize("content", ["", "@@ 2\na b\n", "@@ 1\na b c\n", "@@ one\n"])
def test_malformed_merge_files(content: str, tmp_path: Path) -> None:
    """Test missing headers, wrong counts and malformed pairs.

    Args:
        content (str): File content
    """
    path = tmp_path / "bad.codes"
    path.write_text(content, encoding="utf-8")
    with pytest.raises(CorpusError):
        load_bpe(path)


def test_empty_corpus_is_rejected() -> None:
    """Test that learning needs at least one word."""
    with pytest.raises(CorpusError):
        BpeLearner(word_counts(["", "   "]))


def test_word_counts_split_on_whitespace() -> None:
    """Test the word frequency table."""
    assert word_counts(["a b a", " b  c "]) == {"a": 2, "b": 2, "c": 1}
