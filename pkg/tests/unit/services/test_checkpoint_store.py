import struct
from pathlib import Path

import numpy as np
import pytest

from src.model.checkpoint import Checkpoint, CheckpointHeader
from src.model.errors import IntegrityError, PlanError, VocabularyError
from src.model.model_config import ModelConfig
from src.services.checkpoint_store import MAGIC, load_checkpoint, save_checkpoint
from src.services.sharing import plan_from_strategy, resolve

VOCAB_HASH: str = "0f" * 32
CONFIG: ModelConfig = ModelConfig(num_layers=1, d_model=4, d_ff=8, heads=2, vocab_size=11, max_position=16)


@pytest.fixture
def checkpoint() -> Checkpoint:
    """Fixture for a KQ_BOTH checkpoint with parameters and Adam moments."""
    plan = plan_from_strategy("KQ_BOTH", ("de", "nl"), 1)
    state = resolve(CONFIG, plan, rng=np.random.default_rng(0)).state()
    return Checkpoint(
        header=CheckpointHeader(
            architecture=CONFIG,
            plan=plan.describe(),
            vocab_hash=VOCAB_HASH,
            step=12,
            best_metric=31.5,
            batches_consumed=12,
            adam_step=12,
            rng_state=np.random.default_rng(1).bit_generator.state,
        ),
        parameters=state,
        first_moments={name: np.full_like(values, 0.5) for name, values in state.items()},
        second_moments={name: np.full_like(values, 0.25) for name, values in state.items()},
    )


@pytest.fixture
def saved(checkpoint: Checkpoint, tmp_path: Path) -> Path:
    """Fixture for the checkpoint written to disk."""
    return save_checkpoint(checkpoint, tmp_path / "model.ckpt")


def test_round_trip_is_byte_identical(saved: Path, tmp_path: Path) -> None:
    """Test that loading and saving again reproduces the file exactly."""
    again = save_checkpoint(load_checkpoint(saved), tmp_path / "again.ckpt")
    assert again.read_bytes() == saved.read_bytes()


def test_loaded_values_match(checkpoint: Checkpoint, saved: Path) -> None:
    """Test header fields, tensor names, dtypes and values."""
    loaded = load_checkpoint(saved, vocab_hash=VOCAB_HASH, plan=checkpoint.header.plan)

    assert loaded.header == checkpoint.header
    assert list(loaded.parameters) == list(checkpoint.parameters)
    for name, values in checkpoint.parameters.items():
        assert loaded.parameters[name].dtype == np.float32
        np.testing.assert_array_equal(loaded.parameters[name], values)
    np.testing.assert_array_equal(next(iter(loaded.second_moments.values())), 0.25)


def test_file_layout_starts_with_magic_and_version(saved: Path) -> None:
    """Test the fixed prefix: magic bytes then a little-endian version 1."""
    blob = saved.read_bytes()
    assert blob[: len(MAGIC)] == MAGIC
    assert struct.unpack("<I", blob[len(MAGIC) : len(MAGIC) + 4]) == (1,)


def test_no_temporary_file_is_left(saved: Path) -> None:
    """Test the write-then-rename protocol."""
    assert not saved.with_suffix(".ckpt.tmp").exists()


def corrupt(path: Path, offset: int, value: int | None = None) -> Path:
    """Flips (or sets) one byte of a file in place.

    Args:
        path (Path): File to corrupt
        offset (int): Byte position, negative from the end
        value (int | None): New byte; the old one XOR 0xFF when None

    Returns:
        Path: The same path
    """
    blob = bytearray(path.read_bytes())
    blob[offset] = blob[offset] ^ 0xFF if value is None else value
    path.write_bytes(bytes(blob))
    return path


@pytest.mark.parametrize(
    "offset, value",
    [
        (0, None),
        (len(MAGIC), 2),
        (len(MAGIC) + 12, None),
        (-10, None),
        (-2, None),
    ],
)
def test_corruption_is_detected(saved: Path, offset: int, value: int | None) -> None:
    """Test bad magic, unsupported version, a flipped header byte and flipped record bytes.

    Args:
        offset (int): Byte to change
        value (int | None): Replacement byte
    """
    with pytest.raises(IntegrityError):
        load_checkpoint(corrupt(saved, offset, value))


@pytest.mark.parametrize("keep", [4, 20, -1])
def test_truncation_is_detected(saved: Path, keep: int) -> None:
    """Test files cut inside the prefix, the header and the last record.

    Args:
        keep (int): Bytes kept (negative: dropped from the end)
    """
    blob = saved.read_bytes()
    saved.write_bytes(blob[:keep])
    with pytest.raises(IntegrityError):
        load_checkpoint(saved)


def test_trailing_bytes_are_rejected(saved: Path) -> None:
    """Test that data after the last record is an integrity error."""
    saved.write_bytes(saved.read_bytes() + b"\x00")
    with pytest.raises(IntegrityError):
        load_checkpoint(saved)


def test_missing_file(tmp_path: Path) -> None:
    """Test that an unreadable path is an integrity error."""
    with pytest.raises(IntegrityError):
        load_checkpoint(tmp_path / "missing.ckpt")


def test_vocabulary_mismatch(saved: Path) -> None:
    """Test that another vocabulary fingerprint is refused."""
    with pytest.raises(VocabularyError):
        load_checkpoint(saved, vocab_hash="ff" * 32)


def test_plan_mismatch(saved: Path) -> None:
    """Test that a checkpoint cannot be read as another sharing plan."""
    with pytest.raises(PlanError):
        load_checkpoint(saved, plan=plan_from_strategy("FULL", ("de", "nl"), 1).describe())
