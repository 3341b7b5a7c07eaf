import pytest
from pydantic import ValidationError

from src.model.errors import PlanError
from src.model.slot_id import SlotId

VALID_SLOTS: tuple[str, ...] = (
    "embedding.E@de",
    "encoder.L1.self_attn.K@nl",
    "encoder.norm_final.gain@de",
    "decoder.L3.encdec_attn.F@de",
    "decoder.L6.ffn.b1@nl",
    "decoder.L2.self_attn.bias",
)
MALFORMED_SLOTS: tuple[str, ...] = (
    "",
    "decoder",
    "decoder.L0.ffn.L1@de",
    "decoder.L1.ffn.K@de",
    "encoder.L1.encdec_attn.K@de",
    "embedding.L1.E@de",
    "decoder.L1.self_attn.ffn.K@de",
    "decoder.norm_final.K@de",
)


@pytest.mark.parametrize("text", VALID_SLOTS)
def test_parse_and_str_are_inverse(text: str) -> None:
    """Test that every well-formed slot reads back to its own text.

    Args:
        text (str): Slot in text form
    """
    assert str(SlotId.parse(text)) == text


def test_parse_fields() -> None:
    """Test the coordinates extracted from a decoder slot (layers are 1-indexed)."""
    slot = SlotId.parse("decoder.L3.self_attn.K@de")

    assert (slot.component, slot.layer, slot.sublayer, slot.role, slot.target) == (
        "decoder",
        3,
        "self_attn",
        "K",
        "de",
    )
    assert slot.path == "decoder.L3.self_attn.K"
    assert slot.is_matrix


@pytest.mark.parametrize("text", MALFORMED_SLOTS)
def test_malformed_slots_are_plan_errors(text: str) -> None:
    """Test that inconsistent or incomplete coordinates are rejected.

    Args:
        text (str): Invalid slot text
    """
    with pytest.raises(PlanError):
        SlotId.parse(text)


def test_with_target_keeps_the_path() -> None:
    """Test retargeting a slot and that slots are hashable values."""
    slot = SlotId.parse("decoder.L1.ffn.L2@de")
    moved = slot.with_target("nl")

    assert moved.path == slot.path
    assert moved != slot
    assert moved.with_target("de") == slot
    assert len({slot, moved, moved.with_target("de")}) == 2


def test_norm_and_bias_roles_are_not_matrices() -> None:
    """Test the weights-only classification."""
    assert not SlotId.parse("decoder.L1.ffn.b2@de").is_matrix
    assert not SlotId.parse("encoder.norm_final.bias@de").is_matrix
    assert SlotId.parse("embedding.E@de").is_matrix


def test_slot_is_immutable() -> None:
    """Test that a slot cannot be modified once built."""
    slot = SlotId.parse("embedding.E@de")
    with pytest.raises(ValidationError):
        slot.target = "nl"
