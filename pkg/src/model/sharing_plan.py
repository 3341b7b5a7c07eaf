from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.model.slot_id import SlotId


class Strategy(StrEnum):
    NONE = "NONE"
    EMBED = "EMBED"
    EMBED_ENC = "EMBED_ENC"
    FFN = "FFN"
    SELF_ATTN = "SELF_ATTN"
    ENCDEC_ATTN = "ENCDEC_ATTN"
    KV_BOTH = "KV_BOTH"
    KQ_BOTH = "KQ_BOTH"
    ATTN_BOTH = "ATTN_BOTH"
    FULL = "FULL"
    EXPLICIT = "EXPLICIT"


BUILT_IN_STRATEGIES: tuple[Strategy, ...] = tuple(s for s in Strategy if s is not Strategy.EXPLICIT)


class SharingPlan(BaseModel):
    """Partición de los slots en grupos que comparten una celda de almacenamiento.

    Attributes:
        strategy (Strategy): Estrategia incorporada o EXPLICIT
        targets (tuple[str, ...]): Idiomas destino, en orden
        num_layers (int): Capas del codificador y del decodificador
        groups (tuple[tuple[SlotId, ...], ...]): Grupos en orden estructural
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    strategy: Strategy
    targets: tuple[str, ...] = Field(min_length=1)
    num_layers: int = Field(ge=0)
    groups: tuple[tuple[SlotId, ...], ...]

    @field_validator("targets")
    @classmethod
    def check_unique_targets(cls, targets: tuple[str, ...]) -> tuple[str, ...]:
        if len(set(targets)) != len(targets):
            raise ValueError(f"duplicate target languages in {targets}")
        if any(not t or "@" in t or " " in t for t in targets):
            raise ValueError(f"invalid target language name in {targets}")
        return targets

    @property
    def shared_groups(self) -> list[tuple[SlotId, ...]]:
        return [group for group in self.groups if len(group) > 1]

    def describe(self) -> dict:
        """Descripción serializable (cabecera de checkpoint, run.cfg resuelto)."""
        description: dict = {
            "strategy": self.strategy.value,
            "targets": list(self.targets),
            "num_layers": self.num_layers,
        }
        if self.strategy is Strategy.EXPLICIT:
            description["groups"] = [[str(slot) for slot in group] for group in self.shared_groups]
        return description
