from dataclasses import dataclass
from functools import cached_property

import numpy as np

from src.model.example import Example


@dataclass(frozen=True)
class Batch:
    """Lote rellenado: matrices (n, S) y (n, T) de ids más el idioma de cada fila."""

    source: np.ndarray
    target_in: np.ndarray
    target_out: np.ndarray
    languages: tuple[str, ...]
    pad_id: int = 0

    @classmethod
    def from_examples(cls, examples: list[Example], pad_id: int = 0) -> "Batch":
        assert examples, "a batch needs at least one example"

        def padded(rows: list[tuple[int, ...]]) -> np.ndarray:
            matrix = np.full((len(rows), max(len(row) for row in rows)), pad_id, dtype=np.int64)
            for index, row in enumerate(rows):
                matrix[index, : len(row)] = row
            return matrix

        return cls(
            source=padded([e.source_ids for e in examples]),
            target_in=padded([e.target_in for e in examples]),
            target_out=padded([e.target_out for e in examples]),
            languages=tuple(e.target_lang for e in examples),
            pad_id=pad_id,
        )

    @property
    def size(self) -> int:
        return len(self.languages)

    @property
    def source_mask(self) -> np.ndarray:
        return self.source != self.pad_id

    @property
    def target_mask(self) -> np.ndarray:
        return self.target_out != self.pad_id

    @property
    def source_tokens(self) -> int:
        return int(self.source_mask.sum())

    @property
    def target_tokens(self) -> int:
        return int(self.target_mask.sum())

    @cached_property
    def sentence_counts(self) -> dict[str, int]:
        counts: dict[str, int] = dict()
        for lang in self.languages:
            counts[lang] = counts.get(lang, 0) + 1
        return counts

    @cached_property
    def token_counts(self) -> dict[str, int]:
        rows = np.asarray(self.languages)
        return {lang: int(self.target_mask[rows == lang].sum()) for lang in self.sentence_counts}

    def by_language(self) -> dict[str, "Batch"]:
        """Sub-lotes por idioma destino, en orden de primera aparición y recortados a su longitud."""
        rows = np.asarray(self.languages)
        parts: dict[str, Batch] = dict()
        for lang in self.sentence_counts:
            selected = rows == lang
            source = self.source[selected]
            target_in, target_out = self.target_in[selected], self.target_out[selected]
            src_len = int((source != self.pad_id).any(axis=0).nonzero()[0].max()) + 1
            tgt_len = int((target_out != self.pad_id).any(axis=0).nonzero()[0].max()) + 1
            parts[lang] = Batch(
                source=source[:, :src_len],
                target_in=target_in[:, :tgt_len],
                target_out=target_out[:, :tgt_len],
                languages=(lang,) * int(selected.sum()),
                pad_id=self.pad_id,
            )
        return parts
