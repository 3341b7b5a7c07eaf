import logging
from functools import reduce
from typing import Literal

import numpy as np

from src.engine import ops
from src.engine.tensor import Tensor
from src.model.errors import NumericalError

logger = logging.getLogger(__name__)

LossWeighting = Literal["tokens", "sentences", "languages"]


def label_smoothed_ce(
    logits: Tensor, targets: np.ndarray, epsilon: float, pad_id: int = 0, per_sentence: bool = False
) -> tuple[Tensor, int]:
    """Entropía cruzada suavizada sobre tokens no-pad y el número de unidades que suma.

    La masa ε se reparte uniformemente sobre todo el vocabulario, token
    correcto incluido. Por defecto devuelve la suma por token y el número
    de tokens. Con `per_sentence` cada frase (fila de `targets`) aporta la
    media de sus propios tokens, y el recuento es el de frases no vacías.
    """
    if not per_sentence:
        return ops.label_smoothed_cross_entropy(logits, targets, epsilon, pad_id)
    mask = np.atleast_2d(np.asarray(targets)) != pad_id
    lengths = mask.sum(axis=-1, keepdims=True)
    weights = np.where(mask, 1.0 / np.maximum(lengths, 1), 0.0).reshape(np.shape(targets))
    loss, _ = ops.label_smoothed_cross_entropy(logits, targets, epsilon, pad_id, weights=weights)
    return loss, int((lengths > 0).sum())


def multilingual_loss(parts: list[tuple[Tensor, int]], weighting: LossWeighting = "tokens") -> Tensor:
    """Combina pares (suma de pérdida, unidades) de cada idioma del lote.

    Con "tokens" devuelve Σ suma_l / Σ n_l, es decir, la media de cada idioma
    ponderada por su número de tokens. "sentences" espera las sumas de medias
    por frase de `label_smoothed_ce(..., per_sentence=True)` y aplica la misma
    fórmula, que da la media sobre frases. Con "languages" promedia sin pesos
    las medias de cada idioma.

    Raises:
        NumericalError: Si el lote no contiene ningún token destino
    """
    assert parts, "multilingual_loss needs at least one language"
    total = sum(count for _, count in parts)
    if total == 0:
        raise NumericalError("batch holds no target tokens")
    if weighting in ("tokens", "sentences"):
        return ops.scale(reduce(ops.add, [loss for loss, _ in parts]), 1.0 / total)
    means = [ops.scale(loss, 1.0 / count) for loss, count in parts if count]
    return ops.scale(reduce(ops.add, means), 1.0 / len(means))
