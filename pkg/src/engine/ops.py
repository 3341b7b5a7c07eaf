"""Vocabulario cerrado de operaciones diferenciables.

Cada operación calcula el forward con numpy y, si hay un tape activo y
alguna entrada requiere gradiente, registra su regla de backward. Todas las
salidas se verifican finitas salvo la de `add_mask`, única operación que
puede emitir el centinela -inf.
"""

import logging

import numpy as np

from src.engine.tape import BackwardRule, Tape, TapeNode
from src.engine.tensor import Tensor
from src.model.errors import (
    ConfigurationError,
    DegenerateRowError,
    DimensionError,
    NumericalError,
    VocabularyError,
)

logger = logging.getLogger(__name__)


def _ensure_finite(op: str, values: np.ndarray) -> np.ndarray:
    if not np.isfinite(values).all():
        raise NumericalError(NumericalError.NON_FINITE_MSG.format(op=op))
    return values


def _unbroadcast(gradient: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Reduce un gradiente emitido con broadcasting a la forma del operando."""
    while gradient.ndim > len(shape):
        gradient = gradient.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and gradient.shape[axis] != 1:
            gradient = gradient.sum(axis=axis, keepdims=True)
    return gradient


def _emit(op: str, inputs: tuple[Tensor, ...], values: np.ndarray, backward: BackwardRule) -> Tensor:
    tape = Tape.current()
    tracked = tape is not None and any(t.requires_grad for t in inputs)
    output = Tensor(values, requires_grad=tracked, is_leaf=False)
    if tracked:
        tape.record(TapeNode(op=op, inputs=inputs, output=output, backward=backward))
    return output


def matmul(a: Tensor, b: Tensor, transpose_b: bool = False) -> Tensor:
    """Producto matricial sobre los dos últimos ejes, con ejes de lote opcionales.

    Args:
        a (Tensor): Operando izquierdo (..., m, k)
        b (Tensor): Operando derecho (..., k, n), o (..., n, k) si transpose_b
        transpose_b (bool): Usar bᵀ, necesario para q·kᵀ y la proyección atada W_Eᵀ

    Returns:
        Tensor: Producto (..., m, n)

    Raises:
        DimensionError: Si las dimensiones internas no coinciden
    """
    right = b.data.swapaxes(-1, -2) if transpose_b else b.data
    if a.data.ndim < 2 or right.ndim < 2 or a.shape[-1] != right.shape[-2]:
        raise DimensionError(
            DimensionError.SHAPE_MISMATCH_MSG.format(op="matmul", left=a.shape, right=b.shape)
        )
    values = _ensure_finite("matmul", np.matmul(a.data, right))

    def backward(upstream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        grad_a = np.matmul(upstream, right.swapaxes(-1, -2))
        if right.ndim == 2:
            # pesos compartidos por todo el lote: se aplanan los ejes de lote
            flat_a = a.data.reshape(-1, a.shape[-1])
            flat_up = upstream.reshape(-1, upstream.shape[-1])
            grad_right = flat_a.T @ flat_up
        else:
            grad_right = np.matmul(a.data.swapaxes(-1, -2), upstream)
        grad_b = grad_right.swapaxes(-1, -2) if transpose_b else grad_right
        return _unbroadcast(grad_a, a.shape), _unbroadcast(grad_b, b.shape)

    return _emit("matmul", (a, b), values, backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    try:
        values = np.add(a.data, b.data)
    except ValueError as e:
        raise DimensionError(
            DimensionError.SHAPE_MISMATCH_MSG.format(op="add", left=a.shape, right=b.shape)
        ) from e
    _ensure_finite("add", values)

    def backward(upstream: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return _unbroadcast(upstream, a.shape), _unbroadcast(upstream, b.shape)

    return _emit("add", (a, b), values, backward)


def scale(x: Tensor, factor: float) -> Tensor:
    values = _ensure_finite("scale", x.data * x.dtype.type(factor))

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        return (upstream * x.dtype.type(factor),)

    return _emit("scale", (x,), values, backward)


def reduce_sum(x: Tensor) -> Tensor:
    values = np.asarray(x.data.sum(), dtype=x.dtype)

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        return (np.broadcast_to(upstream, x.shape).astype(x.dtype),)

    return _emit("reduce_sum", (x,), _ensure_finite("reduce_sum", values), backward)


def softmax_rows(x: Tensor) -> Tensor:
    """Softmax sobre el último eje, estabilizado restando el máximo de cada fila.

    Las posiciones con -inf reciben exactamente 0.

    Raises:
        DegenerateRowError: Si alguna fila es completamente -inf
    """
    row_max = x.data.max(axis=-1, keepdims=True)
    degenerate = np.isneginf(row_max)
    if degenerate.any():
        raise DegenerateRowError(DegenerateRowError.FULLY_MASKED_MSG.format(count=int(degenerate.sum())))
    exps = np.exp(x.data - row_max)
    probs = _ensure_finite("softmax_rows", exps / exps.sum(axis=-1, keepdims=True))

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        return (probs * (upstream - (upstream * probs).sum(axis=-1, keepdims=True)),)

    return _emit("softmax_rows", (x,), probs, backward)


def add_mask(x: Tensor, mask: Tensor) -> Tensor:
    """Masked fill: las posiciones donde `mask` vale -inf pasan a -inf.

    Args:
        x (Tensor): Puntuaciones de atención
        mask (Tensor): Centinelas {0, -inf}, con broadcasting sobre x
    """
    blocked = np.isneginf(mask.data)
    try:
        values = np.where(blocked, -np.inf, x.data).astype(x.dtype, copy=False)
    except ValueError as e:
        raise DimensionError(
            DimensionError.SHAPE_MISMATCH_MSG.format(op="add_mask", left=x.shape, right=mask.shape)
        ) from e
    if values.shape != x.shape:
        raise DimensionError(
            DimensionError.SHAPE_MISMATCH_MSG.format(op="add_mask", left=x.shape, right=mask.shape)
        )
    if np.isnan(values).any() or np.isposinf(values).any():
        raise NumericalError(NumericalError.NON_FINITE_MSG.format(op="add_mask"))

    def backward(upstream: np.ndarray) -> tuple[np.ndarray, None]:
        return np.where(blocked, 0.0, upstream).astype(upstream.dtype, copy=False), None

    return _emit("add_mask", (x, mask), values, backward)


def layer_norm(x: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-6) -> Tensor:
    """(x - media) / sqrt(var + eps) · gain + bias sobre el último eje.

    La varianza usa normalización poblacional 1/d.
    """
    width = x.shape[-1]
    assert width >= 2, "layer_norm needs at least two features"
    if gain.shape != (width,) or bias.shape != (width,):
        raise DimensionError(
            DimensionError.SHAPE_MISMATCH_MSG.format(op="layer_norm", left=x.shape, right=gain.shape)
        )
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    variance = (centered * centered).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(variance + x.dtype.type(eps))
    normalized = centered * inv_std
    values = _ensure_finite("layer_norm", normalized * gain.data + bias.data)

    def backward(upstream: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        flat_up = upstream.reshape(-1, width)
        grad_gain = (flat_up * normalized.reshape(-1, width)).sum(axis=0)
        grad_bias = flat_up.sum(axis=0)
        d_norm = upstream * gain.data
        grad_x = inv_std * (
            d_norm
            - d_norm.mean(axis=-1, keepdims=True)
            - normalized * (d_norm * normalized).mean(axis=-1, keepdims=True)
        )
        return grad_x, grad_gain, grad_bias

    return _emit("layer_norm", (x, gain, bias), values, backward)


def relu(x: Tensor) -> Tensor:
    active = x.data > 0
    values = np.where(active, x.data, 0).astype(x.dtype, copy=False)

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        return (np.where(active, upstream, 0).astype(upstream.dtype, copy=False),)

    return _emit("relu", (x,), values, backward)


def dropout(x: Tensor, p: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    """Dropout invertido: los supervivientes se escalan por 1/(1-p) al entrenar.

    Con training=False o p=0 devuelve el mismo tensor (identidad también en
    el backward). La máscara depende solo del estado de `rng`.

    Raises:
        ConfigurationError: Si p no está en [0, 1)
    """
    if not 0.0 <= p < 1.0:
        raise ConfigurationError(f"dropout probability must lie in [0, 1), got {p}")
    if not training or p == 0.0:
        return x
    assert rng is not None, "active dropout needs a seeded generator"

    keep = (rng.random(x.shape) >= p).astype(x.dtype) / x.dtype.type(1.0 - p)
    tape = Tape.current()
    if tape is not None:
        tape.mark_stochastic()

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        return (upstream * keep,)

    return _emit("dropout", (x,), x.data * keep, backward)


def gather_rows(weight: Tensor, ids: np.ndarray) -> Tensor:
    """Selecciona filas de `weight` (búsqueda de embeddings)."""
    ids = np.asarray(ids)
    vocab_size = weight.shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab_size):
        bad = int(ids.max()) if ids.max() >= vocab_size else int(ids.min())
        raise VocabularyError(VocabularyError.OUT_OF_RANGE_MSG.format(token_id=bad, size=vocab_size))
    values = weight.data[ids]

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        grad = np.zeros_like(weight.data)
        np.add.at(grad, ids.reshape(-1), upstream.reshape(-1, weight.shape[-1]))
        return (grad,)

    return _emit("gather_rows", (weight,), values, backward)


def split_heads(x: Tensor, heads: int) -> Tensor:
    """(..., T, d) -> (..., heads, T, d/heads): división del último eje."""
    *lead, length, width = x.shape
    if width % heads:
        raise DimensionError(
            DimensionError.SHAPE_MISMATCH_MSG.format(op="split_heads", left=x.shape, right=(heads,))
        )
    values = x.data.reshape(*lead, length, heads, width // heads).swapaxes(-2, -3)

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        return (upstream.swapaxes(-2, -3).reshape(x.shape),)

    return _emit("split_heads", (x,), values, backward)


def merge_heads(x: Tensor) -> Tensor:
    """(..., heads, T, d_k) -> (..., T, heads·d_k): concatenación en el último eje."""
    *lead, heads, length, width = x.shape
    values = x.data.swapaxes(-2, -3).reshape(*lead, length, heads * width)

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        return (upstream.reshape(*lead, length, heads, width).swapaxes(-2, -3),)

    return _emit("merge_heads", (x,), values, backward)


def label_smoothed_cross_entropy(
    logits: Tensor, targets: np.ndarray, epsilon: float, pad_id: int, weights: np.ndarray | None = None
) -> tuple[Tensor, int]:
    """Entropía cruzada contra q = (1-ε)·onehot + ε/V, sumada sobre tokens no-pad.

    Args:
        logits (Tensor): Logits (..., V)
        targets (np.ndarray): Ids objetivo con la forma de los ejes iniciales
        epsilon (float): Masa de suavizado repartida uniformemente en V
        pad_id (int): Las posiciones con este id no contribuyen
        weights (np.ndarray | None): Peso de cada posición, con la forma de `targets`; 1 si no se indica

    Returns:
        tuple[Tensor, int]: Pérdida sumada (escalar) y número de tokens contados
    """
    vocab_size = logits.shape[-1]
    flat = logits.data.reshape(-1, vocab_size)
    gold = np.asarray(targets).reshape(-1)
    if gold.shape[0] != flat.shape[0]:
        raise DimensionError(
            DimensionError.SHAPE_MISMATCH_MSG.format(
                op="label_smoothed_cross_entropy", left=logits.shape, right=np.shape(targets)
            )
        )
    if gold.size and (gold.min() < 0 or gold.max() >= vocab_size):
        raise VocabularyError(VocabularyError.OUT_OF_RANGE_MSG.format(token_id=int(gold.max()), size=vocab_size))

    counted = gold != pad_id
    keep = counted.astype(flat.dtype)
    if weights is not None:
        keep = keep * np.asarray(weights, dtype=flat.dtype).reshape(-1)
    rows = np.arange(gold.shape[0])
    shifted = flat - flat.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    on_value = flat.dtype.type(1.0 - epsilon)
    off_value = flat.dtype.type(epsilon / vocab_size)
    per_token = -(on_value * log_probs[rows, gold] + off_value * log_probs.sum(axis=1))
    values = _ensure_finite("label_smoothed_cross_entropy", np.asarray((per_token * keep).sum(), dtype=flat.dtype))

    def backward(upstream: np.ndarray) -> tuple[np.ndarray]:
        grad = np.exp(log_probs) - off_value
        grad[rows, gold] -= on_value
        grad *= keep[:, None] * upstream
        return (grad.reshape(logits.shape),)

    loss = _emit("label_smoothed_cross_entropy", (logits,), values, backward)
    return loss, int(counted.sum())
