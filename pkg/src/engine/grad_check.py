import logging
from collections.abc import Callable
from typing import Literal

import numpy as np

from src.engine.tape import Tape
from src.engine.tensor import Tensor
from src.model.errors import ConfigurationError, NonDeterministicGraphError

logger = logging.getLogger(__name__)

GRADIENT_FLOOR: float = 1e-8


def grad_check(
    loss_fn: Callable[[], Tensor],
    parameter: Tensor,
    h: float = 1e-3,
    scale: Literal["coordinate", "tensor"] = "coordinate",
) -> float:
    """Compara el gradiente del tape con diferencias centrales en cada coordenada.

    `loss_fn` debe reconstruir el grafo completo en cada llamada y devolver un
    escalar. Se evalúa una vez bajo un tape para obtener el gradiente
    analítico y 2·n veces sin tape para las diferencias finitas
    (L(θ+h) - L(θ-h)) / 2h.

    Args:
        loss_fn (Callable[[], Tensor]): Constructor del grafo escalar
        parameter (Tensor): Tensor hoja en float64 a perturbar
        h (float): Paso de la diferencia central
        scale (str): "coordinate" divide cada error por max(|g_fd|, |g_bp|, 1e-8);
            "tensor" lo divide por la mayor magnitud de gradiente del tensor

    Returns:
        float: Máximo error relativo

    Raises:
        ConfigurationError: Si el parámetro no está en 64 bits
        NonDeterministicGraphError: Si el grafo contiene dropout activo

    Note:
        Los demás tensores hoja del grafo reciben el gradiente acumulado del
        backward analítico; el buffer de `parameter` se restaura.
    """
    if parameter.dtype != np.float64:
        raise ConfigurationError(f"grad_check requires float64 parameters, got {parameter.dtype}")

    with Tape() as tape:
        loss = loss_fn()
    if tape.stochastic:
        raise NonDeterministicGraphError(NonDeterministicGraphError.ACTIVE_DROPOUT_MSG)

    previous = None if parameter.grad is None else parameter.grad.copy()
    parameter.zero_grad()
    tape.backward(loss)
    analytic = np.zeros_like(parameter.data) if parameter.grad is None else parameter.grad.copy()
    parameter.zero_grad()
    if previous is not None:
        parameter.accumulate_grad(previous)

    flat = parameter.data.reshape(-1)
    assert np.shares_memory(flat, parameter.data), "parameter storage must be contiguous"
    numeric = np.empty_like(flat)
    for index in range(flat.size):
        original = flat[index]
        flat[index] = original + h
        upper = loss_fn().item()
        flat[index] = original - h
        lower = loss_fn().item()
        flat[index] = original
        numeric[index] = (upper - lower) / (2.0 * h)

    analytic = analytic.reshape(-1)
    difference = np.abs(numeric - analytic)
    if scale == "tensor":
        denominator = max(np.abs(numeric).max(initial=0.0), np.abs(analytic).max(initial=0.0), GRADIENT_FLOOR)
        error = float(difference.max(initial=0.0) / denominator)
    else:
        denominator = np.maximum(np.maximum(np.abs(numeric), np.abs(analytic)), GRADIENT_FLOOR)
        error = float((difference / denominator).max(initial=0.0))
    logger.debug("grad_check over %d coordinates: max relative error %.3e", flat.size, error)
    return error
