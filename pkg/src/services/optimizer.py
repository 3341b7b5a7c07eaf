import logging

import numpy as np

from src.model.adam_state import AdamState
from src.model.errors import NumericalError
from src.model.train_config import TrainConfig
from src.services.parameter_table import ParameterTable

logger = logging.getLogger(__name__)


class Adam:
    """Adam con corrección de sesgo, un estado por celda de almacenamiento.

    Las celdas compartidas ya contienen la suma de las contribuciones de
    todos los decodificadores, así que cada grupo se actualiza una sola vez.

    Attributes:
        __config (TrainConfig): β1, β2, ε y si se corrige el sesgo
        __state (AdamState): Momentos por nombre de celda y contador de pasos
    """

    def __init__(self, config: TrainConfig, state: AdamState | None = None):
        self.__config: TrainConfig = config
        self.__state: AdamState = state if state is not None else AdamState()

    @property
    def state(self) -> AdamState:
        return self.__state

    def step(self, table: ParameterTable, lr: float) -> ParameterTable:
        """Aplica una actualización a todas las celdas y pone a cero sus gradientes.

        Raises:
            NumericalError: Si algún gradiente no es finito (no se actualiza ninguna celda)
        """
        gradients: dict[str, np.ndarray] = dict()
        for name, cell in table.cells.items():
            grad = cell.grad if cell.grad is not None else np.zeros_like(cell.data)
            if not np.isfinite(grad).all():
                magnitude = float(np.nanmax(np.abs(grad))) if not np.isnan(grad).all() else float("nan")
                raise NumericalError(NumericalError.NAN_GRADIENT_MSG.format(name=name, magnitude=magnitude))
            gradients[name] = grad

        config, state = self.__config, self.__state
        state.step += 1
        first_fix = 1.0 - config.beta1**state.step if config.bias_correction else 1.0
        second_fix = 1.0 - config.beta2**state.step if config.bias_correction else 1.0

        for name, cell in table.cells.items():
            grad = gradients[name]
            m = state.first.setdefault(name, np.zeros_like(cell.data))
            v = state.second.setdefault(name, np.zeros_like(cell.data))
            m *= config.beta1
            m += (1.0 - config.beta1) * grad
            v *= config.beta2
            v += (1.0 - config.beta2) * grad * grad
            update = lr * (m / first_fix) / (np.sqrt(v / second_fix) + config.adam_eps)
            cell.assign(cell.data - update.astype(cell.dtype))
        table.zero_grad()
        return table
