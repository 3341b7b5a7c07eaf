import logging

import numpy as np

from src.engine.tensor import Tensor
from src.model.errors import PlanError
from src.model.model_config import ModelConfig
from src.model.sharing_plan import SharingPlan
from src.model.slot_id import SlotId
from src.services.slot_layout import slot_shape

logger = logging.getLogger(__name__)


class ParameterTable:
    """Celdas de almacenamiento y el mapa slot -> celda que realiza el aliasing.

    Cada grupo del plan recibe exactamente una celda (un Tensor hoja); todos
    los slots del grupo devuelven ese mismo objeto, de modo que las
    contribuciones de gradiente de distintos decodificadores se suman en el
    buffer de la celda.

    Attributes:
        __cells (dict[str, Tensor]): Celdas por nombre, en orden estructural
        __slots (dict[SlotId, str]): Nombre de la celda de cada slot
    """

    def __init__(self, config: ModelConfig, plan: SharingPlan, dtype: type = np.float32):
        assert config.num_layers == plan.num_layers, "plan and config disagree on the layer count"
        self.__config: ModelConfig = config
        self.__plan: SharingPlan = plan
        self.__cells: dict[str, Tensor] = dict()
        self.__slots: dict[SlotId, str] = dict()
        self.__members: dict[str, tuple[SlotId, ...]] = dict()

        for group in plan.groups:
            shapes = sorted({slot_shape(slot, config) for slot in group})
            if len(shapes) > 1:
                raise PlanError(PlanError.SHAPE_CONFLICT_MSG.format(group=str(group[0]), shapes=shapes))
            name = str(group[0])
            self.__cells[name] = Tensor(np.zeros(shapes[0], dtype=dtype), requires_grad=True, name=name)
            self.__members[name] = group
            for slot in group:
                self.__slots[slot] = name

    @property
    def config(self) -> ModelConfig:
        return self.__config

    @property
    def plan(self) -> SharingPlan:
        return self.__plan

    @property
    def dtype(self) -> np.dtype:
        return next(iter(self.__cells.values())).dtype

    @property
    def cells(self) -> dict[str, Tensor]:
        return self.__cells

    def members(self, cell_name: str) -> tuple[SlotId, ...]:
        return self.__members[cell_name]

    def cell_name(self, slot: SlotId) -> str:
        if slot.target not in self.__plan.targets:
            raise PlanError(PlanError.UNKNOWN_TARGET_MSG.format(target=slot.target, targets=self.__plan.targets))
        try:
            return self.__slots[slot]
        except KeyError as e:
            raise PlanError(f"slot {slot} is not part of the sharing plan") from e

    def slot(self, slot: SlotId) -> Tensor:
        """Devuelve la celda que respalda `slot` (el mismo objeto para todo el grupo).

        Raises:
            PlanError: Si el idioma destino o el slot no pertenecen al plan
        """
        return self.__cells[self.cell_name(slot)]

    def zero_grad(self) -> "ParameterTable":
        for cell in self.__cells.values():
            cell.zero_grad()
        return self

    def state(self) -> dict[str, np.ndarray]:
        return {name: cell.data.copy() for name, cell in self.__cells.items()}

    def load_state(self, values: dict[str, np.ndarray]) -> "ParameterTable":
        """Copia valores por nombre de celda en las celdas existentes.

        Raises:
            PlanError: Si los nombres o las formas no coinciden con la tabla
        """
        if set(values) != set(self.__cells):
            missing = sorted(set(self.__cells) - set(values))[:3]
            unexpected = sorted(set(values) - set(self.__cells))[:3]
            raise PlanError(f"cell names do not match the plan (missing {missing}, unexpected {unexpected})")
        for name, cell in self.__cells.items():
            if values[name].shape != cell.shape:
                raise PlanError(f"cell {name} has shape {values[name].shape}, expected {cell.shape}")
            cell.assign(values[name])
        return self

    def cast(self, dtype: type) -> "ParameterTable":
        """Copia la tabla a otra precisión conservando el aliasing (p. ej. float64 para grad_check)."""
        table = ParameterTable(self.__config, self.__plan, dtype=dtype)
        for name, cell in self.__cells.items():
            table.cells[name].assign(cell.data.astype(dtype))
        return table

    def size(self) -> int:
        return sum(cell.size for cell in self.__cells.values())
