import logging
import math
from typing import TYPE_CHECKING

import numpy as np

from src.model.model_config import ModelConfig

if TYPE_CHECKING:
    from src.services.parameter_table import ParameterTable

logger = logging.getLogger(__name__)

TRUNCATION_STDS: float = 2.0


def lecun_uniform(shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    """U(-sqrt(3/fan_in), +sqrt(3/fan_in)) con fan_in = filas (pesos almacenados entrada x salida)."""
    limit = math.sqrt(3.0 / shape[0])
    return rng.uniform(-limit, limit, size=shape)


def truncated_normal(shape: tuple[int, ...], std: float, rng: np.random.Generator) -> np.ndarray:
    """Normal(0, std) remuestreando toda muestra con |x| > 2 std."""
    values = rng.normal(0.0, std, size=shape)
    outside = np.abs(values) > TRUNCATION_STDS * std
    while outside.any():
        values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(values) > TRUNCATION_STDS * std
    return values


def init_parameters(table: "ParameterTable", config: ModelConfig, rng: np.random.Generator) -> "ParameterTable":
    """Inicializa cada celda una sola vez, en el orden estructural de la tabla.

    Matrices con LeCun uniforme, W_E con normal truncada de desviación
    d_model^-0.5, sesgos a cero y ganancias de norma a uno. Como el orden es
    el de las celdas, un plan FULL con varios destinos consume el generador
    igual que un único modelo bilingüe.

    Args:
        table (ParameterTable): Tabla recién resuelta
        config (ModelConfig): Arquitectura (para d_model)
        rng (np.random.Generator): Generador de inicialización

    Returns:
        ParameterTable: La misma tabla, inicializada
    """
    for name, cell in table.cells.items():
        role = table.members(name)[0].role
        match role:
            case "E":
                values = truncated_normal(cell.shape, config.d_model**-0.5, rng)
            case "gain":
                values = np.ones(cell.shape)
            case "bias" | "b1" | "b2":
                values = np.zeros(cell.shape)
            case _:
                values = lecun_uniform(cell.shape, rng)
        cell.assign(values.astype(cell.dtype))
    logger.debug("Initialized %d cell(s)", len(table.cells))
    return table
