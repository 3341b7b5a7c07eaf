from pydantic import BaseModel, ConfigDict, Field


class ParameterCount(BaseModel):
    """Recuento exacto de parámetros de un plan (cada grupo compartido cuenta una vez).

    Attributes:
        total (int): Todos los parámetros, incluidos sesgos y normas
        weights_only (int): Solo matrices (E, K, Q, V, F, L1, L2)
        per_component (dict[str, int]): Total por embedding / encoder / decoder
        per_group (dict[str, int]): Tamaño de cada celda, por nombre de celda
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    strategy: str
    targets: tuple[str, ...]
    total: int = Field(ge=0)
    weights_only: int = Field(ge=0)
    per_component: dict[str, int]
    per_group: dict[str, int]

    @property
    def millions(self) -> float:
        return round(self.total / 1e6, 2)

    @property
    def weights_millions(self) -> float:
        return round(self.weights_only / 1e6, 2)
