import numpy as np


class Tensor:
    """Valor denso n-dimensional con su buffer de gradiente asociado.

    Es el portador universal de activaciones y parámetros. Los datos se
    consideran inmutables una vez creados salvo en dos casos: el optimizador
    actualiza las celdas de parámetros en sitio y el buffer `grad` acumula
    contribuciones durante el backward.

    Attributes:
        __data (np.ndarray): Valores en float32 (entrenamiento) o float64 (grad_check)
        __grad (np.ndarray | None): Gradiente acumulado, misma forma que los datos
        __requires_grad (bool): Si el tape debe propagar gradiente hacia este tensor
        __is_leaf (bool): False para tensores producidos por una operación
    """

    __slots__ = ("__data", "__grad", "__requires_grad", "__is_leaf", "__name")

    def __init__(
        self,
        data: np.ndarray | float | list,
        requires_grad: bool = False,
        name: str | None = None,
        is_leaf: bool = True,
    ):
        self.__data: np.ndarray = np.asarray(data)
        self.__grad: np.ndarray | None = None
        self.__requires_grad: bool = requires_grad
        self.__is_leaf: bool = is_leaf
        self.__name: str | None = name

    @property
    def data(self) -> np.ndarray:
        return self.__data

    @property
    def grad(self) -> np.ndarray | None:
        return self.__grad

    @property
    def requires_grad(self) -> bool:
        return self.__requires_grad

    @property
    def is_leaf(self) -> bool:
        return self.__is_leaf

    @property
    def name(self) -> str | None:
        return self.__name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.__data.shape

    @property
    def dtype(self) -> np.dtype:
        return self.__data.dtype

    @property
    def size(self) -> int:
        return int(self.__data.size)

    def item(self) -> float:
        return float(self.__data.reshape(-1)[0])

    def accumulate_grad(self, gradient: np.ndarray) -> "Tensor":
        """Suma `gradient` al buffer de gradiente (nunca lo sobrescribe).

        Args:
            gradient (np.ndarray): Contribución con la misma forma que el tensor

        Returns:
            Tensor: Self para permitir encadenamiento
        """
        assert gradient.shape == self.__data.shape, "gradient shape mismatch"
        if self.__grad is None:
            self.__grad = np.array(gradient, dtype=self.__data.dtype, copy=True)
        else:
            self.__grad += gradient
        return self

    def zero_grad(self) -> "Tensor":
        self.__grad = None
        return self

    def assign(self, values: np.ndarray) -> "Tensor":
        """Sobrescribe los datos en sitio, preservando dtype y aliasing."""
        np.copyto(self.__data, values, casting="same_kind")
        return self

    def __repr__(self) -> str:
        label = f" name={self.__name!r}" if self.__name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"
