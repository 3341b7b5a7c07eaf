import threading
from collections.abc import Callable
from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from src.engine.tensor import Tensor

BackwardRule = Callable[[np.ndarray], tuple[np.ndarray | None, ...]]


@dataclass(frozen=True)
class TapeNode:
    op: str
    inputs: tuple[Tensor, ...]
    output: Tensor
    backward: BackwardRule


class Tape:
    """Registro append-only del forward en orden topológico.

    Las operaciones de `src.engine.ops` consultan `Tape.current()` y, si hay
    un tape activo y alguna entrada requiere gradiente, añaden un nodo. El
    tape activo es local al hilo, de modo que grafos independientes pueden
    construirse en paralelo.

    Example:
        with Tape() as tape:
            loss = ops.reduce_sum(ops.matmul(w, x))
        tape.backward(loss)
    """

    __local: ClassVar[threading.local] = threading.local()

    def __init__(self):
        self.__nodes: list[TapeNode] = list()
        self.__stochastic: bool = False

    @classmethod
    def current(cls) -> "Tape | None":
        stack: list[Tape] = getattr(cls.__local, "stack", [])
        return stack[-1] if stack else None

    def __enter__(self) -> "Tape":
        if not hasattr(self.__local, "stack"):
            self.__local.stack = list()
        self.__local.stack.append(self)
        return self

    def __exit__(self, *exc_info) -> None:
        popped = self.__local.stack.pop()
        assert popped is self, "tapes must be closed in LIFO order"

    @property
    def nodes(self) -> list[TapeNode]:
        return self.__nodes

    @property
    def stochastic(self) -> bool:
        """True si algún dropout activo participó en el forward."""
        return self.__stochastic

    def mark_stochastic(self) -> "Tape":
        self.__stochastic = True
        return self

    def record(self, node: TapeNode) -> "Tape":
        self.__nodes.append(node)
        return self

    def backward(self, loss: Tensor) -> "Tape":
        """Recorre el tape una sola vez en orden inverso desde `loss`.

        Los gradientes de los tensores hoja se suman primero en un acumulador
        local y después se añaden una única vez a su buffer, así que dos
        llamadas producen exactamente el doble que una.

        Args:
            loss (Tensor): Escalar producido dentro de este tape

        Returns:
            Tape: Self para permitir encadenamiento
        """
        assert loss.size == 1, "backward expects a scalar loss"
        pending: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        leaves: dict[int, tuple[Tensor, np.ndarray]] = dict()

        if loss.is_leaf and loss.requires_grad:
            leaves[id(loss)] = (loss, pending.pop(id(loss)))

        for node in reversed(self.__nodes):
            upstream = pending.pop(id(node.output), None)
            if upstream is None:
                continue
            for tensor, gradient in zip(node.inputs, node.backward(upstream)):
                if gradient is None or not tensor.requires_grad:
                    continue
                bucket = leaves if tensor.is_leaf else None
                key = id(tensor)
                if bucket is not None:
                    if key in bucket:
                        bucket[key] = (tensor, bucket[key][1] + gradient)
                    else:
                        bucket[key] = (tensor, gradient)
                elif key in pending:
                    pending[key] = pending[key] + gradient
                else:
                    pending[key] = gradient

        for tensor, gradient in leaves.values():
            tensor.accumulate_grad(gradient)
        return self
