from src.engine.grad_check import grad_check
from src.engine.tape import Tape, TapeNode
from src.engine.tensor import Tensor

__all__ = ["Tape", "TapeNode", "Tensor", "grad_check"]
