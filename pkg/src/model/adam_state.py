from dataclasses import dataclass, field

import numpy as np


@dataclass
class AdamState:
    """Momentos de primer y segundo orden, uno por celda (no por slot)."""

    step: int = 0
    first: dict[str, np.ndarray] = field(default_factory=dict)
    second: dict[str, np.ndarray] = field(default_factory=dict)
