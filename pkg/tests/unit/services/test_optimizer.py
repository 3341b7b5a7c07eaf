from unittest.mock import Mock

import numpy as np
import pytest

from src.engine.tensor import Tensor
from src.model.adam_state import AdamState
from src.model.errors import NumericalError
from src.model.model_config import ModelConfig
from src.model.train_config import TrainConfig
from src.services.optimizer import Adam
from src.services.parameter_table import ParameterTable
from src.services.sharing import plan_from_strategy, resolve

LEARNING_RATE: float = 1e-3


def cell(values: list[float], gradient: list[float] | None = None) -> Tensor:
    """Builds a float64 parameter cell with an optional accumulated gradient.

    Args:
        values (list[float]): Initial values
        gradient (list[float] | None): Gradient to accumulate

    Returns:
        Tensor: Leaf tensor requiring gradient
    """
    tensor = Tensor(np.array(values, dtype=np.float64), requires_grad=True)
    if gradient is not None:
        tensor.accumulate_grad(np.array(gradient, dtype=np.float64))
    return tensor


@pytest.fixture
def table() -> Mock:
    """Fixture for a parameter table double exposing real cells."""
    mock = Mock(spec=ParameterTable)
    mock.cells = dict()
    return mock


def test_first_step_moves_by_the_learning_rate(table: Mock) -> None:
    """Test that with bias correction the first update is -lr · sign(g)."""
    table.cells = {"w": cell([0.0, 0.0], [1.0, -3.0])}
    Adam(TrainConfig()).step(table, LEARNING_RATE)

    np.testing.assert_allclose(table.cells["w"].data, [-LEARNING_RATE, LEARNING_RATE], rtol=1e-6)
    table.zero_grad.assert_called_once()


def test_zero_gradient_from_fresh_state_changes_nothing(table: Mock) -> None:
    """Test that missing gradients count as zero and leave the parameters untouched."""
    table.cells = {"w": cell([0.5, -0.5])}
    optimizer = Adam(TrainConfig())
    optimizer.step(table, LEARNING_RATE)

    np.testing.assert_array_equal(table.cells["w"].data, [0.5, -0.5])
    assert optimizer.state.step == 1


def test_moments_decay_without_gradient(table: Mock) -> None:
    """Test m ← β1·m and v ← β2·v for a zero gradient."""
    table.cells = {"w": cell([0.0])}
    state = AdamState(step=3, first={"w": np.array([1.0])}, second={"w": np.array([1.0])})
    Adam(TrainConfig(), state).step(table, LEARNING_RATE)

    assert state.first["w"][0] == pytest.approx(0.9)
    assert state.second["w"][0] == pytest.approx(0.997)
    assert state.step == 4


def test_non_finite_gradient_aborts_before_any_update(table: Mock) -> None:
    """Test that a NaN in one cell leaves every cell and the step counter unchanged."""
    table.cells = {"a": cell([1.0], [1.0]), "b": cell([2.0], [float("nan")])}
    optimizer = Adam(TrainConfig())

    with pytest.raises(NumericalError, match="'b'"):
        optimizer.step(table, LEARNING_RATE)
    assert table.cells["a"].data[0] == 1.0
    assert optimizer.state.step == 0
    table.zero_grad.assert_not_called()


def test_one_state_per_cell(table: Mock) -> None:
    """Test that moments are keyed by cell name."""
    table.cells = {"shared": cell([0.0], [1.0]), "private": cell([0.0], [2.0])}
    optimizer = Adam(TrainConfig())
    optimizer.step(table, LEARNING_RATE)

    assert set(optimizer.state.first) == {"shared", "private"}


def test_real_table_gradients_are_cleared() -> None:
    """Test that a step leaves every cell without gradient."""
    config = ModelConfig(num_layers=1, d_model=4, d_ff=4, heads=1, vocab_size=5)
    real = resolve(config, plan_from_strategy("FULL", ("de", "nl"), 1), rng=np.random.default_rng(0))
    for tensor in real.cells.values():
        tensor.accumulate_grad(np.ones(tensor.shape, dtype=tensor.dtype))
    Adam(TrainConfig()).step(real, LEARNING_RATE)

    assert all(tensor.grad is None for tensor in real.cells.values())
