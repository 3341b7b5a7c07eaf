from src.model.errors import ConfigurationError


def lr_at(step: int, d_model: int, warmup: int = 16000, scale: float = 2.0) -> float:
    """scale · d_model^-0.5 · min(step^-0.5, step · warmup^-1.5); máximo en step = warmup.

    Raises:
        ConfigurationError: Si step < 1
    """
    if step < 1:
        raise ConfigurationError(f"learning rate is defined from step 1, got {step}")
    return scale * d_model**-0.5 * min(step**-0.5, step * warmup**-1.5)
