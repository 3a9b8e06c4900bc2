"""Geometric checkpoint grids."""

from rcdsim.core.exceptions import ConfigError, HorizonError


def geometric_checkpoints(horizon: int, base: int = 2) -> list[int]:
    """
    Return 1, base, base^2, ... up to ``horizon``, always ending at ``horizon``.

    Strictly increasing; resolves both the transient and the linear
    regime on log axes.
    """
    if horizon < 1:
        raise HorizonError(horizon)
    if base < 2:
        raise ConfigError("checkpoint_base", f"must be >= 2, got {base}")

    grid = []
    step = 1
    while step < horizon:
        grid.append(step)
        step *= base
    grid.append(horizon)
    return grid
