"""
Euclidean projection onto the scaled simplex.

    S_a = {y in R^n : y >= 0, sum(y) = a}

Uses the sort-and-threshold procedure: sort descending, find the largest
k with u_k > (cumsum_k - a) / k, shift by that threshold and clip at 0.
Only the brute-force optimum oracle relies on it.
"""

import numpy as np

from rcdsim.core.exceptions import NonFiniteInputError


def project_simplex(v: np.ndarray, budget: float | None = None) -> np.ndarray:
    """
    Project ``v`` onto the simplex of total ``budget`` (default: len(v)).

    Args:
        v: Finite real vector.
        budget: Target sum; the allocation problem uses n.

    Returns:
        argmin_{y in S_budget} ||y - v||.

    Raises:
        NonFiniteInputError: ``v`` has NaN or infinite entries.
    """
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise NonFiniteInputError("v")
    a = float(len(v)) if budget is None else float(budget)

    if np.all(v >= 0) and np.sum(v) == a:
        # Already feasible
        return v.copy()

    u = np.sort(v)[::-1]
    thresholds = (np.cumsum(u) - a) / np.arange(1, v.shape[0] + 1)
    k = np.nonzero(thresholds < u)[0][-1]
    return np.maximum(v - thresholds[k], 0.0)
