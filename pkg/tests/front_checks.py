"""Shared checks on computed fronts."""
import numpy as np


def strictly_inside(p, ulps: float = 8.0) -> bool:
    """0 < u < 1 at interior nodes.

    Near a plateau at 1 the profile may round to exactly 1; that is accepted
    only on the left block that precedes the first node where 1 - u exceeds a
    few ulps.
    """
    u = p.u[1:-1]
    if not np.all(u > 0.0) or not np.all(u <= 1.0):
        return False
    top = np.any(u >= 1.0, axis=1)
    if not np.any(top):
        return True
    if abs(p.plateau_value - 1.0) > 1e-12:
        return False
    resolved = np.flatnonzero(np.min(1.0 - u, axis=1) > ulps * np.finfo(float).eps)
    if resolved.size == 0:
        return False
    return not np.any(top[resolved[0]:])
