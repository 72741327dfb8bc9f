"""Second-order finite-difference stencils on uniform grids.

Interior nodes use central differences; the first and last nodes use
second-order one-sided formulas, so every stencil is exact on quadratics.
"""

import numpy as np


def first_derivative(values: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Central first difference, one-sided second order at the ends."""
    return np.gradient(values, h, axis=axis, edge_order=2)


def second_derivative(values: np.ndarray, h: float, axis: int = 0) -> np.ndarray:
    """Three-point second difference; four-point one-sided at the ends."""
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    if v.shape[0] < 4:
        raise ValueError("second_derivative needs at least 4 nodes along the axis")
    out = np.empty_like(v)
    out[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / h**2
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h**2
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / h**2
    return np.moveaxis(out, 0, axis)


def mixed_derivative(values: np.ndarray, h_u: float, h_t: float) -> np.ndarray:
    """d²/du dt of an (n_u, n_t) array; the 4-corner cross stencil in the interior."""
    return first_derivative(first_derivative(values, h_t, axis=1), h_u, axis=0)
