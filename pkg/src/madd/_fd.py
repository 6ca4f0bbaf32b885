"""Finite-difference derivatives: 4th-order central stencils with
Richardson extrapolation across two step sizes (defaults 1e-3, 1e-4)."""

from __future__ import annotations

import numpy as np

DEFAULT_STEPS = (1e-3, 1e-4)


def _d1(f, h: float):
    return (f(-2 * h) - 8 * f(-h) + 8 * f(h) - f(2 * h)) / (12 * h)


def _d2(f, h: float, f0=None):
    if f0 is None:
        f0 = f(0.0)
    return (-f(2 * h) + 16 * f(h) - 30 * f0 + 16 * f(-h) - f(-2 * h)) / (12 * h * h)


def _richardson(v1, v2, h1: float, h2: float):
    # both stencils are O(h^4); eliminate the leading error term
    w = h1**4 / (h1**4 - h2**4)
    return w * v2 - (w - 1.0) * v1


def gradient(f, x0: np.ndarray, steps=DEFAULT_STEPS) -> np.ndarray:
    """Gradient of a scalar (possibly complex) function at x0."""
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    out = []
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        vals = [_d1(lambda t: f(x0 + t * e), h) for h in steps]
        out.append(_richardson(vals[0], vals[1], steps[0], steps[1]))
    return np.array(out)


def hessian(f, x0: np.ndarray, steps=DEFAULT_STEPS) -> np.ndarray:
    """Hessian of a scalar function at x0, symmetrized.

    Mixed entries come from second directional derivatives along e_i + e_j:
    D2_{e_i+e_j} = H_ii + 2 H_ij + H_jj.
    """
    x0 = np.asarray(x0, dtype=float)
    d = x0.size
    f0 = f(x0)

    def second(direction):
        vals = [_d2(lambda t: f(x0 + t * direction), h, f0) for h in steps]
        return _richardson(vals[0], vals[1], steps[0], steps[1])

    H = np.zeros((d, d), dtype=np.result_type(f0, float))
    diag = []
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        diag.append(second(e))
        H[k, k] = diag[k]
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros(d)
            e[i] = 1.0
            e[j] = 1.0
            dij = second(e)
            H[i, j] = H[j, i] = (dij - diag[i] - diag[j]) / 2.0
    return H
