"""Finite-difference derivatives used for scores and observed information.

Step sizes follow the cube-root-of-epsilon rule per coordinate,
h_i = cbrt(eps) * max(1, |x_i|), which balances truncation against
round-off for central differences of a smooth function.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

_CBRT_EPS = float(np.cbrt(np.finfo(float).eps))

# 7-point central stencil for f', used only as a high-order cross-check.
_STENCIL_OFFSETS = np.array([-3.0, -2.0, -1.0, 1.0, 2.0, 3.0])
_STENCIL_WEIGHTS = np.array([-1.0 / 60, 3.0 / 20, -3.0 / 4, 3.0 / 4, -3.0 / 20, 1.0 / 60])


def fd_steps(x: np.ndarray) -> np.ndarray:
    """Per-coordinate central-difference steps."""
    x = np.asarray(x, dtype=float)
    return _CBRT_EPS * np.maximum(1.0, np.abs(x))


def gradient(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    h = fd_steps(x)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return g


def gradient_highorder(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Seventh-order-accurate gradient from a 7-point stencil (test oracle)."""
    x = np.asarray(x, dtype=float)
    h = fd_steps(x)
    g = np.empty_like(x)
    for i in range(x.size):
        acc = 0.0
        for off, w in zip(_STENCIL_OFFSETS, _STENCIL_WEIGHTS):
            e = np.zeros_like(x)
            e[i] = off * h[i]
            acc += w * f(x + e)
        g[i] = acc / h[i]
    return g


def hessian(f: Callable[[np.ndarray], float], x: np.ndarray) -> np.ndarray:
    """Central-difference Hessian of a scalar function.

    Off-diagonal entries use the 4-point cross formula, which is exactly a
    central difference of the central-difference gradient with matched steps;
    the diagonal uses the matching second difference with step 2*h_i.
    """
    x = np.asarray(x, dtype=float)
    h = fd_steps(x)
    d = x.size
    H = np.empty((d, d))
    f0 = f(x)
    for i in range(d):
        ei = np.zeros_like(x)
        ei[i] = h[i]
        H[i, i] = (f(x + 2.0 * ei) - 2.0 * f0 + f(x - 2.0 * ei)) / (4.0 * h[i] * h[i])
        for j in range(i + 1, d):
            ej = np.zeros_like(x)
            ej[j] = h[j]
            H[i, j] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
            H[j, i] = H[i, j]
    return H


def hessian_from_grad(grad: Callable[[np.ndarray], np.ndarray], x: np.ndarray) -> np.ndarray:
    """Central-difference Hessian columns from a gradient callable, symmetrized."""
    x = np.asarray(x, dtype=float)
    h = fd_steps(x)
    d = x.size
    H = np.empty((d, d))
    for i in range(d):
        e = np.zeros_like(x)
        e[i] = h[i]
        H[:, i] = (np.asarray(grad(x + e)) - np.asarray(grad(x - e))) / (2.0 * h[i])
    return 0.5 * (H + H.T)
