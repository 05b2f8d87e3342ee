"""Exponential-integrator weights shared by the solver and the Duhamel quadrature.

With ``z = |k|^2 h`` the functions

    phi1(z) = (1 - e^{-z}) / z
    phi2(z) = (e^{-z} - 1 + z) / z^2

give the exact integral of ``e^{-|k|^2 (h - s)}`` against a forcing that is
linear in ``s`` on ``[0, h]``.  Small ``z`` uses Taylor series to avoid
cancellation.
"""

from __future__ import annotations

import numpy as np

_SERIES_CUT = 1e-2


def phi1(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.ones_like(z)
    nz = z != 0
    out[nz] = -np.expm1(-z[nz]) / z[nz]
    return out


def phi2(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    small = np.abs(z) < _SERIES_CUT
    zs = z[small]
    # 1/2 - z/6 + z^2/24 - z^3/120 + z^4/720
    out[small] = 0.5 + zs * (-1 / 6 + zs * (1 / 24 + zs * (-1 / 120 + zs / 720)))
    zl = z[~small]
    out[~small] = (np.expm1(-zl) + zl) / zl ** 2
    return out


def trapezoid_weights(k2: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Weights ``(w_a, w_b)`` with ``int_0^h e^{-k2 (h-s)} F(s) ds ~ w_a F(0) + w_b F(h)``.

    Exact when ``F`` is linear in ``s``.
    """
    z = k2 * h
    p1, p2 = phi1(z), phi2(z)
    return h * (p1 - p2), h * p2
