"""Deterministic quadrature node generators for the contour machinery.

Nothing here is adaptive by itself; callers double the order / level and
compare. Keeping node generation separate makes the integration loops in
modes and spectral testable against each other.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = ["gauss_legendre", "edge_quadrature", "tanh_sinh", "exp_sinh"]


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights on [-1, 1], cached."""
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def edge_quadrature(z_from: complex, z_to: complex, order: int):
    """Gauss-Legendre nodes and complex weights along a straight segment.

    The weights already include the complex dz, so a contour integral is
    just ``np.sum(w * f(z))`` accumulated over edges.
    """
    x, w = gauss_legendre(order)
    mid = 0.5 * (z_from + z_to)
    half = 0.5 * (z_to - z_from)
    return mid + half * x, half * w


def tanh_sinh(level: int, t_max: float, u_max: float = 6.0):
    """Double-exponential nodes and weights on (0, t_max).

    Level ``level`` halves the base step ``level`` times. Nodes cluster at
    both endpoints; the t -> 0 side reaches down to ~t_max * e^{-2 pi
    sinh(u_max)/2}, far below anything the integrands here resolve. The
    low-end node positions are computed through the logistic form
    t = t_max / (1 + e^{-2s}) to avoid the catastrophic 1 + tanh(s)
    rounding for s << 0.
    """
    h = 0.5 / (1 << level)
    n = int(np.ceil(u_max / h))
    u = h * np.arange(-n, n + 1)
    s = 0.5 * np.pi * np.sinh(u)
    t = t_max / (1.0 + np.exp(-2.0 * s))
    with np.errstate(over="ignore"):
        sech = 2.0 / (np.exp(s) + np.exp(-s))
    dt_du = 0.5 * t_max * (0.5 * np.pi * np.cosh(u)) * sech * sech
    w = h * dt_du
    keep = (t > 0) & (t < t_max) & (w > 0)
    return t[keep], w[keep]


def exp_sinh(level: int, scale: float, t_max: float, u_max: float = 4.0):
    """Double-exponential nodes on (0, t_max) clustered at 0 only.

    The map t = scale * e^{pi/2 sinh u} suits integrands whose structure
    sits within some decades of ``scale`` and that decay on their own well
    before ``t_max``: at u_max = 4 the node range spans about 19 decades
    to each side of the scale, so the cut at ``t_max`` only discards nodes
    where the integrand is long dead.
    """
    h = 0.5 / (1 << level)
    n = int(np.ceil(u_max / h))
    u = h * np.arange(-n, n + 1)
    g = 0.5 * np.pi * np.sinh(u)
    t = scale * np.exp(g)
    w = h * t * (0.5 * np.pi * np.cosh(u))
    keep = (t > 0.0) & (t <= t_max) & np.isfinite(w)
    return t[keep], w[keep]
