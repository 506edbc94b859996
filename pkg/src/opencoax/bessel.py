"""Exponentially scaled cylinder functions of complex argument.

Layered-waveguide determinants multiply Bessel and Hankel functions of
arguments with large imaginary parts. J_m(z) grows like e^{|Im z|} while
H(1)_m(z) decays like e^{-Im z} in the upper half-plane, so raw products
overflow double precision long before the physically meaningful ratios do.
Everything here therefore works with the scaled variants

    Js(m, z)  = e^{+i z} J_m(z)
    H1s(m, z) = e^{-i z} H(1)_m(z)
    H2s(m, z) = e^{+i z} H(2)_m(z)

which stay O(|z|^{-1/2}) for Im z >= 0. The exponential factors are tracked
separately by the callers (see dispersion.DeterminantPair) and cancel
analytically in every ratio the solver actually needs.

scipy's hankel1e/hankel2e already carry exactly these scaling factors; the
scaled J is assembled from scipy's jv near the real axis and from the two
Hankel functions far from it, where jv itself would overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .constants import EULER_GAMMA
from .errors import DomainError, NonFiniteError

__all__ = [
    "ScaledCylinderValues",
    "scaled_j",
    "scaled_h1",
    "scaled_h2",
    "eval_scaled",
    "neumann_regular_parts",
    "neumann_c_smooth",
    "wronskian_defect",
]

# |Im z| beyond which the scaled J is assembled from the two scaled Hankel
# functions instead of e^{iz} jv(z). Near the real axis the Hankel route
# loses all digits close to the real zeros of J_m (the two terms cancel);
# far from it, jv overflows while the combination is perfectly conditioned
# because one term dominates by e^{2 |Im z|}.
_JV_IMAG_LIMIT = 50.0

# Term count for the small-argument Neumann series; at |z| = 1.5 the last
# term is below 1e-22, at the |z| = 2.0 fallback margin below 1e-16.
_SERIES_TERMS = 20
_SERIES_RADIUS = 1.5


def _series_coefficients() -> tuple[np.ndarray, np.ndarray]:
    # psi(k+1) = -gamma + H_k with H_0 = 0
    psi = np.empty(_SERIES_TERMS + 1)
    psi[0] = -EULER_GAMMA
    for k in range(1, _SERIES_TERMS + 1):
        psi[k] = psi[k - 1] + 1.0 / k
    fact = np.array([math.factorial(k) for k in range(_SERIES_TERMS + 1)], dtype=float)
    b_coef = -(2.0 / math.pi) * psi[:_SERIES_TERMS] / fact[:_SERIES_TERMS] ** 2
    c_coef = (
        -(1.0 / (2.0 * math.pi))
        * (psi[:_SERIES_TERMS] + psi[1 : _SERIES_TERMS + 1])
        / (fact[:_SERIES_TERMS] * fact[1 : _SERIES_TERMS + 1])
    )
    return b_coef, c_coef


_B_COEF, _C_COEF = _series_coefficients()


def _prepare(zeta) -> tuple[np.ndarray, bool]:
    z = np.asarray(zeta, dtype=np.complex128)
    scalar = z.ndim == 0
    if scalar:
        z = z[np.newaxis]
    if not np.all(np.isfinite(z)):
        raise DomainError("cylinder function argument must be finite")
    if np.any(z == 0):
        raise DomainError("cylinder functions are singular at zeta = 0")
    return z, scalar


def _restore(values: np.ndarray, scalar: bool):
    return complex(values[0]) if scalar else values


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{what} overflowed double precision")


def scaled_h1(order: int, zeta):
    """e^{-i zeta} H(1)_order(zeta). Bounded for Im zeta >= 0, |zeta| >~ 1."""
    z, scalar = _prepare(zeta)
    out = special.hankel1e(order, z)
    _check_finite(out, "scaled Hankel H1")
    return _restore(out, scalar)


def scaled_h2(order: int, zeta):
    """e^{+i zeta} H(2)_order(zeta)."""
    z, scalar = _prepare(zeta)
    out = special.hankel2e(order, z)
    _check_finite(out, "scaled Hankel H2")
    return _restore(out, scalar)


def scaled_j(order: int, zeta):
    """e^{+i zeta} J_order(zeta).

    Two routes, switched on |Im zeta|:

    * near the real axis, e^{i zeta} jv(order, zeta) -- both factors are
      representable and the product is fully accurate, including at the
      real zeros of J;
    * beyond ``_JV_IMAG_LIMIT``, the half-sum
      (e^{2 i zeta} H1s + H2s) / 2, where the e^{2 i zeta} term is damped
      (upper half-plane) or dominant (lower half-plane) by at least
      e^{100}, so no cancellation survives.

    The result is bounded for Im zeta >= 0 and grows like e^{2 |Im zeta|}
    below the axis, overflowing near Im zeta < -354 (raises
    NonFiniteError there).
    """
    z, scalar = _prepare(zeta)
    out = np.empty_like(z)
    near = np.abs(z.imag) <= _JV_IMAG_LIMIT
    if near.any():
        zn = z[near]
        out[near] = np.exp(1j * zn) * special.jv(order, zn)
    if (~near).any():
        zf = z[~near]
        out[~near] = 0.5 * (
            np.exp(2j * zf) * special.hankel1e(order, zf) + special.hankel2e(order, zf)
        )
    _check_finite(out, "scaled Bessel J")
    return _restore(out, scalar)


@dataclass(frozen=True)
class ScaledCylinderValues:
    """The six scaled functions at one argument batch.

    Attributes use the order as the trailing digit: ``j0``/``j1`` are the
    scaled J of order 0 and 1, ``h10``/``h11`` the scaled first-kind
    Hankels, ``h20``/``h21`` the scaled second-kind ones.
    """

    j0: np.ndarray
    j1: np.ndarray
    h10: np.ndarray
    h11: np.ndarray
    h20: np.ndarray
    h21: np.ndarray


def eval_scaled(zeta) -> ScaledCylinderValues:
    """All six scaled functions at once; one validation pass, six evals."""
    z, scalar = _prepare(zeta)
    j0 = scaled_j(0, z)
    j1 = scaled_j(1, z)
    h10 = special.hankel1e(0, z)
    h11 = special.hankel1e(1, z)
    h20 = special.hankel2e(0, z)
    h21 = special.hankel2e(1, z)
    for arr, name in ((h10, "H1s"), (h11, "H1s"), (h20, "H2s"), (h21, "H2s")):
        _check_finite(arr, name)
    return ScaledCylinderValues(
        j0=_restore(j0, scalar),
        j1=_restore(j1, scalar),
        h10=_restore(h10, scalar),
        h11=_restore(h11, scalar),
        h20=_restore(h20, scalar),
        h21=_restore(h21, scalar),
    )


def _series_b(z: np.ndarray) -> np.ndarray:
    w = -0.25 * z * z
    acc = np.zeros_like(z)
    pw = np.ones_like(z)
    for k in range(_SERIES_TERMS):
        acc = acc + _B_COEF[k] * pw
        pw = pw * w
    return acc


def _series_c_smooth(z: np.ndarray) -> np.ndarray:
    w = -0.25 * z * z
    acc = np.zeros_like(z)
    pw = np.ones_like(z)
    for k in range(_SERIES_TERMS):
        acc = acc + _C_COEF[k] * pw
        pw = pw * w
    return z * acc


def neumann_regular_parts(zeta):
    """Log-free parts of the order-0 and order-1 Neumann functions.

    Returns the pair (B, C) with

        B(z) = Y_0(z) - (2/pi) ln(z/2) J_0(z)
        C(z) = Y_1(z) - (2/pi) ln(z/2) J_1(z)

    B is even and entire; C is odd apart from its simple pole -2/(pi z).
    Both are evaluated by their power series for |z| <= 1.5 and by the
    defining combination above otherwise. They enter the thin-layer /
    small-wavenumber limits of the interface transfer coefficients, where
    the explicit logarithms cancel between radii.
    """
    z, scalar = _prepare(zeta)
    b = np.empty_like(z)
    c = np.empty_like(z)
    small = np.abs(z) <= _SERIES_RADIUS
    if small.any():
        zs = z[small]
        b[small] = _series_b(zs)
        c[small] = _series_c_smooth(zs) - 2.0 / (math.pi * zs)
    if (~small).any():
        zl = z[~small]
        ln = (2.0 / math.pi) * np.log(0.5 * zl)
        b[~small] = special.yv(0, zl) - ln * special.jv(0, zl)
        c[~small] = special.yv(1, zl) - ln * special.jv(1, zl)
    _check_finite(b, "Neumann regular part B")
    _check_finite(c, "Neumann regular part C")
    return _restore(b, scalar), _restore(c, scalar)


def neumann_c_smooth(zeta):
    """C(z) + 2/(pi z): the entire, odd part of neumann_regular_parts' C.

    Needed where a transfer coefficient multiplies C by a quantity that
    vanishes like z; subtracting the pole analytically keeps that product
    finite all the way into z -> 0.
    """
    z, scalar = _prepare(zeta)
    out = np.empty_like(z)
    small = np.abs(z) <= _SERIES_RADIUS
    if small.any():
        out[small] = _series_c_smooth(z[small])
    if (~small).any():
        zl = z[~small]
        ln = (2.0 / math.pi) * np.log(0.5 * zl)
        out[~small] = special.yv(1, zl) - ln * special.jv(1, zl) + 2.0 / (math.pi * zl)
    _check_finite(out, "smooth part of C")
    return _restore(out, scalar)


def wronskian_defect(zeta):
    """Residual of the cross-product identity of the two Hankel kinds.

    For any z != 0,  H(1)_0 H(2)_1 - H(2)_0 H(1)_1 = 4i/(pi z), and the
    scaling factors cancel in both products, so the identity can be checked
    entirely in scaled arithmetic. Returns the difference (ideally zero);
    callers compare it against 1e-10 * |4/(pi z)|.
    """
    z, scalar = _prepare(zeta)
    h10 = special.hankel1e(0, z)
    h11 = special.hankel1e(1, z)
    h20 = special.hankel2e(0, z)
    h21 = special.hankel2e(1, z)
    defect = h10 * h21 - h20 * h11 - 4j / (math.pi * z)
    return _restore(defect, scalar)
