"""Per-mode field coefficients and characteristic impedance.

With a mode's axial wavenumber in hand, the interface conditions fix the
radial field coefficients of every region up to one overall constant.
That constant is pinned by normalizing the scaled inner-conductor
coefficient to 1, after which the full (overdetermined by one row)
system is solved in the least-squares sense; for a true mode the
residual is at rounding level.

The characteristic impedance is the ratio of the transverse voltage
(radial E-field line integral from the inner conductor out to a chosen
interface) to the inner-conductor current, both for the +z wave at z=0.
The integration upper radius is a modelling choice (which conductor pair
forms the "circuit"), so it is an explicit argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import bessel
from .errors import DomainError, IllConditionedError
from .model import SpectralContext

__all__ = [
    "ModalField",
    "ImpedanceResult",
    "modal_field_coefficients",
    "voltage_wave",
    "current_wave",
    "characteristic_impedance",
]

_SMALL_KAPPA_RHO = 0.05


@dataclass(frozen=True)
class ModalField:
    """Scaled radial-function coefficients of one mode.

    ``a[i]`` multiplies the scaled regular function of region i
    (referenced at the region's outer radius), ``b[i]`` the scaled
    outgoing one. a[0] = 1 is the normalization; a[-1] = 0 (no regular
    part outside) and b[0] = 0 (regular at the axis) by construction.
    ``residual`` is the relative least-squares residual of the full
    interface system.
    """

    alpha: complex
    a: np.ndarray
    b: np.ndarray
    residual: float


def _jh1_scalar(z: complex):
    return (
        complex(bessel.scaled_j(0, z)),
        complex(bessel.scaled_j(1, z)),
        complex(special.hankel1e(0, z)),
        complex(special.hankel1e(1, z)),
    )


def modal_field_coefficients(
    ctx: SpectralContext,
    alpha: complex,
    residual_limit: float = 1e-6,
) -> ModalField:
    """Solve the interface system for the field coefficients of a mode.

    ``alpha`` should be a located pole; for any other value the interface
    system has no nullvector and the residual reflects that. Residuals
    above ``residual_limit`` raise IllConditionedError.

    The system is assembled directly in scaled coefficients (exponential
    reference factors at each region's outer radius), and the columns are
    Jacobi-equilibrated before the least-squares solve so the wildly
    different magnitudes of conductor and insulator entries do not poison
    the conditioning.
    """
    nb = ctx.stack.n_boundaries
    n_unknown = 2 * nb - 1
    rows = 2 * nb
    m = np.zeros((rows, n_unknown), dtype=complex)
    rhs = np.zeros(rows, dtype=complex)

    kap0 = complex(ctx.kappa(0, alpha))
    r0 = float(ctx.radii[0])
    z0 = kap0 * r0
    j00, j10, _, _ = _jh1_scalar(z0)
    rhs[0] = kap0 * j00
    rhs[1] = ctx.eps[0] * j10

    for region in range(1, nb):
        kap = complex(ctx.kappa(region, alpha))
        eps = ctx.eps[region]
        r_in = float(ctx.radii[region - 1])
        r_out = float(ctx.radii[region])
        d = r_out - r_in
        j0o, j1o, h0o, h1o = _jh1_scalar(kap * r_out)
        j0i, j1i, h0i, h1i = _jh1_scalar(kap * r_in)
        ej = np.exp(1j * kap * d)
        eh = np.exp(-1j * kap * d)
        col_a = 2 * region - 2
        col_b = 2 * region - 1
        r_inner = 2 * (region - 1)
        r_outer = 2 * region
        # region seen from its inner interface (it is the upper medium there)
        m[r_inner, col_a] += kap * j0i * ej
        m[r_inner + 1, col_a] += eps * j1i * ej
        m[r_inner, col_b] += kap * h0i * eh
        m[r_inner + 1, col_b] += eps * h1i * eh
        # and from its outer interface (lower medium, negative sign)
        m[r_outer, col_a] -= kap * j0o
        m[r_outer + 1, col_a] -= eps * j1o
        m[r_outer, col_b] -= kap * h0o
        m[r_outer + 1, col_b] -= eps * h1o

    ext = ctx.n_regions - 1
    kap_ext = complex(ctx.kappa(ext, alpha))
    z_ext = kap_ext * float(ctx.radii[-1])
    h0e = complex(special.hankel1e(0, z_ext))
    h1e = complex(special.hankel1e(1, z_ext))
    m[2 * nb - 2, n_unknown - 1] += kap_ext * h0e
    m[2 * nb - 1, n_unknown - 1] += ctx.eps[ext] * h1e

    col_scale = np.linalg.norm(m, axis=0)
    if np.any(col_scale == 0) or not np.all(np.isfinite(col_scale)):
        raise IllConditionedError("degenerate interface-system column")
    y, *_ = np.linalg.lstsq(m / col_scale, rhs, rcond=None)
    x = y / col_scale
    residual = float(np.linalg.norm(m @ x - rhs) / np.linalg.norm(rhs))
    if residual > residual_limit:
        raise IllConditionedError(
            f"interface system residual {residual:.3e} exceeds {residual_limit:.1e}; "
            "is alpha actually a mode?"
        )

    a = np.zeros(ctx.n_regions, dtype=complex)
    b = np.zeros(ctx.n_regions, dtype=complex)
    a[0] = 1.0
    for region in range(1, nb):
        a[region] = x[2 * region - 2]
        b[region] = x[2 * region - 1]
    b[ext] = x[-1]
    return ModalField(alpha=complex(alpha), a=a, b=b, residual=residual)


def _j0_diff_over_kappa(kap: complex, r_in: float, r_out: float) -> complex:
    """(J0(kap r_out) - J0(kap r_in)) / kap by series; |kap r_out| small."""
    acc = 0.0 + 0.0j
    num = 1.0 + 0.0j
    for k in range(1, 12):
        num *= -0.25 * kap * kap / (k * k)
        acc += num * (r_out ** (2 * k) - r_in ** (2 * k)) / kap
    return acc


def voltage_wave(ctx: SpectralContext, field: ModalField, upper_region: int) -> complex:
    """Transverse voltage of the +z mode wave at z = 0.

    Radial line integral of E_rho from the inner conductor surface to the
    outer radius of ``upper_region``, evaluated in closed form per region.
    Regions whose transverse wavenumber is nearly zero (the coaxial
    quasi-TEM limit) switch the regular-function difference to a series;
    the Hankel difference needs no rescue because its logarithmic part
    carries the ln(r_out/r_in) explicitly.
    """
    nb = ctx.stack.n_boundaries
    if not 1 <= upper_region <= nb - 1:
        raise DomainError(
            f"upper_region must be an interior region index in [1, {nb - 1}]"
        )
    alpha = field.alpha
    total = 0.0 + 0.0j
    for region in range(1, upper_region + 1):
        kap = complex(ctx.kappa(region, alpha))
        r_in = float(ctx.radii[region - 1])
        r_out = float(ctx.radii[region])
        d = r_out - r_in
        if abs(kap) * r_out < _SMALL_KAPPA_RHO:
            # work with unscaled coefficients; the reference exponents are
            # tiny here so the conversion is exact to rounding
            a_raw = field.a[region] * np.exp(1j * kap * r_out)
            b_raw = field.b[region] * np.exp(-1j * kap * r_out)
            dj_over_k = _j0_diff_over_kappa(kap, r_in, r_out)
            zo = kap * r_out
            zi = kap * r_in
            j0i = complex(special.jv(0, zi))
            b_o = complex(bessel._series_b(np.array([zo]))[0])
            b_i = complex(bessel._series_b(np.array([zi]))[0])
            lnterm = (2j / math.pi) * (
                np.log(0.5 * zo) * dj_over_k + math.log(r_out / r_in) * j0i / kap
            )
            dh_over_k = dj_over_k + lnterm + 1j * (b_o - b_i) / kap
            total += a_raw * dj_over_k + b_raw * dh_over_k
        else:
            j0o = complex(bessel.scaled_j(0, kap * r_out))
            j0i = complex(bessel.scaled_j(0, kap * r_in))
            h0o = complex(special.hankel1e(0, kap * r_out))
            h0i = complex(special.hankel1e(0, kap * r_in))
            ej = np.exp(1j * kap * d)
            eh = np.exp(-1j * kap * d)
            total += (
                field.a[region] * (j0o - ej * j0i)
                + field.b[region] * (h0o - eh * h0i)
            ) / kap
    return complex(1j * alpha / ctx.k0 * total)


def current_wave(ctx: SpectralContext, field: ModalField) -> complex:
    """Inner-conductor current of the +z mode wave at z = 0.

    Closed form from the conduction current integral over the inner
    conductor cross-section, in the same a[0] = 1 normalization as the
    voltage, so the V/I ratio is normalization-free.
    """
    kap0 = complex(ctx.kappa(0, field.alpha))
    r0 = float(ctx.radii[0])
    sigma0 = float(ctx.stack.layers[0].sigma)
    j1 = complex(bessel.scaled_j(1, kap0 * r0))
    return complex(2.0 * math.pi * sigma0 * r0 / ctx.k0 * field.a[0] * j1)


@dataclass(frozen=True)
class ImpedanceResult:
    impedance: complex
    voltage: complex
    current: complex
    field: ModalField


def characteristic_impedance(
    ctx: SpectralContext,
    alpha: complex,
    upper_region: int,
    residual_limit: float = 1e-6,
) -> ImpedanceResult:
    """Mode impedance Z = V/I for the located pole ``alpha``.

    ``upper_region`` selects the outer electrode of the voltage path: the
    line integral runs to that region's outer radius.
    """
    field = modal_field_coefficients(ctx, alpha, residual_limit=residual_limit)
    v = voltage_wave(ctx, field, upper_region)
    i = current_wave(ctx, field)
    return ImpedanceResult(impedance=v / i, voltage=v, current=i, field=field)
