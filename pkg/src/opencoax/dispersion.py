"""Boundary-condition determinants and the spectral current density.

The azimuthally symmetric TM field in region i is a combination
a_i J(kappa_i rho) + b_i H1(kappa_i rho) of order-0/1 cylinder functions;
matching E_z and H_phi at every interface gives a block-bidiagonal linear
system. Its determinant is evaluated here by a two-term recursion running
outward from the axis, which is both O(n_regions) and, in scaled form,
immune to the exponential growth that kills naive evaluation.

Scale bookkeeping: a DeterminantPair stores mantissas (f, g) and a common
complex exponent, with true values f e^{scale_log}, g e^{scale_log}. Each
interface step contributes a factor e^{-i kappa_i d_i} shared by all four
transfer coefficients (d_i the layer thickness); that factor goes into
scale_log, and the mantissas are renormalized into [1e-100, 1e100] with
real log corrections. Every physical output is a ratio in which the
exponents cancel analytically, leaving only the real renormalization
logs, which are subtracted before a single exp().

The spectral current density F(alpha) (drive-normalized inner-conductor
current per unit axial wavenumber) and its jump q(alpha) across the
branch cut of the exterior wavenumber are assembled from the same pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import bessel
from .errors import DomainError, NonFiniteError
from .model import SpectralContext

__all__ = [
    "DeterminantPair",
    "BranchCutCoefficients",
    "transfer_coefficients",
    "recurse_determinants",
    "det_dispersion",
    "det_continued",
    "eval_F",
    "eval_q",
    "branch_cut_coefficients",
]

# Mantissa magnitudes are renormalized once they leave this band.
_RENORM_HI = 1e100
_RENORM_LO = 1e-100

# |kappa| * outer_radius below which the interface transfer coefficients
# switch from the Hankel-product form to the log-free analytic form. The
# product form keeps ~13 digits down to here; the analytic form is exact
# through kappa = 0.
_SMALL_KAPPA_RHO = 0.05

# Relative accuracy assumed for the recursion mantissas when estimating
# how far the cross difference in eval_q has cancelled. Above a few
# kilohertz the two recursion solutions become numerically parallel and
# the physical jump drops below this resolution; the reported floor
# lets integrators recognize a noise-dominated value instead of chasing
# convergence that float64 cannot deliver.
_CROSS_NOISE_REL = 1e-15


@dataclass
class DeterminantPair:
    """Mantissa pair plus common complex scale exponent.

    True values are ``f * exp(scale_log)`` and ``g * exp(scale_log)``.
    """

    f: np.ndarray
    g: np.ndarray
    scale_log: np.ndarray


def _as_alpha_array(alpha) -> tuple[np.ndarray, bool]:
    a = np.asarray(alpha, dtype=np.complex128)
    scalar = a.ndim == 0
    if scalar:
        a = a[np.newaxis]
    return a, scalar


def _jh1(z: np.ndarray):
    """Scaled (J0, J1, H1_0, H1_1) at a common argument batch."""
    return (
        bessel.scaled_j(0, z),
        bessel.scaled_j(1, z),
        special.hankel1e(0, z),
        special.hankel1e(1, z),
    )


def _transfer_product_scaled(kap, eps, r_in, r_out):
    """Hankel-product transfer coefficients, scaled, common e^{-i kap d}
    factor removed (reported through the step scale by the caller)."""
    j0o, j1o, h0o, h1o = _jh1(kap * r_out)
    j0i, j1i, h0i, h1i = _jh1(kap * r_in)
    grow = np.exp(2j * kap * (r_out - r_in))
    ca = kap * eps * (j0o * h1i - h0o * j1i * grow)
    cb = kap * kap * (h0o * j0i * grow - j0o * h0i)
    cc = eps * eps * (j1o * h1i - h1o * j1i * grow)
    cd = kap * eps * (h1o * j0i * grow - j1o * h0i)
    return ca, cb, cc, cd


def _transfer_product_raw(kap, eps, r_in, r_out):
    """Same coefficients from unscaled functions; overflows where it must."""
    zo = kap * r_out
    zi = kap * r_in
    j0o, j1o = special.jv(0, zo), special.jv(1, zo)
    h0o, h1o = special.hankel1(0, zo), special.hankel1(1, zo)
    j0i, j1i = special.jv(0, zi), special.jv(1, zi)
    h0i, h1i = special.hankel1(0, zi), special.hankel1(1, zi)
    ca = kap * eps * (j0o * h1i - h0o * j1i)
    cb = kap * kap * (h0o * j0i - j0o * h0i)
    cc = eps * eps * (j1o * h1i - h1o * j1i)
    cd = kap * eps * (h1o * j0i - j1o * h0i)
    return ca, cb, cc, cd


def _transfer_analytic(kap, eps, r_in, r_out):
    """Transfer coefficients through the logarithmic decomposition.

    Valid (and used) only for small |kappa| r_out, where the Hankel
    products lose digits. Every 1/kappa from the order-1 Hankel pole is
    cancelled against an explicit kappa analytically, so the limit
    kappa -> 0 evaluates cleanly: A -> -2i eps / (pi r_in),
    D -> -2i eps / (pi r_out), B -> 0, and C to the thin-shell expression
    below. The explicit ln(kappa) terms cancel between the two radii,
    leaving ln(r_out/r_in)."""
    zo = kap * r_out
    zi = kap * r_in
    j0o, j1o = special.jv(0, zo), special.jv(1, zo)
    j0i, j1i = special.jv(0, zi), special.jv(1, zi)
    bo = bessel._series_b(zo)
    bi = bessel._series_b(zi)
    cso = bessel._series_c_smooth(zo)
    csi = bessel._series_c_smooth(zi)
    # J1(z) / (z/2), finite through z = 0
    j1ro = _j1_reduced(zo)
    j1ri = _j1_reduced(zi)
    lnr = math.log(r_out / r_in)
    two_over_pi = 2.0 / math.pi

    ca = (-2j * eps / (math.pi * r_in)) * j0o + 1j * kap * eps * (
        j0o * csi - j1i * bo - j0o * j1i * two_over_pi * lnr
    )
    cb = 1j * kap * kap * (j0i * bo - j0o * bi + j0o * j0i * two_over_pi * lnr)
    cc = 1j * eps * eps * (
        -(1.0 / math.pi) * (j1ro * r_out / r_in - j1ri * r_in / r_out)
        + j1o * csi
        - j1i * cso
        - j1o * j1i * two_over_pi * lnr
    )
    cd = (-2j * eps / (math.pi * r_out)) * j0i + 1j * kap * eps * (
        j0i * cso - j1o * bi + j0i * j1o * two_over_pi * lnr
    )
    return ca, cb, cc, cd


def _j1_reduced(z: np.ndarray) -> np.ndarray:
    # 2 J1(z)/z by its series; only called for |z| < _SMALL_KAPPA_RHO
    w = -0.25 * z * z
    acc = np.zeros_like(z)
    pw = np.ones_like(z)
    fact = 1.0
    for k in range(12):
        acc = acc + pw / fact
        pw = pw * w
        fact *= (k + 1) * (k + 2)
    return acc


def transfer_coefficients(ctx: SpectralContext, region: int, alpha, scaled: bool = True):
    """Transfer coefficients (A, B, C, D) of one interior region.

    They advance the determinant pair from the interface below ``region``
    to the one above it. In scaled mode the returned values have the common
    factor e^{-i kappa d} (d the region thickness) removed; the fifth
    return value is that step's scale-log increment (-i kappa d scaled,
    0 unscaled).
    """
    if not (1 <= region <= ctx.stack.n_boundaries - 1):
        raise DomainError(f"region {region} is not an interior region")
    a, scalar = _as_alpha_array(alpha)
    kap = ctx.kappa(region, a)
    eps = ctx.eps[region]
    r_in = float(ctx.radii[region - 1])
    r_out = float(ctx.radii[region])

    out = [np.empty_like(a) for _ in range(4)]
    small = np.abs(kap) * r_out < _SMALL_KAPPA_RHO
    big = ~small
    if big.any():
        kb = kap[big]
        vals = (
            _transfer_product_scaled(kb, eps, r_in, r_out)
            if scaled
            else _transfer_product_raw(kb, eps, r_in, r_out)
        )
        for dst, v in zip(out, vals):
            dst[big] = v
    if small.any():
        ks = kap[small]
        vals = _transfer_analytic(ks, eps, r_in, r_out)
        if scaled:
            # the analytic branch computes true coefficients; compensate the
            # e^{-i kappa d} the caller will account for (exactly, the
            # exponent is tiny here)
            comp = np.exp(1j * ks * (r_out - r_in))
            vals = tuple(v * comp for v in vals)
        for dst, v in zip(out, vals):
            dst[small] = v

    step = -1j * kap * (r_out - r_in) if scaled else np.zeros_like(a)
    if scalar:
        return tuple(complex(v[0]) for v in out) + (complex(step[0]),)
    return (*out, step)


def recurse_determinants(ctx: SpectralContext, alpha, scaled: bool = True):
    """Run the interface recursion outward through all finite regions.

    Returns two DeterminantPairs evaluated at the outermost interface:
    the drive pair seeded by the inner conductor's regular field, and the
    unit pair seeded by (1, 0). The ratio of linear combinations of the
    two is what every spectral quantity needs; their difference of scale
    exponents is real up to the analytically cancelling -i kappa terms.
    """
    a, _ = _as_alpha_array(alpha)
    kap0 = ctx.kappa(0, a)
    r0 = float(ctx.radii[0])
    z0 = kap0 * r0
    with np.errstate(over="ignore", invalid="ignore"):
        if scaled:
            f = -kap0 * bessel.scaled_j(0, z0)
            g = -ctx.eps[0] * bessel.scaled_j(1, z0)
            scale = -1j * z0
        else:
            f = -kap0 * special.jv(0, z0)
            g = -ctx.eps[0] * special.jv(1, z0)
            scale = np.zeros_like(a)
        pair = DeterminantPair(f=f, g=g, scale_log=scale)
        unit = DeterminantPair(
            f=np.ones_like(a),
            g=np.zeros_like(a),
            scale_log=np.zeros_like(a),
        )
        for region in range(1, ctx.stack.n_boundaries):
            ca, cb, cc, cd, step = transfer_coefficients(ctx, region, a, scaled=scaled)
            for p in (pair, unit):
                fn = ca * p.f + cb * p.g
                gn = cc * p.f + cd * p.g
                p.f, p.g, p.scale_log = fn, gn, p.scale_log + step
            if scaled:
                for p in (pair, unit):
                    _renormalize(p)
    if scaled:
        for p in (pair, unit):
            if not (
                np.all(np.isfinite(p.f))
                and np.all(np.isfinite(p.g))
                and np.all(np.isfinite(p.scale_log))
            ):
                raise NonFiniteError("scaled determinant recursion lost finiteness")
    return pair, unit


def _renormalize(p: DeterminantPair) -> None:
    m = np.maximum(np.abs(p.f), np.abs(p.g))
    need = (m > _RENORM_HI) | ((m < _RENORM_LO) & (m > 0))
    if need.any():
        fac = np.where(need, m, 1.0)
        p.f = p.f / fac
        p.g = p.g / fac
        p.scale_log = p.scale_log + np.log(fac)


def det_dispersion(ctx: SpectralContext, alpha, scaled: bool = True, hankel_kind: int = 1):
    """Boundary-condition determinant, as (mantissa, scale_log) with the
    true value mantissa * e^{scale_log}.

    ``hankel_kind`` selects the exterior radial function: 1 closes the
    stack with the outgoing wave (zeros in the upper half-plane are the
    proper modes), 2 with the incoming one. Neither closing by itself is
    the analytic continuation through the real segment inside the branch
    points; that is det_continued. The determinant has a 1/kappa_ext
    singularity at the branch point itself, so alpha there is rejected.
    """
    if hankel_kind not in (1, 2):
        raise DomainError("hankel_kind must be 1 or 2")
    a, scalar = _as_alpha_array(alpha)
    pair, _ = recurse_determinants(ctx, a, scaled=scaled)
    ext = ctx.n_regions - 1
    kap = ctx.kappa(ext, a)
    if np.any(kap == 0):
        raise DomainError("determinant is singular at the branch point")
    rn = float(ctx.radii[-1])
    zn = kap * rn
    with np.errstate(over="ignore", invalid="ignore"):
        if scaled:
            if hankel_kind == 1:
                h0, h1 = special.hankel1e(0, zn), special.hankel1e(1, zn)
                scale = pair.scale_log + 1j * zn
            else:
                h0, h1 = special.hankel2e(0, zn), special.hankel2e(1, zn)
                scale = pair.scale_log - 1j * zn
        else:
            if hankel_kind == 1:
                h0, h1 = special.hankel1(0, zn), special.hankel1(1, zn)
            else:
                h0, h1 = special.hankel2(0, zn), special.hankel2(1, zn)
            scale = pair.scale_log
        value = ctx.eps[ext] * h1 * pair.f - kap * h0 * pair.g
    if scalar:
        return complex(value[0]), complex(scale[0])
    return value, scale


def det_continued(ctx: SpectralContext, alpha, scaled: bool = True):
    """The outgoing-closure determinant continued through the real
    segment between the branch points, as (mantissa, scale_log).

    The exterior Hankel argument crosses the negative real axis of its
    own log cut there; the connection formula turns one outgoing
    determinant into minus (twice itself plus the incoming one),
    evaluated on the principal branch. Zeros of this combination between
    the imaginary axis and the branch point are what invalidate
    straightening the cut-wrap contour onto the vertical ray, so the
    deformation check counts them rather than zeros of either plain
    closing.
    """
    a, scalar = _as_alpha_array(alpha)
    pair, _ = recurse_determinants(ctx, a, scaled=scaled)
    ext = ctx.n_regions - 1
    kap = ctx.kappa(ext, a)
    if np.any(kap == 0):
        raise DomainError("determinant is singular at the branch point")
    rn = float(ctx.radii[-1])
    zn = kap * rn
    with np.errstate(over="ignore", invalid="ignore"):
        if scaled:
            h10, h11 = special.hankel1e(0, zn), special.hankel1e(1, zn)
            h20, h21 = special.hankel2e(0, zn), special.hankel2e(1, zn)
            grow = np.exp(2j * zn)
            d1 = ctx.eps[ext] * h11 * pair.f - kap * h10 * pair.g
            d2 = ctx.eps[ext] * h21 * pair.f - kap * h20 * pair.g
            value = -(2.0 * d1 * grow + d2)
            scale = pair.scale_log - 1j * zn
        else:
            h10, h11 = special.hankel1(0, zn), special.hankel1(1, zn)
            h20, h21 = special.hankel2(0, zn), special.hankel2(1, zn)
            d1 = ctx.eps[ext] * h11 * pair.f - kap * h10 * pair.g
            d2 = ctx.eps[ext] * h21 * pair.f - kap * h20 * pair.g
            value = -(2.0 * d1 + d2)
            scale = pair.scale_log
    if scalar:
        return complex(value[0]), complex(scale[0])
    return value, scale


def _ratio_exponent(pair: DeterminantPair, unit: DeterminantPair, z0: np.ndarray):
    """exp(-i kappa_0 r_0 + scale_unit - scale_pair), which is real up to
    roundoff because the imaginary parts cancel term by term."""
    expo = -1j * z0 + unit.scale_log - pair.scale_log
    return np.exp(expo)


def eval_F(ctx: SpectralContext, alpha, calibration: complex = 1.0, scaled: bool = True):
    """Spectral density of the inner-conductor current.

    The inverse transform of F over axial wavenumber alpha gives the total
    current at axial distance z; its poles are the modes, its branch cut
    the radiation remnant. ``calibration`` is the drive normalization
    produced by spectral.calibrate. Finite at the branch point (the
    exterior Hankel functions cancel between numerator and denominator in
    the limit), even in alpha, and analytic off the cut and poles.
    """
    a, scalar = _as_alpha_array(alpha)
    pair, unit = recurse_determinants(ctx, a, scaled=scaled)
    ext = ctx.n_regions - 1
    kap = ctx.kappa(ext, a)
    rn = float(ctx.radii[-1])
    at_bp = kap == 0
    zn = np.where(at_bp, 1.0, kap * rn)
    kap0 = ctx.kappa(0, a)
    r0 = float(ctx.radii[0])
    z0 = kap0 * r0
    sigma0 = float(ctx.stack.layers[0].sigma)
    with np.errstate(over="ignore", invalid="ignore"):
        if scaled:
            h0, h1 = special.hankel1e(0, zn), special.hankel1e(1, zn)
            j1d = bessel.scaled_j(1, z0)
            ratio_scale = _ratio_exponent(pair, unit, z0)
        else:
            h0, h1 = special.hankel1(0, zn), special.hankel1(1, zn)
            j1d = special.jv(1, z0)
            ratio_scale = np.ones_like(a)
        ye = ctx.eps[ext] * h1
        xe = kap * h0
        num = ye * unit.f - xe * unit.g
        den = ye * pair.f - xe * pair.g
        frac = np.where(at_bp, unit.f / pair.f, num / den)
        out = calibration * sigma0 * r0 * j1d * frac * ratio_scale
    if scalar:
        return complex(out[0])
    return out


def eval_q(
    ctx: SpectralContext,
    alpha,
    calibration: complex = 1.0,
    return_floor: bool = False,
):
    """Jump of the spectral density across the vertical branch ray.

    On the right side of the ray the density is eval_F itself; the left
    side carries its analytic continuation through the real segment
    inside the branch points, whose denominator is det_continued rather
    than the incoming-closure determinant (the exterior Hankel argument
    winds around the log branch point of the Hankel functions, and the
    connection formula mixes the closings asymmetrically). The numerator
    difference collapses to the exterior Wronskian, leaving one closed
    form per point with the physical and continued determinants in the
    denominator. Vanishes linearly at the branch point; the exact limit
    0 is returned there.

    With ``return_floor`` a second array (or float) comes back holding a
    per-point estimate of the evaluation noise: the cross difference is
    built from two products that agree to all digits once the interior
    layers span many skin depths, so the jump itself can fall below the
    rounding level of those products. Values whose magnitude sits near
    the floor carry no usable digits.
    """
    a, scalar = _as_alpha_array(alpha)
    pair, unit = recurse_determinants(ctx, a, scaled=True)
    ext = ctx.n_regions - 1
    kap = ctx.kappa(ext, a)
    rn = float(ctx.radii[-1])
    at_bp = kap == 0
    zn = np.where(at_bp, 1.0, kap * rn)
    kap0 = ctx.kappa(0, a)
    r0 = float(ctx.radii[0])
    z0 = kap0 * r0
    sigma0 = float(ctx.stack.layers[0].sigma)
    eps_ext = ctx.eps[ext]
    with np.errstate(over="ignore", invalid="ignore"):
        h10, h11 = special.hankel1e(0, zn), special.hankel1e(1, zn)
        h20, h21 = special.hankel2e(0, zn), special.hankel2e(1, zn)
        d1 = eps_ext * h11 * pair.f - kap * h10 * pair.g
        d2 = eps_ext * h21 * pair.f - kap * h20 * pair.g
        # Mantissa of det_continued relative to d2's scale; the e^{2i zn}
        # regrowth is bounded on and left of the ray (Im zn >= 0 there).
        dcont = 2.0 * d1 * np.exp(2j * zn) + d2
        cross = unit.f * pair.g - pair.f * unit.g
        j1d = bessel.scaled_j(1, z0)
        ratio_scale = _ratio_exponent(pair, unit, z0)
        pref = calibration * 4j * sigma0 * (r0 / rn) * eps_ext / math.pi
        scale = pref * j1d * ratio_scale / (d1 * dcont)
        out = np.where(at_bp, 0.0, scale * cross)
        if return_floor:
            spread = np.abs(unit.f * pair.g) + np.abs(pair.f * unit.g)
            floor = np.where(
                at_bp, 0.0, _CROSS_NOISE_REL * np.abs(scale) * spread
            )
    if scalar:
        if return_floor:
            return complex(out[0]), float(floor[0])
        return complex(out[0])
    if return_floor:
        return out, floor
    return out


@dataclass(frozen=True)
class BranchCutCoefficients:
    """Local expansion data of the jump function at the branch point.

    ``q_prime`` is dq/dalpha at the branch point; ``log_coefficient`` the
    strength A of the ln(-i (alpha - alpha_c)) part of q''. Together they
    determine the large-distance branch-cut current asymptotics.
    """

    alpha_c: complex
    q_prime: complex
    log_coefficient: complex


def branch_cut_coefficients(
    ctx: SpectralContext, calibration: complex = 1.0
) -> BranchCutCoefficients:
    """Expansion coefficients of eval_q at the branch point.

    Both coefficients are closed forms in the determinant pairs evaluated
    exactly at alpha_c (where the exterior wavenumber vanishes but the
    interior recursion is regular). Both closings of the exterior reduce
    there to the same 1/kappa_ext Hankel singularity, with the continued
    denominator approaching minus the physical one, which fixes the
    overall sign."""
    ac = ctx.branch_point()
    a = np.array([ac])
    pair, unit = recurse_determinants(ctx, a, scaled=True)
    ext = ctx.n_regions - 1
    rn = float(ctx.radii[-1])
    kap0 = ctx.kappa(0, a)
    r0 = float(ctx.radii[0])
    z0 = kap0 * r0
    sigma0 = float(ctx.stack.layers[0].sigma)
    eps_ext = ctx.eps[ext]
    j1d = bessel.scaled_j(1, z0)
    ratio_scale = _ratio_exponent(pair, unit, z0)
    cross = unit.f * pair.g - pair.f * unit.g
    q_prime = (
        2j
        * math.pi
        * ac
        * calibration
        * sigma0
        * r0
        * rn
        * j1d
        * cross
        / (eps_ext * pair.f * pair.f)
        * ratio_scale
    )
    damp = (eps_ext * pair.f - 2.0 * pair.g / rn) / (eps_ext * pair.f)
    log_coefficient = -q_prime * damp * 2.0 * ac * rn * rn
    return BranchCutCoefficients(
        alpha_c=ac,
        q_prime=complex(q_prime[0]),
        log_coefficient=complex(log_coefficient[0]),
    )
