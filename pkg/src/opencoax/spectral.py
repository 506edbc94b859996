"""Decomposing the line current into modal and branch-cut contributions.

Closing the inverse transform of the spectral density in the upper
half-plane splits the current at distance z into a sum over modal poles
plus an integral along the exterior branch cut. Each piece is computed
here:

* pole strengths as small-rectangle contour integrals of the density
  (times e^{i alpha_p z} afterwards, so one strength serves every z);
* the cut contribution as a double-exponential quadrature of the jump
  function along the vertical ray rising from the branch point;
* its closed-form large-distance asymptotics, the rest-term constant,
  and the resulting upper bound;
* the drive calibration tying the decomposition to an input current
  spectrum at a reference distance just outside the feed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import EULER_GAMMA
from .dispersion import (
    BranchCutCoefficients,
    branch_cut_coefficients,
    eval_F,
    eval_q,
)
from .errors import (
    ContourError,
    ContourLeakError,
    DegenerateExcitationError,
    NoConvergenceError,
    PoleBetweenContoursError,
)
from .model import SpectralContext
from .modes import SearchRegion, count_zeros
from .quadrature import edge_quadrature, exp_sinh

__all__ = [
    "CurrentContribution",
    "CalibrationResult",
    "residue_strength",
    "modal_current",
    "deformation_pole_count",
    "branch_current",
    "branch_asymptotic",
    "rest_term_bound",
    "branch_upper_bound",
    "calibrate",
    "current_contributions",
]

# Ray truncation: keep at least this many e-foldings of exp(-t z) and at
# least this many inverse branch-point scales, whichever reaches further.
_RAY_EFOLDINGS = 40.0
_RAY_MIN_INV_SCALES = 10.0
# exp(-x) is a hard float zero past x ~ 745; nodes beyond contribute
# nothing and only risk overflowing the radial arguments.
_RAY_DEAD_EFOLDINGS = 740.0

# Relative accuracy assumed for one spectral-density sample inside a
# contour integral. A smooth integrand circles a closed rectangle to an
# exact zero; in floats it leaves residue-like lint of about this size
# times the absolute-value line integral, which is the resolution limit
# for any strength extracted from that contour.
_QUAD_NOISE_REL = 1e-13


@dataclass(frozen=True)
class CurrentContribution:
    """One additive piece of the spectral current at distance ``z``.

    ``kind`` is "mode", "branch_cut", "branch_asymptotic", or
    "branch_upper_bound" (value real for the bound, complex otherwise).
    Values carry the units of the calibrated input spectrum, ampere-
    seconds for a sampled transform.
    """

    kind: str
    value: complex | float
    z: float
    freq: float
    mode_index: int | None = None


def _rect_integral_F(
    ctx: SpectralContext,
    region: SearchRegion,
    calibration: complex,
    rtol: float,
) -> tuple[complex, float]:
    """Contour integral of the density with its rounding floor.

    The floor is what a pole-free background would leave behind on this
    contour; a weak pole cannot be resolved below it, so stabilization
    is judged against the floor as well as ``rtol``.
    """
    corners = region.corners()
    order = 16
    prev: complex | None = None
    while order <= 1024:
        acc = 0.0 + 0.0j
        lint = 0.0
        for k in range(4):
            z, w = edge_quadrature(corners[k], corners[(k + 1) % 4], order)
            fv = eval_F(ctx, z, calibration=calibration)
            acc += np.sum(w * fv)
            lint += float(np.sum(np.abs(w) * np.abs(fv)))
        noise = _QUAD_NOISE_REL * lint
        if prev is not None and abs(acc - prev) <= max(
            rtol * abs(acc), noise, 1e-300
        ):
            return acc, noise
        prev = acc
        order *= 2
    raise NoConvergenceError("pole-strength contour integral did not stabilize")


def residue_strength(
    ctx: SpectralContext,
    alpha_p: complex,
    calibration: complex = 1.0,
    rtol: float = 1e-10,
    leak_tol: float = 1e-6,
) -> complex:
    """Closed contour integral of the spectral density around one pole.

    This is 2 pi i times the residue; multiplied by e^{i alpha_p z} it is
    that mode's current contribution at distance z. The rectangle is
    shrunk until it winds exactly once, and the result is cross-checked
    on a half-size rectangle: disagreement beyond ``leak_tol`` (or beyond
    the contours' combined rounding floors, for residues too weak to
    resolve) means the contour is picking up another feature and raises
    ContourLeakError.
    """
    half = 1e-3 * abs(alpha_p)
    for _ in range(8):
        region = SearchRegion.square(complex(alpha_p), half)
        try:
            if count_zeros(ctx, region) == 1:
                break
        except ContourError:
            pass
        half /= 4.0
    else:
        raise ContourError(f"no clean rectangle around pole {alpha_p:.9g}")
    outer, noise_out = _rect_integral_F(
        ctx, SearchRegion.square(complex(alpha_p), half), calibration, rtol
    )
    inner, noise_in = _rect_integral_F(
        ctx, SearchRegion.square(complex(alpha_p), 0.5 * half), calibration, rtol
    )
    gap = abs(outer - inner)
    if gap > max(leak_tol * max(abs(outer), abs(inner)), noise_out + noise_in):
        raise ContourLeakError(
            f"pole strength at {alpha_p:.9g} depends on the contour "
            f"({gap / max(abs(outer), abs(inner)):.2e} relative)"
        )
    return inner


def modal_current(
    ctx: SpectralContext,
    alpha_p: complex,
    z: float,
    calibration: complex = 1.0,
    strength: complex | None = None,
    mode_index: int | None = None,
) -> CurrentContribution:
    """One mode's current at distance z.

    Pass ``strength`` to reuse a residue_strength computed with unit
    calibration; it is multiplied by ``calibration`` here, the same way
    the other contributions apply it. Without it the contour integral
    runs now.
    """
    if z <= 0:
        raise ValueError("distance must be positive")
    if strength is not None:
        k = strength * calibration
    else:
        k = residue_strength(ctx, alpha_p, calibration)
    value = complex(k * np.exp(1j * complex(alpha_p) * z))
    return CurrentContribution(
        kind="mode", value=value, z=z, freq=ctx.frequency, mode_index=mode_index
    )


def _ray_truncation(ctx: SpectralContext) -> float:
    ac = ctx.branch_point()
    return _RAY_MIN_INV_SCALES / abs(ac)


def deformation_pole_count(
    ctx: SpectralContext,
    height_scales: float = 50.0,
    margin: float = 1e-3,
) -> int:
    """Zeros of the continued determinant in the strip swept when the
    cut wrap contour is straightened onto the vertical ray.

    Left of the ray the density is the continuation of eval_F through
    the segment below the branch point, so its poles there are zeros of
    det_continued; each one would contribute a residue the straightened
    ray misses. The strip is the rectangle between the imaginary axis
    and the branch point, from just above the real axis up to
    ``height_scales`` branch-point magnitudes; above that every radial
    wavenumber is deep in its evanescent regime and the determinant has
    no oscillatory structure left to produce zeros.
    """
    ac = ctx.branch_point()
    a = abs(ac)
    re_min = margin * a
    re_max = (1.0 - margin) * ac.real
    if re_max <= re_min:
        return 0
    region = SearchRegion(
        re_min=re_min,
        re_max=re_max,
        im_min=margin * a,
        im_max=height_scales * a,
    )
    return abs(count_zeros(ctx, region, closing="continued"))


def branch_current(
    ctx: SpectralContext,
    z: float,
    calibration: complex = 1.0,
    rtol: float = 1e-6,
    max_level: int = 9,
    check_deformation: bool = False,
) -> CurrentContribution:
    """Branch-cut contribution to the current at distance z.

    Integrates the jump function along the vertical ray alpha_c + i t,
    t in (0, T], with double-exponential nodes (clustered at the branch
    point, where the integrand has a mild logarithmic bend) and level
    doubling until the value settles to ``rtol`` or down to the jump
    function's own evaluation floor, whichever is coarser. The
    truncation T keeps e^{-T z} far below the tolerance at every
    distance of interest.

    ``check_deformation`` verifies the contour-straightening premise by
    counting determinant zeros in the swept strip (PoleBetweenContoursError
    if any); the count depends only on ``ctx``, so batch callers run it
    once per frequency rather than per distance.
    """
    if z <= 0:
        raise ValueError("distance must be positive")
    if check_deformation:
        n = deformation_pole_count(ctx)
        if n != 0:
            raise PoleBetweenContoursError(
                f"{n} determinant zeros inside the deformation strip at "
                f"{ctx.frequency:g} Hz"
            )
    ac = ctx.branch_point()
    t_max = max(_RAY_EFOLDINGS / z, _ray_truncation(ctx))
    t_eval = min(t_max, _RAY_DEAD_EFOLDINGS / z)
    phase = np.exp(1j * ac * z)
    prev: complex | None = None
    for level in range(2, max_level + 1):
        t, w = exp_sinh(level, abs(ac), t_eval)
        q, floor = eval_q(
            ctx, ac + 1j * t, calibration=calibration, return_floor=True
        )
        with np.errstate(under="ignore"):
            decay = np.exp(-t * z)
            val = complex(1j * phase * np.sum(w * q * decay))
            noise = abs(phase) * float(np.sum(w * floor * decay))
        if prev is not None and abs(val - prev) <= max(
            rtol * abs(val), noise, 1e-300
        ):
            return CurrentContribution(kind="branch_cut", value=val, z=z, freq=ctx.frequency)
        prev = val
    raise NoConvergenceError(f"branch-cut quadrature did not settle at z = {z:g} m")


def rest_term_bound(
    ctx: SpectralContext,
    calibration: complex = 1.0,
    coeffs: BranchCutCoefficients | None = None,
) -> float:
    """Estimated sup of the non-logarithmic part of q'' on the ray.

    The jump function's second derivative behaves as A ln(-i (alpha -
    alpha_c)) + r(alpha) near the branch point; the second-order Taylor
    remainder of the cut integral is then bounded by
    sup|r| e^{-Im alpha_c z} / z^3. |r| is sampled at 64 log-spaced ray
    offsets, differentiating by complex-plane steps along the ray, and
    padded by 1.5x to cover the finite sampling. An estimator, not a
    certified bound; adequate for reporting and the regression gates.
    """
    if coeffs is None:
        coeffs = branch_cut_coefficients(ctx, calibration)
    ac = coeffs.alpha_c
    t = np.abs(ac) * np.logspace(-4.0, 4.0, 64)
    h = 0.03 * t
    qm = eval_q(ctx, ac + 1j * (t - h), calibration=calibration)
    q0 = eval_q(ctx, ac + 1j * t, calibration=calibration)
    qp = eval_q(ctx, ac + 1j * (t + h), calibration=calibration)
    # alpha = ac + i t, so d2q/dalpha2 = -(d2q/dt2)
    qpp = -(qp - 2.0 * q0 + qm) / (h * h)
    r = qpp - coeffs.log_coefficient * np.log(t)
    return 1.5 * float(np.max(np.abs(r)))


def branch_asymptotic(
    ctx: SpectralContext,
    z: float,
    calibration: complex = 1.0,
    coeffs: BranchCutCoefficients | None = None,
) -> CurrentContribution:
    """Closed-form large-distance branch-cut current.

    Expanding the jump function to second order at the branch point and
    integrating against e^{-tz} leaves a 1/z^2 term from the slope and a
    (gamma + ln z)/z^3 term from the logarithmic curvature; everything
    beyond that is covered by the rest-term bound.
    """
    if z <= 0:
        raise ValueError("distance must be positive")
    if coeffs is None:
        coeffs = branch_cut_coefficients(ctx, calibration)
    phase = np.exp(1j * coeffs.alpha_c * z)
    value = complex(
        phase
        * (
            -coeffs.q_prime / (z * z)
            - 1j * coeffs.log_coefficient * (-EULER_GAMMA - math.log(z)) / z**3
        )
    )
    return CurrentContribution(kind="branch_asymptotic", value=value, z=z, freq=ctx.frequency)


def branch_upper_bound(
    ctx: SpectralContext,
    z: float,
    calibration: complex = 1.0,
    coeffs: BranchCutCoefficients | None = None,
    rest: float | None = None,
) -> CurrentContribution:
    """|asymptotic| plus the rest-term envelope: a number that dominates
    |branch_current| once the asymptotic regime is reached.

    ``rest`` takes a precomputed rest_term_bound; by default it is
    sampled here (the expensive part, independent of z).
    """
    if coeffs is None:
        coeffs = branch_cut_coefficients(ctx, calibration)
    if rest is None:
        rest = rest_term_bound(ctx, calibration, coeffs)
    asym = branch_asymptotic(ctx, z, calibration, coeffs)
    tail = rest * math.exp(-coeffs.alpha_c.imag * z) / z**3
    return CurrentContribution(
        kind="branch_upper_bound",
        value=abs(asym.value) + tail,
        z=z,
        freq=ctx.frequency,
    )


@dataclass(frozen=True)
class CalibrationResult:
    """Drive normalization of the spectral density.

    ``scale`` multiplies the raw density so the decomposition reproduces
    the input current spectrum at the reference distance. ``sensitivity``
    measures how much the scale moves over reference distances between
    0.1 and 10 times z_ref; values above the limit set ``flagged`` and
    usually mean the truncated mode set is too small.
    """

    scale: complex
    z_ref: float
    sensitivity: float
    flagged: bool


def calibrate(
    ctx: SpectralContext,
    input_current: complex,
    pole_strengths: list[tuple[complex, complex]],
    z_ref: float = 1.0,
    check_sensitivity: bool = True,
    sensitivity_limit: float = 1e-3,
) -> CalibrationResult:
    """Fix the drive normalization against the input current spectrum.

    ``pole_strengths`` holds (alpha_p, strength) pairs computed with unit
    calibration. The decomposition evaluated just outside the feed
    (distance z_ref) must return the full input current; the scale is
    their ratio. Calibration is linear in ``input_current``. Sensitivity
    is evaluated at 0.1 and 10 times z_ref when requested (skip in bulk
    sweeps for speed).
    """

    def total(zq: float) -> complex:
        acc = branch_current(ctx, zq, calibration=1.0).value
        biggest = abs(acc)
        for alpha_p, strength in pole_strengths:
            term = strength * np.exp(1j * alpha_p * zq)
            acc += term
            biggest = max(biggest, abs(term))
        if abs(acc) < 1e-12 * biggest:
            raise DegenerateExcitationError(
                f"decomposition cancels to {abs(acc):.3e} at z = {zq:g} m"
            )
        return acc

    scale = input_current / total(z_ref)
    sensitivity = 0.0
    if check_sensitivity:
        lo = input_current / total(0.1 * z_ref)
        hi = input_current / total(10.0 * z_ref)
        sensitivity = abs(lo - hi) / abs(scale) if scale != 0 else 0.0
    return CalibrationResult(
        scale=complex(scale),
        z_ref=z_ref,
        sensitivity=float(sensitivity),
        flagged=bool(sensitivity > sensitivity_limit),
    )


def current_contributions(
    ctx: SpectralContext,
    poles: list[complex],
    z: float,
    calibration: complex = 1.0,
    strengths: list[complex] | None = None,
    with_bound: bool = True,
) -> list[CurrentContribution]:
    """Every decomposition piece at one distance, modes first.

    ``strengths`` may carry precomputed unit-calibration residue
    strengths aligned with ``poles``; they are scaled by ``calibration``
    here. The asymptotic estimate and (optionally) its upper bound ride
    along for reporting.
    """
    out: list[CurrentContribution] = []
    for idx, alpha_p in enumerate(poles):
        out.append(
            modal_current(
                ctx,
                alpha_p,
                z,
                calibration=calibration,
                strength=None if strengths is None else strengths[idx],
                mode_index=idx + 1,
            )
        )
    out.append(branch_current(ctx, z, calibration=calibration))
    coeffs = branch_cut_coefficients(ctx, calibration)
    out.append(branch_asymptotic(ctx, z, calibration, coeffs))
    if with_bound:
        out.append(branch_upper_bound(ctx, z, calibration, coeffs))
    return out
