"""Locating modal poles in the complex axial-wavenumber plane.

Proper modes are zeros of the kind-1 boundary determinant in the upper
half alpha plane, to the right of the exterior branch point. Counting
uses the argument principle evaluated as a sum of principal-branch phase
increments of the determinant around a rectangle: on a closed loop that
sum is exactly 2 pi times the winding number provided no increment
aliases past pi. Location refines a counted rectangle through the ratio
of two contour integrals of the reciprocal determinant (first moment
over plain residue), which is exact for a single simple zero, then
shrinks the box and repeats.

The determinant is sampled through its (mantissa, scale_log)
representation; phases add Im(scale_log) and magnitudes add
Re(scale_log), so the piecewise renormalization never breaks continuity
of the sampled phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import det_continued, det_dispersion
from .errors import (
    ContinuationBreakError,
    ContourTooCloseError,
    CutCrossedError,
    NoConvergenceError,
    NotSimpleZeroError,
)
from .model import LayerStack, SpectralContext, spectral_context
from .quadrature import edge_quadrature

__all__ = [
    "SearchRegion",
    "PoleResult",
    "ModeTrace",
    "count_zeros",
    "locate_pole",
    "find_poles",
    "trace_mode",
]


@dataclass(frozen=True)
class SearchRegion:
    """Axis-aligned rectangle in the complex alpha plane [1/m]."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (
            math.isfinite(self.re_min)
            and math.isfinite(self.re_max)
            and math.isfinite(self.im_min)
            and math.isfinite(self.im_max)
        ):
            raise ValueError("search region bounds must be finite")
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("search region is empty")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    def corners(self) -> list[complex]:
        """Counterclockwise, starting at the lower-left corner."""
        return [
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        ]

    @staticmethod
    def square(center: complex, half_size: float) -> "SearchRegion":
        return SearchRegion(
            center.real - half_size,
            center.real + half_size,
            center.imag - half_size,
            center.imag + half_size,
        )


@dataclass(frozen=True)
class PoleResult:
    """A located simple determinant zero."""

    alpha: complex
    residual: float
    iterations: int
    final_half_size: float


@dataclass(frozen=True)
class ModeTrace:
    """One mode followed across a frequency grid."""

    frequencies: np.ndarray
    alpha: np.ndarray
    residual: np.ndarray
    label: str = ""


def _guard_cuts(ctx: SpectralContext, region: SearchRegion) -> None:
    """Reject rectangles whose boundary could cross a discontinuity.

    Three loci matter: the spectral branch cut (vertical ray rising from
    the branch point), the evaluator's sqrt seam on the imaginary axis,
    and its seam along the real segment between the mirrored branch
    points. Counting across any of them is meaningless.
    """
    ac = ctx.branch_point()
    if region.re_min <= ac.real <= region.re_max and region.im_max >= ac.imag:
        raise CutCrossedError(
            f"region crosses the branch cut rising from {ac:.6g}"
        )
    if region.re_min <= 0.0 <= region.re_max:
        raise CutCrossedError("region crosses the imaginary axis seam")
    if region.im_min <= 0.0 and region.re_min <= abs(ac):
        raise CutCrossedError("region reaches the real-axis seam below the branch point")


# Boundary nodes are graded toward the edge corners (tanh map). Winding
# contours often have their worst phase gradient next to a corner, e.g.
# the deformation strip whose lower-right corner approaches the branch
# point; clustering there lets the count converge at a sampling density
# the uniform rule would need several doublings to reach. The slope at
# mid-edge only coarsens by s/tanh(s), well within one doubling.
_GRADE = 2.5


def _boundary_points(region: SearchRegion, per_edge: int) -> np.ndarray:
    corners = region.corners()
    t = np.arange(per_edge) / per_edge
    g = 0.5 * (np.tanh(_GRADE * (2.0 * t - 1.0)) / math.tanh(_GRADE) + 1.0)
    pts = []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        pts.append(a + (b - a) * g)
    return np.concatenate(pts)


def _phases(ctx: SpectralContext, pts: np.ndarray, closing: int | str) -> np.ndarray:
    if closing == "continued":
        val, scale = det_continued(ctx, pts, scaled=True)
    else:
        val, scale = det_dispersion(ctx, pts, scaled=True, hankel_kind=closing)
    if np.any(val == 0):
        raise ContourTooCloseError("determinant vanished on the contour")
    return np.angle(val) + np.imag(scale)


def _winding_once(
    ctx: SpectralContext, region: SearchRegion, per_edge: int, closing: int | str = 1
) -> int:
    phi = _phases(ctx, _boundary_points(region, per_edge), closing)
    dphi = np.diff(phi, append=phi[:1])
    dphi = (dphi + math.pi) % (2.0 * math.pi) - math.pi
    if np.max(np.abs(dphi)) > 0.5 * math.pi:
        raise ContourTooCloseError("phase increment aliased")
    total = float(np.sum(dphi)) / (2.0 * math.pi)
    w = round(total)
    if abs(total - w) > 0.25:
        raise ContourTooCloseError(f"winding sum {total:.3f} is not near an integer")
    return w


def count_zeros(
    ctx: SpectralContext,
    region: SearchRegion,
    per_edge: int = 64,
    max_doublings: int = 7,
    closing: int | str = 1,
) -> int:
    """Number of determinant zeros inside ``region`` (argument principle).

    Each principal-branch phase increment along the sampled boundary must
    stay below pi/2, and the count must agree between two consecutive
    sampling densities, otherwise the density doubles. Exhausting the
    doublings raises ContourTooCloseError (a zero is effectively on the
    boundary). Crossing a cut raises CutCrossedError before any sampling.
    ``closing`` selects the function counted: Hankel kind 1 (default,
    zeros are the physical modes), kind 2, or "continued" for the
    determinant carried through the segment below the branch point
    (zeros there obstruct the cut-wrap deformation).
    """
    _guard_cuts(ctx, region)
    n = per_edge
    prev: int | None = None
    for _ in range(max_doublings):
        try:
            w = _winding_once(ctx, region, n, closing)
        except ContourTooCloseError:
            prev = None
            n *= 2
            continue
        if prev is not None and w == prev:
            return w
        prev = w
        n *= 2
    raise ContourTooCloseError(
        f"no stable winding for {region} after refining to {n} points/edge"
    )


def _contour_moments(ctx: SpectralContext, region: SearchRegion, order: int):
    """(moment integral, count integral, max |det| on contour, s_ref)."""
    corners = region.corners()
    i0 = 0.0 + 0.0j
    i1 = 0.0 + 0.0j
    s_ref: complex | None = None
    u_max = 0.0
    for k in range(4):
        z, w = edge_quadrature(corners[k], corners[(k + 1) % 4], order)
        val, scale = det_dispersion(ctx, z, scaled=True)
        if s_ref is None:
            s_ref = complex(np.mean(scale))
        u = val * np.exp(scale - s_ref)
        i0 += np.sum(w / u)
        i1 += np.sum(w * z / u)
        u_max = max(u_max, float(np.max(np.abs(u))))
    return i1, i0, u_max, s_ref


def _ratio_estimate(ctx: SpectralContext, region: SearchRegion, rtol: float):
    order = 16
    prev = None
    while order <= 1024:
        i1, i0, u_max, s_ref = _contour_moments(ctx, region, order)
        if i0 == 0:
            raise NoConvergenceError("count integral vanished; no pole enclosed?")
        est = i1 / i0
        if prev is not None and abs(est - prev) <= max(rtol * abs(est), 1e-300):
            return est, u_max, s_ref
        prev = est
        order *= 2
    raise NoConvergenceError("contour moment ratio did not stabilize")


def locate_pole(
    ctx: SpectralContext,
    region: SearchRegion,
    rtol: float = 1e-12,
    max_iterations: int = 24,
) -> PoleResult:
    """Refine the single simple determinant zero inside ``region``.

    Counts first (must be exactly 1), then alternates contour-moment
    estimates with box shrinking until the estimate moves by less than
    ``rtol`` relatively. The reported residual is |det| at the result
    over the maximum |det| on the final contour, both in the common
    scale normalization.
    """
    w = count_zeros(ctx, region)
    if w != 1:
        raise NotSimpleZeroError(f"region holds {w} zeros, need exactly 1")
    rect = region
    est_prev: complex | None = None
    est = rect.center
    u_max = 1.0
    s_ref = 0.0 + 0.0j
    for it in range(1, max_iterations + 1):
        est, u_max, s_ref = _ratio_estimate(ctx, rect, rtol=0.05 * rtol)
        if est_prev is not None and abs(est - est_prev) <= rtol * abs(est):
            break
        est_prev = est
        half = max(
            min(rect.width, rect.height) / 6.0,
            4.0 * abs(est) * 1e-14,
        )
        rect = SearchRegion.square(est, half)
    else:
        raise NoConvergenceError(f"pole refinement stalled near {est:.9g}")
    val, scale = det_dispersion(ctx, np.array([est]), scaled=True)
    residual = float(np.abs(val[0] * np.exp(scale[0] - s_ref))) / u_max
    return PoleResult(
        alpha=complex(est),
        residual=residual,
        iterations=it,
        final_half_size=0.5 * min(rect.width, rect.height),
    )


def _split(region: SearchRegion) -> tuple[SearchRegion, SearchRegion]:
    if region.width >= region.height:
        mid = 0.5 * (region.re_min + region.re_max)
        return (
            SearchRegion(region.re_min, mid, region.im_min, region.im_max),
            SearchRegion(mid, region.re_max, region.im_min, region.im_max),
        )
    mid = 0.5 * (region.im_min + region.im_max)
    return (
        SearchRegion(region.re_min, region.re_max, region.im_min, mid),
        SearchRegion(region.re_min, region.re_max, mid, region.im_max),
    )


def find_poles(
    ctx: SpectralContext,
    region: SearchRegion,
    max_depth: int = 14,
) -> list[PoleResult]:
    """All simple determinant zeros inside ``region``, by cell bisection.

    Cells are split until each holds at most one zero, jittering split
    lines that land on a zero. Results are sorted by increasing Im alpha
    (least-damped mode first), then Re alpha.
    """
    found: list[PoleResult] = []

    def visit(reg: SearchRegion, depth: int, jitter: float) -> None:
        if depth < 0:
            raise NoConvergenceError(f"bisection depth exhausted in {reg}")
        try:
            n = count_zeros(ctx, reg)
        except ContourTooCloseError:
            if jitter > 0.12:
                raise
            grown = SearchRegion(
                reg.re_min - jitter * reg.width,
                reg.re_max + 1.7 * jitter * reg.width,
                reg.im_min - jitter * reg.height,
                reg.im_max + 1.3 * jitter * reg.height,
            )
            visit(grown, depth - 1, jitter * 2.0)
            return
        if n == 0:
            return
        if n == 1:
            found.append(locate_pole(ctx, reg))
            return
        left, right = _split(reg)
        visit(left, depth - 1, 0.03)
        visit(right, depth - 1, 0.03)

    visit(region, max_depth, 0.03)
    dedup: list[PoleResult] = []
    for p in sorted(found, key=lambda p: (p.alpha.imag, p.alpha.real)):
        if all(abs(p.alpha - q.alpha) > 1e-9 * abs(p.alpha) for q in dedup):
            dedup.append(p)
    return dedup


def trace_mode(
    stack: LayerStack,
    frequencies,
    seed: SearchRegion | complex,
    label: str = "",
    max_step_jump: float = 0.2,
) -> ModeTrace:
    """Follow one mode across ``frequencies`` by scaled continuation.

    The first frequency locates the pole inside ``seed`` (a region, or a
    complex guess that gets a 5 percent box). Each further frequency
    scales the previous pole by the free-space wavenumber ratio, then
    re-locates in an adaptive box. A relative jump of the normalized
    wavenumber alpha/k0 beyond ``max_step_jump`` aborts with
    ContinuationBreakError naming the frequency.
    """
    freqs = np.asarray(frequencies, dtype=float)
    if freqs.ndim != 1 or len(freqs) == 0:
        raise ValueError("frequencies must be a non-empty 1-d array")
    alphas = np.empty(len(freqs), dtype=complex)
    residuals = np.empty(len(freqs), dtype=float)

    ctx = spectral_context(stack, float(freqs[0]))
    if isinstance(seed, SearchRegion):
        pole = locate_pole(ctx, seed)
    else:
        pole = _locate_near(ctx, complex(seed), 0.05 * abs(complex(seed)))
    alphas[0] = pole.alpha
    residuals[0] = pole.residual
    k0_prev = ctx.k0

    half_rel = 0.02
    for j in range(1, len(freqs)):
        ctx = spectral_context(stack, float(freqs[j]))
        expected = alphas[j - 1] * (ctx.k0 / k0_prev)
        pole = _locate_near(ctx, expected, half_rel * abs(expected))
        ratio_prev = alphas[j - 1] / k0_prev
        ratio_now = pole.alpha / ctx.k0
        if abs(ratio_now - ratio_prev) > max_step_jump * abs(ratio_prev):
            raise ContinuationBreakError(
                f"mode {label or '?'} jumped by "
                f"{abs(ratio_now - ratio_prev) / abs(ratio_prev):.2%} "
                f"between {freqs[j - 1]:.6g} Hz and {freqs[j]:.6g} Hz"
            )
        alphas[j] = pole.alpha
        residuals[j] = pole.residual
        k0_prev = ctx.k0
        # keep the box a few times larger than the step actually seen
        step = abs(pole.alpha - expected)
        half_rel = min(0.05, max(6.0 * step / abs(pole.alpha), 1e-6))
    return ModeTrace(frequencies=freqs, alpha=alphas, residual=residuals, label=label)


def _locate_near(ctx: SpectralContext, guess: complex, half: float) -> PoleResult:
    """Locate a pole near ``guess``, growing/shrinking the box as needed."""
    for _ in range(8):
        region = SearchRegion.square(guess, half)
        try:
            return locate_pole(ctx, region)
        except NotSimpleZeroError as err:
            if "0 zeros" in str(err):
                half *= 2.2
            else:
                half /= 2.7
        except CutCrossedError:
            half /= 2.0
        except ContourTooCloseError:
            half *= 1.37
    raise NoConvergenceError(f"no isolated pole near {guess:.9g}")
