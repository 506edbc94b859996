"""Frequency sweep orchestration.

A sweep walks the requested frequency grid once per mode, carrying each
pole along by continuation, and enriches every bin with whatever the
caller asked for: residue strengths, calibration against the drive
spectrum, modal and branch-cut currents at one or more distances, and
the characteristic impedance of the dominant mode.

Continuation model: between bins, ln alpha is extrapolated linearly in
ln f with a per-mode exponent learned from the last accepted pair. The
exponent drifts from ~1/2 in the skin-effect-dominated low band toward
1 once the line is electrically long, so a fixed proportional estimate
would trip the jump guard on coarse low-frequency steps.

Parallel layout: the grid is cut into fixed chunks of ``coarse_step``
bins. A sequential pre-pass traces the modes across the chunk seams
only; workers then re-trace their own chunk from its seam seed and
enrich bin by bin. Chunk boundaries depend only on the grid, never on
the worker count, and results are merged by bin index, so a sweep is
reproducible to the byte no matter how many processes run it.

Failures are per-bin: a bin that loses its mode or its quadrature gets
an error string and NaN payloads while the rest of the sweep proceeds.
"""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .constants import C0, EULER_GAMMA, NEPER_TO_DB_PER_100KM
from .dispersion import branch_cut_coefficients
from .errors import ContinuationBreakError, NoConvergenceError, OpenCoaxError
from .impedance import characteristic_impedance
from .model import LayerStack, spectral_context
from .modes import PoleResult, _locate_near
from .spectral import (
    branch_current,
    calibrate,
    deformation_pole_count,
    residue_strength,
    rest_term_bound,
)

__all__ = [
    "SweepPlan",
    "BinResult",
    "SweepResult",
    "run_sweep",
    "attenuation_db_per_100km",
    "db_re_microamp_second",
    "extrapolate_low_bins",
]

# Continuation never steps more than this far in ln f at once.
_MAX_LOG_STEP = 0.08


def attenuation_db_per_100km(alpha: complex | np.ndarray) -> float | np.ndarray:
    """Modal attenuation: imaginary part of alpha in dB per 100 km."""
    return np.imag(alpha) * NEPER_TO_DB_PER_100KM


def db_re_microamp_second(value: complex | np.ndarray) -> float | np.ndarray:
    """Magnitude in dB relative to 1 microampere-second."""
    mag = np.abs(value)
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(mag / 1.0e-6)


@dataclass(frozen=True)
class SweepPlan:
    """What to compute at every frequency bin.

    ``mode_seeds`` are pole locations at ``seed_frequency`` (typically
    from a window search at the configured reference frequency), one per
    tracked mode, lowest first. ``drive_voltage`` holds the physical
    drive spectrum V(omega_k) in V s per bin when currents are
    calibrated against a voltage source behind ``r_source`` ohms;
    ``input_current`` gives the input current spectrum directly in A s
    and wins over ``drive_voltage``; with neither, a unit input current
    is assumed at every bin.
    """

    frequencies: np.ndarray
    mode_seeds: tuple[complex, ...]
    seed_frequency: float
    compute_impedance: bool = False
    compute_currents: bool = False
    distances: tuple[float, ...] = ()
    upper_region: int | None = None
    r_source: float = 25.0
    z_ref: float = 1.0
    coarse_step: int = 32
    drive_voltage: np.ndarray | None = None
    input_current: np.ndarray | None = None
    check_deformation: bool = True
    residual_limit: float = 1e-6

    def __post_init__(self) -> None:
        f = np.asarray(self.frequencies, dtype=float)
        object.__setattr__(self, "frequencies", f)
        if f.ndim != 1 or f.size == 0:
            raise ValueError("frequencies must be a nonempty 1-d array")
        if np.any(~np.isfinite(f)) or np.any(f <= 0):
            raise ValueError("all sweep frequencies must be positive and finite")
        if np.any(np.diff(f) <= 0):
            raise ValueError("sweep frequencies must increase strictly")
        if not self.mode_seeds:
            raise ValueError("at least one mode seed is required")
        if self.compute_impedance and self.upper_region is None:
            raise ValueError("impedance needs the upper integration region")
        if self.compute_currents:
            if not self.distances:
                raise ValueError("currents need at least one distance")
            if self.drive_voltage is not None and not self.compute_impedance:
                raise ValueError("a voltage drive needs the impedance to form I_in")
        if self.coarse_step < 1:
            raise ValueError("coarse_step must be positive")
        for name in ("drive_voltage", "input_current"):
            arr = getattr(self, name)
            if arr is not None:
                arr = np.asarray(arr, dtype=complex)
                object.__setattr__(self, name, arr)
                if arr.shape != f.shape:
                    raise ValueError(f"{name} must match the frequency grid")


@dataclass
class BinResult:
    """Everything computed at one frequency bin.

    Mode-indexed lists follow the plan's seed order; ``[iz]`` indexes the
    plan's distances. Transfers are stored per unit input current (the
    dimensionless modal transfer carries no propagation factor), so the
    low-frequency patch can extrapolate them independently of how fast
    the drive spectrum wiggles; reported currents are assembled from
    transfer x input current x propagation. ``error`` is empty on
    success; ``extrapolated`` marks bins filled by the low-frequency
    polynomial patch rather than computed.
    """

    index: int
    frequency: float
    alphas: list[complex] = field(default_factory=list)
    residuals: list[float] = field(default_factory=list)
    impedance: complex = complex("nan")
    input_current: complex = complex("nan")
    unit_calibration: complex = complex("nan")
    mode_transfer: list[complex] = field(default_factory=list)
    branch_transfer: list[complex] = field(default_factory=list)
    branch_asym_transfer: list[complex] = field(default_factory=list)
    branch_bound_transfer: list[float] = field(default_factory=list)
    error: str = ""
    extrapolated: bool = False

    def mode_current(self, m: int, z: float) -> complex:
        """Reported current of mode ``m`` at distance ``z``."""
        return self.input_current * self.mode_transfer[m] * cmath.exp(1j * self.alphas[m] * z)

    def branch_pieces(self, iz: int) -> tuple[complex, complex, float]:
        """(cut integral, asymptotic, upper bound) at distance index ``iz``."""
        i_in = self.input_current
        return (
            i_in * self.branch_transfer[iz],
            i_in * self.branch_asym_transfer[iz],
            abs(i_in) * self.branch_bound_transfer[iz],
        )


@dataclass(frozen=True)
class SweepResult:
    """Ordered bin results plus the failure roster for reporting."""

    plan: SweepPlan
    bins: list[BinResult]

    @property
    def failures(self) -> list[BinResult]:
        return [b for b in self.bins if b.error]


def _chunk_bounds(n: int, step: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + step, n)) for lo in range(0, n, step)]


@dataclass
class _ModeTracker:
    """Continuation state of one pole: location and local ln-ln slope."""

    alpha: complex
    exponent: complex = 1.0 + 0.0j

    def expected(self, log_ratio: float) -> complex:
        return self.alpha * cmath.exp(self.exponent * log_ratio)

    def advance(self, located: complex, log_ratio: float) -> None:
        if abs(log_ratio) > 1e-6:
            slope = cmath.log(located / self.alpha) / log_ratio
            if abs(slope) <= 3.0:
                self.exponent = slope
        self.alpha = located


def _trace_step(ctx, tracker: _ModeTracker, log_ratio: float) -> PoleResult:
    """Locate the pole near its continuation estimate for one bin."""
    expected = tracker.expected(log_ratio)
    step_rel = abs(cmath.exp(tracker.exponent * log_ratio) - 1.0)
    half_rel = min(0.05, max(6.0 * step_rel, 1e-6))
    result = _locate_near(ctx, expected, half_rel * abs(expected))
    drift = abs(result.alpha - expected) / abs(expected)
    if drift > 0.2:
        raise ContinuationBreakError(
            f"pole moved {drift:.1%} past its continuation estimate"
        )
    tracker.advance(result.alpha, log_ratio)
    return result


def _enrich_bin(ctx, plan: SweepPlan, index: int, alphas, residuals) -> BinResult:
    out = BinResult(
        index=index,
        frequency=ctx.frequency,
        alphas=list(alphas),
        residuals=list(residuals),
    )
    if plan.compute_impedance or plan.compute_currents:
        z1 = characteristic_impedance(
            ctx, alphas[0], plan.upper_region, residual_limit=plan.residual_limit
        )
        out.impedance = z1.impedance
    if not plan.compute_currents:
        return out
    strengths = [residue_strength(ctx, a) for a in alphas]
    pairs = list(zip(alphas, strengths))
    unit_cal = calibrate(
        ctx, 1.0 + 0.0j, pairs, z_ref=plan.z_ref, check_sensitivity=False
    ).scale
    out.unit_calibration = unit_cal
    if plan.input_current is not None:
        out.input_current = complex(plan.input_current[index])
    elif plan.drive_voltage is not None:
        out.input_current = complex(plan.drive_voltage[index]) / (
            plan.r_source + out.impedance
        )
    else:
        out.input_current = 1.0 + 0.0j
    out.mode_transfer = [unit_cal * k for k in strengths]
    coeffs = branch_cut_coefficients(ctx)
    rest = rest_term_bound(ctx, coeffs=coeffs)
    for z in plan.distances:
        out.branch_transfer.append(unit_cal * branch_current(ctx, z).value)
        phase = cmath.exp(1j * coeffs.alpha_c * z)
        asym = (
            unit_cal
            * phase
            * (
                -coeffs.q_prime / (z * z)
                - 1j * coeffs.log_coefficient * (-EULER_GAMMA - math.log(z)) / z**3
            )
        )
        out.branch_asym_transfer.append(asym)
        tail = abs(unit_cal) * rest * math.exp(-coeffs.alpha_c.imag * z) / z**3
        out.branch_bound_transfer.append(abs(asym) + tail)
    return out


def _run_chunk(payload) -> list[BinResult]:
    stack, plan, lo, hi, seam_freq, seam_alphas, seam_exponents = payload
    results: list[BinResult] = []
    trackers = [
        _ModeTracker(alpha=a, exponent=p) for a, p in zip(seam_alphas, seam_exponents)
    ]
    prev_f = seam_freq
    for index in range(lo, hi):
        f = float(plan.frequencies[index])
        ctx = spectral_context(stack, f)
        log_ratio = math.log(f / prev_f)
        bin_alphas: list[complex] = []
        bin_residuals: list[float] = []
        err = ""
        for m, tracker in enumerate(trackers):
            try:
                res = _trace_step(ctx, tracker, log_ratio)
            except OpenCoaxError as exc:
                # Drift the last good location forward so the next bin
                # retries near a sensible estimate instead of giving up
                # on the mode for the rest of the chunk.
                tracker.alpha = tracker.expected(log_ratio)
                err = err or f"mode {m + 1}: {exc}"
                continue
            bin_alphas.append(res.alpha)
            bin_residuals.append(res.residual)
        if not err and plan.compute_currents and plan.check_deformation:
            n_strip = deformation_pole_count(ctx)
            if n_strip:
                err = (
                    f"{n_strip} determinant zeros in the deformation strip at "
                    f"{f:g} Hz"
                )
        if not err:
            try:
                results.append(_enrich_bin(ctx, plan, index, bin_alphas, bin_residuals))
            except OpenCoaxError as exc:
                err = str(exc)
        if err:
            results.append(BinResult(index=index, frequency=f, error=err))
        prev_f = f
    return results


def _coarse_seeds(
    stack: LayerStack, plan: SweepPlan, bounds
) -> list[tuple[float, list[complex], list[complex]]]:
    """Sequential pre-pass: carry every mode to each chunk's first bin."""
    trackers = [_ModeTracker(alpha=a) for a in plan.mode_seeds]
    seeds: list[tuple[float, list[complex], list[complex]]] = []
    prev_f = plan.seed_frequency
    for lo, _ in bounds:
        f = float(plan.frequencies[lo])
        span = math.log(f / prev_f)
        n_sub = max(1, int(math.ceil(abs(span) / _MAX_LOG_STEP)))
        anchor = prev_f
        for sub in range(1, n_sub + 1):
            f_sub = f if sub == n_sub else anchor * math.exp(span * sub / n_sub)
            ctx = spectral_context(stack, f_sub)
            log_ratio = math.log(f_sub / prev_f)
            for tracker in trackers:
                _trace_step(ctx, tracker, log_ratio)
            prev_f = f_sub
        seeds.append((prev_f, [t.alpha for t in trackers], [t.exponent for t in trackers]))
    return seeds


def run_sweep(stack: LayerStack, plan: SweepPlan, threads: int = 1) -> SweepResult:
    """Execute the sweep; results are identical for any thread count."""
    if threads < 1:
        raise ValueError("threads must be at least 1")
    bounds = _chunk_bounds(plan.frequencies.size, plan.coarse_step)
    seeds = _coarse_seeds(stack, plan, bounds)
    payloads = [
        (stack, plan, lo, hi, seeds[c][0], seeds[c][1], seeds[c][2])
        for c, (lo, hi) in enumerate(bounds)
    ]
    if threads == 1 or len(payloads) == 1:
        chunk_results = [_run_chunk(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunk_results = list(pool.map(_run_chunk, payloads))
    bins = [b for chunk in chunk_results for b in chunk]
    bins.sort(key=lambda b: b.index)
    return SweepResult(plan=plan, bins=bins)


def extrapolate_low_bins(
    result: SweepResult,
    frequencies,
    drive_voltage=None,
    input_current=None,
    n_fit: int = 4,
) -> list[BinResult]:
    """Patch bins below the computable band by quadratic extrapolation.

    The mode search degenerates as frequency goes to zero, so FFT-grid
    sweeps leave their lowest bins (DC included) out of the plan and
    fill them here: each smooth complex quantity (alpha/k0, impedance,
    the per-unit-current transfers) is fitted with a least-squares
    parabola in frequency over the ``n_fit`` lowest computed bins and
    evaluated at the requested ``frequencies``. The input current at a
    patched bin is re-formed from the supplied drive and the patched
    impedance. Returns the patched bins (marked ``extrapolated``),
    ordered like ``frequencies``, with negative indices so they sort
    ahead of the computed bins.
    """
    plan = result.plan
    donors = result.bins[:n_fit]
    if len(donors) < n_fit or any(b.error for b in donors):
        raise NoConvergenceError("not enough clean bins to extrapolate the low end")
    freqs = np.atleast_1d(np.asarray(frequencies, dtype=float))
    if drive_voltage is not None:
        drive_voltage = np.broadcast_to(np.asarray(drive_voltage, dtype=complex), freqs.shape)
    if input_current is not None:
        input_current = np.broadcast_to(np.asarray(input_current, dtype=complex), freqs.shape)
    f_fit = np.array([b.frequency for b in donors])

    def fit(values):
        return np.poly1d(np.polyfit(f_fit, np.asarray(values), 2))

    def k0(freq: float) -> float:
        return 2.0 * math.pi * freq / C0

    n_modes = len(donors[0].alphas)
    alpha_over_k0 = [
        fit([b.alphas[m] / k0(b.frequency) for b in donors]) for m in range(n_modes)
    ]
    resid_fit = [fit([b.residuals[m] for b in donors]) for m in range(n_modes)]
    z_fit = (
        fit([b.impedance for b in donors])
        if all(np.isfinite(abs(b.impedance)) for b in donors)
        else None
    )
    currents = bool(donors[0].mode_transfer)
    if currents:
        n_z = len(plan.distances)
        cal_fit = fit([b.unit_calibration for b in donors])
        mode_fit = [fit([b.mode_transfer[m] for b in donors]) for m in range(n_modes)]
        br_fit = [fit([b.branch_transfer[iz] for b in donors]) for iz in range(n_z)]
        as_fit = [fit([b.branch_asym_transfer[iz] for b in donors]) for iz in range(n_z)]
        ub_fit = [fit([b.branch_bound_transfer[iz] for b in donors]) for iz in range(n_z)]
        iin_fit = fit([b.input_current for b in donors])

    patched: list[BinResult] = []
    for pos, f in enumerate(freqs):
        nb = BinResult(index=pos - freqs.size, frequency=float(f), extrapolated=True)
        nb.alphas = [complex(alpha_over_k0[m](f)) * k0(f) for m in range(n_modes)]
        nb.residuals = [abs(complex(resid_fit[m](f))) for m in range(n_modes)]
        if z_fit is not None:
            nb.impedance = complex(z_fit(f))
        if currents:
            nb.unit_calibration = complex(cal_fit(f))
            nb.mode_transfer = [complex(mode_fit[m](f)) for m in range(n_modes)]
            nb.branch_transfer = [complex(br_fit[iz](f)) for iz in range(n_z)]
            nb.branch_asym_transfer = [complex(as_fit[iz](f)) for iz in range(n_z)]
            nb.branch_bound_transfer = [abs(complex(ub_fit[iz](f))) for iz in range(n_z)]
            if input_current is not None:
                nb.input_current = complex(input_current[pos])
            elif drive_voltage is not None and z_fit is not None:
                nb.input_current = complex(drive_voltage[pos]) / (
                    plan.r_source + nb.impedance
                )
            else:
                nb.input_current = complex(iin_fit(f))
        patched.append(nb)
    return patched
