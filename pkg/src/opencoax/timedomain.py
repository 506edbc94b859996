"""Pulse synthesis: carrying a voltage pulse through the line in the
frequency domain and returning to time by inverse FFT.

The drive is a square pulse with raised-cosine edges, sampled on a
uniform time grid whose real-input FFT gives the one-sided spectrum.
Each retained bin is multiplied by the per-bin line transfer (computed
in the sweep module), the top of the band is tapered with a one-sided
window so the truncation does not ring, and irfft brings the result
back. The two lowest bins of a transfer sweep cannot be computed
directly (the mode search degenerates as frequency goes to zero) and
are filled by extrapolation in the sweep module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError

__all__ = [
    "FrequencyGrid",
    "PulseResult",
    "raised_cosine_pulse",
    "one_sided_window",
    "transfer_voltage",
    "synthesize_pulse",
]


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform real-FFT grid: n_fft time samples, one-sided spectrum up
    to f_nyquist Hz.

    Frequencies run 0, df, ..., f_nyquist with df = f_nyquist/(n_fft/2);
    the one-sided spectrum holds n_fft//2 + 1 bins. n_fft is a power of
    two (radix friendliness and a guard against typo grids).
    """

    n_fft: int
    f_nyquist: float

    def __post_init__(self) -> None:
        if self.n_fft < 8 or self.n_fft & (self.n_fft - 1) != 0:
            raise ValueError("n_fft must be a power of two, at least 8")
        if not (self.f_nyquist > 0 and math.isfinite(self.f_nyquist)):
            raise ValueError("f_nyquist must be positive and finite")

    @property
    def dt(self) -> float:
        return 1.0 / (2.0 * self.f_nyquist)

    @property
    def df(self) -> float:
        return self.f_nyquist / (self.n_fft // 2)

    @property
    def n_freq(self) -> int:
        return self.n_fft // 2 + 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_fft) * self.dt

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_freq) * self.df


def raised_cosine_pulse(
    grid: FrequencyGrid,
    width: float,
    edge: float,
    amplitude: float = 1.0,
    delay: float | None = None,
) -> np.ndarray:
    """Square pulse of the given flat-top width with cosine-shaped edges.

    ``edge`` is the 0-to-1 rise duration; the pulse starts ramping at
    ``delay`` (default one edge length, so the record begins at zero).
    Total footprint is width + 2 edge seconds.
    """
    if width <= 0 or edge < 0:
        raise ValueError("pulse width must be positive and edge nonnegative")
    if delay is None:
        delay = edge
    t = grid.times
    if edge == 0:
        out = np.zeros_like(t)
        out[(t >= delay) & (t < delay + width)] = amplitude
        return out
    rise = (t - delay) / edge
    fall = (delay + edge + width + edge - t) / edge
    ramp_up = 0.5 * (1.0 - np.cos(math.pi * np.clip(rise, 0.0, 1.0)))
    ramp_dn = 0.5 * (1.0 - np.cos(math.pi * np.clip(fall, 0.0, 1.0)))
    return amplitude * np.minimum(ramp_up, ramp_dn)


def one_sided_window(n_freq: int, kind: str = "tukey", fraction: float = 0.25) -> np.ndarray:
    """Top-end taper for a one-sided spectrum before inverse transform.

    Returns n_freq weights equal to 1 over the low band and rolling off
    to 0 at the Nyquist bin over the top ``fraction`` of bins. ``kind``
    is "tukey" (cosine rolloff over the top fraction, the default),
    "hann" (cosine over the whole band), or "rect" (no taper).
    """
    if n_freq < 2:
        raise ValueError("need at least two frequency bins")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    if kind == "rect":
        return np.ones(n_freq)
    if kind == "hann":
        return 0.5 * (1.0 + np.cos(math.pi * np.arange(n_freq) / (n_freq - 1)))
    if kind == "tukey":
        w = np.ones(n_freq)
        n_roll = max(2, int(round(fraction * n_freq)))
        x = np.arange(n_roll) / (n_roll - 1)
        w[n_freq - n_roll :] = 0.5 * (1.0 + np.cos(math.pi * x))
        return w
    raise ValueError(f"unknown window kind {kind!r}")


def transfer_voltage(
    impedance: complex | np.ndarray,
    current: complex | np.ndarray,
    r_source: float = 25.0,
) -> complex | np.ndarray:
    """Received voltage of a mode through the source/load network.

    The drive sits behind a series resistance ``r_source`` and the line
    presents the mode impedance, so the delivered voltage per unit drive
    is scaled by 2R/(Z + R): equal to R times the current when matched
    (Z = R) and doubling toward the open-circuit value as R grows.
    """
    return impedance * current * (2.0 * r_source) / (impedance + r_source)


@dataclass(frozen=True)
class PulseResult:
    """Time samples plus the bookkeeping of the inverse transform.

    ``spectrum`` is the windowed one-sided spectrum actually inverted;
    ``window`` names the taper. ``parseval_defect`` is the relative
    mismatch between time-domain and spectral energy (a pure FFT
    identity, so it sits at rounding level; stored to catch grid
    mistakes). ``imag_residual`` is the largest imaginary part a full
    complex inverse would have produced, relative to the signal peak;
    it measures how far the input was from conjugate symmetry.
    """

    t: np.ndarray
    v: np.ndarray
    spectrum: np.ndarray
    window: str
    parseval_defect: float
    imag_residual: float


def synthesize_pulse(
    grid: FrequencyGrid,
    spectrum: np.ndarray,
    window: np.ndarray | str | None = "tukey",
) -> PulseResult:
    """Inverse-transform a one-sided spectrum to real time samples.

    ``spectrum`` holds grid.n_freq complex bins (drive spectrum times
    per-bin transfer). ``window`` is a taper name for one_sided_window,
    an explicit weight array, or None for no taper. The spectrum is
    treated as the rfft of a real signal, so the inverse is np.fft.irfft
    after conjugate-symmetric extension.
    """
    spec = np.asarray(spectrum, dtype=complex)
    if spec.shape != (grid.n_freq,):
        raise GridMismatchError(
            f"spectrum must have shape ({grid.n_freq},), got {spec.shape}"
        )
    if window is None:
        window = "rect"
    if isinstance(window, str):
        window_name = window
        weights = one_sided_window(grid.n_freq, kind=window)
    else:
        window_name = "custom"
        weights = np.asarray(window, dtype=float)
        if weights.shape != (grid.n_freq,):
            raise GridMismatchError(
                f"window must have shape ({grid.n_freq},), got {weights.shape}"
            )
    shaped = spec * weights
    signal = np.fft.irfft(shaped, n=grid.n_fft)
    # irfft is real by construction; measure the defect against a full
    # complex inverse to catch asymmetric misuse upstream (complex DC or
    # Nyquist bins would be silently truncated otherwise).
    full = np.zeros(grid.n_fft, dtype=complex)
    full[: grid.n_freq] = shaped
    full[grid.n_freq :] = np.conj(shaped[1 : grid.n_freq - 1][::-1])
    complex_signal = np.fft.ifft(full)
    peak = float(np.max(np.abs(complex_signal))) or 1.0
    imag_residual = float(np.max(np.abs(complex_signal.imag))) / peak
    e_time = float(np.sum(signal * signal))
    inner = np.abs(shaped[1:-1]) ** 2
    e_freq = (
        np.abs(shaped[0]) ** 2 + 2.0 * float(np.sum(inner)) + np.abs(shaped[-1]) ** 2
    ) / grid.n_fft
    defect = abs(e_time - e_freq) / max(e_time, e_freq, 1e-300)
    return PulseResult(
        t=grid.times,
        v=signal,
        spectrum=shaped,
        window=window_name,
        parseval_defect=defect,
        imag_residual=imag_residual,
    )
