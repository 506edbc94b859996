"""Matplotlib rendering of the CLI outputs.

Every report path gets a PNG next to its delimited file so a run can be
eyeballed without loading the CSV anywhere. Uses the Agg backend
unconditionally; nothing here opens a window.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "modes_figure",
    "impedance_figure",
    "currents_figure",
    "pulse_figure",
]

_DPI = 150


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def modes_figure(
    path: Path,
    frequencies: np.ndarray,
    re_alpha_over_k0: list[np.ndarray],
    attenuation_db: list[np.ndarray],
    labels: list[str],
) -> Path:
    """Normalized phase constant and attenuation per mode vs frequency."""
    fig, (ax_re, ax_im) = plt.subplots(2, 1, figsize=(6.4, 6.4), sharex=True)
    for re, att, label in zip(re_alpha_over_k0, attenuation_db, labels):
        ax_re.plot(frequencies / 1e3, re, label=label)
        ax_im.semilogy(frequencies / 1e3, att, label=label)
    ax_re.set_ylabel(r"Re $\alpha$ / $k_0$")
    ax_im.set_ylabel("attenuation [dB/100 km]")
    ax_im.set_xlabel("frequency [kHz]")
    ax_re.legend(loc="best", fontsize=8)
    ax_re.grid(True, alpha=0.3)
    ax_im.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def impedance_figure(path: Path, frequencies: np.ndarray, impedance: np.ndarray) -> Path:
    """Real and imaginary characteristic impedance vs frequency."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(frequencies / 1e3, impedance.real, label="Re Z")
    ax.plot(frequencies / 1e3, impedance.imag, label="Im Z")
    ax.set_xlabel("frequency [kHz]")
    ax.set_ylabel("impedance [ohm]")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def currents_figure(
    path: Path, frequencies: np.ndarray, curves: dict[str, np.ndarray]
) -> Path:
    """Current contributions in dB re 1 uAs vs frequency."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, db in curves.items():
        finite = np.isfinite(db)
        ax.plot(frequencies[finite] / 1e3, db[finite], label=label)
    ax.set_xlabel("frequency [kHz]")
    ax.set_ylabel(r"|I| [dB re 1 $\mu$As]")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    return _finish(fig, path)


def pulse_figure(
    path: Path,
    t: np.ndarray,
    v: np.ndarray,
    spectrum_freq: np.ndarray | None = None,
    spectrum: np.ndarray | None = None,
) -> Path:
    """Received pulse, with the inverted spectrum alongside if given."""
    if spectrum is None:
        fig, ax_t = plt.subplots(figsize=(6.4, 4.0))
    else:
        fig, (ax_t, ax_f) = plt.subplots(2, 1, figsize=(6.4, 6.4))
    ax_t.plot(t * 1e3, v * 1e3)
    ax_t.set_xlabel("time [ms]")
    ax_t.set_ylabel("voltage [mV]")
    ax_t.grid(True, alpha=0.3)
    if spectrum is not None:
        mag = np.abs(spectrum)
        positive = mag > 0
        ax_f.semilogy(spectrum_freq[positive] / 1e3, mag[positive])
        ax_f.set_xlabel("frequency [kHz]")
        ax_f.set_ylabel("|spectrum| [V]")
        ax_f.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)
