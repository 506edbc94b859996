"""Command-line front end.

Subcommands: modes, impedance, currents, pulse, selftest. Each loads a
TOML run configuration, computes, and writes delimited output (plus a
JSON mirror on request and a PNG figure unless suppressed) into the
output directory. Output files embed the config hash in a comment
header and use shortest round-trip float formatting, so rerunning the
same config reproduces them byte for byte.

Exit codes: 0 success, 2 configuration problem, 3 numerical failure
(per-frequency details land in a companion _failures.csv).
"""

from __future__ import annotations

import argparse
import cmath
import json
import sys
from pathlib import Path

import numpy as np

from . import figures
from .config import RunConfig, bundled_cable_path, load_config
from .constants import C0
from .errors import ConfigError, NoConvergenceError, OpenCoaxError
from .model import spectral_context
from .modes import find_poles
from .spectral import calibrate, residue_strength
from .sweep import (
    BinResult,
    SweepPlan,
    SweepResult,
    attenuation_db_per_100km,
    db_re_microamp_second,
    extrapolate_low_bins,
    run_sweep,
)
from .timedomain import (
    FrequencyGrid,
    one_sided_window,
    raised_cosine_pulse,
    synthesize_pulse,
    transfer_voltage,
)

__all__ = ["main"]


def _fmt(x) -> str:
    """Shortest decimal that round-trips the float."""
    return repr(float(x))


def _write_csv(path: Path, meta: dict[str, str], columns: list[str], rows) -> None:
    lines = [f"# {key}={value}" for key, value in meta.items()]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(cell if isinstance(cell, str) else _fmt(cell) for cell in row))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")


def _write_json(path: Path, meta: dict[str, str], columns: list[str], rows) -> None:
    payload = {
        "meta": meta,
        "rows": [
            {col: (cell if isinstance(cell, str) else float(cell)) for col, cell in zip(columns, row)}
            for row in rows
        ],
    }
    path.write_text(json.dumps(payload, indent=1, allow_nan=True) + "\n", encoding="ascii")


def _emit(path: Path, fmt: str, meta: dict[str, str], columns: list[str], rows) -> Path:
    if fmt == "json":
        path = path.with_suffix(".json")
        _write_json(path, meta, columns, rows)
    else:
        _write_csv(path, meta, columns, rows)
    return path


def _meta(cfg: RunConfig, command: str, **extra) -> dict[str, str]:
    meta = {"generator": "opencoax " + command, "config_sha256": cfg.sha256}
    if cfg.cable_name:
        meta["cable"] = cfg.cable_name
    for key, value in extra.items():
        meta[key] = str(value)
    return meta


def _write_failures(path: Path, cfg: RunConfig, command: str, failed: list[BinResult]) -> None:
    _write_csv(
        path,
        _meta(cfg, command),
        ["f_Hz", "error"],
        [(b.frequency, '"' + b.error.replace('"', "'") + '"') for b in failed],
    )


def _seed_modes(cfg: RunConfig) -> list[complex]:
    """Locate one pole per configured window at the reference frequency."""
    ctx = spectral_context(cfg.stack, cfg.reference_frequency)
    seeds: list[complex] = []
    for wdx, window in enumerate(cfg.windows):
        found = find_poles(ctx, window.region(cfg.reference_frequency))
        if not found:
            raise NoConvergenceError(
                f"no pole inside window {window.label or wdx + 1} at "
                f"{cfg.reference_frequency:g} Hz"
            )
        for p in found:
            if all(abs(p.alpha - s) > 1e-9 * abs(p.alpha) for s in seeds):
                seeds.append(p.alpha)
    # Window order is mode order: configs put the dominant mode's window
    # first. Sorting by attenuation instead would hand the "mode 1" label
    # to whatever weakly bound surface wave a config tracks alongside.
    return seeds


def _split_low_bins(freqs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Separate the leading bins that must be extrapolated (DC grids)."""
    if freqs[0] > 0:
        return freqs[:0], freqs
    if freqs.size < 7:
        raise ConfigError("a grid that starts at 0 Hz needs at least 7 points")
    return freqs[:2], freqs[2:]


def _probe_sensitivity(cfg: RunConfig, plan: SweepPlan, result: SweepResult) -> None:
    """Re-run the calibration with the reference-distance wobble check at
    one representative bin and warn if the truncated mode set leaks."""
    clean = next((b for b in result.bins if not b.error and b.alphas), None)
    if clean is None or not plan.compute_currents:
        return
    ctx = spectral_context(cfg.stack, clean.frequency)
    pairs = [(a, residue_strength(ctx, a)) for a in clean.alphas]
    cal = calibrate(
        ctx,
        1.0 + 0.0j,
        pairs,
        z_ref=plan.z_ref,
        sensitivity_limit=cfg.sensitivity_limit,
    )
    if cal.flagged:
        print(
            f"warning: calibration moves {cal.sensitivity:.2e} (limit "
            f"{cfg.sensitivity_limit:g}) when the reference distance shifts; "
            "the configured mode windows may be missing a pole",
            file=sys.stderr,
        )


def cmd_modes(cfg: RunConfig, out: Path, threads: int, fmt: str, want_figures: bool,
              verbose: bool) -> int:
    seeds = _seed_modes(cfg)
    if verbose:
        for m, a in enumerate(seeds):
            print(f"mode {m + 1} seed at {cfg.reference_frequency:g} Hz: alpha = {a:.6g}")
    plan = SweepPlan(
        frequencies=cfg.mode_frequencies,
        mode_seeds=tuple(seeds),
        seed_frequency=cfg.reference_frequency,
        coarse_step=cfg.coarse_step,
    )
    result = run_sweep(cfg.stack, plan, threads)
    rows = []
    for b in result.bins:
        if b.error:
            continue
        k0 = 2.0 * np.pi * b.frequency / C0
        for m, alpha in enumerate(b.alphas):
            rows.append(
                (
                    b.frequency,
                    str(m + 1),
                    alpha.real / k0,
                    attenuation_db_per_100km(alpha),
                    b.residuals[m],
                )
            )
    columns = ["f_Hz", "mode_index", "re_alpha_over_k0", "im_alpha_dB_per_100km", "residual"]
    path = _emit(out / "modes.csv", fmt, _meta(cfg, "modes"), columns, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    if want_figures and rows:
        good = [b for b in result.bins if not b.error]
        f = np.array([b.frequency for b in good])
        n_modes = len(seeds)
        figures.modes_figure(
            out / "modes.png",
            f,
            [
                np.array([b.alphas[m].real / (2 * np.pi * b.frequency / C0) for b in good])
                for m in range(n_modes)
            ],
            [np.array([attenuation_db_per_100km(b.alphas[m]) for b in good]) for m in range(n_modes)],
            [cfg.windows[m].label or f"mode {m + 1}" for m in range(min(n_modes, len(cfg.windows)))]
            + [f"mode {m + 1}" for m in range(len(cfg.windows), n_modes)],
        )
        print(f"wrote {out / 'modes.png'}")
    if result.failures:
        _write_failures(out / "modes_failures.csv", cfg, "modes", result.failures)
        print(f"{len(result.failures)} frequencies failed; see modes_failures.csv", file=sys.stderr)
        return 3
    return 0


def cmd_impedance(cfg: RunConfig, out: Path, threads: int, fmt: str, want_figures: bool,
                  verbose: bool) -> int:
    seeds = _seed_modes(cfg)
    low, main_f = _split_low_bins(cfg.impedance_frequencies)
    plan = SweepPlan(
        frequencies=main_f,
        mode_seeds=(seeds[0],),
        seed_frequency=cfg.reference_frequency,
        compute_impedance=True,
        upper_region=cfg.upper_region_index(),
        coarse_step=cfg.coarse_step,
        residual_limit=cfg.residual_limit,
    )
    result = run_sweep(cfg.stack, plan, threads)
    bins = list(result.bins)
    n_low = 0
    if low.size and not result.failures:
        bins = extrapolate_low_bins(result, low) + bins
        n_low = low.size
    rows = [(b.frequency, b.impedance.real, b.impedance.imag) for b in bins if not b.error]
    columns = ["f_Hz", "re_z_ohm", "im_z_ohm"]
    meta = _meta(cfg, "impedance", upper_radius_mm=cfg.upper_radius * 1e3,
                 extrapolated_rows=n_low)
    path = _emit(out / "impedance.csv", fmt, meta, columns, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    if want_figures and rows:
        arr = np.array([[r[0], r[1], r[2]] for r in rows])
        figures.impedance_figure(out / "impedance.png", arr[:, 0], arr[:, 1] + 1j * arr[:, 2])
        print(f"wrote {out / 'impedance.png'}")
    if result.failures:
        _write_failures(out / "impedance_failures.csv", cfg, "impedance", result.failures)
        print(f"{len(result.failures)} frequencies failed; see impedance_failures.csv",
              file=sys.stderr)
        return 3
    return 0


def _load_input_spectrum(path: str, freqs: np.ndarray) -> np.ndarray:
    """Measured input current spectrum (f_Hz, re_A, im_A) onto the grid."""
    try:
        data = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read input spectrum {path}: {exc}") from exc
    if data.shape[1] != 3:
        raise ConfigError(f"input spectrum {path} must have columns f_Hz, re_A, im_A")
    f, re, im = data[:, 0], data[:, 1], data[:, 2]
    if np.any(np.diff(f) <= 0):
        raise ConfigError(f"input spectrum {path} frequencies must increase")
    return np.interp(freqs, f, re) + 1j * np.interp(freqs, f, im)


def cmd_currents(cfg: RunConfig, out: Path, threads: int, fmt: str, want_figures: bool,
                 verbose: bool) -> int:
    if cfg.currents is None:
        raise ConfigError("the currents command needs a [currents] section")
    settings = cfg.currents
    seeds = _seed_modes(cfg)
    low, main_f = _split_low_bins(settings.frequencies)
    input_current = None
    if settings.input_spectrum_csv is not None:
        input_current = _load_input_spectrum(settings.input_spectrum_csv, main_f)
    plan = SweepPlan(
        frequencies=main_f,
        mode_seeds=tuple(seeds),
        seed_frequency=cfg.reference_frequency,
        compute_impedance=cfg.upper_radius is not None,
        compute_currents=True,
        distances=(settings.distance,),
        upper_region=cfg.upper_region_index() if cfg.upper_radius is not None else None,
        coarse_step=cfg.coarse_step,
        input_current=input_current,
        residual_limit=cfg.residual_limit,
    )
    result = run_sweep(cfg.stack, plan, threads)
    _probe_sensitivity(cfg, plan, result)
    bins = list(result.bins)
    n_low = 0
    if low.size and not result.failures:
        low_input = None
        if settings.input_spectrum_csv is not None:
            low_input = _load_input_spectrum(settings.input_spectrum_csv, low)
        bins = extrapolate_low_bins(result, low, input_current=low_input) + bins
        n_low = low.size
    n_modes = len(seeds)
    columns = ["f_Hz"]
    columns += [f"i{m + 1}_db_uas" for m in range(n_modes)]
    columns += ["ibr_db_uas", "ibr_as_db_uas", "ibr_ub_db_uas"]
    rows = []
    for b in bins:
        if b.error:
            continue
        cut, asym, bound = b.branch_pieces(0)
        row = [b.frequency]
        row += [db_re_microamp_second(b.mode_current(m, settings.distance)) for m in range(n_modes)]
        row += [db_re_microamp_second(cut), db_re_microamp_second(asym),
                db_re_microamp_second(bound)]
        rows.append(tuple(row))
    meta = _meta(cfg, "currents", distance_m=settings.distance, extrapolated_rows=n_low)
    path = _emit(out / "currents.csv", fmt, meta, columns, rows)
    print(f"wrote {path} ({len(rows)} rows)")
    if want_figures and rows:
        arr = np.array(rows, dtype=float)
        curves = {columns[i]: arr[:, i] for i in range(1, len(columns))}
        figures.currents_figure(out / "currents.png", arr[:, 0], curves)
        print(f"wrote {out / 'currents.png'}")
    if result.failures:
        _write_failures(out / "currents_failures.csv", cfg, "currents", result.failures)
        print(f"{len(result.failures)} frequencies failed; see currents_failures.csv",
              file=sys.stderr)
        return 3
    return 0


def cmd_pulse(cfg: RunConfig, out: Path, threads: int, fmt: str, want_figures: bool,
              verbose: bool) -> int:
    if cfg.pulse is None:
        raise ConfigError("the pulse command needs a [pulse] section")
    settings = cfg.pulse
    grid = FrequencyGrid(n_fft=settings.n_fft, f_nyquist=settings.f_nyquist)
    freqs = grid.frequencies
    low, main_f = _split_low_bins(freqs)
    seeds = _seed_modes(cfg)
    v_in = raised_cosine_pulse(
        grid, settings.width, settings.edge, settings.amplitude, settings.delay
    )
    bins_fft = np.fft.rfft(v_in)
    # Physical spectrum in the e^{-i omega t} sign convention used by the
    # propagation model: V(omega_k) = dt * conj(rfft bin k).
    drive_phys = grid.dt * np.conj(bins_fft)
    input_current = None
    if settings.input_spectrum_csv is not None:
        input_current = _load_input_spectrum(settings.input_spectrum_csv, main_f)
    want_all = settings.composition == "all"
    # Every configured mode is swept regardless of composition: the drive
    # calibration splits the input current over the full decomposition,
    # so dropping a pole would mis-scale the one that is kept.
    plan = SweepPlan(
        frequencies=main_f,
        mode_seeds=tuple(seeds),
        seed_frequency=cfg.reference_frequency,
        compute_impedance=True,
        compute_currents=True,
        distances=(settings.distance,),
        upper_region=cfg.upper_region_index(),
        r_source=settings.r_source,
        coarse_step=cfg.coarse_step,
        drive_voltage=drive_phys[low.size:] if input_current is None else None,
        input_current=input_current,
        residual_limit=cfg.residual_limit,
    )
    if verbose:
        print(f"received voltage rides the dominant mode; sweeping "
              f"{len(seeds)} modes for the calibration split"
              + ("" if want_all else " (composition columns suppressed)"))
    result = run_sweep(cfg.stack, plan, threads)
    if result.failures:
        _write_failures(out / "pulse_failures.csv", cfg, "pulse", result.failures)
        print(f"{len(result.failures)} bins failed; see pulse_failures.csv", file=sys.stderr)
        return 3
    _probe_sensitivity(cfg, plan, result)
    low_input = None
    if settings.input_spectrum_csv is not None:
        low_input = _load_input_spectrum(settings.input_spectrum_csv, low)
    bins = (
        extrapolate_low_bins(
            result,
            low,
            drive_voltage=None if input_current is not None else drive_phys[: low.size],
            input_current=low_input,
        )
        + result.bins
    )
    # Received physical voltage spectrum bin by bin, then back to the FFT
    # sign convention (conjugate) for the inverse transform.
    v1_phys = np.empty(grid.n_freq, dtype=complex)
    for i, b in enumerate(bins):
        i1 = b.mode_current(0, settings.distance)
        v1_phys[i] = transfer_voltage(b.impedance, i1, settings.r_source)
    y = np.conj(v1_phys) / grid.dt
    # A real network has a real transfer at DC; the extrapolated bin keeps
    # a small imaginary remnant that would otherwise be dropped silently.
    y[0] = y[0].real
    weights = one_sided_window(grid.n_freq, kind=settings.window, fraction=settings.window_fraction)
    pulse = synthesize_pulse(grid, y, window=weights)

    meta = _meta(
        cfg,
        "pulse",
        distance_m=settings.distance,
        r_source_ohm=settings.r_source,
        window=settings.window,
        n_fft=settings.n_fft,
        f_nyquist_hz=settings.f_nyquist,
        extrapolated_rows=low.size,
    )
    path = _emit(out / "pulse.csv", fmt, meta, ["t_s", "v_v"],
                 list(zip(pulse.t, pulse.v)))
    print(f"wrote {path} ({pulse.t.size} rows)")

    spec_columns = ["f_Hz", "re_v", "im_v"]
    spec_rows: list[list] = [
        [f, s.real, s.imag] for f, s in zip(freqs, pulse.spectrum)
    ]
    if want_all:
        spec_columns += [f"i{m + 2}_db_uas" for m in range(len(seeds) - 1)]
        spec_columns += ["ibr_db_uas"]
        for i, b in enumerate(bins):
            for m in range(1, len(seeds)):
                spec_rows[i].append(
                    db_re_microamp_second(b.mode_current(m, settings.distance))
                )
            spec_rows[i].append(db_re_microamp_second(b.branch_pieces(0)[0]))
    spec_path = _emit(out / "pulse_spectrum.csv", fmt, meta, spec_columns,
                      [tuple(r) for r in spec_rows])
    print(f"wrote {spec_path} ({len(spec_rows)} rows)")
    if verbose:
        print(f"window energy defect {pulse.parseval_defect:.3e}, "
              f"asymmetry residual {pulse.imag_residual:.3e}")
    if want_figures:
        figures.pulse_figure(out / "pulse.png", pulse.t, pulse.v, freqs, pulse.spectrum)
        print(f"wrote {out / 'pulse.png'}")
    return 0


def cmd_selftest(cfg: RunConfig, out: Path, threads: int, fmt: str, want_figures: bool,
                 verbose: bool) -> int:
    """Fast internal consistency checks against the loaded cable."""
    from .bessel import wronskian_defect
    from .dispersion import det_dispersion, recurse_determinants

    failures = 0

    def report(name: str, ok: bool, detail: str = "") -> None:
        nonlocal failures
        line = f"{'PASS' if ok else 'FAIL'} {name}"
        if detail:
            line += f" ({detail})"
        print(line)
        failures += 0 if ok else 1

    rng = np.random.default_rng(20260816)
    z = rng.uniform(0.3, 30.0, 200) + 1j * rng.uniform(1e-3, 30.0, 200)
    defect = float(np.max(np.abs(wronskian_defect(z))))
    report("hankel wronskian", defect < 1e-10, f"max defect {defect:.2e}")

    ctx = spectral_context(cfg.stack, cfg.reference_frequency)
    pair, unit = recurse_determinants(ctx, np.array([ctx.k0 * 1.5 + 1e-8j]))
    finite = np.isfinite(pair.f).all() and np.isfinite(pair.g).all()
    report("layer recursion finite", bool(finite))

    try:
        seeds = _seed_modes(cfg)
        report("mode windows", True, f"{len(seeds)} poles")
    except OpenCoaxError as exc:
        seeds = []
        report("mode windows", False, str(exc))

    if seeds:
        # The scaled mantissa alone has no absolute meaning; compare the
        # determinant at the pole against a point 0.1% away.
        a = seeds[0]
        val, scl = det_dispersion(ctx, np.array([a, a * (1.0 + 1e-3)]))
        ratio = float(np.abs(val[0] / val[1]) * np.exp((scl[0] - scl[1]).real))
        report("pole residual", ratio < 1e-6, f"on/off det ratio {ratio:.2e}")

    if seeds and cfg.upper_radius is not None:
        from .impedance import characteristic_impedance

        z1 = characteristic_impedance(ctx, seeds[0], cfg.upper_region_index())
        ok = np.isfinite(z1.impedance.real) and z1.impedance.real > 0
        report("impedance", bool(ok), f"Z = {z1.impedance:.4g} ohm")

    print(f"{'OK' if failures == 0 else 'FAILED'}: {failures} failures")
    return 0 if failures == 0 else 3


_COMMANDS = {
    "modes": cmd_modes,
    "impedance": cmd_impedance,
    "currents": cmd_currents,
    "pulse": cmd_pulse,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opencoax",
        description="Dispersion, impedance, current decomposition, and pulse "
        "propagation for multilayered open coaxial cables.",
    )
    parser.add_argument(
        "command", choices=sorted(_COMMANDS), help="analysis to run"
    )
    parser.add_argument(
        "--config",
        default=None,
        help="TOML run configuration (default: the bundled example cable)",
    )
    parser.add_argument("--out", default=".", help="output directory (default: cwd)")
    parser.add_argument("--threads", type=int, default=1, help="worker processes")
    parser.add_argument("--verbose", action="store_true", help="chatty progress output")
    parser.add_argument(
        "--format", choices=["csv", "json"], default="csv", help="output file format"
    )
    parser.add_argument(
        "--no-figures", action="store_true", help="skip PNG rendering next to the data"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config_path = args.config if args.config is not None else bundled_cable_path()
        cfg = load_config(config_path)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](
            cfg, out, args.threads, args.format, not args.no_figures, args.verbose
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OpenCoaxError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
