"""Run configuration: a single TOML file describing the cable and the
analyses to run on it.

Layer radii are given in mm and conductivities in S/m so a config can
be checked against a data sheet line by line; everything is converted
to SI here. Mode search windows are stated in dimensionless units
(Re alpha/k0 horizontally, attenuation in dB/100 km vertically) at a
reference frequency, which keeps one set of numbers usable while the
grid frequency moves. Unknown keys anywhere in the file are rejected
rather than ignored: a typo that silently falls back to a default is
the most expensive kind of config bug.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

import numpy as np

from .constants import C0, NEPER_TO_DB_PER_100KM
from .errors import ConfigError
from .model import Layer, LayerStack
from .modes import SearchRegion

__all__ = [
    "ModeWindow",
    "PulseSettings",
    "CurrentsSettings",
    "RunConfig",
    "load_config",
    "bundled_cable_path",
]


@dataclass(frozen=True)
class ModeWindow:
    """Search window for one mode, dimensionless and frequency-portable.

    ``re_alpha_over_k0`` brackets the normalized phase constant,
    ``attenuation_db`` the loss in dB/100 km, both at the reference
    frequency where the window was calibrated.
    """

    re_alpha_over_k0: tuple[float, float]
    attenuation_db: tuple[float, float]
    label: str = ""

    def region(self, frequency: float) -> SearchRegion:
        """Concrete rectangle in the alpha plane at ``frequency``."""
        k0 = 2.0 * math.pi * frequency / C0
        return SearchRegion(
            re_min=self.re_alpha_over_k0[0] * k0,
            re_max=self.re_alpha_over_k0[1] * k0,
            im_min=self.attenuation_db[0] / NEPER_TO_DB_PER_100KM,
            im_max=self.attenuation_db[1] / NEPER_TO_DB_PER_100KM,
        )


@dataclass(frozen=True)
class PulseSettings:
    """Input pulse, grid, and network parameters for the pulse command.

    ``composition`` picks what the spectrum file reports next to the
    received voltage: "dominant" keeps just the voltage, "all" adds the
    other modes' and the branch cut's current levels per bin. The sweep
    itself always carries every configured mode.
    """

    n_fft: int
    f_nyquist: float
    distance: float
    r_source: float = 25.0
    amplitude: float = 1.0
    width: float = 1.0e-3
    edge: float = 2.0e-4
    delay: float | None = None
    window: str = "tukey"
    window_fraction: float = 0.25
    composition: str = "dominant"
    input_spectrum_csv: str | None = None


@dataclass(frozen=True)
class CurrentsSettings:
    """Sweep grid and distance for the currents command."""

    frequencies: np.ndarray
    distance: float
    input_spectrum_csv: str | None = None


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration plus the hash that ties outputs to it."""

    stack: LayerStack
    reference_frequency: float
    windows: tuple[ModeWindow, ...]
    mode_frequencies: np.ndarray
    upper_radius: float | None
    impedance_frequencies: np.ndarray
    currents: CurrentsSettings | None
    pulse: PulseSettings | None
    residual_limit: float
    coarse_step: int
    sensitivity_limit: float
    sha256: str
    path: str
    cable_name: str = ""

    def seed_regions(self) -> list[SearchRegion]:
        return [w.region(self.reference_frequency) for w in self.windows]

    def upper_region_index(self) -> int:
        """Region whose outer boundary is the voltage integration radius."""
        if self.upper_radius is None:
            raise ConfigError(
                "this analysis needs [impedance].upper_radius_mm in the config"
            )
        radii = self.stack.radii
        hits = np.nonzero(np.isclose(radii, self.upper_radius, rtol=1e-9, atol=0.0))[0]
        if hits.size != 1:
            raise ConfigError(
                f"impedance upper radius {self.upper_radius * 1e3:g} mm does not "
                "coincide with a layer boundary"
            )
        return int(hits[0])


def _check_keys(table: dict, allowed: set[str], where: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"unknown keys {extra} in [{where}]")


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    return table[key]


def _number(value, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _frequency_list(spec, where: str) -> np.ndarray:
    """Either an explicit array of Hz values or {start, stop, count, spacing}."""
    if isinstance(spec, list):
        if not spec:
            raise ConfigError(f"{where} must not be empty")
        out = np.array([_number(v, "frequencies_hz", where) for v in spec], dtype=float)
    elif isinstance(spec, dict):
        _check_keys(spec, {"start", "stop", "count", "spacing"}, where)
        start = _number(_require(spec, "start", where), "start", where)
        stop = _number(_require(spec, "stop", where), "stop", where)
        count = _require(spec, "count", where)
        if not isinstance(count, int) or count < 1:
            raise ConfigError(f"{where}.count must be a positive integer")
        spacing = spec.get("spacing", "linear")
        if spacing == "linear":
            out = np.linspace(start, stop, count)
        elif spacing == "log":
            if start <= 0:
                raise ConfigError(f"{where}: log spacing needs start > 0")
            out = np.geomspace(start, stop, count)
        else:
            raise ConfigError(f"{where}.spacing must be 'linear' or 'log'")
    else:
        raise ConfigError(f"{where} must be a list or a start/stop/count table")
    if np.any(~np.isfinite(out)) or np.any(out < 0):
        raise ConfigError(f"{where} contains negative or non-finite values")
    if np.any(np.diff(out) <= 0):
        raise ConfigError(f"{where} must increase strictly")
    return out


def _parse_layer(table: dict, where: str) -> Layer:
    _check_keys(table, {"name", "radius_mm", "eps_r", "sigma", "mu_r"}, where)
    radius_mm = _number(_require(table, "radius_mm", where), "radius_mm", where)
    if radius_mm <= 0:
        raise ConfigError(f"{where}.radius_mm must be positive")
    return Layer(
        outer_radius=radius_mm * 1.0e-3,
        eps_r=_number(_require(table, "eps_r", where), "eps_r", where),
        sigma=_number(table.get("sigma", 0.0), "sigma", where),
        mu_r=_number(table.get("mu_r", 1.0), "mu_r", where),
        name=str(table.get("name", "")),
    )


def _parse_cable(table: dict) -> tuple[LayerStack, str]:
    _check_keys(table, {"name", "layers", "exterior"}, "cable")
    layer_tables = _require(table, "layers", "cable")
    if not isinstance(layer_tables, list) or not layer_tables:
        raise ConfigError("[[cable.layers]] must appear at least once")
    layers = [
        _parse_layer(t, f"cable.layers[{i}]") for i, t in enumerate(layer_tables)
    ]
    ext_table = _require(table, "exterior", "cable")
    _check_keys(ext_table, {"name", "eps_r", "sigma", "mu_r"}, "cable.exterior")
    exterior = Layer(
        outer_radius=math.inf,
        eps_r=_number(_require(ext_table, "eps_r", "cable.exterior"), "eps_r", "cable.exterior"),
        sigma=_number(ext_table.get("sigma", 0.0), "sigma", "cable.exterior"),
        mu_r=_number(ext_table.get("mu_r", 1.0), "mu_r", "cable.exterior"),
        name=str(ext_table.get("name", "exterior")),
    )
    try:
        stack = LayerStack(layers=tuple(layers) + (exterior,))
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"invalid cable description: {exc}") from exc
    return stack, str(table.get("name", ""))


def _parse_window(table: dict, where: str) -> ModeWindow:
    _check_keys(table, {"label", "re_alpha_over_k0", "attenuation_db_per_100km"}, where)
    lo_hi = _require(table, "re_alpha_over_k0", where)
    att = _require(table, "attenuation_db_per_100km", where)
    for pair, key in ((lo_hi, "re_alpha_over_k0"), (att, "attenuation_db_per_100km")):
        if not (isinstance(pair, list) and len(pair) == 2 and pair[0] < pair[1]):
            raise ConfigError(f"{where}.{key} must be an increasing [low, high] pair")
    return ModeWindow(
        re_alpha_over_k0=(float(lo_hi[0]), float(lo_hi[1])),
        attenuation_db=(float(att[0]), float(att[1])),
        label=str(table.get("label", "")),
    )


def load_config(path: str | Path) -> RunConfig:
    """Parse and validate a run configuration file."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc

    _check_keys(
        doc, {"cable", "modes", "impedance", "currents", "pulse", "tolerances"}, "top level"
    )
    stack, cable_name = _parse_cable(_require(doc, "cable", "top level"))

    modes_table = _require(doc, "modes", "top level")
    _check_keys(
        modes_table, {"reference_frequency_hz", "frequencies_hz", "windows"}, "modes"
    )
    f_ref = _number(
        _require(modes_table, "reference_frequency_hz", "modes"),
        "reference_frequency_hz",
        "modes",
    )
    if f_ref <= 0:
        raise ConfigError("modes.reference_frequency_hz must be positive")
    window_tables = _require(modes_table, "windows", "modes")
    if not isinstance(window_tables, list) or not window_tables:
        raise ConfigError("[[modes.windows]] must appear at least once")
    windows = tuple(
        _parse_window(t, f"modes.windows[{i}]") for i, t in enumerate(window_tables)
    )
    mode_freqs = _frequency_list(
        modes_table.get("frequencies_hz", [f_ref]), "modes.frequencies_hz"
    )
    if np.any(mode_freqs <= 0):
        raise ConfigError("modes.frequencies_hz must be positive")

    imp_table = doc.get("impedance", {})
    _check_keys(imp_table, {"upper_radius_mm", "frequencies_hz"}, "impedance")
    if imp_table:
        upper_radius = (
            _number(
                _require(imp_table, "upper_radius_mm", "impedance"),
                "upper_radius_mm",
                "impedance",
            )
            * 1.0e-3
        )
    else:
        upper_radius = None
    imp_freqs = _frequency_list(
        imp_table.get("frequencies_hz", mode_freqs.tolist()), "impedance.frequencies_hz"
    )

    currents = None
    if "currents" in doc:
        cur_table = doc["currents"]
        _check_keys(
            cur_table,
            {"frequencies_hz", "distance_m", "input_spectrum_csv"},
            "currents",
        )
        currents = CurrentsSettings(
            frequencies=_frequency_list(
                _require(cur_table, "frequencies_hz", "currents"),
                "currents.frequencies_hz",
            ),
            distance=_number(
                _require(cur_table, "distance_m", "currents"), "distance_m", "currents"
            ),
            input_spectrum_csv=cur_table.get("input_spectrum_csv"),
        )
        if currents.distance <= 0:
            raise ConfigError("currents.distance_m must be positive")

    pulse = None
    if "pulse" in doc:
        p = doc["pulse"]
        _check_keys(
            p,
            {
                "n_fft",
                "f_nyquist_hz",
                "distance_m",
                "r_source_ohm",
                "amplitude_v",
                "width_s",
                "edge_s",
                "delay_s",
                "window",
                "window_fraction",
                "composition",
                "input_spectrum_csv",
            },
            "pulse",
        )
        n_fft = _require(p, "n_fft", "pulse")
        if not isinstance(n_fft, int):
            raise ConfigError("pulse.n_fft must be an integer")
        composition = p.get("composition", "dominant")
        if composition not in ("dominant", "all"):
            raise ConfigError("pulse.composition must be 'dominant' or 'all'")
        pulse = PulseSettings(
            n_fft=n_fft,
            f_nyquist=_number(_require(p, "f_nyquist_hz", "pulse"), "f_nyquist_hz", "pulse"),
            distance=_number(_require(p, "distance_m", "pulse"), "distance_m", "pulse"),
            r_source=_number(p.get("r_source_ohm", 25.0), "r_source_ohm", "pulse"),
            amplitude=_number(p.get("amplitude_v", 1.0), "amplitude_v", "pulse"),
            width=_number(p.get("width_s", 1.0e-3), "width_s", "pulse"),
            edge=_number(p.get("edge_s", 2.0e-4), "edge_s", "pulse"),
            delay=(
                _number(p["delay_s"], "delay_s", "pulse") if "delay_s" in p else None
            ),
            window=str(p.get("window", "tukey")),
            window_fraction=_number(
                p.get("window_fraction", 0.25), "window_fraction", "pulse"
            ),
            composition=composition,
            input_spectrum_csv=p.get("input_spectrum_csv"),
        )
        if pulse.distance <= 0 or pulse.r_source <= 0:
            raise ConfigError("pulse distance and source resistance must be positive")

    tol = doc.get("tolerances", {})
    _check_keys(
        tol, {"residual_limit", "coarse_step", "sensitivity_limit"}, "tolerances"
    )
    coarse_step = tol.get("coarse_step", 32)
    if not isinstance(coarse_step, int) or coarse_step < 1:
        raise ConfigError("tolerances.coarse_step must be a positive integer")

    return RunConfig(
        stack=stack,
        reference_frequency=f_ref,
        windows=windows,
        mode_frequencies=mode_freqs,
        upper_radius=upper_radius,
        impedance_frequencies=imp_freqs,
        currents=currents,
        pulse=pulse,
        residual_limit=_number(
            tol.get("residual_limit", 1.0e-6), "residual_limit", "tolerances"
        ),
        coarse_step=coarse_step,
        sensitivity_limit=_number(
            tol.get("sensitivity_limit", 1.0e-3), "sensitivity_limit", "tolerances"
        ),
        sha256=hashlib.sha256(raw).hexdigest(),
        path=str(path),
        cable_name=cable_name,
    )


def bundled_cable_path() -> Path:
    """Path of the packaged example cable description."""
    return Path(__file__).resolve().parent / "data" / "armored_subsea_cable.toml"
