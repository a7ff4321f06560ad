"""Run-configuration schema for the command-line front end.

A run is described by a single JSON document; every field has a documented
default (see DEFAULT_CONFIG), unknown keys are rejected, and validation
errors name the offending field path.  Frequencies are given in Hz here and
converted to angular frequency at the boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import BellLabel, FrequencyGrid
from .errors import ConfigError
from .measurement import NoiseConfig
from .synthesis import EoimConfig, PhaseMatching

# Paper-scale defaults: 780.3 nm pump, 25 GHz bins offset 152.5 GHz from the
# half-pump frequency, count rates tuned to give ~1e4 ZZ coincidences per
# 4 s with CAR ~ 400 (psi) / ~100 (phi).
DEFAULT_CONFIG = {
    "seed": 20220505,
    "target": "psi+",
    "grid": {
        "pump_center_hz": 384.15e12,
        "bin_offset_hz": 152.5e9,
        "bin_spacing_hz": 25e9,
    },
    "eoim": {
        "mode": None,  # derived from target class when omitted
        "carrier_mw": 6.2,
        "sideband_mw": 7.0,
        "extinction_db": 17.5,
        "rf_phase_rad": 0.0,
    },
    "beta": None,  # optional {"re": [4], "im": [4]}, flat when omitted
    "noise": {
        "pair_flux_hz": 1.0e6,
        "coincidence_window_s": 5.0e-9,
        "detector_efficiency": 0.05,
        "singles_background_factor": None,  # derived from target class
        "integration_s": 4.0,
    },
    "tomography": {
        "n_samples": 2000,
        "burn_in": 1000,
        "thin": 10,
        "step_scale": 0.05,
        "subtract_accidentals": True,
    },
    "scan": {
        "mode": None,  # derived from target class when omitted
        "phase_start_rad": 0.0,
        "phase_stop_rad": 2.0 * math.pi,
        "n_points": 64,
        "counts_per_point": 1.0e4,
    },
}


@dataclass(frozen=True)
class ScanSettings:
    mode: str | None
    phase_start: float
    phase_stop: float
    n_points: int
    counts_per_point: float

    def phase_grid(self) -> np.ndarray:
        return np.linspace(self.phase_start, self.phase_stop, self.n_points)


@dataclass(frozen=True)
class ChainSettings:
    n_samples: int
    burn_in: int
    thin: int
    step_scale: float
    subtract_accidentals: bool


@dataclass(frozen=True)
class RunConfig:
    """Fully validated and resolved run configuration."""

    seed: int
    target: BellLabel
    grid: FrequencyGrid
    eoim: EoimConfig
    beta: PhaseMatching
    noise: NoiseConfig
    integration_s: float
    chain: ChainSettings
    scan: ScanSettings
    raw: dict


def _require_mapping(value, path):
    if not isinstance(value, dict):
        raise ConfigError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _reject_unknown(obj: dict, allowed, path):
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {unknown}")


def _number(obj, key, path, default, minimum=None, maximum=None, exclusive_min=False):
    value = obj.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{path}.{key}: must be finite")
    if minimum is not None:
        if exclusive_min and value <= minimum:
            raise ConfigError(f"{path}.{key}: must be > {minimum}")
        if not exclusive_min and value < minimum:
            raise ConfigError(f"{path}.{key}: must be >= {minimum}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{path}.{key}: must be <= {maximum}")
    return value


def _integer(obj, key, path, default, minimum=None):
    value = obj.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}")
    return value


def _boolean(obj, key, path, default):
    value = obj.get(key, default)
    if not isinstance(value, bool):
        raise ConfigError(f"{path}.{key}: expected true or false")
    return value


def _parse_beta(value) -> PhaseMatching:
    if value is None:
        return PhaseMatching.flat()
    data = _require_mapping(value, "beta")
    _reject_unknown(data, ("re", "im"), "beta")
    re = data.get("re")
    im = data.get("im", [0.0, 0.0, 0.0, 0.0])
    for name, part in (("re", re), ("im", im)):
        if (
            not isinstance(part, list)
            or len(part) != 4
            or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in part)
        ):
            raise ConfigError(f"beta.{name}: expected a list of 4 numbers")
    return PhaseMatching(np.asarray(re, float) + 1j * np.asarray(im, float))


def validate_config(data: dict) -> RunConfig:
    """Resolve a raw config dict against the schema and defaults."""
    data = _require_mapping(data, "config")
    _reject_unknown(data, DEFAULT_CONFIG.keys(), "config")

    seed = _integer(data, "seed", "config", DEFAULT_CONFIG["seed"], minimum=0)

    target_text = data.get("target", DEFAULT_CONFIG["target"])
    if not isinstance(target_text, str):
        raise ConfigError("config.target: expected a string Bell label")
    try:
        target = BellLabel.parse(target_text)
    except Exception:
        raise ConfigError(
            f"config.target: unknown Bell label {target_text!r}; expected one of "
            f"{[m.value for m in BellLabel]}"
        ) from None

    g = _require_mapping(data.get("grid", {}), "grid")
    _reject_unknown(g, DEFAULT_CONFIG["grid"].keys(), "grid")
    gd = DEFAULT_CONFIG["grid"]
    pump = _number(g, "pump_center_hz", "grid", gd["pump_center_hz"], minimum=0, exclusive_min=True)
    offset = _number(g, "bin_offset_hz", "grid", gd["bin_offset_hz"], minimum=0, exclusive_min=True)
    spacing = _number(g, "bin_spacing_hz", "grid", gd["bin_spacing_hz"], minimum=0, exclusive_min=True)
    if offset <= spacing:
        raise ConfigError("grid.bin_offset_hz: must exceed grid.bin_spacing_hz")
    try:
        grid = FrequencyGrid.from_hz(pump, offset, spacing)
    except Exception as exc:
        raise ConfigError(f"grid: {exc}") from None

    e = _require_mapping(data.get("eoim", {}), "eoim")
    _reject_unknown(e, DEFAULT_CONFIG["eoim"].keys(), "eoim")
    ed = DEFAULT_CONFIG["eoim"]
    mode = e.get("mode", ed["mode"])
    if mode is None:
        mode = "off" if target.correlation_class == "psi" else "on"
    if mode not in ("off", "on"):
        raise ConfigError(f"eoim.mode: must be 'off' or 'on', got {mode!r}")
    expected_mode = "off" if target.correlation_class == "psi" else "on"
    if mode != expected_mode:
        raise ConfigError(
            f"eoim.mode: {mode!r} cannot synthesize target {target.value!r} "
            f"(needs {expected_mode!r})"
        )
    eoim = EoimConfig(
        mode=mode,
        carrier_power=_number(e, "carrier_mw", "eoim", ed["carrier_mw"], minimum=0),
        sideband_power=_number(e, "sideband_mw", "eoim", ed["sideband_mw"], minimum=0),
        extinction_db=_number(e, "extinction_db", "eoim", ed["extinction_db"], minimum=0),
        rf_phase=_number(e, "rf_phase_rad", "eoim", ed["rf_phase_rad"]),
    )

    beta = _parse_beta(data.get("beta", DEFAULT_CONFIG["beta"]))

    n = _require_mapping(data.get("noise", {}), "noise")
    _reject_unknown(n, DEFAULT_CONFIG["noise"].keys(), "noise")
    nd = DEFAULT_CONFIG["noise"]
    factor = n.get("singles_background_factor", nd["singles_background_factor"])
    if factor is None:
        factor = 1.0 if target.correlation_class == "psi" else 2.0
    elif isinstance(factor, bool) or not isinstance(factor, (int, float)) or factor < 0:
        raise ConfigError("noise.singles_background_factor: expected a number >= 0")
    noise = NoiseConfig(
        pair_flux=_number(n, "pair_flux_hz", "noise", nd["pair_flux_hz"], minimum=0),
        singles_background_factor=float(factor),
        coincidence_window=_number(
            n, "coincidence_window_s", "noise", nd["coincidence_window_s"], minimum=0
        ),
        detector_efficiency=_number(
            n, "detector_efficiency", "noise", nd["detector_efficiency"], minimum=0, maximum=1
        ),
    )
    integration_s = _number(n, "integration_s", "noise", nd["integration_s"], minimum=0, exclusive_min=True)

    t = _require_mapping(data.get("tomography", {}), "tomography")
    _reject_unknown(t, DEFAULT_CONFIG["tomography"].keys(), "tomography")
    td = DEFAULT_CONFIG["tomography"]
    chain = ChainSettings(
        n_samples=_integer(t, "n_samples", "tomography", td["n_samples"], minimum=1),
        burn_in=_integer(t, "burn_in", "tomography", td["burn_in"], minimum=0),
        thin=_integer(t, "thin", "tomography", td["thin"], minimum=1),
        step_scale=_number(t, "step_scale", "tomography", td["step_scale"], minimum=0, maximum=1, exclusive_min=True),
        subtract_accidentals=_boolean(t, "subtract_accidentals", "tomography", td["subtract_accidentals"]),
    )

    s = _require_mapping(data.get("scan", {}), "scan")
    _reject_unknown(s, DEFAULT_CONFIG["scan"].keys(), "scan")
    sd = DEFAULT_CONFIG["scan"]
    scan_mode = s.get("mode", sd["mode"])
    if scan_mode is None:
        scan_mode = "differential" if target.correlation_class == "psi" else "common"
    if scan_mode not in ("common", "differential"):
        raise ConfigError(f"scan.mode: must be 'common' or 'differential', got {scan_mode!r}")
    start = _number(s, "phase_start_rad", "scan", sd["phase_start_rad"])
    stop = _number(s, "phase_stop_rad", "scan", sd["phase_stop_rad"])
    if stop <= start:
        raise ConfigError("scan.phase_stop_rad: must exceed scan.phase_start_rad")
    scan = ScanSettings(
        mode=scan_mode,
        phase_start=start,
        phase_stop=stop,
        n_points=_integer(s, "n_points", "scan", sd["n_points"], minimum=8),
        counts_per_point=_number(s, "counts_per_point", "scan", sd["counts_per_point"], minimum=0, exclusive_min=True),
    )

    return RunConfig(
        seed=seed,
        target=target,
        grid=grid,
        eoim=eoim,
        beta=beta,
        noise=noise,
        integration_s=integration_s,
        chain=chain,
        scan=scan,
        raw=data,
    )


def load_config(path) -> RunConfig:
    """Read and validate a JSON config file; parse errors carry line/column."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"config file {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config file {path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    return validate_config(data)
