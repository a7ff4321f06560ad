"""Delay transforms, electro-optic mixing, and coincidence statistics.

The measurement chain is: per-arm delays (pure phases on the bin operators),
an electro-optic phase modulator driven at the bin spacing (sideband mixing
weights J_p(m) e^{-ip phi}, truncated to p in {-1, 0, 1}), and spectrally
resolved coincidence detection.  With the modulator off this is a Z (x) Z
measurement; at the equal-mixing point it is a probabilistic Hadamard on each
photon, i.e. X (x) X up to a known success factor.

Count simulation is phenomenological: desired coincidences are Poisson with
rate pair_flux * p_kl * efficiency^2, and accidentals follow the product of
uncorrelated singles rates within a coincidence window.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import jv

from .core import ALLOWED_BIN_INDICES, FrequencyGrid, TwoQubitState, bin_frequency
from .errors import ContractViolation, OutOfModelError

# Modulation index at which the zeroth and first Bessel orders coincide,
# J_0(m) = J_1(m) = -J_{-1}(m) = eta: the single-modulator Hadamard point.
# Commonly quoted rounded to 1.435 rad.
HADAMARD_MOD_INDEX = 1.434695650819563
HADAMARD_ETA = 0.547946449517282


@dataclass(frozen=True)
class DelayPair:
    """Per-arm propagation delays (seconds) ahead of the phase modulator."""

    tau_s: float = 0.0
    tau_i: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.tau_s) and math.isfinite(self.tau_i)):
            raise ContractViolation("delays must be finite")

    @property
    def common(self) -> float:
        return (self.tau_s + self.tau_i) / 2.0

    @property
    def differential(self) -> float:
        return (self.tau_s - self.tau_i) / 2.0


@dataclass(frozen=True)
class EopmConfig:
    """Phase-modulator drive: modulation index m (rad) and RF phase."""

    mod_index: float
    rf_phase: float = 0.0
    enabled: bool = True

    def __post_init__(self):
        if self.mod_index < 0:
            raise ContractViolation("mod_index must be >= 0")

    @classmethod
    def hadamard(cls, rf_phase: float = 0.0) -> "EopmConfig":
        return cls(mod_index=HADAMARD_MOD_INDEX, rf_phase=rf_phase)

    @classmethod
    def off(cls) -> "EopmConfig":
        return cls(mod_index=0.0, enabled=False)


@dataclass(frozen=True)
class MeasurementBasis:
    """Either ZZ (modulator off) or XX (modulator at a mixing point)."""

    kind: str
    eopm: EopmConfig

    def __post_init__(self):
        if self.kind not in ("ZZ", "XX"):
            raise ContractViolation(f"basis kind must be 'ZZ' or 'XX', got {self.kind!r}")

    @classmethod
    def zz(cls) -> "MeasurementBasis":
        return cls("ZZ", EopmConfig.off())

    @classmethod
    def xx(cls, eopm: EopmConfig | None = None) -> "MeasurementBasis":
        return cls("XX", eopm if eopm is not None else EopmConfig.hadamard())


@dataclass(frozen=True)
class NoiseConfig:
    """Detection and background parameters for count simulation."""

    pair_flux: float  # generated pairs per second at unit state norm
    singles_background_factor: float = 1.0  # 1 psi-class, 2 phi-class geometry
    coincidence_window: float = 0.0  # seconds
    detector_efficiency: float = 1.0

    def __post_init__(self):
        if self.pair_flux < 0 or self.coincidence_window < 0:
            raise ContractViolation("rates and windows must be non-negative")
        if self.singles_background_factor < 0:
            raise ContractViolation("singles_background_factor must be non-negative")
        if not 0.0 <= self.detector_efficiency <= 1.0:
            raise ContractViolation("detector_efficiency must lie in [0, 1]")


@dataclass(frozen=True)
class CountTable:
    """Coincidence counts per (idler bin, signal bin) for one basis setting."""

    basis: MeasurementBasis
    counts: np.ndarray
    accidentals: np.ndarray
    integration_s: float

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64).reshape(2, 2).copy()
        a = np.asarray(self.accidentals, dtype=np.int64).reshape(2, 2).copy()
        if np.any(c < 0) or np.any(a < 0):
            raise ContractViolation("counts and accidentals must be non-negative")
        if self.integration_s <= 0:
            raise ContractViolation("integration time must be positive")
        c.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "accidentals", a)

    def total(self) -> int:
        return int(self.counts.sum())


def mixing_weight(cfg: EopmConfig, p: int) -> complex:
    """Sideband mixing weight J_p(m) e^{-ip phi} for p in {-1, 0, 1}."""
    if p not in (-1, 0, 1):
        raise OutOfModelError(
            f"sideband order {p} outside the computational-space truncation"
        )
    if not cfg.enabled:
        return 1.0 + 0.0j if p == 0 else 0.0 + 0.0j
    return complex(jv(p, cfg.mod_index)) * np.exp(-1j * p * cfg.rf_phase)


def _require_normalized(state: TwoQubitState):
    if not state.is_normalized():
        raise ContractViolation(
            f"coincidence probabilities need a normalized state "
            f"(|c|^2 sums to {state.norm_squared():.6g})"
        )


def _xx_amplitudes(
    state: TwoQubitState,
    cfg: EopmConfig,
    grid: FrequencyGrid | None,
    delays: DelayPair | None,
) -> np.ndarray:
    """Post-modulator coincidence amplitudes for all four bin pairs.

    A_kl = sum_{p,q} w_p w_q e^{i tau_I w_I(k-p)} e^{i tau_S w_S(l-q)} c_{k-p,l-q},
    the vacuum matrix element of the mixed, delayed annihilation operators
    acting on the state.
    """
    if delays is not None and (delays.tau_s != 0.0 or delays.tau_i != 0.0):
        if grid is None:
            raise ContractViolation("delays require a FrequencyGrid for bin phases")
        phase_i = {
            j: np.exp(1j * delays.tau_i * bin_frequency(grid, "idler", j))
            for j in ALLOWED_BIN_INDICES
        }
        phase_s = {
            j: np.exp(1j * delays.tau_s * bin_frequency(grid, "signal", j))
            for j in ALLOWED_BIN_INDICES
        }
    else:
        phase_i = {j: 1.0 for j in ALLOWED_BIN_INDICES}
        phase_s = {j: 1.0 for j in ALLOWED_BIN_INDICES}

    weights = {p: mixing_weight(cfg, p) for p in (-1, 0, 1)}
    c = state.matrix
    amps = np.zeros((2, 2), dtype=complex)
    for k in (0, 1):
        for l in (0, 1):
            total = 0.0 + 0.0j
            for p in (-1, 0, 1):
                m = k - p
                if m not in (0, 1):
                    continue
                for q in (-1, 0, 1):
                    n = l - q
                    if n not in (0, 1):
                        continue
                    total += (
                        weights[p]
                        * weights[q]
                        * phase_i[m]
                        * phase_s[n]
                        * c[m, n]
                    )
            amps[k, l] = total
    return amps


def coincidence_probs(
    state: TwoQubitState,
    basis: MeasurementBasis,
    grid: FrequencyGrid | None = None,
    delays: DelayPair | None = None,
) -> np.ndarray:
    """2x2 coincidence probabilities P_kl for a normalized state.

    ZZ reads out |c_kl|^2 directly (delays only contribute phases, so the
    result is exactly delay-independent).  XX computes the full bilinear form
    over the truncated mixing operators; probability leaked outside the
    computational space is lost, not renormalized.
    """
    _require_normalized(state)
    if basis.kind == "ZZ":
        return np.abs(state.matrix) ** 2
    amps = _xx_amplitudes(state, basis.eopm, grid, delays)
    return np.abs(amps) ** 2


def leakage_probs(
    state: TwoQubitState,
    basis: MeasurementBasis,
    grid: FrequencyGrid | None = None,
    delays: DelayPair | None = None,
) -> np.ndarray:
    """coincidence_probs for a state carrying pump-imperfection background.

    Identical computation; exposed separately so desired/undesired JSI ratios
    of contaminated states are directly testable.
    """
    return coincidence_probs(state, basis, grid, delays)


def simulate_counts(
    probs: np.ndarray,
    noise: NoiseConfig,
    basis: MeasurementBasis,
    integration_s: float,
    seed,
) -> CountTable:
    """Poisson realization of a coincidence measurement.

    Recorded counts include the accidental contribution (as raw histograms
    do); the accidentals table is an independent estimate of that background,
    as obtained experimentally from time-shifted coincidence windows.
    Deterministic for a fixed seed.
    """
    p = np.asarray(probs, dtype=float).reshape(2, 2)
    if np.any(p < -1e-12):
        raise ContractViolation("probabilities must be non-negative")
    p = np.clip(p, 0.0, None)
    if p.sum() > 1.0 + 1e-9:
        raise ContractViolation(f"probabilities sum to {p.sum():.6g} > 1")
    if integration_s <= 0:
        raise ContractViolation("integration time must be positive")

    eff = noise.detector_efficiency
    pair_rate = noise.pair_flux * p * eff**2

    singles_i = noise.singles_background_factor * eff * noise.pair_flux * p.sum(axis=1)
    singles_s = noise.singles_background_factor * eff * noise.pair_flux * p.sum(axis=0)
    acc_rate = np.outer(singles_i, singles_s) * noise.coincidence_window

    rng = np.random.default_rng(seed)
    counts = rng.poisson((pair_rate + acc_rate) * integration_s)
    accidentals = rng.poisson(acc_rate * integration_s)
    return CountTable(basis, counts, accidentals, integration_s)


_DESIRED_PATTERN = {
    "phi": np.array([[True, False], [False, True]]),
    "psi": np.array([[False, True], [True, False]]),
}


def jsi_ratio(
    table: CountTable, correlation_class: str, subtract_accidentals: bool = False
) -> float:
    """Desired over undesired JSI sum for a ZZ count table.

    'phi' counts the diagonal as desired, 'psi' the antidiagonal.  A zero
    undesired sum reports +inf.
    """
    if table.basis.kind != "ZZ":
        raise ContractViolation("JSI ratios are defined on ZZ tables")
    if correlation_class not in _DESIRED_PATTERN:
        raise ContractViolation(
            f"class must be 'psi' or 'phi', got {correlation_class!r}"
        )
    values = table.counts.astype(float)
    if subtract_accidentals:
        values = np.clip(values - table.accidentals, 0.0, None)
    mask = _DESIRED_PATTERN[correlation_class]
    desired = float(values[mask].sum())
    undesired = float(values[~mask].sum())
    if undesired == 0.0:
        return math.inf
    return desired / undesired


def car(table: CountTable, correlation_class: str) -> float:
    """Coincidences-to-accidentals ratio over the class's desired bin pairs."""
    if correlation_class not in _DESIRED_PATTERN:
        raise ContractViolation(
            f"class must be 'psi' or 'phi', got {correlation_class!r}"
        )
    mask = _DESIRED_PATTERN[correlation_class]
    coincidences = float(table.counts[mask].sum())
    accidentals = float(table.accidentals[mask].sum())
    if accidentals == 0.0:
        return math.inf
    return coincidences / accidentals


CSV_HEADER = ["basis", "idler_bin", "signal_bin", "counts", "accidentals", "integration_s"]


def write_count_table(table: CountTable, stream) -> None:
    """Write a table in the interchange CSV layout, one row per bin pair."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for k in (0, 1):
        for l in (0, 1):
            writer.writerow(
                [
                    table.basis.kind,
                    k,
                    l,
                    int(table.counts[k, l]),
                    int(table.accidentals[k, l]),
                    repr(float(table.integration_s)),
                ]
            )


def count_table_to_csv(table: CountTable) -> str:
    buf = io.StringIO()
    write_count_table(table, buf)
    return buf.getvalue()


def read_count_table(stream) -> CountTable:
    """Parse the interchange CSV; XX rows assume the Hadamard preset."""
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ContractViolation("count CSV is empty") from None
    if header != CSV_HEADER:
        raise ContractViolation(
            f"count CSV header must be {','.join(CSV_HEADER)}, got {','.join(header)}"
        )
    counts = np.zeros((2, 2), dtype=np.int64)
    accidentals = np.zeros((2, 2), dtype=np.int64)
    seen = set()
    basis_kind = None
    integration = None
    for row in reader:
        if not row:
            continue
        if len(row) != 6:
            raise ContractViolation(f"count CSV row has {len(row)} fields, expected 6")
        kind, k_s, l_s, n_s, a_s, t_s = row
        if basis_kind is None:
            basis_kind = kind
        elif kind != basis_kind:
            raise ContractViolation("count CSV mixes measurement bases")
        k, l = int(k_s), int(l_s)
        if (k, l) in seen or k not in (0, 1) or l not in (0, 1):
            raise ContractViolation(f"bad or duplicate bin pair ({k_s}, {l_s})")
        seen.add((k, l))
        counts[k, l] = int(n_s)
        accidentals[k, l] = int(a_s)
        t = float(t_s)
        if integration is None:
            integration = t
        elif t != integration:
            raise ContractViolation("count CSV mixes integration times")
    if len(seen) != 4 or basis_kind is None or integration is None:
        raise ContractViolation("count CSV must contain all four bin pairs")
    basis = MeasurementBasis.zz() if basis_kind == "ZZ" else MeasurementBasis.xx()
    return CountTable(basis, counts, accidentals, integration)


def count_table_from_csv(text: str) -> CountTable:
    return read_count_table(io.StringIO(text))
