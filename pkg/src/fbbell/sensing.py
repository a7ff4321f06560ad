"""Common-/differential-mode delay interferograms and fringe analysis.

A common-mode scan phases the (I1, S1) bins, to which only the correlated
(phi-class) states respond; a differential-mode scan phases (I1, S0), to
which only the anticorrelated (psi-class) states respond.  The scan variable
follows the interferogram convention of the fringe equations: a responsive
pair traces A cos^2(2 phi + theta), i.e. the recorded phase phi is half the
per-bin shaper phase (equivalently, the delay equivalent of a scan point is
tau = 2 phi / bin_spacing per arm).  The doubled fringe frequency relative to
a single-photon interferometer is the two-photon signature the fit extracts.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .core import BellLabel, FrequencyGrid, canonical_bell
from .errors import ContractViolation
from .measurement import (
    HADAMARD_ETA,
    MeasurementBasis,
    NoiseConfig,
    coincidence_probs,
    simulate_counts,
)
from .synthesis import ShaperMask, apply_mask

SCAN_MODES = ("common", "differential")

# Peak XX coincidence probability of an ideal Bell state at the Hadamard
# point; used to calibrate counts_per_point.
_PEAK_PROB = 2.0 * HADAMARD_ETA**4


def mode_mask(mode: str, scan_phase: float) -> ShaperMask:
    """Shaper mask realizing one scan point.

    The per-bin phase is twice the scan phase (see module docstring); common
    mode drives bins I1 and S1, differential mode drives I1 and S0.
    """
    bin_phase = 2.0 * scan_phase
    if mode == "common":
        return ShaperMask.from_bins(phase={"I1": bin_phase, "S1": bin_phase})
    if mode == "differential":
        return ShaperMask.from_bins(phase={"I1": bin_phase, "S0": bin_phase})
    raise ContractViolation(f"mode must be one of {SCAN_MODES}, got {mode!r}")


@dataclass(frozen=True)
class ScanConfig:
    """One interferogram: which state, which mode, and the phase grid."""

    state_label: BellLabel
    mode: str
    phase_grid: np.ndarray
    counts_per_point: float = 1e4
    seed: object = None

    def __post_init__(self):
        if self.mode not in SCAN_MODES:
            raise ContractViolation(f"mode must be one of {SCAN_MODES}, got {self.mode!r}")
        grid = np.asarray(self.phase_grid, dtype=float).reshape(-1).copy()
        if grid.size == 0:
            raise ContractViolation("phase grid must be non-empty")
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise ContractViolation("phase grid must be strictly increasing")
        if self.counts_per_point <= 0:
            raise ContractViolation("counts_per_point must be positive")
        grid.setflags(write=False)
        object.__setattr__(self, "phase_grid", grid)


@dataclass(frozen=True)
class ScanTable:
    """Scan output: per grid point, XX probabilities and simulated counts."""

    config: ScanConfig
    probs: np.ndarray  # (n, 2, 2) noiseless coincidence probabilities
    counts: np.ndarray | None  # (n, 2, 2) or None for a noiseless scan
    accidentals: np.ndarray | None

    @property
    def phases(self) -> np.ndarray:
        return self.config.phase_grid

    def column(self, k: int, l: int, noiseless: bool = False) -> np.ndarray:
        """Fringe data for one bin pair: counts if simulated, else probs."""
        if noiseless or self.counts is None:
            return self.probs[:, k, l]
        return self.counts[:, k, l].astype(float)


def scan(cfg: ScanConfig, noise: NoiseConfig | None = None) -> ScanTable:
    """Sweep the mode phase over the grid against the canonical state.

    Each point applies the mode mask, measures XX coincidence probabilities
    at the Hadamard point, and (when a NoiseConfig is given) simulates counts
    calibrated so a fringe maximum averages counts_per_point.  Grid points use
    RNG streams derived from (seed, point index), so the result is
    deterministic and identical under any evaluation order.
    """
    basis = MeasurementBasis.xx()
    state = canonical_bell(cfg.state_label)
    n = cfg.phase_grid.size
    probs = np.empty((n, 2, 2))
    for i, phi in enumerate(cfg.phase_grid):
        probs[i] = coincidence_probs(apply_mask(state, mode_mask(cfg.mode, phi)), basis)

    if noise is None:
        return ScanTable(cfg, probs, None, None)

    eff = noise.detector_efficiency
    if eff <= 0:
        raise ContractViolation("scanning with noise needs detector_efficiency > 0")
    # expected counts at a fringe maximum = counts_per_point, integration 1 s
    flux = cfg.counts_per_point / (_PEAK_PROB * eff**2)
    point_noise = NoiseConfig(
        pair_flux=flux,
        singles_background_factor=noise.singles_background_factor,
        coincidence_window=noise.coincidence_window,
        detector_efficiency=eff,
    )
    counts = np.empty((n, 2, 2), dtype=np.int64)
    accidentals = np.empty((n, 2, 2), dtype=np.int64)
    base = (
        cfg.seed
        if isinstance(cfg.seed, np.random.SeedSequence)
        else np.random.SeedSequence(cfg.seed)
    )
    streams = base.spawn(n)
    for i in range(n):
        table = simulate_counts(probs[i], point_noise, basis, 1.0, streams[i])
        counts[i] = table.counts
        accidentals[i] = table.accidentals
    return ScanTable(cfg, probs, counts, accidentals)


@dataclass(frozen=True)
class FringeFit:
    """Least-squares fit of A cos^2(w phi + theta) + B to one fringe."""

    amplitude: float
    offset: float
    phase_offset: float
    angular_frequency: float
    visibility: float
    rss: float
    flat: bool = False

    def to_json_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "offset": self.offset,
            "phase_offset": self.phase_offset,
            "angular_frequency": self.angular_frequency,
            "visibility": self.visibility,
            "rss": self.rss,
            "flat": self.flat,
        }


def _cos2_model(params, phi):
    a, b, w, theta = params
    return a * np.cos(w * phi + theta) ** 2 + b


def _cos2_jacobian(params, phi):
    a, _, w, theta = params
    arg = w * phi + theta
    sin2 = np.sin(2.0 * arg)
    jac = np.empty((phi.size, 4))
    jac[:, 0] = np.cos(arg) ** 2
    jac[:, 1] = 1.0
    jac[:, 2] = -a * phi * sin2
    jac[:, 3] = -a * sin2
    return jac


def fit_fringe(phases: np.ndarray, values: np.ndarray) -> FringeFit:
    """Fit A cos^2(w phi + theta) + B with the frequency left free.

    Multi-start over the phase offset resolves the cos^2 ambiguity; flat data
    comes back flagged rather than raising.  Convergence: relative RSS change
    below 1e-10 (delegated to the trust-region least-squares stop criteria).
    """
    phi = np.asarray(phases, dtype=float).reshape(-1)
    y = np.asarray(values, dtype=float).reshape(-1)
    if phi.size != y.size:
        raise ContractViolation("phases and values must have equal length")
    if phi.size < 8:
        raise ContractViolation("fringe fitting needs at least 8 points")

    span = float(y.max() - y.min())
    mean = float(y.mean())
    if span <= 1e-12 * max(1.0, abs(mean)):
        return FringeFit(
            amplitude=0.0,
            offset=mean,
            phase_offset=0.0,
            angular_frequency=2.0,
            visibility=0.0,
            rss=float(np.sum((y - mean) ** 2)),
            flat=True,
        )

    b0 = max(float(y.min()), 0.0)
    a0 = max(span, 1e-12)
    tss0 = float(np.sum((y - mean) ** 2))
    best = None
    for w0 in (2.0, 1.0, 4.0):
        for theta0 in (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4):
            result = least_squares(
                lambda p: _cos2_model(p, phi) - y,
                x0=[a0, b0, w0, theta0],
                jac=lambda p: _cos2_jacobian(p, phi),
                bounds=([0.0, 0.0, 1e-6, -math.tau], [np.inf, np.inf, np.inf, math.tau]),
                xtol=1e-12,
                ftol=1e-10,
                gtol=1e-12,
                max_nfev=200,
            )
            rss = float(2.0 * result.cost)
            if best is None or rss < best[0]:
                best = (rss, result.x)
            if best[0] <= 1e-18 * max(tss0, 1e-300):
                break  # essentially exact; remaining starts cannot improve
        else:
            continue
        break
    rss, (a, b, w, theta) = best
    theta = math.remainder(theta, math.pi)  # cos^2 has period pi in its argument
    visibility = a / (a + 2.0 * b) if a + 2.0 * b > 0 else 0.0
    # Flat when the fringe model barely improves on a constant: a fitted
    # amplitude that only absorbs noise leaves the residual sum near the
    # total sum of squares.
    tss = float(np.sum((y - mean) ** 2))
    flat = tss <= 1.5 * rss + 1e-300
    return FringeFit(
        amplitude=float(a),
        offset=float(b),
        phase_offset=float(theta),
        angular_frequency=float(w),
        visibility=float(min(max(visibility, 0.0), 1.0)),
        rss=rss,
        flat=flat,
    )


def phase_to_delay(phase: float, grid: FrequencyGrid, mode: str) -> float:
    """Convert a fringe phase to the sensed delay, tau = phase / bin_spacing.

    The same conversion applies to both modes: common-mode phase maps to the
    mean arm delay, differential-mode phase to the half-difference.
    """
    if mode not in SCAN_MODES:
        raise ContractViolation(f"mode must be one of {SCAN_MODES}, got {mode!r}")
    return phase / grid.bin_spacing


SCAN_CSV_HEADER = ["phase_rad", "i_bin", "s_bin", "counts", "accidentals"]


def write_scan_csv(table: ScanTable, stream) -> None:
    """Emit one row per (grid point, bin pair); noiseless scans write the
    expected counts rounded from probabilities scaled by counts_per_point."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SCAN_CSV_HEADER)
    scale = table.config.counts_per_point / _PEAK_PROB
    for i, phi in enumerate(table.phases):
        for k in (0, 1):
            for l in (0, 1):
                if table.counts is None:
                    n = int(round(scale * table.probs[i, k, l]))
                    a = 0
                else:
                    n = int(table.counts[i, k, l])
                    a = int(table.accidentals[i, k, l])
                writer.writerow([repr(float(phi)), k, l, n, a])


def scan_to_csv(table: ScanTable) -> str:
    buf = io.StringIO()
    write_scan_csv(table, buf)
    return buf.getvalue()
