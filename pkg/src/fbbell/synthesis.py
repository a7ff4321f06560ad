"""Pump chain and SPDC state synthesis.

A CW laser runs through an intensity modulator (EOIM) that either passes the
carrier (single-line pump) or suppresses it in favor of two first-order
sidebands (dual-line pump).  Downconversion then maps the three pump-line
amplitudes onto the four two-qubit coefficients; a pulse-shaper mask applies
per-bin phases/attenuations afterwards for Bell-phase compensation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .core import BellLabel, TwoQubitState
from .errors import ContractViolation, DegenerateStateError

# Mask entries are ordered (I0, I1, S0, S1).
_MASK_BINS = ("I0", "I1", "S0", "S1")


@dataclass(frozen=True)
class PumpSpectrum:
    """Complex pump-line amplitudes (sqrt-power units) at indices -1, 0, +1."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=complex).reshape(3).copy()
        if not np.all(np.isfinite(a.view(float))):
            raise ContractViolation("pump amplitudes must be finite")
        if not np.any(np.abs(a) > 0):
            raise ContractViolation("pump needs at least one nonzero line")
        a.setflags(write=False)
        object.__setattr__(self, "alpha", a)

    def at(self, k: int) -> complex:
        if k not in (-1, 0, 1):
            raise ContractViolation(f"pump line index must be -1, 0 or 1, got {k}")
        return complex(self.alpha[k + 1])


@dataclass(frozen=True)
class PhaseMatching:
    """Relative downconversion efficiencies beta_mn, (00, 01, 10, 11) order."""

    beta: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=complex).reshape(4).copy()
        if not np.all(np.isfinite(b.view(float))):
            raise ContractViolation("phase-matching coefficients must be finite")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)

    @classmethod
    def flat(cls) -> "PhaseMatching":
        """Equal-efficiency phase matching (|beta_mn| = 1, zero phase)."""
        return cls(np.ones(4, dtype=complex))


@dataclass(frozen=True)
class EoimConfig:
    """Intensity-modulator operating point.

    mode 'off': carrier passes at carrier_power, no sidebands.
    mode 'on' : null-bias carrier suppression; each first-order sideband
    carries sideband_power and the residual carrier sits extinction_db below
    a sideband.  rf_phase rotates the sideband pair.
    """

    mode: str
    carrier_power: float = 0.0
    sideband_power: float = 0.0
    extinction_db: float = math.inf
    rf_phase: float = 0.0

    def __post_init__(self):
        if self.mode not in ("off", "on"):
            raise ContractViolation(f"EOIM mode must be 'off' or 'on', got {self.mode!r}")
        if self.carrier_power < 0 or self.sideband_power < 0:
            raise ContractViolation("EOIM powers must be non-negative")
        if math.isnan(self.extinction_db) or self.extinction_db < 0:
            raise ContractViolation("extinction_db must be >= 0")


def eoim_output(cfg: EoimConfig) -> PumpSpectrum:
    """Pump spectrum leaving the intensity modulator.

    In 'on' mode the two sidebands are opposite in sign (null-bias
    modulation), alpha_{-1} = -alpha_{+1} e^{2i rf_phase}, and the residual
    carrier amplitude follows the configured extinction.  Any constant Bell
    phase this convention produces is absorbed downstream by compensate().
    """
    if cfg.mode == "off":
        if cfg.carrier_power <= 0:
            raise ContractViolation("'off' mode needs carrier_power > 0")
        return PumpSpectrum(np.array([0.0, math.sqrt(cfg.carrier_power), 0.0], complex))
    if cfg.sideband_power <= 0:
        raise ContractViolation("'on' mode needs sideband_power > 0")
    side = math.sqrt(cfg.sideband_power)
    plus = side
    minus = -side * cmath.exp(2j * cfg.rf_phase)
    carrier = math.sqrt(cfg.sideband_power * 10.0 ** (-cfg.extinction_db / 10.0))
    return PumpSpectrum(np.array([minus, carrier, plus], dtype=complex))


def synthesize(pump: PumpSpectrum, pm: PhaseMatching | None = None) -> TwoQubitState:
    """Map pump-line amplitudes to the (un-normalized) biphoton state.

    c00 = alpha_{-1} beta_00, c01 = alpha_0 beta_01,
    c10 = alpha_0 beta_10,    c11 = alpha_{+1} beta_11.
    """
    if pm is None:
        pm = PhaseMatching.flat()
    c = np.array(
        [
            pump.at(-1) * pm.beta[0],
            pump.at(0) * pm.beta[1],
            pump.at(0) * pm.beta[2],
            pump.at(1) * pm.beta[3],
        ],
        dtype=complex,
    )
    if not np.any(np.abs(c) > 0):
        raise DegenerateStateError(
            "pump and phase matching produced an all-zero biphoton state"
        )
    return TwoQubitState(c)


@dataclass(frozen=True)
class ShaperMask:
    """Per-bin pulse-shaper settings: phases (rad) and transmissions in [0,1].

    Entry order is (I0, I1, S0, S1) for both arrays.
    """

    phase: np.ndarray = field(default_factory=lambda: np.zeros(4))
    amplitude: np.ndarray = field(default_factory=lambda: np.ones(4))

    def __post_init__(self):
        ph = np.asarray(self.phase, dtype=float).reshape(4).copy()
        am = np.asarray(self.amplitude, dtype=float).reshape(4).copy()
        if not (np.all(np.isfinite(ph)) and np.all(np.isfinite(am))):
            raise ContractViolation("mask entries must be finite")
        if np.any(am < 0) or np.any(am > 1):
            raise ContractViolation("mask transmissions must lie in [0, 1]")
        ph.setflags(write=False)
        am.setflags(write=False)
        object.__setattr__(self, "phase", ph)
        object.__setattr__(self, "amplitude", am)

    @classmethod
    def identity(cls) -> "ShaperMask":
        return cls()

    @classmethod
    def from_bins(cls, phase: dict | None = None, amplitude: dict | None = None):
        """Build a mask from sparse per-bin settings, e.g. {'I1': pi}."""
        ph = np.zeros(4)
        am = np.ones(4)
        for name, value in (phase or {}).items():
            ph[_MASK_BINS.index(name)] = value
        for name, value in (amplitude or {}).items():
            am[_MASK_BINS.index(name)] = value
        return cls(ph, am)

    def compose(self, other: "ShaperMask") -> "ShaperMask":
        """Mask equivalent to applying self then other (phases add)."""
        return ShaperMask(self.phase + other.phase, self.amplitude * other.amplitude)


def apply_mask(state: TwoQubitState, mask: ShaperMask) -> TwoQubitState:
    """Apply per-bin transmissions and phases to each amplitude.

    c_mn picks up amp_{I,m} amp_{S,n} e^{i(phi_{I,m} + phi_{S,n})}.
    """
    phi_i = mask.phase[:2]
    phi_s = mask.phase[2:]
    amp_i = mask.amplitude[:2]
    amp_s = mask.amplitude[2:]
    factors = (amp_i[:, None] * amp_s[None, :]) * np.exp(
        1j * (phi_i[:, None] + phi_s[None, :])
    )
    return TwoQubitState(state.amplitudes * factors.reshape(4))


def compensate(label: BellLabel, measured_phase: float) -> ShaperMask:
    """Pure-phase mask turning a measured-phase Bell state into `label`.

    For Psi targets the correction acts on the |I1 S0> term, for Phi targets
    on |I1 S1>; either way a single phase on bin I1 suffices (the other class
    amplitude at I1 vanishes for an ideal state).
    """
    correction = label.intrinsic_phase - measured_phase
    correction = math.remainder(correction, 2.0 * math.pi)
    if correction == 0.0:
        return ShaperMask.identity()
    return ShaperMask.from_bins(phase={"I1": correction})


def bell_phase(state: TwoQubitState, correlation_class: str) -> float:
    """Relative phase of the two amplitudes in a correlation class.

    arg(c10/c01) for 'psi', arg(c11/c00) for 'phi'; this is what the
    experiment extracts from a single-bin phase scan before compensation.
    """
    c = state.amplitudes
    if correlation_class == "psi":
        num, den = c[2], c[1]
    elif correlation_class == "phi":
        num, den = c[3], c[0]
    else:
        raise ContractViolation(f"class must be 'psi' or 'phi', got {correlation_class!r}")
    if abs(den) == 0 or abs(num) == 0:
        raise ContractViolation(
            f"state has no {correlation_class}-class support to extract a phase from"
        )
    return float(cmath.phase(num / den))


def contamination_ratio(state: TwoQubitState, correlation_class: str) -> float:
    """Power in the wrong correlation class over power in the desired one.

    For a 'phi' target this is (|c01|^2+|c10|^2)/(|c00|^2+|c11|^2); the pump
    carrier-extinction ratio fixes it.  Returns 0 for a clean state.
    """
    p = np.abs(state.amplitudes) ** 2
    psi_power = float(p[1] + p[2])
    phi_power = float(p[0] + p[3])
    if correlation_class == "phi":
        desired, undesired = phi_power, psi_power
    elif correlation_class == "psi":
        desired, undesired = psi_power, phi_power
    else:
        raise ContractViolation(f"class must be 'psi' or 'phi', got {correlation_class!r}")
    if desired == 0:
        raise ContractViolation("state carries no power in the desired class")
    return undesired / desired
