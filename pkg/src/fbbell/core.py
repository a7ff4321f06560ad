"""Shared value types for the two-qubit frequency-bin model.

Everything downstream works on a fixed 4-dimensional Hilbert space spanned by
|I_m S_n> for m, n in {0, 1}, with amplitudes always ordered
(00, 01, 10, 11).  Frequencies are angular (rad/s) throughout; the conversion
from Hz happens once, at configuration time.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractViolation, NumericalError, OutOfModelError

# Validation tolerances for density matrices.  Violations raise; nothing is
# silently clipped or repaired.
HERMITICITY_ATOL = 1e-12
TRACE_ATOL = 1e-12
EIGENVALUE_FLOOR = -1e-10

NORMALIZATION_ATOL = 1e-9

# Bin indices allowed by the model: the two computational bins plus the
# immediate out-of-space neighbors used for leakage accounting.
ALLOWED_BIN_INDICES = (-1, 0, 1, 2)


class BellLabel(Enum):
    """The four canonical Bell states on the frequency-bin qubit pair."""

    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"

    @classmethod
    def parse(cls, text: str) -> "BellLabel":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ContractViolation(
                f"unknown Bell label {text!r}; expected one of "
                f"{[m.value for m in cls]}"
            ) from None

    @property
    def correlation_class(self) -> str:
        """'psi' for the anticorrelated pair, 'phi' for the correlated one."""
        return "psi" if self in (BellLabel.PSI_PLUS, BellLabel.PSI_MINUS) else "phi"

    @property
    def intrinsic_phase(self) -> float:
        """0 for the + states, pi for the - states."""
        return 0.0 if self in (BellLabel.PSI_PLUS, BellLabel.PHI_PLUS) else math.pi


def _exact_grid_lattice(pump: float, offset: float, spacing: float):
    """Snap (offset, spacing) onto a binary lattice commensurate with pump.

    Bin centers are sums/differences of pump/2 and small offsets.  Generic
    doubles make the energy-conservation and spacing identities hold only to
    rounding; snapping the offsets onto the machine lattice of the pump
    frequency (coarsening, and in rare binade-straddling cases nudging the
    pump by one ulp) makes them hold bit-exactly.  The adjustment is at most
    ~1e-9 relative and far below any physical tolerance.
    """

    def idler(p, o, s, k):
        return p / 2 - (o + (1 - k) * s)

    def signal(p, o, s, l):
        return p / 2 + (o + l * s)

    def identities_hold(p, o, s):
        if not (s > 0 and o > s):
            return False
        for k, l in ((1, 0), (0, 1), (2, -1), (-1, 2)):
            if idler(p, o, s, k) + signal(p, o, s, l) != p:
                return False
        for j in (-1, 0, 1):
            if signal(p, o, s, j + 1) - signal(p, o, s, j) != s:
                return False
            if idler(p, o, s, j + 1) - idler(p, o, s, j) != s:
                return False
        return True

    for pump_try in (pump, math.nextafter(pump, math.inf), math.nextafter(pump, 0.0)):
        q = math.ulp(pump_try)
        for _ in range(12):
            off_q = round(offset / q) * q
            sp_q = round(spacing / q) * q
            if identities_hold(pump_try, off_q, sp_q):
                return pump_try, off_q, sp_q
            q *= 2
    raise NumericalError(
        "frequency grid cannot be placed on an exact machine lattice; "
        "inputs are pathological"
    )


@dataclass(frozen=True)
class FrequencyGrid:
    """Bin-center bookkeeping for the four-bin computational space.

    pump_center is the (single-line) pump angular frequency; idler bins sit
    below the half-pump frequency and signal bins above it:

        idler  k: pump/2 - (bin_offset + (1-k) * bin_spacing)
        signal l: pump/2 + (bin_offset + l * bin_spacing)

    so that idler k=1 and signal l=0 are the innermost pair at +-bin_offset.
    Constructed values are snapped so that the energy-conservation sums and
    the bin-spacing differences are exact in double precision.
    """

    pump_center: float
    bin_offset: float
    bin_spacing: float

    def __post_init__(self):
        if not (
            math.isfinite(self.pump_center)
            and math.isfinite(self.bin_offset)
            and math.isfinite(self.bin_spacing)
        ):
            raise ContractViolation("grid frequencies must be finite")
        if self.pump_center <= 0:
            raise ContractViolation("pump_center must be positive")
        if self.bin_spacing <= 0:
            raise ContractViolation("bin_spacing must be positive")
        if self.bin_offset <= self.bin_spacing:
            raise ContractViolation(
                "bin_offset must exceed bin_spacing so the idler/signal bins "
                "do not interleave across the half-pump frequency"
            )
        pump, off, sp = _exact_grid_lattice(
            self.pump_center, self.bin_offset, self.bin_spacing
        )
        object.__setattr__(self, "pump_center", pump)
        object.__setattr__(self, "bin_offset", off)
        object.__setattr__(self, "bin_spacing", sp)

    @classmethod
    def from_hz(cls, pump_center_hz: float, bin_offset_hz: float, bin_spacing_hz: float):
        """Build a grid from ordinary (non-angular) frequencies in Hz."""
        two_pi = 2.0 * math.pi
        return cls(
            pump_center=two_pi * pump_center_hz,
            bin_offset=two_pi * bin_offset_hz,
            bin_spacing=two_pi * bin_spacing_hz,
        )


def bin_frequency(grid: FrequencyGrid, photon: str, index: int) -> float:
    """Angular center frequency of an idler or signal bin.

    Indices -1 and 2 address the out-of-space neighbor bins used for leakage
    accounting; anything further is outside the model.
    """
    if index not in ALLOWED_BIN_INDICES:
        raise OutOfModelError(
            f"bin index {index} outside the modeled range {ALLOWED_BIN_INDICES}"
        )
    half = grid.pump_center / 2
    if photon == "idler":
        return half - (grid.bin_offset + (1 - index) * grid.bin_spacing)
    if photon == "signal":
        return half + (grid.bin_offset + index * grid.bin_spacing)
    raise ContractViolation(f"photon must be 'idler' or 'signal', got {photon!r}")


@dataclass(frozen=True)
class TwoQubitState:
    """Pure two-photon state: 4 complex amplitudes in (00, 01, 10, 11) order.

    States are plain amplitude carriers; normalization is explicit because
    physically meaningful intermediates (pump-coefficient products) are not
    normalized.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(4).copy()
        if not np.all(np.isfinite(amps.view(float))):
            raise ContractViolation("state amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_components(cls, c00, c01, c10, c11) -> "TwoQubitState":
        return cls(np.array([c00, c01, c10, c11], dtype=complex))

    def amplitude(self, m: int, n: int) -> complex:
        return complex(self.amplitudes[2 * m + n])

    @property
    def matrix(self) -> np.ndarray:
        """Amplitudes as a 2x2 array indexed [idler bin, signal bin]."""
        return self.amplitudes.reshape(2, 2)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def is_normalized(self, atol: float = NORMALIZATION_ATOL) -> bool:
        return abs(self.norm_squared() - 1.0) <= atol

    def normalize(self) -> "TwoQubitState":
        n2 = self.norm_squared()
        if n2 <= 0.0:
            raise ContractViolation("cannot normalize a zero state")
        return TwoQubitState(self.amplitudes / math.sqrt(n2))

    def phase_rotated(self, theta: float) -> "TwoQubitState":
        """Multiply every amplitude by exp(i*theta) (a global phase)."""
        return TwoQubitState(self.amplitudes * np.exp(1j * theta))

    def density_matrix(self) -> "DensityMatrix":
        """|psi><psi| of the normalized state."""
        c = self.normalize().amplitudes
        return DensityMatrix(np.outer(c, c.conj()))

    def to_json_dict(self) -> dict:
        return {
            "re": [float(x) for x in self.amplitudes.real],
            "im": [float(x) for x in self.amplitudes.imag],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "TwoQubitState":
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
        if re.shape != (4,) or im.shape != (4,):
            raise ContractViolation("state JSON must hold 4 're' and 4 'im' entries")
        return cls(re + 1j * im)


def canonical_bell(label: BellLabel) -> TwoQubitState:
    """The normalized canonical Bell state for a label."""
    r = 1.0 / math.sqrt(2.0)
    if label is BellLabel.PSI_PLUS:
        return TwoQubitState.from_components(0, r, r, 0)
    if label is BellLabel.PSI_MINUS:
        return TwoQubitState.from_components(0, r, -r, 0)
    if label is BellLabel.PHI_PLUS:
        return TwoQubitState.from_components(r, 0, 0, r)
    return TwoQubitState.from_components(r, 0, 0, -r)


def psi_with_phase(kappa: float) -> TwoQubitState:
    """Anticorrelated state (|I0 S1> + e^{i kappa} |I1 S0>)/sqrt(2)."""
    r = 1.0 / math.sqrt(2.0)
    return TwoQubitState.from_components(0, r, r * np.exp(1j * kappa), 0)


def phi_with_phase(nu: float) -> TwoQubitState:
    """Correlated state (|I0 S0> + e^{i nu} |I1 S1>)/sqrt(2)."""
    r = 1.0 / math.sqrt(2.0)
    return TwoQubitState.from_components(r, 0, 0, r * np.exp(1j * nu))


@dataclass(frozen=True)
class DensityMatrix:
    """Validated 4x4 density operator.

    Hermiticity, unit trace, and positivity are checked at construction
    against fixed tolerances; violations raise instead of being repaired, so
    any DensityMatrix in circulation is a physical state.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex).copy()
        if m.shape != (4, 4):
            raise ContractViolation(f"density matrix must be 4x4, got {m.shape}")
        if not np.all(np.isfinite(m.view(float))):
            raise ContractViolation("density matrix entries must be finite")
        herm_dev = float(np.max(np.abs(m - m.conj().T)))
        if herm_dev > HERMITICITY_ATOL:
            raise ContractViolation(
                f"density matrix not Hermitian: max deviation {herm_dev:.3e}"
            )
        trace_dev = abs(float(np.trace(m).real) - 1.0)
        if trace_dev > TRACE_ATOL or abs(float(np.trace(m).imag)) > TRACE_ATOL:
            raise ContractViolation(
                f"density matrix trace deviates from 1 by {trace_dev:.3e}"
            )
        min_eig = float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())
        if min_eig < EIGENVALUE_FLOOR:
            raise ContractViolation(
                f"density matrix has negative eigenvalue {min_eig:.3e}"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def maximally_mixed(cls) -> "DensityMatrix":
        return cls(np.eye(4, dtype=complex) / 4.0)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def to_json_dict(self) -> dict:
        return {
            "re": [[float(x) for x in row] for row in self.matrix.real],
            "im": [[float(x) for x in row] for row in self.matrix.imag],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "DensityMatrix":
        re = np.asarray(data["re"], dtype=float)
        im = np.asarray(data["im"], dtype=float)
        if re.shape != (4, 4) or im.shape != (4, 4):
            raise ContractViolation("density JSON must hold 4x4 're' and 'im' arrays")
        return cls(re + 1j * im)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, text: str) -> "DensityMatrix":
        return cls.from_json_dict(json.loads(text))


def fidelity(rho: DensityMatrix, target: TwoQubitState) -> float:
    """Overlap <target| rho |target> with the pure target state.

    The target must already be normalized (the caller decides how to handle
    un-normalized intermediates); the result is the real part, with the
    imaginary part required to vanish.
    """
    if not target.is_normalized():
        raise ContractViolation(
            f"fidelity target must be normalized (|c|^2 sums to "
            f"{target.norm_squared():.6g})"
        )
    v = target.amplitudes
    value = complex(v.conj() @ rho.matrix @ v)
    if abs(value.imag) >= 1e-10:
        raise NumericalError(
            f"fidelity has non-negligible imaginary part {value.imag:.3e}"
        )
    return float(value.real)
