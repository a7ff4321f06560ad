"""Frequency-bin Bell-state synthesizer: simulation and inference toolkit.

Submodules follow the physical pipeline:

- core:        frequency grid, states, density matrices, fidelity
- synthesis:   pump chain (EOIM), SPDC coefficients, shaper masks
- measurement: delays, electro-optic mixing, coincidence statistics
- tomography:  Bures-prior Bayesian density-matrix reconstruction
- sensing:     delay interferograms and fringe fitting
- cli:         command-line front end

The tomography hot kernels run on a compiled Cython backend when available,
with a NumPy fallback selected at import (see fbbell.kernel_backend()).
"""

from ._backend import backend_name as kernel_backend
from .core import (
    BellLabel,
    DensityMatrix,
    FrequencyGrid,
    TwoQubitState,
    bin_frequency,
    canonical_bell,
    fidelity,
    phi_with_phase,
    psi_with_phase,
)
from .errors import (
    ConfigError,
    ContractViolation,
    DegenerateStateError,
    FbbellError,
    NumericalError,
    OutOfModelError,
)
from .measurement import (
    HADAMARD_ETA,
    HADAMARD_MOD_INDEX,
    CountTable,
    DelayPair,
    EopmConfig,
    MeasurementBasis,
    NoiseConfig,
    car,
    coincidence_probs,
    jsi_ratio,
    leakage_probs,
    mixing_weight,
    simulate_counts,
)
from .sensing import FringeFit, ScanConfig, fit_fringe, phase_to_delay, scan
from .synthesis import (
    EoimConfig,
    PhaseMatching,
    PumpSpectrum,
    ShaperMask,
    apply_mask,
    compensate,
    eoim_output,
    synthesize,
)
from .tomography import (
    BuresParameterVector,
    PosteriorSummary,
    PovmSet,
    build_povm,
    log_likelihood,
    posterior_predictive,
    sample_bures_prior,
    sample_posterior,
)

__version__ = "0.1.0"
