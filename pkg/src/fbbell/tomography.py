"""Bayesian density-matrix reconstruction from ZZ and XX count tables.

The prior is uniform in the Bures metric, realized through the standard
Ginibre construction rho = (I+U) G G^dag (I+U)^dag / Tr[...] with G Ginibre
and U Haar.  Because that map sends iid standard normals to the Bures
ensemble, a preconditioned-Crank-Nicolson proposal on the underlying normal
parameters leaves the prior exactly invariant, and Metropolis-Hastings then
needs only the likelihood ratio.  The likelihood is conditional-on-detection
multinomial over the four coincidence outcomes of each table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import DensityMatrix, FrequencyGrid, TwoQubitState, bin_frequency
from .errors import ContractViolation, NumericalError
from .measurement import (
    CountTable,
    DelayPair,
    MeasurementBasis,
    mixing_weight,
)

PARAMETER_DIM = 64

DEFAULT_N_SAMPLES = 2000
DEFAULT_BURN_IN = 1000
DEFAULT_THIN = 10
DEFAULT_STEP_SCALE = 0.05

ACCEPTANCE_TARGET = 0.28
ACCEPTANCE_ADAPT_GAIN = 0.5


@dataclass(frozen=True)
class BuresParameterVector:
    """64 real parameters: two vectorized Ginibre matrices (G, then U-seed).

    Every finite vector induces a valid density matrix; iid standard-normal
    entries induce the Bures ensemble.
    """

    g: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float).reshape(32).copy()
        u = np.asarray(self.u, dtype=float).reshape(32).copy()
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(u))):
            raise ContractViolation("Bures parameters must be finite")
        g.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "u", u)

    @classmethod
    def from_vector(cls, theta: np.ndarray) -> "BuresParameterVector":
        theta = np.asarray(theta, dtype=float).reshape(PARAMETER_DIM)
        return cls(theta[:32], theta[32:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.g, self.u])

    def to_density_matrix(self) -> DensityMatrix:
        return DensityMatrix(_backend.bures_rho(self.to_vector()))


@dataclass(frozen=True)
class PovmSet:
    """Coincidence-outcome POVM for one basis: four elements plus remainder.

    elements[o] is the operator for outcome o in (00, 01, 10, 11) order; the
    remainder absorbs probability mixed outside the computational space (and
    is zero for ZZ).  All elements and the remainder sum to the identity.
    """

    basis: MeasurementBasis
    elements: np.ndarray
    remainder: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.elements, dtype=complex).reshape(4, 4, 4).copy()
        r = np.asarray(self.remainder, dtype=complex).reshape(4, 4).copy()
        total = e.sum(axis=0) + r
        if np.max(np.abs(total - np.eye(4))) > 1e-10:
            raise ContractViolation("POVM elements do not sum to identity")
        for op in list(e) + [r]:
            if np.max(np.abs(op - op.conj().T)) > 1e-12:
                raise ContractViolation("POVM element not Hermitian")
            if float(np.linalg.eigvalsh(op).min()) < -1e-10:
                raise ContractViolation("POVM element not positive")
        e.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "elements", e)
        object.__setattr__(self, "remainder", r)

    def outcome_probabilities(self, rho: DensityMatrix | np.ndarray) -> np.ndarray:
        m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
        return np.einsum("oij,ji->o", self.elements, m).real.reshape(2, 2)


def build_povm(
    basis: MeasurementBasis,
    grid: FrequencyGrid | None = None,
    delays: DelayPair | None = None,
) -> PovmSet:
    """Operator form of the coincidence measurement.

    Outcome (k, l) detects the rank-one element |t_kl><t_kl| with
    (t_kl)_mn = conj(w_{k-m} w_{l-n} e^{i tau_I w_I(m)} e^{i tau_S w_S(n)}),
    matching the amplitude path in measurement.coincidence_probs.  For ZZ
    this reduces to the bin projectors; at the Hadamard point the XX elements
    are 4 eta^4 times projectors onto (|0> +- |1>)(|0> +- |1>)/2.
    """
    weights = {p: mixing_weight(basis.eopm, p) for p in (-1, 0, 1)}
    if delays is not None and (delays.tau_s != 0.0 or delays.tau_i != 0.0):
        if grid is None:
            raise ContractViolation("delays require a FrequencyGrid for bin phases")
        phase_i = [np.exp(1j * delays.tau_i * bin_frequency(grid, "idler", m)) for m in (0, 1)]
        phase_s = [np.exp(1j * delays.tau_s * bin_frequency(grid, "signal", n)) for n in (0, 1)]
    else:
        phase_i = [1.0, 1.0]
        phase_s = [1.0, 1.0]

    elements = np.zeros((4, 4, 4), dtype=complex)
    for k in (0, 1):
        for l in (0, 1):
            t = np.zeros(4, dtype=complex)
            for m in (0, 1):
                for n in (0, 1):
                    w = weights.get(k - m, 0.0) * weights.get(l - n, 0.0)
                    t[2 * m + n] = np.conj(w * phase_i[m] * phase_s[n])
            elements[2 * k + l] = np.outer(t, t.conj())
    remainder = np.eye(4, dtype=complex) - elements.sum(axis=0)
    return PovmSet(basis, elements, remainder)


def subtract_accidentals(table: CountTable) -> CountTable:
    """Accidental-corrected copy of a table, clipped at zero."""
    corrected = np.clip(table.counts - table.accidentals, 0, None)
    return CountTable(table.basis, corrected, np.zeros((2, 2), dtype=np.int64), table.integration_s)


def _stack_tables(tables) -> tuple[np.ndarray, np.ndarray]:
    elements = np.zeros((len(tables), 4, 4, 4), dtype=complex)
    counts = np.zeros((len(tables), 4), dtype=float)
    for t, table in enumerate(tables):
        povm = build_povm(table.basis)
        elements[t] = povm.elements
        counts[t] = table.counts.reshape(4).astype(float)
    return elements, counts


def log_likelihood(tables, rho: DensityMatrix | np.ndarray) -> float:
    """Log-likelihood of count tables given a state (constants dropped).

    Outcome probabilities are renormalized over the four detected outcomes of
    each table, so overall flux never enters.  Returns -inf (not an error)
    when an observed outcome has zero probability under rho.
    """
    tables = list(tables)
    if not tables:
        raise ContractViolation("log_likelihood needs at least one count table")
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    elements, counts = _stack_tables(tables)
    return _backend.loglik_tables(m, elements, counts)


@dataclass(frozen=True)
class PosteriorSummary:
    """Posterior-mean state plus fidelity statistics and chain diagnostics."""

    mean_rho: DensityMatrix
    fidelity_mean: float
    fidelity_ci: tuple[float, float]
    n_samples: int
    acceptance_rate: float
    ess: float

    def __post_init__(self):
        lo, hi = self.fidelity_ci
        if not (lo <= self.fidelity_mean <= hi):
            raise NumericalError(
                f"posterior mean fidelity {self.fidelity_mean:.6g} outside its "
                f"credible interval [{lo:.6g}, {hi:.6g}]"
            )
        if not (0.0 <= self.acceptance_rate <= 1.0):
            raise NumericalError("acceptance rate outside [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "mean_rho": self.mean_rho.to_json_dict(),
            "fidelity_mean": self.fidelity_mean,
            "fidelity_ci_90": [self.fidelity_ci[0], self.fidelity_ci[1]],
            "n_samples": self.n_samples,
            "acceptance_rate": self.acceptance_rate,
            "effective_sample_size": self.ess,
        }


def _approximate_mle(elements: np.ndarray, counts: np.ndarray, iters: int = 150) -> np.ndarray:
    """Iterative maximum-likelihood estimate (R rho R) used to seed the chain.

    For these bases the per-table POVM sums are proportional to the identity,
    so the conditional renormalization is state-independent and the plain
    R rho R fixed point is the conditional-likelihood maximizer too.  The
    result is blended with the maximally mixed state to stay full rank.
    """
    rho = np.eye(4, dtype=complex) / 4.0
    flat_e = elements.reshape(-1, 4, 4)
    flat_n = counts.reshape(-1)
    active = flat_n > 0
    if not np.any(active):
        return rho
    flat_e = flat_e[active]
    flat_n = flat_n[active]
    for _ in range(iters):
        p = np.einsum("oij,ji->o", flat_e, rho).real
        p = np.clip(p, 1e-12, None)
        r = np.einsum("o,oij->ij", flat_n / p, flat_e)
        rho = r @ rho @ r
        rho = (rho + rho.conj().T) / 2
        rho /= np.trace(rho).real
    return 0.98 * rho + 0.02 * np.eye(4) / 4.0


def _initial_parameters(elements: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Parameter vector whose induced state is the approximate MLE.

    With U = I the Bures map reduces to rho = G G^dag / Tr, so G can be the
    (scaled) Hermitian square root of the estimate; the scaling puts both
    blocks at a prior-typical radius without changing the induced state.
    """
    rho0 = _approximate_mle(elements, counts)
    evals, evecs = np.linalg.eigh(rho0)
    g = (evecs * np.sqrt(np.clip(evals, 0.0, None))) @ evecs.conj().T
    g *= math.sqrt(32.0)
    z = math.sqrt(8.0) * np.eye(4)  # QR factor is exactly I
    theta = np.empty(PARAMETER_DIM)
    theta[0:16] = g.real.reshape(16)
    theta[16:32] = g.imag.reshape(16)
    theta[32:48] = z.reshape(16)
    theta[48:64] = 0.0
    return theta


def effective_sample_size(series: np.ndarray) -> float:
    """Autocorrelation-based ESS (Geyer initial positive sequence)."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        return float(n)
    d = x - x.mean()
    var = float(d @ d) / n
    if var == 0.0:
        return float(n)
    # full autocovariance via FFT
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(d, size)
    acov = np.fft.irfft(f * np.conj(f), size)[:n].real / n
    rho = acov / acov[0]
    tau = 1.0
    for k in range(1, n // 2):
        gamma = rho[2 * k - 1] + rho[2 * k]
        if gamma <= 0.0:
            break
        tau += 2.0 * gamma
    return float(min(n, n / tau))


def sample_posterior(
    tables,
    target: TwoQubitState,
    n_samples: int = DEFAULT_N_SAMPLES,
    burn_in: int = DEFAULT_BURN_IN,
    thin: int = DEFAULT_THIN,
    step_scale: float = DEFAULT_STEP_SCALE,
    seed=None,
    subtract: bool = True,
) -> PosteriorSummary:
    """Metropolis-Hastings posterior sampling over the Bures parameters.

    Proposals mix the current parameter vector with a fresh standard-normal
    draw at ratio sqrt(1-b^2):b, which preserves the normal prior, so
    acceptance depends on the likelihood ratio alone.  During burn-in the
    step b is adapted from step_scale toward a 20-40% acceptance rate
    (sharply peaked likelihoods otherwise stall the walk); it is frozen for
    the retained samples, so the sampling phase is exact Metropolis-Hastings.
    step_scale=1 with no data gives independent prior draws.  Deterministic
    given the seed.
    """
    if n_samples < 1:
        raise ContractViolation("n_samples must be >= 1")
    if burn_in < 0 or thin < 1:
        raise ContractViolation("burn_in must be >= 0 and thin >= 1")
    if not (0.0 < step_scale <= 1.0):
        raise ContractViolation("step_scale must lie in (0, 1]")

    if not target.is_normalized():
        raise ContractViolation("fidelity target must be normalized")

    tables = list(tables)
    if subtract:
        tables = [subtract_accidentals(t) for t in tables]
    elements, counts = _stack_tables(tables)

    samples, acceptance = _pcn_chain(
        elements, counts, n_samples, burn_in, thin, step_scale, seed
    )
    for rho in samples:
        DensityMatrix(rho)  # every retained sample must be a valid state

    v = target.amplitudes
    fids = np.real(np.einsum("i,nij,j->n", v.conj(), samples, v))
    mean_rho = DensityMatrix(samples.mean(axis=0))
    lo, hi = np.quantile(fids, [0.05, 0.95])
    return PosteriorSummary(
        mean_rho=mean_rho,
        fidelity_mean=float(fids.mean()),
        fidelity_ci=(float(lo), float(hi)),
        n_samples=n_samples,
        acceptance_rate=acceptance,
        ess=effective_sample_size(fids),
    )


def _pcn_chain(elements, counts, n_samples, burn_in, thin, step_scale, seed):
    """Run the adaptive-burn-in pCN chain; returns (samples, acceptance).

    samples is (n_samples, 4, 4); acceptance is the rate over the post-burn-in
    (fixed step) phase.  With data the chain starts at an approximate MLE and
    the step adapts during burn-in; without data it starts from a prior draw
    with the step left alone.
    """
    have_data = counts.size > 0 and counts.sum() > 0
    rng = np.random.default_rng(seed)
    beta = float(step_scale)

    if have_data:
        theta = _initial_parameters(elements, counts)
    else:
        theta = rng.standard_normal(PARAMETER_DIM)
    rho = _backend.bures_rho(theta)
    ll = _backend.loglik_tables(rho, elements, counts)

    total_steps = burn_in + n_samples * thin
    accepted_sampling = 0
    sampling_steps = 0
    samples = np.empty((n_samples, 4, 4), dtype=complex)
    kept = 0

    for step in range(1, total_steps + 1):
        xi = rng.standard_normal(PARAMETER_DIM)
        u = rng.random()
        proposal = math.sqrt(1.0 - beta * beta) * theta + beta * xi
        rho_prop = _backend.bures_rho(proposal)
        ll_prop = _backend.loglik_tables(rho_prop, elements, counts)
        accept = ll_prop - ll > math.log(u)
        if accept:
            theta, rho, ll = proposal, rho_prop, ll_prop
        if step <= burn_in:
            if have_data:
                # Robbins-Monro drift of log(beta) toward ~28% acceptance.
                gain = ACCEPTANCE_ADAPT_GAIN / step**0.6
                beta *= math.exp(gain * ((1.0 if accept else 0.0) - ACCEPTANCE_TARGET))
                beta = min(max(beta, 1e-6), 1.0)
        else:
            sampling_steps += 1
            accepted_sampling += accept
            if (step - burn_in) % thin == 0:
                samples[kept] = rho
                kept += 1

    return samples, accepted_sampling / max(sampling_steps, 1)


def posterior_predictive(summary: PosteriorSummary, basis: MeasurementBasis) -> np.ndarray:
    """Expected coincidence-outcome distribution under the posterior mean.

    Renormalized over the four detected outcomes, matching the likelihood's
    conditional-on-detection convention.
    """
    probs = build_povm(basis).outcome_probabilities(summary.mean_rho)
    total = probs.sum()
    if total <= 0:
        raise NumericalError("posterior mean assigns no probability to any outcome")
    return probs / total


def sample_bures_prior(n: int, seed=None) -> np.ndarray:
    """n direct draws from the Bures ensemble (no MCMC), as an (n,4,4) array."""
    if n < 1:
        raise ContractViolation("n must be >= 1")
    rng = np.random.default_rng(seed)
    out = np.empty((n, 4, 4), dtype=complex)
    for i in range(n):
        out[i] = _backend.bures_rho(rng.standard_normal(PARAMETER_DIM))
    return out
