import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import ks_2samp

from fbbell import (
    BellLabel,
    BuresParameterVector,
    ContractViolation,
    CountTable,
    DelayPair,
    DensityMatrix,
    EopmConfig,
    HADAMARD_ETA,
    MeasurementBasis,
    build_povm,
    canonical_bell,
    coincidence_probs,
    log_likelihood,
    posterior_predictive,
    sample_bures_prior,
    sample_posterior,
)
from fbbell.tomography import effective_sample_size, subtract_accidentals

from conftest import random_four_term_state

ETA4 = HADAMARD_ETA**4


def noiseless_tables(state, total):
    tables = []
    for basis in (MeasurementBasis.zz(), MeasurementBasis.xx()):
        p = coincidence_probs(state, basis)
        counts = np.round(total * p / p.sum()).astype(np.int64)
        tables.append(CountTable(basis, counts, np.zeros((2, 2), np.int64), 1.0))
    return tables


class TestPovm:
    def test_zz_elements_are_projectors(self):
        povm = build_povm(MeasurementBasis.zz())
        for o in range(4):
            expected = np.zeros((4, 4), complex)
            expected[o, o] = 1.0
            assert np.allclose(povm.elements[o], expected, atol=1e-14)
        assert np.allclose(povm.remainder, 0.0, atol=1e-14)

    def test_completeness_both_bases(self):
        for basis in (MeasurementBasis.zz(), MeasurementBasis.xx()):
            povm = build_povm(basis)
            total = povm.elements.sum(axis=0) + povm.remainder
            assert np.max(np.abs(total - np.eye(4))) < 1e-10

    def test_zz_on_psi_plus(self):
        povm = build_povm(MeasurementBasis.zz())
        probs = povm.outcome_probabilities(
            canonical_bell(BellLabel.PSI_PLUS).density_matrix()
        )
        assert np.allclose(probs, [[0, 0.5], [0.5, 0]], atol=1e-14)

    def test_xx_element_00_on_psi_plus(self):
        povm = build_povm(MeasurementBasis.xx())
        probs = povm.outcome_probabilities(
            canonical_bell(BellLabel.PSI_PLUS).density_matrix()
        )
        assert probs[0, 0] == pytest.approx(2 * ETA4, abs=1e-12)

    def test_xx_remainder_weight(self):
        povm = build_povm(MeasurementBasis.xx())
        # remainder absorbs 1 - 4 eta^4 of identity weight
        assert np.allclose(
            povm.remainder, (1 - 4 * ETA4) * np.eye(4), atol=1e-12
        )

    def test_povm_matches_amplitude_path(self, grid, rng):
        for _ in range(200):
            state = random_four_term_state(rng)
            m = rng.uniform(0.0, 2.5)
            phi = rng.uniform(-math.pi, math.pi)
            delays = DelayPair(rng.uniform(-2e-11, 2e-11), rng.uniform(-2e-11, 2e-11))
            basis = MeasurementBasis.xx(EopmConfig(mod_index=m, rf_phase=phi))
            povm = build_povm(basis, grid, delays)
            via_povm = povm.outcome_probabilities(state.density_matrix())
            via_amps = coincidence_probs(state, basis, grid, delays)
            assert np.max(np.abs(via_povm - via_amps)) < 1e-10


class TestLogLikelihood:
    def test_order_invariance(self, rng):
        state = canonical_bell(BellLabel.PHI_PLUS)
        zz, xx = noiseless_tables(state, 5000)
        rho = DensityMatrix.maximally_mixed()
        assert abs(log_likelihood([zz, xx], rho) - log_likelihood([xx, zz], rho)) < 1e-12

    def test_zero_count_table_contributes_nothing(self):
        state = canonical_bell(BellLabel.PHI_PLUS)
        zz, xx = noiseless_tables(state, 5000)
        empty = CountTable(
            MeasurementBasis.zz(), np.zeros((2, 2), np.int64), np.zeros((2, 2), np.int64), 1.0
        )
        rho = DensityMatrix.maximally_mixed()
        assert log_likelihood([zz, xx, empty], rho) == log_likelihood([zz, xx], rho)

    def test_impossible_outcome_gives_neg_inf(self):
        psi_plus_data = noiseless_tables(canonical_bell(BellLabel.PSI_PLUS), 10000)
        rho_minus = canonical_bell(BellLabel.PSI_MINUS).density_matrix()
        assert log_likelihood(psi_plus_data, rho_minus) == -math.inf

    def test_truth_beats_depolarized_family(self):
        state = canonical_bell(BellLabel.PSI_PLUS)
        tables = noiseless_tables(state, 100000)
        rho0 = state.density_matrix().matrix
        best = log_likelihood(tables, DensityMatrix(rho0))
        for lam in (0.05, 0.2, 0.5, 0.9):
            mixed = DensityMatrix((1 - lam) * rho0 + lam * np.eye(4) / 4)
            assert log_likelihood(tables, mixed) < best

    def test_empty_list_rejected(self):
        with pytest.raises(ContractViolation):
            log_likelihood([], DensityMatrix.maximally_mixed())

    def test_accidental_subtraction_clips(self):
        table = CountTable(
            MeasurementBasis.zz(),
            np.array([[5, 50], [50, 5]]),
            np.array([[9, 10], [10, 9]]),
            1.0,
        )
        corrected = subtract_accidentals(table)
        assert np.array_equal(corrected.counts, [[0, 40], [40, 0]])
        assert np.all(corrected.accidentals == 0)


class TestBuresParameterVector:
    @settings(max_examples=100, deadline=None)
    @given(
        theta=st.lists(
            st.floats(-20, 20, allow_nan=False, allow_infinity=False),
            min_size=64,
            max_size=64,
        )
    )
    def test_every_finite_vector_induces_a_state(self, theta):
        vec = BuresParameterVector.from_vector(np.array(theta))
        rho = vec.to_density_matrix()  # constructor validates the invariants
        assert rho.matrix.shape == (4, 4)

    def test_vector_round_trip(self, rng):
        theta = rng.standard_normal(64)
        vec = BuresParameterVector.from_vector(theta)
        assert np.array_equal(vec.to_vector(), theta)

    def test_rejects_non_finite(self):
        bad = np.zeros(64)
        bad[3] = np.nan
        with pytest.raises(ContractViolation):
            BuresParameterVector.from_vector(bad)


class TestPriorSampling:
    def test_prior_mean_overlap_is_quarter(self):
        # no data: posterior == prior; Bures-ensemble mean overlap with any
        # pure state is 1/4 by unitary invariance
        target = canonical_bell(BellLabel.PSI_PLUS)
        summary = sample_posterior(
            [], target, n_samples=4000, burn_in=0, thin=1, step_scale=1.0, seed=17
        )
        assert summary.fidelity_mean == pytest.approx(0.25, abs=0.01)
        lo, hi = summary.fidelity_ci
        assert lo < 0.25 < hi
        # direct-draw oracle agrees
        direct = sample_bures_prior(4000, seed=3)
        v = target.amplitudes
        oracle_mean = float(np.mean(np.real(np.einsum("i,nij,j->n", v.conj(), direct, v))))
        assert summary.fidelity_mean == pytest.approx(oracle_mean, abs=0.01)

    def test_mcmc_prior_matches_direct_sampling(self):
        # two-sample KS on the largest-eigenvalue marginal, 1e4 samples each
        from fbbell.tomography import _pcn_chain

        chain, acceptance = _pcn_chain(
            np.zeros((0, 4, 4, 4), complex),
            np.zeros((0, 4)),
            n_samples=10000,
            burn_in=0,
            thin=1,
            step_scale=1.0,
            seed=23,
        )
        assert acceptance == 1.0  # no data: every pCN proposal is accepted
        direct = sample_bures_prior(10000, seed=29)
        top_chain = np.linalg.eigvalsh(chain)[:, -1]
        top_direct = np.linalg.eigvalsh(direct)[:, -1]
        assert ks_2samp(top_chain, top_direct).pvalue > 0.01


class TestSamplePosterior:
    def test_noiseless_psi_plus_high_fidelity(self):
        state = canonical_bell(BellLabel.PSI_PLUS)
        tables = noiseless_tables(state, 100000)
        summary = sample_posterior(tables, state, seed=7)
        assert summary.fidelity_mean >= 0.99
        assert summary.fidelity_ci[0] <= summary.fidelity_mean <= summary.fidelity_ci[1]
        assert 0.0 <= summary.acceptance_rate <= 1.0

    def test_determinism(self):
        state = canonical_bell(BellLabel.PHI_MINUS)
        tables = noiseless_tables(state, 20000)
        a = sample_posterior(tables, state, n_samples=200, burn_in=200, thin=2, seed=99)
        b = sample_posterior(tables, state, n_samples=200, burn_in=200, thin=2, seed=99)
        assert np.array_equal(a.mean_rho.matrix, b.mean_rho.matrix)
        assert a.fidelity_mean == b.fidelity_mean
        assert a.fidelity_ci == b.fidelity_ci
        assert a.acceptance_rate == b.acceptance_rate
        assert a.ess == b.ess

    def test_ci_width_shrinks_with_counts(self):
        state = canonical_bell(BellLabel.PSI_PLUS)
        widths = []
        for total in (100, 1000, 10000, 100000):
            per_seed = []
            for seed in range(5):
                tables = noiseless_tables(state, total)
                s = sample_posterior(
                    tables, state, n_samples=600, burn_in=600, thin=3, seed=seed
                )
                per_seed.append(s.fidelity_ci[1] - s.fidelity_ci[0])
            widths.append(np.mean(per_seed))
        assert widths[0] > widths[1] > widths[2] > widths[3]

    def test_chain_setting_contracts(self):
        state = canonical_bell(BellLabel.PSI_PLUS)
        tables = noiseless_tables(state, 100)
        with pytest.raises(ContractViolation):
            sample_posterior(tables, state, n_samples=0)
        with pytest.raises(ContractViolation):
            sample_posterior(tables, state, step_scale=0.0)
        with pytest.raises(ContractViolation):
            sample_posterior(tables, state, step_scale=1.5)
        with pytest.raises(ContractViolation):
            sample_posterior(tables, state, thin=0)


class TestPosteriorPredictive:
    def test_pure_state_zz(self):
        state = canonical_bell(BellLabel.PSI_PLUS)
        tables = noiseless_tables(state, 50000)
        summary = sample_posterior(tables, state, n_samples=400, burn_in=400, thin=2, seed=5)
        predictive = posterior_predictive(summary, MeasurementBasis.zz())
        assert predictive.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(predictive, [[0, 0.5], [0.5, 0]], atol=0.02)

    def test_phi_run_xx_pattern(self):
        state = canonical_bell(BellLabel.PHI_PLUS)
        tables = noiseless_tables(state, 50000)
        summary = sample_posterior(tables, state, n_samples=400, burn_in=400, thin=2, seed=5)
        predictive = posterior_predictive(summary, MeasurementBasis.xx())
        assert predictive[0, 0] > 10 * predictive[0, 1]
        assert predictive[1, 1] > 10 * predictive[1, 0]

    def test_maximally_mixed_is_uniform(self):
        from fbbell.tomography import PosteriorSummary

        summary = PosteriorSummary(
            mean_rho=DensityMatrix.maximally_mixed(),
            fidelity_mean=0.25,
            fidelity_ci=(0.2, 0.3),
            n_samples=1,
            acceptance_rate=1.0,
            ess=1.0,
        )
        predictive = posterior_predictive(summary, MeasurementBasis.zz())
        assert np.allclose(predictive, 0.25, atol=1e-14)


class TestEffectiveSampleSize:
    def test_iid_series(self, rng):
        x = rng.standard_normal(4000)
        ess = effective_sample_size(x)
        assert ess > 2000

    def test_correlated_series_smaller(self, rng):
        noise = rng.standard_normal(4000)
        x = np.empty(4000)
        x[0] = noise[0]
        for i in range(1, 4000):
            x[i] = 0.95 * x[i - 1] + noise[i]
        assert effective_sample_size(x) < 500

    def test_constant_series(self):
        assert effective_sample_size(np.ones(100)) == 100.0
