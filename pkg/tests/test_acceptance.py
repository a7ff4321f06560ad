"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion lines
as they complete.  Tolerances are fixed here, not configurable.
"""

import math
import time

import numpy as np
from scipy.stats import ks_2samp

from fbbell import (
    BellLabel,
    DelayPair,
    EopmConfig,
    HADAMARD_ETA,
    MeasurementBasis,
    NoiseConfig,
    ScanConfig,
    canonical_bell,
    car,
    coincidence_probs,
    fit_fringe,
    leakage_probs,
    sample_bures_prior,
    sample_posterior,
    scan,
    simulate_counts,
)
from fbbell.config import validate_config
from fbbell.cli import synthesize_target
from fbbell.measurement import CountTable
from fbbell.synthesis import EoimConfig as IntensityModConfig
from fbbell.synthesis import ShaperMask, apply_mask, eoim_output, synthesize
from fbbell.tomography import _pcn_chain, build_povm

from conftest import random_two_term_state, random_four_term_state
from oracles import oracle_coincidence_probs

ETA4 = HADAMARD_ETA**4


def report(criterion, ok, detail):
    status = "PASS" if ok else "FAIL"
    print(f"[acceptance {criterion}] {status} - {detail}", flush=True)
    assert ok, f"criterion {criterion}: {detail}"


def test_criterion_1_hadamard_penalty():
    t0 = time.time()
    ratios = []
    for label in BellLabel:
        state = canonical_bell(label)
        zz = coincidence_probs(state, MeasurementBasis.zz())
        xx = coincidence_probs(state, MeasurementBasis.xx())
        ratios.append(zz.max() / xx.max())
    ok = all(2.7 <= r <= 2.85 for r in ratios) and (time.time() - t0) < 1.0
    report(
        1,
        ok,
        f"ZZ/XX peak-probability penalty {min(ratios):.4f}..{max(ratios):.4f} "
        f"(required within [2.7, 2.85])",
    )


def test_criterion_2_carrier_extinction_ratio():
    t0 = time.time()
    pump = eoim_output(
        IntensityModConfig(mode="on", sideband_power=7.0, extinction_db=17.5)
    )
    state = synthesize(pump).normalize()
    p = leakage_probs(state, MeasurementBasis.zz())
    ratio = (p[0, 0] + p[1, 1]) / (p[0, 1] + p[1, 0])
    ok = abs(ratio - 10**1.75) <= 0.5 and (time.time() - t0) < 1.0
    report(2, ok, f"ZZ desired/undesired ratio {ratio:.3f} (required 56.23 +- 0.5)")


def test_criterion_3_car_scaling():
    t0 = time.time()
    flux, window = 1.0e6, 5.0e-9  # flux * window = 5e-3 targets CAR 400
    psi_probs = np.array([[0.0, 0.5], [0.5, 0.0]])
    phi_probs = np.array([[0.5, 0.0], [0.0, 0.5]])
    t_psi = simulate_counts(
        psi_probs, NoiseConfig(flux, 1.0, window, 1.0), MeasurementBasis.zz(), 1.0, 101
    )
    t_phi = simulate_counts(
        phi_probs, NoiseConfig(flux, 2.0, window, 1.0), MeasurementBasis.zz(), 1.0, 102
    )
    car_psi = car(t_psi, "psi")
    car_phi = car(t_phi, "phi")
    ratio = car_psi / car_phi
    ok = (
        t_psi.total() >= 1_000_000 * 0.99
        and abs(car_psi - 400) <= 0.15 * 400
        and abs(car_phi - 100) <= 0.15 * 100
        and 3.5 <= ratio <= 4.5
        and (time.time() - t0) < 30.0
    )
    report(
        3,
        ok,
        f"CAR psi {car_psi:.1f} (~400), phi {car_phi:.1f} (~100), "
        f"ratio {ratio:.2f} (required [3.5, 4.5]) on {t_psi.total()} coincidences",
    )


def _noiseless_tables(state, total):
    tables = []
    for basis in (MeasurementBasis.zz(), MeasurementBasis.xx()):
        p = coincidence_probs(state, basis)
        counts = np.round(total * p / p.sum()).astype(np.int64)
        tables.append(CountTable(basis, counts, np.zeros((2, 2), np.int64), 1.0))
    return tables


def test_criterion_4_tomography_fidelity():
    t0 = time.time()
    failures = []
    noisy_fids = {}
    for label in BellLabel:
        cfg = validate_config({"target": label.value})
        state, _ = synthesize_target(cfg)
        threshold = 0.975 if label.correlation_class == "psi" else 0.965
        fids = []
        for seed in range(5):
            streams = np.random.SeedSequence(seed).spawn(3)
            tables = [
                simulate_counts(
                    coincidence_probs(state, basis),
                    cfg.noise,
                    basis,
                    cfg.integration_s,
                    streams[i],
                )
                for i, basis in enumerate(
                    (MeasurementBasis.zz(), MeasurementBasis.xx())
                )
            ]
            summary = sample_posterior(
                tables,
                canonical_bell(label),
                n_samples=3000,
                burn_in=2000,
                thin=8,
                seed=streams[2],
            )
            fids.append(summary.fidelity_mean)
        noisy_fids[label.value] = fids
        if min(fids) < threshold:
            failures.append(f"noisy {label.value}: min F {min(fids):.4f} < {threshold}")

    noiseless_fids = {}
    for label in BellLabel:
        state = canonical_bell(label)
        tables = _noiseless_tables(state, 100_000)
        fids = [
            sample_posterior(
                tables, state, n_samples=2000, burn_in=1000, thin=5, seed=seed
            ).fidelity_mean
            for seed in range(5)
        ]
        noiseless_fids[label.value] = fids
        if min(fids) < 0.995:
            failures.append(f"noiseless {label.value}: min F {min(fids):.4f} < 0.995")

    elapsed = time.time() - t0
    if elapsed >= 600:
        failures.append(f"runtime {elapsed:.0f}s >= 600s")
    noisy_summary = ", ".join(
        f"{k} {min(v):.4f}" for k, v in noisy_fids.items()
    )
    clean_summary = ", ".join(
        f"{k} {min(v):.4f}" for k, v in noiseless_fids.items()
    )
    report(
        4,
        not failures,
        f"posterior fidelity (min over 5 seeds) noisy: {noisy_summary}; "
        f"noiseless@1e5: {clean_summary}; {elapsed:.0f}s"
        + ("; " + "; ".join(failures) if failures else ""),
    )


def test_criterion_5_fringe_frequencies():
    t0 = time.time()
    phases = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
    responsive = [
        (BellLabel.PHI_PLUS, "common"),
        (BellLabel.PHI_MINUS, "common"),
        (BellLabel.PSI_PLUS, "differential"),
        (BellLabel.PSI_MINUS, "differential"),
    ]
    freqs = []
    for label, mode in responsive:
        table = scan(ScanConfig(label, mode, phases))
        fit = fit_fringe(phases, table.probs[:, 0, 0])
        freqs.append(fit.angular_frequency)
    flat_variation = []
    for label, mode in [
        (BellLabel.PHI_PLUS, "differential"),
        (BellLabel.PHI_MINUS, "differential"),
        (BellLabel.PSI_PLUS, "common"),
        (BellLabel.PSI_MINUS, "common"),
    ]:
        table = scan(ScanConfig(label, mode, phases))
        flat_variation.append(float(np.ptp(table.probs, axis=0).max()))
    elapsed = time.time() - t0
    ok = (
        all(1.99 <= f <= 2.01 for f in freqs)
        and max(flat_variation) < 1e-12
        and elapsed < 5.0
    )
    report(
        5,
        ok,
        f"fitted fringe frequency {min(freqs):.6f}..{max(freqs):.6f} "
        f"(required [1.99, 2.01]); non-responsive variation "
        f"{max(flat_variation):.2e} (< 1e-12); {elapsed:.1f}s",
    )


def test_criterion_6_oracle_equivalence(grid):
    t0 = time.time()
    rng = np.random.default_rng(606)
    worst_oracle = 0.0
    worst_povm = 0.0
    for _ in range(200):
        state = random_four_term_state(rng)
        m = rng.uniform(0.0, 2.5)
        phi = rng.uniform(-math.pi, math.pi)
        delays = DelayPair(rng.uniform(-2e-11, 2e-11), rng.uniform(-2e-11, 2e-11))
        basis = MeasurementBasis.xx(EopmConfig(mod_index=m, rf_phase=phi))
        p = coincidence_probs(state, basis, grid, delays)
        ref = oracle_coincidence_probs(
            state.amplitudes, m, phi, grid, delays.tau_s, delays.tau_i
        )
        worst_oracle = max(worst_oracle, float(np.max(np.abs(p - ref))))
        povm = build_povm(basis, grid, delays)
        via_trace = povm.outcome_probabilities(state.density_matrix())
        worst_povm = max(worst_povm, float(np.max(np.abs(p - via_trace))))
    elapsed = time.time() - t0
    ok = worst_oracle < 1e-10 and worst_povm < 1e-10 and elapsed < 10.0
    report(
        6,
        ok,
        f"brute-force oracle dev {worst_oracle:.2e}, POVM-path dev "
        f"{worst_povm:.2e} (both < 1e-10) on 200 random states; {elapsed:.1f}s",
    )


def test_criterion_7_invariant_suites(grid):
    t0 = time.time()
    rng = np.random.default_rng(707)
    checks = {}

    worst = 0.0
    for _ in range(200):
        cls = "psi" if rng.integers(2) else "phi"
        state = random_two_term_state(rng, cls)
        basis = MeasurementBasis.xx(
            EopmConfig.hadamard(rf_phase=rng.uniform(-math.pi, math.pi))
        )
        delays = DelayPair(rng.uniform(-2e-11, 2e-11), rng.uniform(-2e-11, 2e-11))
        p = coincidence_probs(state, basis, grid, delays)
        worst = max(worst, abs(float(p.sum()) - 4 * ETA4))
    checks["xx-sum"] = worst < 1e-10

    zz_ok = True
    for _ in range(100):
        state = random_four_term_state(rng)
        d = DelayPair(rng.uniform(-1e-10, 1e-10), rng.uniform(-1e-10, 1e-10))
        p0 = coincidence_probs(state, MeasurementBasis.zz(), grid, DelayPair(0, 0))
        p1 = coincidence_probs(state, MeasurementBasis.zz(), grid, d)
        zz_ok = zz_ok and np.array_equal(p0, p1)
    checks["zz-delay-exact"] = zz_ok

    mask_dev = 0.0
    for _ in range(200):
        m1 = ShaperMask(rng.uniform(-3, 3, 4), rng.uniform(0, 1, 4))
        m2 = ShaperMask(rng.uniform(-3, 3, 4), rng.uniform(0, 1, 4))
        state = random_four_term_state(rng)
        seq = apply_mask(apply_mask(state, m1), m2)
        combined = apply_mask(state, m1.compose(m2))
        mask_dev = max(mask_dev, float(np.max(np.abs(seq.amplitudes - combined.amplitudes))))
    checks["mask-composition"] = mask_dev < 1e-12

    chain, _ = _pcn_chain(
        np.zeros((0, 4, 4, 4), complex),
        np.zeros((0, 4)),
        n_samples=10_000,
        burn_in=0,
        thin=1,
        step_scale=1.0,
        seed=271828,
    )
    direct = sample_bures_prior(10_000, seed=314159)
    pvalue = ks_2samp(
        np.linalg.eigvalsh(chain)[:, -1], np.linalg.eigvalsh(direct)[:, -1]
    ).pvalue
    checks["bures-prior-ks"] = pvalue > 0.01

    state = canonical_bell(BellLabel.PHI_PLUS)
    tables = _noiseless_tables(state, 20_000)
    s1 = sample_posterior(tables, state, n_samples=300, burn_in=300, thin=2, seed=55)
    s2 = sample_posterior(tables, state, n_samples=300, burn_in=300, thin=2, seed=55)
    noise = NoiseConfig(1e5, 1.0, 1e-8, 0.5)
    c1 = simulate_counts(np.full((2, 2), 0.25), noise, MeasurementBasis.zz(), 2.0, 77)
    c2 = simulate_counts(np.full((2, 2), 0.25), noise, MeasurementBasis.zz(), 2.0, 77)
    checks["determinism"] = (
        np.array_equal(s1.mean_rho.matrix, s2.mean_rho.matrix)
        and s1.fidelity_mean == s2.fidelity_mean
        and s1.fidelity_ci == s2.fidelity_ci
        and np.array_equal(c1.counts, c2.counts)
        and np.array_equal(c1.accidentals, c2.accidentals)
    )

    elapsed = time.time() - t0
    checks["runtime"] = elapsed < 120.0
    ok = all(checks.values())
    detail = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items())
    report(7, ok, f"{detail} (KS p={pvalue:.3f}); {elapsed:.1f}s")
