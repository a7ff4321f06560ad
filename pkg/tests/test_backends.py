import subprocess
import sys

import numpy as np
import pytest

from fbbell import _backend, _kernels_py
from fbbell import BellLabel, MeasurementBasis, canonical_bell, coincidence_probs
from fbbell.tomography import _stack_tables
from fbbell.measurement import CountTable

BACKENDS = _backend.available_backends()


def _example_tables():
    state = canonical_bell(BellLabel.PHI_PLUS)
    tables = []
    for basis in (MeasurementBasis.zz(), MeasurementBasis.xx()):
        p = coincidence_probs(state, basis)
        n = np.round(20000 * p / p.sum()).astype(np.int64)
        tables.append(CountTable(basis, n, np.zeros((2, 2), np.int64), 1.0))
    return _stack_tables(tables)


@pytest.mark.skipif("cython" not in BACKENDS, reason="compiled kernels not built")
class TestBackendParity:
    def test_bures_rho_agreement(self, rng):
        cy = BACKENDS["cython"]
        for _ in range(500):
            theta = rng.standard_normal(64) * rng.uniform(0.1, 5)
            a = _kernels_py.bures_rho(theta)
            b = cy.bures_rho(theta)
            assert np.max(np.abs(a - b)) < 1e-12

    def test_loglik_agreement(self, rng):
        cy = BACKENDS["cython"]
        elements, counts = _example_tables()
        for _ in range(200):
            rho = _kernels_py.bures_rho(rng.standard_normal(64))
            a = _kernels_py.loglik_tables(rho, elements, counts)
            b = cy.loglik_tables(rho, elements, counts)
            assert a == pytest.approx(b, rel=1e-12)

    def test_loglik_neg_inf_agreement(self):
        elements, counts = _example_tables()
        rho = canonical_bell(BellLabel.PSI_PLUS).density_matrix().matrix
        a = _kernels_py.loglik_tables(rho, elements, counts)
        b = BACKENDS["cython"].loglik_tables(rho, elements, counts)
        assert a == b == -np.inf

    def test_empty_tables_zero(self):
        elements = np.zeros((0, 4, 4, 4), complex)
        counts = np.zeros((0, 4))
        rho = np.eye(4, dtype=complex) / 4
        for impl in BACKENDS.values():
            assert impl.loglik_tables(rho, elements, counts) == 0.0

    def test_degenerate_theta_maps_to_maximally_mixed(self):
        theta = np.zeros(64)
        for impl in BACKENDS.values():
            assert np.allclose(impl.bures_rho(theta), np.eye(4) / 4, atol=1e-15)


def test_env_var_forces_python_backend():
    code = (
        "import os; os.environ['FBBELL_KERNELS']='python'; "
        "import fbbell; print(fbbell.kernel_backend())"
    )
    out = subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"


def test_reported_backend_is_available():
    assert _backend.backend_name() in BACKENDS
