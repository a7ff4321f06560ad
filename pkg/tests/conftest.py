import sys
from pathlib import Path

import numpy as np
import pytest

from fbbell import FrequencyGrid

sys.path.insert(0, str(Path(__file__).parent))  # make oracles importable


@pytest.fixture
def grid():
    """The demonstration grid: 384.15 THz pump, 25 GHz bins at 152.5 GHz offset."""
    return FrequencyGrid.from_hz(384.15e12, 152.5e9, 25e9)


@pytest.fixture
def rng():
    return np.random.default_rng(20220505)


def random_two_term_state(rng, correlation_class):
    """Normalized two-term Bell-class state with random complex amplitudes."""
    from fbbell import TwoQubitState

    a, b = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    norm = np.sqrt(abs(a) ** 2 + abs(b) ** 2)
    a, b = a / norm, b / norm
    if correlation_class == "psi":
        return TwoQubitState.from_components(0, a, b, 0)
    return TwoQubitState.from_components(a, 0, 0, b)


def random_four_term_state(rng):
    from fbbell import TwoQubitState

    c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    c /= np.linalg.norm(c)
    return TwoQubitState(c)
