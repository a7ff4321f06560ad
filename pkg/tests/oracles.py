"""Independent reference computations for cross-checking the package.

These deliberately avoid the production code paths: the coincidence oracle
expands the mixed, delayed annihilation operators symbolically over creation
operator pairs as term lists, and the Bessel oracle evaluates the defining
power series directly.
"""

import math

import numpy as np

from fbbell.core import bin_frequency


def bessel_j_series(p: int, x: float, terms: int = 40) -> float:
    """J_p(x) for integer p from the ascending power series."""
    n = abs(p)
    total = 0.0
    for j in range(terms):
        total += (-1.0) ** j * (x / 2.0) ** (2 * j + n) / (
            math.factorial(j) * math.factorial(j + n)
        )
    if p < 0 and n % 2 == 1:
        total = -total
    return total


def oracle_coincidence_probs(state_amps, mod_index, rf_phase, grid, tau_s, tau_i):
    """Coincidence probabilities by explicit operator-term expansion.

    The state is a dict of creation-operator pairs.  Each mixed annihilation
    operator c_{I,k}, c_{S,l} is expanded into (coefficient, bin) terms
    including the delay phases; the vacuum expectation picks out matching
    bins term by term.
    """
    amps = np.asarray(state_amps, dtype=complex).reshape(2, 2)
    state_terms = {
        (m, n): amps[m, n] for m in (0, 1) for n in (0, 1) if amps[m, n] != 0
    }

    def mixed_operator(photon, out_bin, tau):
        terms = []
        for p in (-1, 0, 1):
            j = out_bin - p
            weight = bessel_j_series(p, mod_index) * np.exp(-1j * p * rf_phase)
            delay_phase = np.exp(1j * tau * bin_frequency(grid, photon, j))
            terms.append((weight * delay_phase, j))
        return terms

    probs = np.zeros((2, 2))
    for k in (0, 1):
        idler_terms = mixed_operator("idler", k, tau_i)
        for l in (0, 1):
            signal_terms = mixed_operator("signal", l, tau_s)
            amplitude = 0.0 + 0.0j
            for ci, bin_i in idler_terms:
                for cs, bin_s in signal_terms:
                    # <vac| a_{I,bi} a_{S,bs} adag_{I,m} adag_{S,n} |vac>
                    amplitude += ci * cs * state_terms.get((bin_i, bin_s), 0.0)
            probs[k, l] = abs(amplitude) ** 2
    return probs
