"""NumPy implementation of the tomography hot kernels.

Used when the compiled extension is unavailable (or forced via
FBBELL_KERNELS=python).  Must stay numerically interchangeable with
_kernels_cy to ~1e-12; the test suite checks parity.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_EYE4 = np.eye(4, dtype=complex)


def bures_rho(theta: np.ndarray) -> np.ndarray:
    """Density matrix induced by 64 real parameters under the Bures map.

    theta[:32] holds a Ginibre matrix G (16 real + 16 imaginary parts),
    theta[32:] a second Ginibre matrix whose phase-fixed QR factor is a Haar
    unitary U; rho = (I+U) G G^dag (I+U)^dag, trace-normalized.  Standard
    normal theta makes rho Bures-distributed.
    """
    theta = np.asarray(theta, dtype=float)
    g = (theta[0:16] + 1j * theta[16:32]).reshape(4, 4)
    z = (theta[32:48] + 1j * theta[48:64]).reshape(4, 4)
    # rho is invariant under rescaling of either block; normalizing the
    # scales keeps extreme-but-finite parameters out of overflow territory
    g_scale = np.max(np.abs(g))
    z_scale = np.max(np.abs(z))
    if g_scale > 0:
        g = g / g_scale
    if z_scale > 0:
        z = z / z_scale
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    u = q * phase[None, :]
    w = (_EYE4 + u) @ g
    s = w @ w.conj().T
    trace = np.trace(s).real
    if not trace > 1e-280:
        # degenerate parameter point (zero G, or G annihilated by I+U)
        return np.eye(4, dtype=complex) / 4.0
    return s / trace


def loglik_tables(rho: np.ndarray, elements: np.ndarray, counts: np.ndarray) -> float:
    """Conditional-multinomial log-likelihood over stacked count tables.

    elements: (T, 4, 4, 4) POVM elements for the four detected outcomes of
    each table; counts: (T, 4).  Per table the outcome probabilities are
    renormalized over the detected outcomes; additive constants are dropped.
    Returns -inf when an observed outcome has zero probability.
    """
    n_tables = elements.shape[0]
    p = np.einsum("toij,ji->to", elements, rho).real
    total = 0.0
    for t in range(n_tables):
        pt = p[t]
        nt = counts[t]
        norm = pt.sum()
        if norm <= 0.0:
            if nt.sum() > 0:
                return -np.inf
            continue
        for o in range(4):
            if nt[o] > 0:
                if pt[o] <= 0.0:
                    return -np.inf
                total += nt[o] * np.log(pt[o])
        total -= nt.sum() * np.log(norm)
    return float(total)
