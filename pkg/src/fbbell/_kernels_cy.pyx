# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled tomography hot kernels.

Semantics match fbbell._kernels_py; the MCMC chain calls these tens of
thousands of times per reconstruction, which is what makes them worth
compiling.  Keep both implementations numerically interchangeable.
"""

import numpy as np

from libc.math cimport fabs, log, sqrt, INFINITY

BACKEND_NAME = "cython"


def bures_rho(theta):
    """Density matrix induced by 64 real parameters under the Bures map."""
    cdef const double[::1] t = np.ascontiguousarray(theta, dtype=np.float64)
    if t.shape[0] != 64:
        raise ValueError("theta must hold 64 parameters")
    out = np.empty((4, 4), dtype=np.complex128)
    cdef double complex[:, ::1] rho = out
    cdef double complex cj = 1j
    cdef double complex g[4][4]
    cdef double complex z[4][4]
    cdef double complex q[4][4]
    cdef double complex w[4][4]
    cdef double complex iu[4][4]
    cdef double complex acc
    cdef double nrm, tr, scale
    cdef int i, j, k

    for i in range(4):
        for j in range(4):
            g[i][j] = t[4 * i + j] + cj * t[16 + 4 * i + j]
            z[i][j] = t[32 + 4 * i + j] + cj * t[48 + 4 * i + j]

    # rho is invariant under rescaling of either block; normalizing the
    # scales keeps extreme-but-finite parameters out of overflow territory
    scale = 0.0
    for i in range(4):
        for j in range(4):
            nrm = fabs(g[i][j].real) + fabs(g[i][j].imag)
            if nrm > scale:
                scale = nrm
    if scale > 0.0:
        for i in range(4):
            for j in range(4):
                g[i][j] = g[i][j] / scale
    scale = 0.0
    for i in range(4):
        for j in range(4):
            nrm = fabs(z[i][j].real) + fabs(z[i][j].imag)
            if nrm > scale:
                scale = nrm
    if scale > 0.0:
        for i in range(4):
            for j in range(4):
                z[i][j] = z[i][j] / scale

    # Modified Gram-Schmidt on the columns of z.  MGS yields the QR factor
    # with positive-real diagonal R directly, which is the phase convention
    # that makes Q Haar-distributed for Ginibre input.
    for j in range(4):
        for i in range(4):
            q[i][j] = z[i][j]
        for k in range(j):
            acc = 0
            for i in range(4):
                acc += q[i][k].conjugate() * q[i][j]
            for i in range(4):
                q[i][j] = q[i][j] - acc * q[i][k]
        nrm = 0.0
        for i in range(4):
            nrm += q[i][j].real * q[i][j].real + q[i][j].imag * q[i][j].imag
        nrm = sqrt(nrm)
        if nrm < 1e-150:
            # Degenerate column (probability zero for continuous draws):
            # substitute a basis vector and re-orthogonalize deterministically.
            for i in range(4):
                q[i][j] = 1.0 if i == j else 0.0
            for k in range(j):
                acc = 0
                for i in range(4):
                    acc += q[i][k].conjugate() * q[i][j]
                for i in range(4):
                    q[i][j] = q[i][j] - acc * q[i][k]
            nrm = 0.0
            for i in range(4):
                nrm += q[i][j].real * q[i][j].real + q[i][j].imag * q[i][j].imag
            nrm = sqrt(nrm)
        for i in range(4):
            q[i][j] = q[i][j] / nrm

    for i in range(4):
        for j in range(4):
            iu[i][j] = q[i][j] + (1.0 if i == j else 0.0)
    for i in range(4):
        for j in range(4):
            acc = 0
            for k in range(4):
                acc += iu[i][k] * g[k][j]
            w[i][j] = acc

    tr = 0.0
    for i in range(4):
        for j in range(4):
            acc = 0
            for k in range(4):
                acc += w[i][k] * w[j][k].conjugate()
            rho[i, j] = acc
        tr += rho[i, i].real
    if not tr > 1e-280:
        # degenerate parameter point (zero G, or G annihilated by I+U)
        for i in range(4):
            for j in range(4):
                rho[i, j] = 0.25 if i == j else 0.0
        return out
    for i in range(4):
        for j in range(4):
            rho[i, j] = rho[i, j] / tr
    return out


def loglik_tables(rho, elements, counts):
    """Conditional-multinomial log-likelihood over stacked count tables."""
    cdef const double complex[:, ::1] r = np.ascontiguousarray(rho, dtype=np.complex128)
    cdef const double complex[:, :, :, ::1] e = np.ascontiguousarray(
        elements, dtype=np.complex128
    )
    cdef const double[:, ::1] n = np.ascontiguousarray(counts, dtype=np.float64)
    cdef Py_ssize_t n_tables = e.shape[0]
    cdef Py_ssize_t t, o, i, j
    cdef double p[4]
    cdef double norm, total, n_total
    cdef double complex acc

    total = 0.0
    for t in range(n_tables):
        norm = 0.0
        n_total = 0.0
        for o in range(4):
            acc = 0
            for i in range(4):
                for j in range(4):
                    acc += e[t, o, i, j] * r[j, i]
            p[o] = acc.real
            norm += p[o]
            n_total += n[t, o]
        if norm <= 0.0:
            if n_total > 0.0:
                return -INFINITY
            continue
        for o in range(4):
            if n[t, o] > 0.0:
                if p[o] <= 0.0:
                    return -INFINITY
                total += n[t, o] * log(p[o])
        total -= n_total * log(norm)
    return total
