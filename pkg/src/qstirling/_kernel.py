"""Compiled inner loop for barrier strokes.

A stroke is a long strictly-sequential chain (up to ~1e6 quench steps, each
followed by r elementary thermalizations), so the hot loop is JIT-compiled.
The thermalization block evaluates the r-fold Euler composition in closed
form: r-th matrix power of the one-step population matrix, scalar r-th powers
of the per-step coherence factors.  Agreement with the plain-Python
composition of the module primitives is asserted in the test suite.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _cpow(base, r):
    """base**r for complex base and nonnegative integer r, by squaring."""
    result = 1.0 + 0.0j
    b = base
    e = r
    while e > 0:
        if e & 1:
            result *= b
        b *= b
        e >>= 1
    return result


@njit(cache=True, nogil=True)
def run_stroke(rho, energies, blocks, up, down, r, delta_tau, hbar, drop_coherences,
               freeze_quench):
    """Run one barrier stroke in place on ``rho``.

    rho       : (n, n) complex128, state in the basis of energies[0]
    energies  : (N+1, n) level energies along the stroke direction
    blocks    : (N, s, s) antinode-sector overlap blocks, step i: basis i -> i+1
    up, down  : (N+1, n-1) transition rates at each spectrum under the bath
    With freeze_quench the state coefficients are carried over unchanged at
    each quench (blocks unused); otherwise rho is re-expressed through the
    overlap blocks.  Returns (work_on_system, heat_absorbed, ok); ok is False
    on a positivity breach, in which case the caller must abort.
    """
    N = blocks.shape[0]
    n = energies.shape[1]
    s = blocks.shape[1]

    tmp_l = np.empty((s, n), dtype=np.complex128)
    tmp_r = np.empty((n, s), dtype=np.complex128)
    A = np.empty((n, n))
    P = np.empty((n, n))
    B = np.empty((n, n))
    scratch = np.empty((n, n))
    p_old = np.empty(n)
    p_new = np.empty(n)
    damp = np.empty(n)

    W = 0.0
    Q = 0.0
    U = 0.0
    for i in range(n):
        U += energies[0, i] * rho[i, i].real

    for step in range(N):
        # --- sudden quench: rho <- S rho S^T, S identity off the antinode sector
        if not freeze_quench:
            for col in range(n):
                for i in range(s):
                    acc = 0.0 + 0.0j
                    for j in range(s):
                        acc += blocks[step, i, j] * rho[2 * j, col]
                    tmp_l[i, col] = acc
            for i in range(s):
                for col in range(n):
                    rho[2 * i, col] = tmp_l[i, col]
            for row in range(n):
                for i in range(s):
                    acc = 0.0 + 0.0j
                    for j in range(s):
                        acc += rho[row, 2 * j] * blocks[step, i, j]
                    tmp_r[row, i] = acc
            for i in range(s):
                for row in range(n):
                    rho[row, 2 * i] = tmp_r[row, i]

        U_new = 0.0
        for i in range(n):
            U_new += energies[step + 1, i] * rho[i, i].real
        W += U_new - U
        U = U_new

        # --- thermalize r elementary steps at spectrum step+1
        for i in range(n):
            for j in range(n):
                A[i, j] = 0.0
            A[i, i] = 1.0
        for t in range(n - 1):
            d = delta_tau * down[step + 1, t]
            u = delta_tau * up[step + 1, t]
            A[t, t + 1] += d
            A[t + 1, t + 1] -= d
            A[t + 1, t] += u
            A[t, t] -= u

        # P = A^r by binary exponentiation
        for i in range(n):
            for j in range(n):
                P[i, j] = 1.0 if i == j else 0.0
                B[i, j] = A[i, j]
        e = r
        while e > 0:
            if e & 1:
                for i in range(n):
                    for j in range(n):
                        acc_r = 0.0
                        for kk in range(n):
                            acc_r += P[i, kk] * B[kk, j]
                        scratch[i, j] = acc_r
                for i in range(n):
                    for j in range(n):
                        P[i, j] = scratch[i, j]
            e >>= 1
            if e > 0:
                for i in range(n):
                    for j in range(n):
                        acc_r = 0.0
                        for kk in range(n):
                            acc_r += B[i, kk] * B[kk, j]
                        scratch[i, j] = acc_r
                for i in range(n):
                    for j in range(n):
                        B[i, j] = scratch[i, j]

        for i in range(n):
            p_old[i] = rho[i, i].real
        for i in range(n):
            acc_r = 0.0
            for j in range(n):
                acc_r += P[i, j] * p_old[j]
            p_new[i] = acc_r
        for i in range(n):
            if p_new[i] < -1e-10:
                return W, Q, False

        dQ = 0.0
        for i in range(n):
            dQ += energies[step + 1, i] * (p_new[i] - p_old[i])
        Q += dQ
        U += dQ

        for j in range(n):
            acc_r = 0.0
            if j > 0:
                acc_r += down[step + 1, j - 1]
            if j < n - 1:
                acc_r += up[step + 1, j]
            damp[j] = acc_r

        for mi in range(n):
            for ni in range(mi + 1, n):
                if drop_coherences:
                    rho[mi, ni] = 0.0
                    rho[ni, mi] = 0.0
                else:
                    omega = (energies[step + 1, mi] - energies[step + 1, ni]) / hbar
                    base = (np.exp(-1j * omega * delta_tau)
                            * (1.0 - 0.5 * delta_tau * (damp[mi] + damp[ni])))
                    c = _cpow(base, r)
                    rho[mi, ni] *= c
                    rho[ni, mi] *= np.conj(c)
        for i in range(n):
            rho[i, i] = p_new[i]

    return W, Q, True
