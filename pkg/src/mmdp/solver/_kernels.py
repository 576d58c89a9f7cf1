"""Numba kernels for single-spin-flip Metropolis over Trotter slices."""

import numpy as np
from numba import njit


@njit(cache=True)
def pimc_sweeps(J, h, spins, beta_slice, jperp, seed):
    """Run Metropolis sweeps in place over ``spins`` (P x n, values +-1).

    ``J`` is the symmetric, zero-diagonal Ising coupling matrix so that the
    per-slice energy is ``h.s + 0.5 s.J.s``.  Each sweep k applies the slice
    inverse temperature ``beta_slice[k]`` and the inter-slice ferromagnetic
    coupling ``jperp[k]`` (ignored when P == 1).
    """
    np.random.seed(seed)
    P, n = spins.shape
    fields = np.empty((P, n))
    for p in range(P):
        for i in range(n):
            f = h[i]
            for j in range(n):
                f += J[i, j] * spins[p, j]
            fields[p, i] = f
    for k in range(beta_slice.shape[0]):
        b = beta_slice[k]
        jp = jperp[k]
        for p in range(P):
            up = (p + 1) % P
            dn = (p - 1) % P
            for i in range(n):
                s = spins[p, i]
                d_action = -2.0 * s * fields[p, i] * b
                if P > 1:
                    d_action += 2.0 * jp * s * (spins[up, i] + spins[dn, i])
                if d_action <= 0.0 or np.random.random() < np.exp(-d_action):
                    spins[p, i] = -s
                    delta = -2.0 * s
                    for j in range(n):
                        fields[p, j] += J[j, i] * delta
    return spins
