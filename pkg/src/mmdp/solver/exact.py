"""Exhaustive ground-state search for small QUBOs."""

from __future__ import annotations

import numpy as np

from ..qubo import QuboProblem, energy

MAX_VARS = 24
_CHUNK_BITS = 16


def brute_force(problem: QuboProblem) -> tuple[np.ndarray, float]:
    """Minimum-energy bitstring by full enumeration.

    States are visited as integers with variable 0 as the least significant
    bit; among (near-)equal minima the smallest integer wins.
    """
    n = problem.n_vars
    if n > MAX_VARS:
        raise ValueError(f"{n} variables exceed the brute-force limit of {MAX_VARS}")
    if n == 0:
        return np.zeros(0, dtype=np.int8), float(problem.offset)
    U = problem.upper_matrix()
    scale = max(1.0, float(np.abs(U).sum()) + abs(problem.offset))
    tol = 1e-12 * scale
    shifts = np.arange(n, dtype=np.int64)
    chunk = 1 << min(n, _CHUNK_BITS)
    best_e, best_idx = np.inf, -1
    for start in range(0, 1 << n, chunk):
        idx = np.arange(start, start + chunk, dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(float)
        e = np.einsum("ij,ij->i", bits @ U, bits)
        k = int(np.argmin(e))
        if e[k] < best_e - tol:
            best_e, best_idx = float(e[k]), start + k
    out = ((best_idx >> shifts) & 1).astype(np.int8)
    return out, energy(problem, out)
