"""Simulated annealing and path-integral simulated quantum annealing samplers."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..qubo import QuboProblem, energy
from ._kernels import pimc_sweeps
from .metrics import residual_energy, tts
from .schedule import AnnealSchedule

_JPERP_FROZEN = 1e9


@dataclass(frozen=True)
class SolverParams:
    """Sampler settings.

    ``replicas`` is the Trotter slice count for SQA; SA uses one chain per
    read.  ``beta`` is the SQA inverse temperature and ``gamma0`` the
    transverse field at s = 0, both in QUBO energy units.  ``sa_beta_range`` overrides the automatic SA range.
    """

    replicas: int = 16
    sweeps: int = 1000
    beta: float = 50.0
    gamma0: float = 3.0
    reads: int = 10
    seed: int = 0
    include_initial: bool = False
    sa_beta_range: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if min(self.replicas, self.sweeps, self.reads) < 1:
            raise ValueError("replicas, sweeps and reads must be >= 1")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if self.gamma0 < 0:
            raise ValueError("gamma0 must be non-negative")


@dataclass
class SolveReport:
    samples: list  # (bits tuple, energy)
    best_energy: float
    best_bits: tuple
    e_opt: Optional[float] = None
    p_opt: Optional[float] = None
    t_c: Optional[float] = None
    tts: Optional[float] = None
    e_res: Optional[float] = None
    initial_state_included: bool = False

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "samples": [{"bits": list(b), "energy": e} for b, e in self.samples],
            "best_energy": self.best_energy,
            "best_bits": list(self.best_bits),
            "e_opt": self.e_opt,
            "p_opt": self.p_opt,
            "t_c": self.t_c if timing else None,
            "tts": self.tts if timing else None,
            "e_res": self.e_res,
            "initial_state_included": self.initial_state_included,
        }


def qubo_to_ising(problem: QuboProblem) -> tuple[np.ndarray, np.ndarray, float]:
    """Map x = (1 + s) / 2: returns symmetric J (zero diagonal), h and constant."""
    n = problem.n_vars
    h = problem.linear / 2.0
    J = np.zeros((n, n))
    const = problem.offset + problem.linear.sum() / 2.0
    for (i, j), q in problem.quadratic.items():
        J[i, j] += q / 4.0
        J[j, i] += q / 4.0
        h[i] += q / 4.0
        h[j] += q / 4.0
        const += q / 4.0
    return J, h, const


def _seeds(seed: int, n: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1, dtype=np.uint32)[0]) for s in ss.spawn(n)]


def _to_bits(spins: np.ndarray) -> np.ndarray:
    return ((spins + 1) // 2).astype(np.int8)


def _slice_energies(upper: np.ndarray, linear: np.ndarray, bits: np.ndarray) -> np.ndarray:
    x = bits.astype(float)
    return x @ linear + np.einsum("pi,ij,pj->p", x, upper, x)


def _finish(problem: QuboProblem, samples: list, elapsed: float, reads: int,
            e_opt: Optional[float], initial: Optional[np.ndarray], include: bool) -> SolveReport:
    annealed = list(samples)
    if include and initial is not None:
        bits = tuple(int(v) for v in initial)
        samples = annealed + [(bits, energy(problem, bits))]
    best_bits, best = min(samples, key=lambda s: s[1])
    t_c = elapsed / reads
    report = SolveReport(samples, best, best_bits, e_opt=e_opt, t_c=t_c,
                         initial_state_included=bool(include and initial is not None))
    if e_opt is not None:
        tol = 1e-9 * max(1.0, abs(e_opt))
        hits = sum(1 for _, e in annealed if e <= e_opt + tol)
        report.p_opt = hits / len(annealed)
        if 0.0 < report.p_opt < 1.0:
            report.tts = tts(0.99, report.p_opt, t_c)
        if e_opt != 0:
            report.e_res = residual_energy(best, e_opt)
    return report


def _resolution(coefs: np.ndarray) -> float:
    """Smallest energy scale the coefficients distinguish: the least magnitude or
    the least gap between distinct magnitudes."""
    mags = np.unique(np.abs(coefs[coefs != 0]))
    if mags.size == 0:
        return 0.0
    gaps = np.diff(mags)
    floor = 1e-6 * mags[-1]
    cands = np.concatenate([mags[:1], gaps[gaps > floor]])
    return float(max(cands.min(), floor))


def _default_beta_range(problem: QuboProblem) -> tuple[float, float]:
    """Hot end accepts the largest single-flip uphill move half the time; cold end
    accepts an uphill move of the coefficient resolution 1% of the time."""
    n = problem.n_vars
    span = np.abs(problem.linear).copy()
    for (i, j), q in problem.quadratic.items():
        span[i] += abs(q)
        span[j] += abs(q)
    coefs = np.concatenate([problem.linear, np.fromiter(problem.quadratic.values(), float)])
    res = _resolution(coefs)
    if n == 0 or res == 0.0:
        return 1.0, 1.0
    hot = math.log(2) / max(span.max(), 1e-12)
    cold = math.log(100) / res
    return hot, max(cold, hot)


def solve_sa(problem: QuboProblem, params: SolverParams = SolverParams(),
             e_opt: Optional[float] = None) -> SolveReport:
    """Metropolis single-flip annealing with a geometric temperature ramp.

    Each read is an independent restart from a uniformly random state.
    """
    n = problem.n_vars
    J, h, _ = qubo_to_ising(problem)
    lo, hi = params.sa_beta_range or _default_beta_range(problem)
    betas = np.geomspace(lo, hi, params.sweeps) if lo > 0 else np.linspace(lo, hi, params.sweeps)
    jperp = np.zeros(params.sweeps)
    samples = []
    t0 = time.perf_counter()
    for seed in _seeds(params.seed, params.reads):
        rng = np.random.default_rng(seed)
        spins = rng.choice(np.array([-1.0, 1.0]), size=(1, n))
        pimc_sweeps(J, h, spins, betas, jperp, seed)
        bits = tuple(int(v) for v in _to_bits(spins[0]))
        samples.append((bits, energy(problem, bits)))
    return _finish(problem, samples, time.perf_counter() - t0, params.reads, e_opt, None, False)


def transverse_coupling(beta: float, gamma: float, replicas: int) -> float:
    """Inter-slice coupling -1/2 ln tanh(beta * gamma / P); frozen as gamma -> 0."""
    arg = beta * gamma / replicas
    if arg <= 0.0:
        return _JPERP_FROZEN
    return min(-0.5 * math.log(math.tanh(arg)), _JPERP_FROZEN)


def solve_sqa(problem: QuboProblem, schedule: AnnealSchedule | None = None,
              params: SolverParams = SolverParams(),
              initial: Optional[Sequence[int]] = None,
              e_opt: Optional[float] = None) -> SolveReport:
    """Path-integral Monte Carlo with transverse field gamma0 * (1 - s).

    Forward runs start each slice from a random state.  Reverse runs start all
    slices from ``initial``.  Every read returns its lowest-energy slice.
    """
    if schedule is None:
        schedule = AnnealSchedule.forward(params.sweeps)
    if schedule.kind == "reverse" and initial is None:
        raise ValueError("reverse annealing requires an initial state")
    n, P = problem.n_vars, params.replicas
    init = None
    if initial is not None:
        init = np.asarray(initial, dtype=np.int8)
        if init.shape != (n,):
            raise ValueError(f"initial state must have {n} bits")
    J, h, _ = qubo_to_ising(problem)
    upper = problem.upper_matrix() - np.diag(problem.linear)
    s = schedule.s_values()
    gammas = params.gamma0 * (1.0 - s)
    jperp = np.array([transverse_coupling(params.beta, g, P) for g in gammas])
    beta_slice = np.full(len(s), params.beta / P)

    samples = []
    t0 = time.perf_counter()
    for seed in _seeds(params.seed, params.reads):
        if schedule.kind == "reverse":
            spins = np.tile(2.0 * init - 1.0, (P, 1))
        else:
            rng = np.random.default_rng(seed)
            spins = rng.choice(np.array([-1.0, 1.0]), size=(P, n))
        pimc_sweeps(J, h, spins, beta_slice, jperp, seed)
        slices = _to_bits(spins)
        p = int(np.argmin(_slice_energies(upper, problem.linear, slices)))
        bits = tuple(int(v) for v in slices[p])
        best = (bits, energy(problem, bits))
        samples.append(best)
    return _finish(problem, samples, time.perf_counter() - t0, params.reads, e_opt, init,
                   params.include_initial)
