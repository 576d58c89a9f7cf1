"""Experiment campaigns behind the CLI: policy comparison, B1 sweep, s_min sweep.

Each campaign returns :class:`ResultRow` lists in a fixed order, so output
files depend only on the config and seed, never on worker scheduling.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .config import build_demand, build_grid, build_policy, build_sim_config
from .demand import CustomerRequest
from .qubo import build_proposed, energy
from .sim import Simulation, aggregate
from .solver import AnnealSchedule, SolverParams, brute_force, greedy_initial_state, solve_sqa
from .state import VehicleState, WorldState
from .targets import OperationalStats, compute_targets
from .world import Position

log = logging.getLogger(__name__)

CSV_COLUMNS = ("experiment", "policy", "param", "metric", "mean", "std", "n")
BRUTE_FORCE_LIMIT = 24


@dataclass
class ResultRow:
    experiment: str
    policy: str
    param: float | None
    metric: str
    mean: float
    std: float
    n: int
    values: list = field(default_factory=list)

    def csv_fields(self) -> list[str]:
        return [self.experiment, self.policy, _fmt(self.param), self.metric,
                _fmt(self.mean), _fmt(self.std), str(self.n)]

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "policy": self.policy, "param": self.param,
                "metric": self.metric, "mean": _json_num(self.mean), "std": _json_num(self.std),
                "n": self.n, "values": [_json_num(v) for v in self.values]}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else format(x, ".12g")
    return str(x)


def _json_num(x):
    return None if isinstance(x, float) and math.isnan(x) else x


def trial_seed(seed: int, trial: int) -> int:
    """Per-trial seed shared by all policies, so they face the same arrivals."""
    return int(np.random.SeedSequence([seed, trial]).generate_state(1)[0])


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("MMDP_THREADS", "1")))
    except ValueError:
        return 1


def _run_job(job):
    cfg, kind, weight_changes, seed = job
    sim = Simulation(build_sim_config(cfg), build_policy(cfg, kind, **weight_changes), seed)
    return sim.run()


def _map(fn, jobs: list) -> list:
    n = worker_count()
    if n == 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(n, len(jobs))) as pool:
        return list(pool.map(fn, jobs))


def _policy_rows(experiment: str, kind: str, param, reports) -> list[ResultRow]:
    return [ResultRow(experiment, kind, param, a.metric, a.mean, a.std, a.n, a.values)
            for a in aggregate(reports).values()]


def run_policies(cfg: dict, policies=None, trials: int | None = None, experiment: str = "run",
                 param=None, weight_changes: dict | None = None) -> list[ResultRow]:
    """Trials x policies with common random numbers across policies."""
    policies = list(policies or cfg["policies"])
    trials = int(trials or cfg["trials"])
    weight_changes = weight_changes or {}
    jobs = [(cfg, kind, weight_changes, trial_seed(cfg["seed"], t))
            for kind in policies for t in range(trials)]
    reports = _map(_run_job, jobs)
    rows = []
    for p, kind in enumerate(policies):
        rows += _policy_rows(experiment, kind, param, reports[p * trials:(p + 1) * trials])
    return rows


def sweep_b1(cfg: dict, values=None, policies=None, trials: int | None = None) -> list[ResultRow]:
    values = [float(b) for b in (values if values is not None else cfg["sweep_b1"]["values"])]
    policies = policies or cfg["sweep_b1"]["policies"]
    rows = []
    for b in values:
        rows += run_policies(cfg, policies, trials, "sweep_b1", b, {"B1": b})
    return rows


# -- s_min sweep ------------------------------------------------------------

@dataclass(frozen=True)
class DeskInstance:
    state: WorldState
    problem: object
    initial: np.ndarray
    e_opt: float
    e_initial: float


def random_state(cfg: dict, rng: np.random.Generator, n_vehicles: int, n_customers: int) -> WorldState:
    """Vehicles at random intersections, about half carrying a passenger towards a
    destination drawn from the demand model; customers drawn from the same model."""
    grid = build_grid(cfg)
    demand = build_demand(cfg, grid)
    stations = tuple(grid.validate(Position(*map(float, s))) for s in cfg["stations"])
    vehicles = []
    for i in range(n_vehicles):
        pos = grid.cell_point(int(rng.integers(grid.n_cells)))
        dest = pos
        passenger = None
        if rng.random() < 0.5:
            cell = int(rng.choice(grid.n_cells, p=demand.dest_pmf))
            if grid.cell_point(cell) != pos:
                dest, passenger = grid.cell_point(cell), 10_000 + i
        vehicles.append(VehicleState(i, pos, dest, passenger))
    customers = []
    for k in range(n_customers):
        o = int(rng.choice(grid.n_cells, p=demand.origin_pmf))
        d = o
        while d == o:
            d = int(rng.choice(grid.n_cells, p=demand.dest_pmf))
        customers.append(CustomerRequest(k, grid.cell_point(o), grid.cell_point(d), float(-k)))
    return WorldState(0.0, tuple(vehicles), stations, tuple(customers))


def desk_instances(cfg: dict) -> list[DeskInstance]:
    """Random static-target instances small enough to brute-force."""
    sm = cfg["sweep_smin"]
    rng = np.random.default_rng(np.random.SeedSequence([cfg["seed"], 0x5E]))
    grid = build_grid(cfg)
    demand = build_demand(cfg, grid)
    stats = OperationalStats.cold_start(grid)
    n_veh = int(sm["n_vehicles"])
    out = []
    while len(out) < int(sm["instances"]):
        n_c = int(rng.integers(1, int(sm["max_customers"]) + 1))
        n_vars = n_veh * (len(cfg["stations"]) + n_c)
        while n_vars > BRUTE_FORCE_LIMIT and n_c > 0:
            log.warning("instance with %d variables exceeds brute force; dropping a customer", n_vars)
            n_c -= 1
            n_vars = n_veh * (len(cfg["stations"]) + n_c)
        if n_vars > BRUTE_FORCE_LIMIT:
            raise ValueError("sweep_smin instances exceed the brute-force limit; reduce n_vehicles")
        state = random_state(cfg, rng, n_veh, n_c)
        targets = compute_targets("static", state, demand, stats, grid)
        problem = build_proposed(state, targets, build_policy(cfg, "proposed_static").weights, grid)
        _, e_opt = brute_force(problem)
        if e_opt <= 0:
            continue  # residual energy undefined
        initial = greedy_initial_state(state, targets, problem, grid)
        out.append(DeskInstance(state, problem, initial, e_opt, energy(problem, initial)))
    return out


def _e_res(e: float, e_opt: float) -> float:
    return (e - e_opt) / e_opt + 0.0  # no negative zero in output


def _smin_params(cfg: dict, seed: int) -> SolverParams:
    sm = cfg["sweep_smin"]
    return SolverParams(replicas=int(sm["replicas"]), sweeps=int(sm["sweeps"]),
                        beta=float(sm["beta"]), gamma0=float(sm["gamma0"]),
                        reads=int(sm["reads"]), seed=seed)


def smin_residuals(cfg: dict, values=None) -> dict:
    """Per-instance residual energies: initial state, forward annealing, and reverse
    annealing per s_min with and without the initial state in the sample set."""
    values = [float(s) for s in (values if values is not None else cfg["sweep_smin"]["values"])]
    insts = desk_instances(cfg)
    res = {"initial": [], "FA": [], **{("RA", s): [] for s in values},
           **{("RA+initial", s): [] for s in values}}
    for n, inst in enumerate(insts):
        params = _smin_params(cfg, trial_seed(cfg["seed"], n))
        res["initial"].append(_e_res(inst.e_initial, inst.e_opt))
        fa = solve_sqa(inst.problem, AnnealSchedule.forward(params.sweeps), params)
        res["FA"].append(_e_res(fa.best_energy, inst.e_opt))
        for s in values:
            ra = solve_sqa(inst.problem, AnnealSchedule.reverse(s, params.sweeps),
                           replace(params, include_initial=True), initial=inst.initial)
            annealed = min(e for _, e in ra.samples[:-1])
            res[("RA", s)].append(_e_res(annealed, inst.e_opt))
            res[("RA+initial", s)].append(_e_res(ra.best_energy, inst.e_opt))
    return res


def sweep_smin(cfg: dict, values=None) -> list[ResultRow]:
    res = smin_residuals(cfg, values)
    rows = []
    for key, vals in res.items():
        label, param = (key, None) if isinstance(key, str) else key
        arr = np.asarray(vals, dtype=float)
        std = float(np.std(arr, ddof=1)) if arr.size > 1 else math.nan
        rows.append(ResultRow("sweep_smin", label, param, "e_res", float(arr.mean()), std,
                              int(arr.size), [float(v) for v in arr]))
    return rows
