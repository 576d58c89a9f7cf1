"""Dispatch policies: the greedy baseline and the QUBO-backed ones.

A policy maps a :class:`WorldState` to a plan per vehicle id, each plan a
list of ``("customer", customer_id)`` / ``("station", j)`` targets visited in
order.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..demand import DemandModel
from ..qubo import QuboWeights, build_proposed, build_vrp, decode
from ..solver import AnnealSchedule, SolverParams, greedy_initial_state, solve_sa, solve_sqa
from ..state import WorldState
from ..targets import EnumerationLimitError, OperationalStats, compute_targets
from ..world import GridMap

log = logging.getLogger(__name__)

PolicyKind = Literal["greedy", "proposed_static", "proposed_dynamic", "proposed_ablation", "vrp"]
POLICY_KINDS = ("greedy", "vrp", "proposed_ablation", "proposed_static", "proposed_dynamic")

# The simulator solves one QUBO per event, so it takes fewer reads than offline runs.
SIM_SOLVER = SolverParams(replicas=16, sweeps=1000, beta=50.0, gamma0=3.0, reads=4)


@dataclass(frozen=True)
class Policy:
    kind: PolicyKind
    weights: QuboWeights = field(default_factory=QuboWeights)
    sampler: Literal["sqa", "sa"] = "sqa"
    params: SolverParams = SIM_SOLVER
    schedule: Literal["forward", "reverse"] = "forward"
    s_min: float = 0.4
    ablation_mode: Literal["static", "dynamic"] = "dynamic"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}")
        if self.kind == "vrp" and self.schedule == "reverse":
            raise ValueError("reverse annealing needs the greedy warm start of the proposed formulation")

    @property
    def mode(self) -> str | None:
        if self.kind == "proposed_static":
            return "static"
        if self.kind == "proposed_dynamic":
            return "dynamic"
        if self.kind == "proposed_ablation":
            return self.ablation_mode
        return None


@dataclass
class DispatchContext:
    grid: GridMap
    demand: DemandModel
    stats: OperationalStats
    seed: int = 0


def _via(grid: GridMap, v, target) -> float:
    return grid.travel_time_via(v.position, v.destination, target)


def dispatch_greedy(state: WorldState, grid: GridMap) -> dict[int, list]:
    """Longest-waiting customers first, each to the nearest free vehicle;
    leftover vehicles to their nearest station.  Ties go to the lower id."""
    plans: dict[int, list] = {}
    free = sorted(state.vehicles, key=lambda v: v.id)
    queue = sorted(state.waiting, key=lambda c: (c.request_time, c.id))[:len(free)]
    for cust in queue:
        best = min(free, key=lambda v: (_via(grid, v, cust.origin), v.id))
        plans[best.id] = [("customer", cust.id)]
        free.remove(best)
    for v in free:
        j = min(range(state.n_stations), key=lambda j: (_via(grid, v, state.stations[j]), j))
        plans[v.id] = [("station", j)]
    return plans


def _nearest_station(state: WorldState, grid: GridMap, v) -> int:
    return min(range(state.n_stations), key=lambda j: (_via(grid, v, state.stations[j]), j))


def _solve(problem, policy: Policy, seed: int, initial=None):
    params = dataclasses.replace(policy.params, seed=seed)
    if policy.sampler == "sa":
        return solve_sa(problem, params)
    if policy.schedule == "reverse":
        sched = AnnealSchedule.reverse(policy.s_min, params.sweeps)
        return solve_sqa(problem, sched, params, initial=initial)
    return solve_sqa(problem, AnnealSchedule.forward(params.sweeps), params)


def _best_feasible(problem, report):
    best = None
    for bits, e in sorted(report.samples, key=lambda s: s[1]):
        a = decode(problem, bits)
        if a.feasible:
            best = a
            break
    return best


def dispatch_qubo(state: WorldState, policy: Policy, ctx: DispatchContext) -> tuple[dict[int, list], bool]:
    """Plan from the lowest-energy feasible sample.

    Returns ``(plans, fell_back)``; without a feasible sample the greedy plan
    is used.
    """
    grid = ctx.grid
    n_veh = state.n_vehicles
    try:
        if policy.kind == "vrp":
            sub = dataclasses.replace(state, waiting=state.earliest(2 * n_veh))
            problem = build_vrp(sub, policy.weights, grid)
            report = _solve(problem, policy, ctx.seed)
            assignment = _best_feasible(problem, report)
            if assignment is None:
                raise RuntimeError("no feasible VRP sample")
            return _vrp_plans(sub, assignment), False

        sub = dataclasses.replace(state, waiting=state.earliest(n_veh))
        mode = policy.mode
        try:
            targets = compute_targets(mode, sub, ctx.demand, ctx.stats, grid)
        except EnumerationLimitError:
            log.warning("dynamic targets over the enumeration cap; using static targets")
            targets = compute_targets("static", sub, ctx.demand, ctx.stats, grid)
        problem = build_proposed(sub, targets, policy.weights, grid)
        initial = None
        if policy.schedule == "reverse":
            initial = greedy_initial_state(sub, targets, problem, grid)
        report = _solve(problem, policy, ctx.seed, initial)
        assignment = _best_feasible(problem, report)
        if assignment is None:
            raise RuntimeError("no feasible sample")
        return _proposed_plans(sub, assignment, grid), False
    except (RuntimeError, FloatingPointError) as exc:
        log.info("dispatch fallback to greedy at t=%.1f: %s", state.clock, exc)
        return dispatch_greedy(state, grid), True


def _proposed_plans(state: WorldState, assignment, grid: GridMap) -> dict[int, list]:
    plans: dict[int, list] = {}
    claimed: dict[int, int] = {}  # customer index -> vehicle index
    for i, tg in enumerate(assignment.targets):
        v = state.vehicles[i]
        if tg[0] == "station":
            plans[v.id] = [("station", tg[1])]
            continue
        k = tg[1]
        cust = state.waiting[k]
        # without the one-vehicle-per-customer penalty two vehicles may share a customer
        if k in claimed:
            other = state.vehicles[claimed[k]]
            if _via(grid, v, cust.origin) < _via(grid, other, cust.origin):
                plans[other.id] = [("station", _nearest_station(state, grid, other))]
            else:
                plans[v.id] = [("station", _nearest_station(state, grid, v))]
                continue
        claimed[k] = i
        plans[v.id] = [("customer", cust.id)]
    return plans


def _vrp_plans(state: WorldState, assignment) -> dict[int, list]:
    plans = {}
    for i, (_, seq, station) in enumerate(assignment.targets):
        plan = [("customer", state.waiting[k].id) for k in seq]
        if station is not None:
            plan.append(("station", station))
        plans[state.vehicles[i].id] = plan
    return plans


def dispatch(state: WorldState, policy: Policy, ctx: DispatchContext) -> tuple[dict[int, list], bool]:
    if policy.kind == "greedy":
        return dispatch_greedy(state, ctx.grid), False
    return dispatch_qubo(state, policy, ctx)
