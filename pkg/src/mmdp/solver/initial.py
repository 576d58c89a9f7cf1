"""Greedy warm start for reverse annealing."""

from __future__ import annotations

import numpy as np

from ..qubo import QuboProblem
from ..state import WorldState
from ..targets import StationTargets
from ..world import GridMap


def greedy_initial_state(state: WorldState, targets: StationTargets, problem: QuboProblem,
                         grid: GridMap) -> np.ndarray:
    """Feasible bitstring for a proposed-formulation problem built on ``state``.

    Customers are served longest-waiting first by the nearest free vehicle.
    Each remaining vehicle then goes, one at a time, to the station with the
    largest remaining target; that target drops by one per vehicle sent.
    """
    if problem.formulation != "proposed":
        raise ValueError("greedy warm start applies to the proposed formulation")
    vm = problem.varmap
    bits = np.zeros(problem.n_vars, dtype=np.int8)
    free = list(range(state.n_vehicles))

    def via(i, target):
        v = state.vehicles[i]
        return grid.travel_time_via(v.position, v.destination, target)

    order = sorted(range(len(state.waiting)),
                   key=lambda k: (state.waiting[k].request_time, state.waiting[k].id))
    for k in order:
        if not free:
            break
        i = min(free, key=lambda i: (via(i, state.waiting[k].origin), i))
        bits[vm.index(("c", i, k))] = 1
        free.remove(i)

    remaining = np.array(targets.tau, dtype=float)
    while free:
        j = int(np.argmax(remaining))
        i = min(free, key=lambda i: (via(i, state.stations[j]), i))
        bits[vm.index(("s", i, j))] = 1
        free.remove(i)
        remaining[j] -= 1.0
    return bits
