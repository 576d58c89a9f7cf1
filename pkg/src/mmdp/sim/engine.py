"""Continuous-time fleet simulator.

Events are customer arrivals and vehicles finishing a leg (pickup, drop-off,
station).  Arrivals, and optionally drop-offs, trigger a dispatch round in
which the policy re-plans every vehicle.  Metrics are sampled on a 1 s tick.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..demand import CustomerRequest, DemandModel, sample_arrivals
from ..state import VehicleState, WorldState
from ..targets import Observation, OperationalStats, update_stats
from ..world import GridMap, Position, path_length, point_along
from .metrics import MetricsReport, TrialLog, collect_metrics
from .policies import DispatchContext, Policy, dispatch

log = logging.getLogger(__name__)

_EPS = 1e-9


@dataclass(frozen=True)
class SimConfig:
    grid: GridMap
    stations: tuple[Position, ...]
    demand: DemandModel
    n_vehicles: int = 6
    initial_positions: Optional[tuple[Position, ...]] = None  # None: random intersections
    duration: float = 10_000.0
    redispatch_on_dropoff: bool = True
    preempt_pickups: bool = True
    tick: float = 1.0

    def __post_init__(self):
        if self.n_vehicles < 1:
            raise ValueError("need at least one vehicle")
        if not self.stations:
            raise ValueError("need at least one station")
        if self.duration <= 0 or self.tick <= 0:
            raise ValueError("duration and tick must be positive")
        object.__setattr__(self, "stations", tuple(self.grid.validate(s) for s in self.stations))
        if self.initial_positions is not None:
            if len(self.initial_positions) != self.n_vehicles:
                raise ValueError("one initial position per vehicle required")
            object.__setattr__(self, "initial_positions",
                               tuple(self.grid.validate(p) for p in self.initial_positions))


@dataclass
class Vehicle:
    id: int
    position: Position
    passenger: Optional[int] = None
    plan: list = field(default_factory=list)  # ("pickup"|"dropoff", cid) / ("station", j)
    path: list = field(default_factory=list)
    leg_end: float = math.inf
    odometer: float = 0.0

    @property
    def occupied(self) -> bool:
        return self.passenger is not None


class Simulation:
    """One trial.  Use :func:`run_trial` unless stepping manually."""

    def __init__(self, config: SimConfig, policy: Policy, seed: int,
                 arrivals: Sequence[CustomerRequest] | None = None, trace: bool = False):
        self.cfg = config
        self.grid = config.grid
        self.policy = policy
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        if config.initial_positions is not None:
            starts = list(config.initial_positions)
        else:
            cells = self.rng.integers(0, self.grid.n_cells, size=config.n_vehicles)
            starts = [self.grid.cell_point(int(c)) for c in cells]
        self.vehicles = [Vehicle(i, p) for i, p in enumerate(starts)]
        if arrivals is None:
            arrivals = sample_arrivals(config.demand, 0.0, config.duration, self.rng)
        self.arrivals = sorted(arrivals, key=lambda c: (c.request_time, c.id))
        self.customers = {c.id: c for c in self.arrivals}
        self.waiting: list[int] = []
        self.in_service: set[int] = set()
        self.completed: set[int] = set()
        self.pickup_time: dict[int, float] = {}
        self.cust_assign: dict[int, tuple] = {}  # cid -> (vehicle id, slot)
        self.cust_dispatch_time: dict[int, float] = {}  # last logged estimate
        self.veh_station: dict[int, Optional[int]] = {}
        self.stats = OperationalStats.cold_start(self.grid)
        self.log = TrialLog(duration=config.duration)
        self.clock = 0.0
        self.trace = [] if trace else None
        self._next_arrival = 0
        self._rounds = 0

    # -- state views ------------------------------------------------------

    def _destination(self, v: Vehicle) -> Position:
        if v.passenger is not None:
            return self.customers[v.passenger].destination
        return v.position

    def world_state(self) -> WorldState:
        vehicles = []
        waiting = [self.customers[c] for c in self.waiting]
        if not self.cfg.preempt_pickups:
            locked = {v.plan[0][1] for v in self.vehicles
                      if not v.occupied and v.plan and v.plan[0][0] == "pickup"}
            waiting = [c for c in waiting if c.id not in locked]
        for v in self.vehicles:
            if not self.cfg.preempt_pickups and not v.occupied and v.plan and v.plan[0][0] == "pickup":
                continue
            vehicles.append(VehicleState(v.id, v.position, self._destination(v), v.passenger))
        return WorldState(self.clock, tuple(vehicles), self.cfg.stations,
                          tuple(sorted(waiting, key=lambda c: (c.request_time, c.id))),
                          tuple(sorted(self.in_service)))

    def _target_pos(self, leg) -> Position:
        kind, ref = leg
        if kind == "station":
            return self.cfg.stations[ref]
        c = self.customers[ref]
        return c.origin if kind == "pickup" else c.destination

    # -- motion -----------------------------------------------------------

    def _start_leg(self, v: Vehicle):
        if not v.plan:
            v.path, v.leg_end = [], math.inf
            return
        target = self._target_pos(v.plan[0])
        v.path = self.grid.path(v.position, target)
        v.leg_end = self.clock + path_length(v.path) / self.grid.speed

    def _advance(self, t: float):
        dt = t - self.clock
        if dt <= 0:
            return
        self.log.queue_area += len(self.waiting) * dt
        step = dt * self.grid.speed
        for v in self.vehicles:
            if len(v.path) < 2:
                continue
            v.odometer += min(step, path_length(v.path))
            v.position, v.path = point_along(v.path, step)
        self.clock = t

    # -- events -----------------------------------------------------------

    def _finish_leg(self, v: Vehicle) -> bool:
        """Complete ``v``'s current leg; returns True when it triggers a dispatch."""
        kind, ref = v.plan.pop(0)
        target = self._target_pos((kind, ref))
        v.position = target
        v.path = []
        trigger = False
        if kind == "pickup":
            self.waiting.remove(ref)
            self.in_service.add(ref)
            self.pickup_time[ref] = self.clock
            self.log.waits.append(self.clock - self.customers[ref].request_time)
            self.cust_assign.pop(ref, None)
            v.passenger = ref
        elif kind == "dropoff":
            self.in_service.discard(ref)
            self.completed.add(ref)
            self.log.completed += 1
            v.passenger = None
            trigger = self.cfg.redispatch_on_dropoff
        self._start_leg(v)
        return trigger

    def _settle(self) -> bool:
        """Finish every leg ending now, including zero-length ones."""
        trigger = False
        while True:
            due = [v for v in self.vehicles if v.leg_end <= self.clock + _EPS]
            if not due:
                return trigger
            for v in sorted(due, key=lambda v: v.id):
                if v.leg_end <= self.clock + _EPS:
                    trigger |= self._finish_leg(v)

    def _estimate_times(self, v: Vehicle, plan: list) -> list[float]:
        """Arrival time estimate (from now) at the end of each leg of ``plan``."""
        t, pos, out = 0.0, v.position, []
        for leg in plan:
            nxt = self._target_pos(leg)
            t += self.grid.travel_time(pos, nxt)
            out.append(t)
            pos = nxt
        return out

    def apply_assignment(self, plans: dict[int, list]):
        """Install new plans; dispatch times are logged only when a target changes."""
        known = {v.id for v in self.vehicles}
        for vid, targets in plans.items():
            if vid not in known:
                raise ValueError(f"unknown vehicle id {vid}")
            for kind, ref in targets:
                if kind == "customer" and ref not in self.waiting:
                    raise ValueError(f"customer {ref} is not waiting")
                if kind == "station" and not 0 <= ref < len(self.cfg.stations):
                    raise ValueError(f"unknown station {ref}")
        for v in self.vehicles:
            if v.id not in plans:
                continue
            legs = []
            for kind, ref in plans[v.id]:
                if kind == "customer":
                    legs += [("pickup", ref), ("dropoff", ref)]
                else:
                    legs.append(("station", ref))
            if v.occupied:
                legs = [("dropoff", v.passenger)] + legs
            eta = self._estimate_times(v, legs)
            slot = 0
            station = None
            for leg, t in zip(legs, eta):
                if leg[0] == "pickup":
                    key = (v.id, slot)
                    slot += 1
                    if self.cust_assign.get(leg[1]) != key:
                        self.cust_assign[leg[1]] = key
                        self.cust_dispatch_time[leg[1]] = t
                        self.log.customer_dispatch.append(t)
                        at_station = not v.occupied and v.position in self.cfg.stations
                        if at_station and t > 0:
                            self.stats = update_stats(self.stats, Observation("theta_c", t))
                elif leg[0] == "station":
                    station = leg[1]
                    if self.veh_station.get(v.id) != station:
                        self.log.station_dispatch.append(t)
                        if t > 0:
                            self.stats = update_stats(self.stats, Observation("theta_s", t))
                            if not v.occupied:
                                self.stats = update_stats(self.stats, Observation("theta_s_vac", t))
            self.veh_station[v.id] = station
            current = v.plan[0] if v.plan else None
            v.plan = legs
            if not (v.occupied and current == legs[0]):
                self._start_leg(v)
        # customers that lost their vehicle
        assigned = {ref for targets in plans.values() for kind, ref in targets if kind == "customer"}
        for cid in list(self.cust_assign):
            vid = self.cust_assign[cid][0]
            if cid not in assigned and vid in plans:
                del self.cust_assign[cid]

    def dispatch_round(self):
        state = self.world_state()
        if not state.vehicles:
            return
        occupied = sum(1 for v in self.vehicles if v.occupied) / len(self.vehicles)
        self.stats = update_stats(self.stats, Observation("occupancy_o", occupied))
        seed = int(np.random.SeedSequence([self.seed, self._rounds]).generate_state(1)[0])
        ctx = DispatchContext(self.grid, self.cfg.demand, self.stats, seed)
        plans, fell_back = dispatch(state, self.policy, ctx)
        self._rounds += 1
        self.log.dispatch_rounds += 1
        self.log.fallbacks += int(fell_back)
        self.apply_assignment(plans)

    def _sample(self):
        pts = [v.position for v in self.vehicles]
        if len(pts) >= 2:
            self.log.distance_samples.append(self.grid.mean_pairwise_distance(pts))
        if self.trace is not None:
            self.trace.append((self.clock, pts))

    def run(self) -> MetricsReport:
        end = self.cfg.duration
        self.dispatch_round()
        self._settle()
        next_tick = self.cfg.tick
        while True:
            t_arr = (self.arrivals[self._next_arrival].request_time
                     if self._next_arrival < len(self.arrivals) else math.inf)
            t_leg = min((v.leg_end for v in self.vehicles), default=math.inf)
            t = min(t_arr, t_leg, next_tick, end)
            self._advance(t)
            trigger = self._settle()
            while (self._next_arrival < len(self.arrivals)
                   and self.arrivals[self._next_arrival].request_time <= t):
                c = self.arrivals[self._next_arrival]
                self.waiting.append(c.id)
                self.log.created += 1
                self._next_arrival += 1
                trigger = True
            while trigger:
                self.dispatch_round()
                trigger = self._settle()
            if t >= next_tick - _EPS:
                self._sample()
                next_tick += self.cfg.tick
            if t >= end:
                break
        self.log.odometers = [v.odometer for v in self.vehicles]
        return collect_metrics(self.log)

    def conservation_ok(self) -> bool:
        return self.log.created == len(self.waiting) + len(self.in_service) + len(self.completed)


def run_trial(config: SimConfig, policy: Policy, seed: int) -> MetricsReport:
    return Simulation(config, policy, seed).run()
