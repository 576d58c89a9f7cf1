"""Desirable vehicle count per station.

Each station's target is the demand expected to appear while a vehicle is on
its way there::

    tau_j = t_sj * f_c * P(s_j)

``P(s_j)`` marginalises an exponential distance-decay kernel over the origin
pmf.  ``t_sj`` is either computed from live vehicle positions by enumerating
which vehicles could be sent to the station (dynamic), or from the demand
pmfs and running fleet statistics (static).
"""

from __future__ import annotations

import dataclasses
import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .demand import DemandModel
from .state import WorldState
from .world import GridMap, Position

Mode = Literal["dynamic", "static"]

MAX_DYNAMIC_VEHICLES = 20  # 2**20 subsets

STAT_NAMES = ("theta_c", "theta_s", "theta_s_vac", "occupancy_o")


class EnumerationLimitError(ValueError):
    """Too many vehicles for exact subset enumeration; use static mode."""


@dataclass(frozen=True)
class OperationalStats:
    theta_c: float
    theta_s: float
    theta_s_vac: float
    occupancy_o: float
    sample_counts: dict = field(default_factory=lambda: dict.fromkeys(STAT_NAMES, 0))

    def __post_init__(self):
        if min(self.theta_c, self.theta_s, self.theta_s_vac) <= 0:
            raise ValueError("dispatch-time statistics must be positive")
        if not 0.0 <= self.occupancy_o <= 1.0:
            raise ValueError("occupancy must lie in [0, 1]")

    @classmethod
    def cold_start(cls, grid: GridMap) -> "OperationalStats":
        prior = grid.diameter_time / 2
        return cls(prior, prior, prior, 0.5)


@dataclass(frozen=True)
class Observation:
    """One measured sample: a dispatch time in seconds or an occupancy in [0, 1]."""

    stat: str
    value: float


def update_stats(stats: OperationalStats, obs: Observation) -> OperationalStats:
    """Fold one observation into the running means.

    The first observation of a statistic replaces its cold-start prior.
    """
    if obs.stat not in STAT_NAMES:
        raise ValueError(f"unknown statistic {obs.stat!r}")
    if obs.stat == "occupancy_o":
        if not 0.0 <= obs.value <= 1.0:
            raise ValueError(f"occupancy sample {obs.value} outside [0, 1]")
    elif not obs.value > 0:
        raise ValueError(f"dispatch time must be positive, got {obs.value}")
    n = stats.sample_counts.get(obs.stat, 0)
    old = getattr(stats, obs.stat)
    new = obs.value if n == 0 else old + (obs.value - old) / (n + 1)
    counts = dict(stats.sample_counts)
    counts[obs.stat] = n + 1
    return dataclasses.replace(stats, **{obs.stat: new}, sample_counts=counts)


@dataclass(frozen=True, eq=False)
class StationTargets:
    tau: np.ndarray
    p_select: np.ndarray
    t_sj: np.ndarray
    mode: Mode
    f_c: float = 0.0


@functools.lru_cache(maxsize=32)
def _cell_times(grid: GridMap) -> np.ndarray:
    pts = grid.cell_points()
    return np.array([[grid.travel_time(a, b) for b in pts] for a in pts])


def _station_cell_times(grid: GridMap, stations: Sequence[Position]) -> np.ndarray:
    pts = grid.cell_points()
    return np.array([[grid.travel_time(s, c) for c in pts] for s in stations])


def station_selection_probs(stations: Sequence[Position], demand: DemandModel,
                            theta_c: float, grid: GridMap) -> np.ndarray:
    """Probability that a customer is served from each station."""
    if len(stations) == 0:
        raise ValueError("need at least one station")
    if theta_c <= 0:
        raise ValueError("theta_c must be positive")
    times = _station_cell_times(grid, stations)
    logits = -times / theta_c
    logits -= logits.max(axis=0, keepdims=True)
    kernel = np.exp(logits)
    kernel /= kernel.sum(axis=0, keepdims=True)
    return kernel @ demand.origin_pmf


def _log_binom_pmf(n: int, k: int, p: float) -> float:
    if p >= 1.0:
        return 0.0 if k == n else -math.inf
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
            + k * math.log(p) + (n - k) * math.log1p(-p))


def _expected_mean_time(via_times: np.ndarray, surplus: int, n_stations: int,
                        theta_s: float) -> float:
    """Expectation of the mean via-time over non-empty vehicle subsets.

    The subset size follows Binomial(surplus, 1/n_stations); within one size,
    subsets are weighted by exp(-mean_time / theta_s) normalised over that
    size.  Sizes are then renormalised over the non-empty ones.
    """
    n_veh = len(via_times)
    log_size_w = []
    size_means = []
    for size in range(1, min(surplus, n_veh) + 1):
        means = np.array([via_times[list(c)].mean()
                          for c in itertools.combinations(range(n_veh), size)])
        logits = -means / theta_s
        w = np.exp(logits - logits.max())
        size_means.append(float(w @ means / w.sum()))
        log_size_w.append(_log_binom_pmf(surplus, size, 1.0 / n_stations))
    lw = np.array(log_size_w)
    w = np.exp(lw - lw.max())
    return float(w @ np.array(size_means) / w.sum())


def t_sj_dynamic(state: WorldState, station: int, stats: OperationalStats,
                 n_c: int, grid: GridMap) -> float:
    """Expected travel time of the vehicles sent to ``station``, from live positions."""
    n_veh = state.n_vehicles
    surplus = n_veh - n_c
    if surplus < 1:
        return stats.theta_s
    if n_veh > MAX_DYNAMIC_VEHICLES:
        raise EnumerationLimitError(
            f"{n_veh} vehicles exceed the 2^{MAX_DYNAMIC_VEHICLES} subset cap; use static mode")
    s = state.stations[station]
    via = np.array([grid.travel_time_via(v.position, v.destination, s) for v in state.vehicles])
    return _expected_mean_time(via, surplus, state.n_stations, stats.theta_s)


def t_sj_static(station: Position, demand: DemandModel, stats: OperationalStats,
                grid: GridMap) -> float:
    """Spatially averaged travel time to ``station`` from the demand pmfs."""
    cc = _cell_times(grid)
    to_station = np.array([grid.travel_time(p, station) for p in grid.cell_points()])
    # occupied: half the trip still to go, then on to the station
    occupied = demand.origin_pmf @ (cc / 2 + to_station[None, :]) @ demand.dest_pmf
    o = stats.occupancy_o
    return float(o * occupied + (1 - o) * stats.theta_s_vac)


def compute_targets(mode: Mode, state: WorldState, demand: DemandModel,
                    stats: OperationalStats, grid: GridMap,
                    n_c: int | None = None) -> StationTargets:
    if n_c is None:
        n_c = min(len(state.waiting), state.n_vehicles)
    stations = state.stations
    p = station_selection_probs(stations, demand, stats.theta_c, grid)
    if mode == "dynamic":
        t = np.array([t_sj_dynamic(state, j, stats, n_c, grid) for j in range(len(stations))])
    elif mode == "static":
        t = np.array([t_sj_static(s, demand, stats, grid) for s in stations])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return StationTargets(t * demand.rate_fc * p, p, t, mode, demand.rate_fc)
