"""Customer demand: Poisson arrivals over per-cell origin/destination pmfs."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .world import GridMap, Position


def _normalize(weights: np.ndarray) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or w.sum() <= 0:
        raise ValueError("cell weights must be non-negative with a positive total")
    return w / w.sum()


def hot_weights(n_cells: int, hot_cells: Iterable[int], multiplier: float) -> np.ndarray:
    w = np.ones(n_cells)
    for c in hot_cells:
        if not 0 <= c < n_cells:
            raise ValueError(f"hot cell {c} outside grid")
        w[c] = multiplier
    return w


@dataclass(frozen=True)
class CustomerRequest:
    id: int
    origin: Position
    destination: Position
    request_time: float


@dataclass(frozen=True, eq=False)
class DemandModel:
    """Arrival rate ``rate_fc`` (1/s) and per-cell pmfs for trip endpoints.

    Cells are indexed ``row * cols + col`` on the owning :class:`GridMap`.
    """

    grid: GridMap
    rate_fc: float
    origin_pmf: np.ndarray
    dest_pmf: np.ndarray
    hot_origin_cells: tuple[int, ...] = ()
    hot_dest_cells: tuple[int, ...] = ()
    hot_multiplier: float = 1.0

    def __post_init__(self):
        if self.rate_fc < 0:
            raise ValueError("rate_fc must be non-negative")
        for name in ("origin_pmf", "dest_pmf"):
            pmf = _normalize(getattr(self, name))
            if pmf.shape != (self.grid.n_cells,):
                raise ValueError(f"{name} must have one entry per grid cell")
            pmf.setflags(write=False)
            object.__setattr__(self, name, pmf)

    @classmethod
    def from_hot_cells(cls, grid: GridMap, rate_fc: float,
                       hot_origin_cells: Iterable[int] = (),
                       hot_dest_cells: Iterable[int] = (),
                       hot_multiplier: float = 10.0) -> "DemandModel":
        ho, hd = tuple(hot_origin_cells), tuple(hot_dest_cells)
        return cls(grid, rate_fc,
                   hot_weights(grid.n_cells, ho, hot_multiplier),
                   hot_weights(grid.n_cells, hd, hot_multiplier),
                   ho, hd, hot_multiplier)

    @classmethod
    def uniform(cls, grid: GridMap, rate_fc: float) -> "DemandModel":
        return cls.from_hot_cells(grid, rate_fc, (), (), 1.0)

    def origin_prob(self, cell: int) -> float:
        self.grid.cell_rowcol(cell)
        return float(self.origin_pmf[cell])

    def dest_prob(self, cell: int) -> float:
        self.grid.cell_rowcol(cell)
        return float(self.dest_pmf[cell])


def origin_prob(model: DemandModel, cell: int) -> float:
    return model.origin_prob(cell)


def dest_prob(model: DemandModel, cell: int) -> float:
    return model.dest_prob(cell)


def sample_arrivals(model: DemandModel, t0: float, dt: float,
                    rng: np.random.Generator, first_id: int = 0) -> list[CustomerRequest]:
    """Draw the requests arriving in ``[t0, t0 + dt)``.

    The count is Poisson(rate * dt) and arrival times are i.i.d. uniform over
    the window, i.e. a homogeneous Poisson process.  Destinations equal to the
    origin are redrawn.
    """
    if dt <= 0 or model.rate_fc == 0:
        return []
    n = int(rng.poisson(model.rate_fc * dt))
    if n == 0:
        return []
    times = np.sort(t0 + dt * rng.random(n))
    n_cells = model.grid.n_cells
    origins = rng.choice(n_cells, size=n, p=model.origin_pmf)
    dests = rng.choice(n_cells, size=n, p=model.dest_pmf)
    if np.count_nonzero(model.dest_pmf) < 2 and np.any(dests == origins):
        raise ValueError("destination pmf cannot avoid the origin cell")
    clash = dests == origins
    while clash.any():
        dests[clash] = rng.choice(n_cells, size=int(clash.sum()), p=model.dest_pmf)
        clash = dests == origins
    grid = model.grid
    return [CustomerRequest(first_id + i, grid.cell_point(int(o)), grid.cell_point(int(d)), float(t))
            for i, (t, o, d) in enumerate(zip(times, origins, dests))]
