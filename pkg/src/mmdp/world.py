"""Grid-world geometry.

The map is a ``rows x cols`` lattice of intersections spaced ``cell_size``
meters apart and joined by straight streets.  Positions may sit anywhere on a
street, including part-way along a block, so shortest paths are computed by
routing through the end nodes of the blocks that hold each endpoint.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

_REL_TOL = 1e-9


class Position(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class GridMap:
    rows: int = 4
    cols: int = 4
    cell_size: float = 200.0
    speed: float = 4.0

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ValueError(f"grid needs at least 2x2 nodes, got {self.rows}x{self.cols}")
        if self.cell_size <= 0 or self.speed <= 0:
            raise ValueError("cell_size and speed must be positive")

    # -- cells ------------------------------------------------------------
    # One demand cell per intersection; the intersection is the cell's
    # representative point.

    @property
    def n_cells(self) -> int:
        return self.rows * self.cols

    @property
    def width(self) -> float:
        return (self.cols - 1) * self.cell_size

    @property
    def height(self) -> float:
        return (self.rows - 1) * self.cell_size

    def cell_index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise ValueError(f"cell ({row}, {col}) outside {self.rows}x{self.cols} grid")
        return row * self.cols + col

    def cell_rowcol(self, cell: int) -> tuple[int, int]:
        if not 0 <= cell < self.n_cells:
            raise ValueError(f"cell {cell} outside grid of {self.n_cells} cells")
        return divmod(cell, self.cols)

    def cell_point(self, cell: int) -> Position:
        row, col = self.cell_rowcol(cell)
        return Position(col * self.cell_size, row * self.cell_size)

    def cell_points(self) -> list[Position]:
        return [self.cell_point(c) for c in range(self.n_cells)]

    def node(self, row: int, col: int) -> Position:
        return self.cell_point(self.cell_index(row, col))

    @property
    def diameter_time(self) -> float:
        """Travel time between opposite corners."""
        return (self.width + self.height) / self.speed

    # -- geometry ---------------------------------------------------------

    def _on_line(self, v: float) -> bool:
        k = round(v / self.cell_size)
        return abs(v - k * self.cell_size) <= _REL_TOL * self.cell_size

    def _snap(self, v: float) -> float:
        k = round(v / self.cell_size)
        if abs(v - k * self.cell_size) <= _REL_TOL * self.cell_size:
            return k * self.cell_size
        return v

    def validate(self, p: Sequence[float]) -> Position:
        """Return ``p`` snapped onto the street graph, or raise ValueError."""
        x, y = float(p[0]), float(p[1])
        tol = _REL_TOL * self.cell_size
        if not (-tol <= x <= self.width + tol and -tol <= y <= self.height + tol):
            raise ValueError(f"position {tuple(p)} outside the map")
        if not (self._on_line(x) or self._on_line(y)):
            raise ValueError(f"position {tuple(p)} is not on a street")
        return Position(min(max(self._snap(x), 0.0), self.width),
                        min(max(self._snap(y), 0.0), self.height))

    def is_on_grid(self, p: Sequence[float]) -> bool:
        try:
            self.validate(p)
        except ValueError:
            return False
        return True

    def _exits(self, p: Position) -> list[Position]:
        """Intersections bounding the block that contains ``p``."""
        on_x, on_y = self._on_line(p.x), self._on_line(p.y)
        if on_x and on_y:
            return [p]
        c = self.cell_size
        if on_y:
            lo = (p.x // c) * c
            return [Position(lo, p.y), Position(lo + c, p.y)]
        lo = (p.y // c) * c
        return [Position(p.x, lo), Position(p.x, lo + c)]

    def _route(self, a: Position, b: Position) -> tuple[float, list[Position]]:
        best = float("inf")
        pts: list[Position] = []
        # Same street: drive straight along it.
        if a.y == b.y and self._on_line(a.y) or a.x == b.x and self._on_line(a.x):
            best = abs(a.x - b.x) + abs(a.y - b.y)
            pts = [a, b]
        for ea, eb in itertools.product(self._exits(a), self._exits(b)):
            d = (abs(a.x - ea.x) + abs(a.y - ea.y)
                 + abs(ea.x - eb.x) + abs(ea.y - eb.y)
                 + abs(eb.x - b.x) + abs(eb.y - b.y))
            if d < best - _REL_TOL * self.cell_size:
                best = d
                # x-moves before y-moves between the two intersections
                pts = [a, ea, Position(eb.x, ea.y), eb, b]
        out = [pts[0]]
        for q in pts[1:]:
            if q != out[-1]:
                out.append(q)
        return best, out

    def distance(self, a: Sequence[float], b: Sequence[float]) -> float:
        """Shortest street distance in meters."""
        return self._route(self.validate(a), self.validate(b))[0]

    def path(self, a: Sequence[float], b: Sequence[float]) -> list[Position]:
        """Waypoints of the shortest route from ``a`` to ``b`` (both included)."""
        return self._route(self.validate(a), self.validate(b))[1]

    def travel_time(self, a: Sequence[float], b: Sequence[float]) -> float:
        return self.distance(a, b) / self.speed

    def travel_time_via(self, a: Sequence[float], via: Sequence[float], b: Sequence[float]) -> float:
        return self.travel_time(a, via) + self.travel_time(via, b)

    def mean_pairwise_distance(self, positions: Iterable[Sequence[float]]) -> float:
        pts = [self.validate(p) for p in positions]
        if len(pts) < 2:
            raise ValueError("need at least two positions")
        pairs = list(itertools.combinations(pts, 2))
        return sum(self._route(a, b)[0] for a, b in pairs) / len(pairs)


def travel_time(grid: GridMap, a, b) -> float:
    return grid.travel_time(a, b)


def travel_time_via(grid: GridMap, a, via, b) -> float:
    return grid.travel_time_via(a, via, b)


def mean_pairwise_distance(grid: GridMap, positions) -> float:
    return grid.mean_pairwise_distance(positions)


def point_along(path: Sequence[Position], dist: float) -> tuple[Position, list[Position]]:
    """Walk ``dist`` meters along a polyline.

    Returns the reached point and the remaining polyline starting there.
    """
    rest = list(path)
    pos = rest[0]
    left = dist
    i = 1
    while i < len(rest):
        nxt = rest[i]
        seg = abs(nxt.x - pos.x) + abs(nxt.y - pos.y)
        if left < seg:
            f = left / seg
            pos = Position(pos.x + (nxt.x - pos.x) * f, pos.y + (nxt.y - pos.y) * f)
            return pos, [pos] + rest[i:]
        left -= seg
        pos = nxt
        i += 1
    return pos, [pos]


def path_length(path: Sequence[Position]) -> float:
    return sum(abs(b.x - a.x) + abs(b.y - a.y) for a, b in zip(path, path[1:]))
