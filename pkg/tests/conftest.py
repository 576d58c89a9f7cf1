import itertools

import networkx as nx
import numpy as np
import pytest

from mmdp.world import GridMap, Position


def grid_graph(grid: GridMap, extra=()):
    """Street graph with intersections as nodes; points in ``extra`` split their edge."""
    g = nx.Graph()
    c = grid.cell_size
    for r, k in itertools.product(range(grid.rows), range(grid.cols)):
        if k + 1 < grid.cols:
            g.add_edge((k * c, r * c), ((k + 1) * c, r * c), weight=c)
        if r + 1 < grid.rows:
            g.add_edge((k * c, r * c), (k * c, (r + 1) * c), weight=c)
    for p in extra:
        p = (float(p[0]), float(p[1]))
        if p in g:
            continue
        for u, v in list(g.edges):
            lo = (min(u[0], v[0]), min(u[1], v[1]))
            hi = (max(u[0], v[0]), max(u[1], v[1]))
            if lo[0] <= p[0] <= hi[0] and lo[1] <= p[1] <= hi[1]:
                g.remove_edge(u, v)
                g.add_edge(u, p, weight=abs(u[0] - p[0]) + abs(u[1] - p[1]))
                g.add_edge(p, v, weight=abs(v[0] - p[0]) + abs(v[1] - p[1]))
                break
    return g


def graph_distance(grid: GridMap, a, b) -> float:
    g = grid_graph(grid, [a, b])
    return nx.dijkstra_path_length(g, (float(a[0]), float(a[1])), (float(b[0]), float(b[1])))


def random_street_point(grid: GridMap, rng: np.random.Generator) -> Position:
    """Intersection or mid-block point on a 25 m lattice."""
    step = grid.cell_size / 8
    if rng.random() < 0.5:
        r, k = rng.integers(grid.rows), rng.integers(grid.cols)
        return Position(k * grid.cell_size, r * grid.cell_size)
    if rng.random() < 0.5:
        y = rng.integers(grid.rows) * grid.cell_size
        x = rng.integers(int(grid.width / step) + 1) * step
    else:
        x = rng.integers(grid.cols) * grid.cell_size
        y = rng.integers(int(grid.height / step) + 1) * step
    return Position(float(x), float(y))


@pytest.fixture
def grid():
    return GridMap(4, 4, 200.0, 4.0)
