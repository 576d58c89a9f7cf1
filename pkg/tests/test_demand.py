import numpy as np
import pytest

from mmdp.demand import DemandModel, dest_prob, origin_prob, sample_arrivals
from mmdp.world import GridMap


def test_uniform_pmf(grid):
    m = DemandModel.uniform(grid, 0.02)
    assert all(origin_prob(m, c) == pytest.approx(1 / 16) for c in range(16))
    assert m.origin_pmf.sum() == pytest.approx(1.0)


def test_single_hot_cell(grid):
    m = DemandModel.from_hot_cells(grid, 0.02, [5], [9], 10.0)
    assert origin_prob(m, 5) == pytest.approx(10 / 25)
    assert origin_prob(m, 0) == pytest.approx(1 / 25)
    assert dest_prob(m, 9) == pytest.approx(10 / 25)
    with pytest.raises(ValueError):
        origin_prob(m, 16)


def test_zero_window_empty(grid):
    m = DemandModel.uniform(grid, 0.02)
    assert sample_arrivals(m, 0.0, 0.0, np.random.default_rng(0)) == []


def test_arrival_count_mean(grid):
    m = DemandModel.uniform(grid, 1 / 50)
    counts = [len(sample_arrivals(m, 0.0, 10_000.0, np.random.default_rng(s))) for s in range(1000)]
    assert np.mean(counts) == pytest.approx(200, rel=0.03)


def test_arrivals_well_formed(grid):
    m = DemandModel.from_hot_cells(grid, 0.05, [0, 1], [15], 10.0)
    reqs = sample_arrivals(m, 100.0, 500.0, np.random.default_rng(1), first_id=7)
    assert [r.id for r in reqs] == list(range(7, 7 + len(reqs)))
    assert all(100.0 <= r.request_time < 600.0 for r in reqs)
    assert all(r.origin != r.destination for r in reqs)
    times = [r.request_time for r in reqs]
    assert times == sorted(times)


def test_deterministic(grid):
    m = DemandModel.uniform(grid, 0.05)
    a = sample_arrivals(m, 0.0, 1000.0, np.random.default_rng(4))
    b = sample_arrivals(m, 0.0, 1000.0, np.random.default_rng(4))
    assert a == b


def test_origin_histogram_chi_square(grid):
    m = DemandModel.from_hot_cells(grid, 1.0, [3, 10], [], 10.0)
    reqs = sample_arrivals(m, 0.0, 100_000.0, np.random.default_rng(9))
    n = len(reqs)
    counts = np.bincount([grid.cell_index(int(r.origin.y // 200), int(r.origin.x // 200))
                          for r in reqs], minlength=16)
    expected = n * m.origin_pmf
    sigma = np.sqrt(expected * (1 - m.origin_pmf))
    assert np.all(np.abs(counts - expected) < 3 * sigma + 1)
