import itertools
import math

import numpy as np
import pytest

from mmdp.demand import DemandModel
from mmdp.state import VehicleState, WorldState
from mmdp.targets import (EnumerationLimitError, Observation, OperationalStats, compute_targets,
                          station_selection_probs, t_sj_dynamic, t_sj_static, update_stats)
from mmdp.world import GridMap, Position


def stats(theta_s=60.0, o=0.5, theta_c=50.0, vac=40.0):
    return OperationalStats(theta_c, theta_s, vac, o)


def subset_oracle(times, surplus, n_st, theta_s):
    """P(sigma) = Binom(|sigma|) * exp(-mean/theta) / Z_|sigma|, renormalised over
    non-empty subsets; returns the expected mean time."""
    n = len(times)
    by_size = {}
    for mask in range(1, 1 << n):
        members = [i for i in range(n) if mask >> i & 1]
        mean = sum(times[i] for i in members) / len(members)
        by_size.setdefault(len(members), []).append(mean)
    num = den = 0.0
    p = 1 / n_st
    for size, means in by_size.items():
        if size > surplus:
            continue
        binom = math.comb(surplus, size) * p ** size * (1 - p) ** (surplus - size)
        z = sum(math.exp(-m / theta_s) for m in means)
        for m in means:
            w = binom * math.exp(-m / theta_s) / z
            num += w * m
            den += w
    return num / den


def state_with(grid, positions, stations, n_waiting=0):
    veh = tuple(VehicleState(i, Position(*p), Position(*p)) for i, p in enumerate(positions))
    return WorldState(0.0, veh, tuple(Position(*s) for s in stations))


# -- selection probabilities -------------------------------------------------

def test_single_station(grid):
    m = DemandModel.uniform(grid, 0.02)
    assert station_selection_probs([Position(0, 0)], m, 50.0, grid) == pytest.approx([1.0])


def test_mirror_stations_equal(grid):
    m = DemandModel.uniform(grid, 0.02)
    p = station_selection_probs([Position(0, 200), Position(600, 400)], m, 50.0, grid)
    assert p == pytest.approx([0.5, 0.5], abs=1e-12)


def test_selection_double_sum():
    g = GridMap(2, 2, 200.0, 4.0)
    m = DemandModel.uniform(g, 0.02)
    stations = [Position(0, 0), Position(200, 100)]
    theta = 30.0
    expected = np.zeros(2)
    for cell in range(4):
        c = g.cell_point(cell)
        k = [math.exp(-g.travel_time(s, c) / theta) for s in stations]
        for j in range(2):
            expected[j] += 0.25 * k[j] / sum(k)
    got = station_selection_probs(stations, m, theta, g)
    assert got == pytest.approx(expected, abs=1e-12)
    assert got.sum() == pytest.approx(1.0, abs=1e-12)


def test_selection_permutation_equivariant(grid):
    m = DemandModel.from_hot_cells(grid, 0.02, [2, 7], [], 10.0)
    st = [Position(0, 0), Position(200, 400), Position(600, 100)]
    p = station_selection_probs(st, m, 70.0, grid)
    perm = [2, 0, 1]
    q = station_selection_probs([st[i] for i in perm], m, 70.0, grid)
    assert q == pytest.approx(p[perm], abs=1e-12)


# -- dynamic t_sj -----------------------------------------------------------

def test_dynamic_single_vehicle(grid):
    s = state_with(grid, [(0, 0)], [(400, 200)])
    assert t_sj_dynamic(s, 0, stats(), 0, grid) == pytest.approx(150.0)


def test_dynamic_equal_times(grid):
    s = state_with(grid, [(0, 200), (200, 0)], [(200, 200), (600, 600)])
    assert t_sj_dynamic(s, 0, stats(), 0, grid) == pytest.approx(50.0)


def test_dynamic_three_vehicles_oracle(grid):
    pos = [(0, 0), (200, 400), (600, 600)]
    s = state_with(grid, pos, [(200, 200), (400, 400)])
    times = [grid.travel_time(p, (200, 200)) for p in pos]
    assert len(set(times)) == 3
    assert t_sj_dynamic(s, 0, stats(60.0), 0, grid) == pytest.approx(
        subset_oracle(times, 3, 2, 60.0), rel=1e-9)


@pytest.mark.parametrize("n_veh,n_c", [(m + c, c) for m in range(1, 7) for c in (0, 1, 2)])
def test_dynamic_matches_subset_oracle(grid, n_veh, n_c):
    rng = np.random.default_rng(100 * n_veh + n_c)
    pos = [grid.cell_point(int(rng.integers(16))) for _ in range(n_veh)]
    dests = [grid.cell_point(int(rng.integers(16))) for _ in range(n_veh)]
    veh = tuple(VehicleState(i, p, d, 1 if p != d else None) for i, (p, d) in enumerate(zip(pos, dests)))
    stations = (Position(200, 200), Position(400, 400), Position(0, 600))
    s = WorldState(0.0, veh, stations)
    for j, st in enumerate(stations):
        times = [grid.travel_time_via(v.position, v.destination, st) for v in veh]
        theta = float(rng.uniform(20, 200))
        got = t_sj_dynamic(s, j, stats(theta), n_c, grid)
        assert got == pytest.approx(subset_oracle(times, n_veh - n_c, 3, theta), rel=1e-9)


def test_dynamic_no_surplus_falls_back(grid):
    s = state_with(grid, [(0, 0), (200, 0)], [(200, 200)])
    assert t_sj_dynamic(s, 0, stats(77.0), 2, grid) == 77.0


def test_dynamic_cap(grid):
    s = state_with(grid, [(0, 0)] * 21, [(200, 200)])
    with pytest.raises(EnumerationLimitError):
        t_sj_dynamic(s, 0, stats(), 0, grid)


# -- static t_sj ------------------------------------------------------------

def test_static_vacant_limit(grid):
    m = DemandModel.uniform(grid, 0.02)
    assert t_sj_static(Position(200, 200), m, stats(o=0.0, vac=42.0), grid) == pytest.approx(42.0)


def test_static_single_cells(grid):
    o, d = np.zeros(16), np.zeros(16)
    o[0], d[15] = 1.0, 1.0
    m = DemandModel(grid, 0.02, o, d)
    st = Position(200, 200)
    c, dd = grid.cell_point(0), grid.cell_point(15)
    expected = grid.travel_time(c, dd) / 2 + grid.travel_time(dd, st)
    assert t_sj_static(st, m, stats(o=1.0), grid) == pytest.approx(expected)


def test_static_exhaustive_2x2():
    g = GridMap(2, 2, 200.0, 4.0)
    m = DemandModel.uniform(g, 0.02)
    st = Position(100, 0)
    occ = sum(0.25 * 0.25 * (g.travel_time(g.cell_point(a), g.cell_point(b)) / 2
                             + g.travel_time(g.cell_point(b), st))
              for a in range(4) for b in range(4))
    got = t_sj_static(st, m, stats(o=0.5, vac=30.0), g)
    assert got == pytest.approx(0.5 * occ + 0.5 * 30.0, rel=1e-12)


def test_static_monotone_in_vacant_time(grid):
    m = DemandModel.uniform(grid, 0.02)
    st = Position(200, 400)
    vals = [t_sj_static(st, m, stats(o=0.3, vac=v), grid) for v in (10.0, 50.0, 90.0)]
    assert vals == sorted(vals)
    full = {t_sj_static(st, m, stats(o=1.0, vac=v), grid) for v in (10.0, 90.0)}
    assert len(full) == 1


# -- targets ----------------------------------------------------------------

def test_targets_product(grid):
    m = DemandModel.uniform(grid, 0.02)
    s = state_with(grid, [(0, 0)], [(200, 200)])
    t = compute_targets("static", s, m, stats(o=0.0, vac=100.0), grid)
    # single station: P = 1, so tau = 100 * 0.02 = 2
    assert t.tau == pytest.approx([2.0])
    assert t.f_c == 0.02


def test_targets_formula(grid):
    m = DemandModel.from_hot_cells(grid, 1 / 50, [10], [3], 10.0)
    s = state_with(grid, [(0, 0), (600, 200)], [(200, 200), (400, 400)])
    for mode in ("static", "dynamic"):
        t = compute_targets(mode, s, m, stats(), grid)
        assert t.tau == pytest.approx(t.t_sj * (1 / 50) * t.p_select)


def test_symmetric_targets(grid):
    m = DemandModel.uniform(grid, 0.02)
    s = state_with(grid, [(0, 0), (600, 600)], [(200, 200), (400, 400)])
    for mode in ("static", "dynamic"):
        t = compute_targets(mode, s, m, stats(), grid)
        assert t.p_select[0] == pytest.approx(t.p_select[1], abs=1e-12)
        assert t.tau[0] == pytest.approx(t.tau[1], abs=1e-12)


def test_unknown_mode(grid):
    with pytest.raises(ValueError):
        compute_targets("bogus", state_with(grid, [(0, 0)], [(0, 0)]),
                        DemandModel.uniform(grid, 0.02), stats(), grid)


# -- running statistics -----------------------------------------------------

def test_first_observation_replaces_prior(grid):
    s = update_stats(OperationalStats.cold_start(grid), Observation("theta_c", 80.0))
    assert s.theta_c == 80.0
    assert s.sample_counts["theta_c"] == 1


def test_two_sample_mean(grid):
    s = OperationalStats.cold_start(grid)
    for v in (60.0, 100.0):
        s = update_stats(s, Observation("theta_s", v))
    assert s.theta_s == pytest.approx(80.0)


def test_running_mean_converges(grid):
    rng = np.random.default_rng(0)
    s = OperationalStats.cold_start(grid)
    for v in rng.exponential(70.0, 1000):
        s = update_stats(s, Observation("theta_s_vac", float(v)))
    assert s.theta_s_vac == pytest.approx(70.0, rel=0.05)


def test_rejects_bad_observations(grid):
    s = OperationalStats.cold_start(grid)
    with pytest.raises(ValueError):
        update_stats(s, Observation("theta_c", 0.0))
    with pytest.raises(ValueError):
        update_stats(s, Observation("occupancy_o", 1.5))
    with pytest.raises(ValueError):
        update_stats(s, Observation("nope", 1.0))

