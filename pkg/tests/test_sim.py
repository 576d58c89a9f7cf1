import dataclasses
import math

import numpy as np
import pytest

from mmdp.demand import CustomerRequest, DemandModel
from mmdp.qubo import QuboWeights, build_proposed, decode
from mmdp.sim import (Policy, SimConfig, Simulation, TrialLog, collect_metrics, dispatch_greedy,
                      dispatch_qubo, run_trial)
from mmdp.sim.policies import DispatchContext
from mmdp.solver import SolverParams, brute_force
from mmdp.state import VehicleState, WorldState
from mmdp.targets import OperationalStats, compute_targets
from mmdp.world import GridMap, Position

GRID = GridMap(4, 4, 200.0, 4.0)
P = Position
QUICK = SolverParams(replicas=8, sweeps=300, reads=3)


def config(n_vehicles=1, starts=None, duration=500.0, rate=0.0, stations=(P(0, 0),), **kw):
    return SimConfig(GRID, tuple(stations), DemandModel.uniform(GRID, rate), n_vehicles,
                     tuple(starts) if starts else None, duration, **kw)


def ctx(rate=0.02, seed=0):
    return DispatchContext(GRID, DemandModel.uniform(GRID, rate), OperationalStats.cold_start(GRID), seed)


def fleet(*positions):
    return tuple(VehicleState(i, P(*p), P(*p)) for i, p in enumerate(positions))


# -- greedy -----------------------------------------------------------------

def test_greedy_nearer_vehicle_serves():
    st = WorldState(0.0, fleet((0, 0), (400, 200)), (P(600, 600), P(0, 200)),
                    (CustomerRequest(0, P(400, 0), P(0, 600), 0.0),))
    # vehicle 0 is 100 s away, vehicle 1 is 50 s away
    plans = dispatch_greedy(st, GRID)
    assert plans == {1: [("customer", 0)], 0: [("station", 1)]}


def test_greedy_no_customers():
    st = WorldState(0.0, fleet((0, 0), (600, 600)), (P(200, 0), P(400, 600)))
    assert dispatch_greedy(st, GRID) == {0: [("station", 0)], 1: [("station", 1)]}


def test_greedy_wait_tie_lower_id_first():
    custs = (CustomerRequest(5, P(600, 0), P(0, 0), 3.0), CustomerRequest(2, P(0, 600), P(0, 0), 3.0))
    st = WorldState(10.0, fleet((0, 400)), (P(0, 0),), custs)
    assert dispatch_greedy(st, GRID) == {0: [("customer", 2)]}


def test_greedy_uses_via_time_for_occupied():
    veh = (VehicleState(0, P(0, 0), P(600, 0), 7), VehicleState(1, P(0, 400), P(0, 400)))
    st = WorldState(0.0, veh, (P(600, 600),), (CustomerRequest(0, P(0, 200), P(0, 0), 0.0),))
    # vehicle 0 is closer but must first drive 150 s to its drop-off
    assert dispatch_greedy(st, GRID)[1] == [("customer", 0)]


# -- QUBO dispatch ----------------------------------------------------------

def test_qubo_single_vehicle_single_customer():
    st = WorldState(0.0, fleet((0, 0)), (P(200, 200),), (CustomerRequest(4, P(600, 600), P(0, 0), 0.0),))
    # a large station target would outweigh the one-vehicle-per-customer penalty
    plans, fell_back = dispatch_qubo(st, Policy("proposed_static", params=QUICK), ctx(rate=0.002))
    assert plans == {0: [("customer", 4)]} and not fell_back


def test_qubo_matches_ground_state():
    st = WorldState(0.0, fleet((0, 0), (600, 200), (200, 600)), (P(200, 200), P(400, 400)),
                    (CustomerRequest(0, P(600, 400), P(0, 0), 0.0),))
    policy = Policy("proposed_dynamic", params=QUICK)
    c = ctx()
    targets = compute_targets("dynamic", st, c.demand, c.stats, GRID)
    problem = build_proposed(st, targets, policy.weights, GRID)
    ground, _ = brute_force(problem)
    expected = decode(problem, ground)
    plans, _ = dispatch_qubo(st, policy, c)
    got = [plans[i] for i in range(3)]
    want = [[("customer", 0)] if t[0] == "customer" else [t] for t in expected.targets]
    assert got == want


def test_vrp_single_vehicle_two_customers():
    custs = (CustomerRequest(0, P(200, 0), P(600, 0), 0.0), CustomerRequest(1, P(0, 400), P(0, 600), 1.0))
    st = WorldState(2.0, fleet((0, 0)), (P(400, 400),), custs)
    plans, fell_back = dispatch_qubo(st, Policy("vrp", params=QUICK), ctx())
    assert not fell_back
    assert sorted(t for t in plans[0]) == [("customer", 0), ("customer", 1)]


def test_qubo_truncates_to_fleet_size():
    custs = tuple(CustomerRequest(k, P(200 * k, 0), P(0, 600), float(k)) for k in range(4))
    st = WorldState(10.0, fleet((0, 0), (600, 600)), (P(200, 200),), custs)
    plans, _ = dispatch_qubo(st, Policy("proposed_static", params=QUICK), ctx())
    served = {ref for plan in plans.values() for kind, ref in plan if kind == "customer"}
    assert served <= {0, 1}


# -- engine -----------------------------------------------------------------

def test_demand_free_run_parks_at_stations():
    cfg = config(3, [P(0, 0), P(600, 600), P(200, 400)], 300.0, stations=(P(200, 200), P(600, 400)))
    sim = Simulation(cfg, Policy("greedy"), 0)
    rep = sim.run()
    assert all(v.position in cfg.stations for v in sim.vehicles)
    assert math.isnan(rep.wait_time) and rep.served == 0
    assert not math.isnan(rep.station_dispatch_time)


def test_colocated_customer_zero_wait():
    cfg = config(1, [P(0, 0)], 100.0)
    arr = [CustomerRequest(0, P(0, 0), P(200, 0), 10.0)]
    sim = Simulation(cfg, Policy("greedy"), 0, arrivals=arr)
    rep = sim.run()
    assert rep.wait_time == 0.0 and rep.customer_dispatch_time == 0.0


def test_scripted_two_customer_trace():
    cfg = config(1, [P(0, 0)], 500.0)
    arr = [CustomerRequest(0, P(200, 0), P(400, 0), 10.0), CustomerRequest(1, P(0, 200), P(0, 400), 20.0)]
    sim = Simulation(cfg, Policy("greedy"), 0, arrivals=arr)
    rep = sim.run()
    # A: picked up at 60.  Drop-off at 110, then 150 s to B, picked up at 260.
    assert sim.log.waits == pytest.approx([50.0, 240.0])
    assert rep.wait_time == pytest.approx(145.0)
    assert sim.log.customer_dispatch == pytest.approx([50.0, 150.0])
    # back to the station after dropping B at 310
    assert sim.log.station_dispatch == pytest.approx([0.0, 100.0])
    assert rep.num_waiting == pytest.approx((50 + 240) / 500)
    assert rep.total_travel_distance_km == pytest.approx(1.6)
    assert math.isnan(rep.inter_vehicle_distance)
    assert sim.vehicles[0].position == P(0, 0)


def test_num_waiting_step_integral():
    log = TrialLog(duration=100.0, queue_area=2 * 50.0)
    assert collect_metrics(log).num_waiting == 1.0


def test_occupied_vehicle_keeps_trip():
    cfg = config(1, [P(0, 0)], 500.0, stations=(P(0, 0), P(600, 600)))
    arr = [CustomerRequest(0, P(0, 0), P(600, 0), 0.0)]
    sim = Simulation(cfg, Policy("greedy"), 0, arrivals=arr)
    sim.waiting.append(0)
    sim.log.created = 1
    sim.dispatch_round()
    sim._settle()
    v = sim.vehicles[0]
    assert v.passenger == 0
    sim._advance(50.0)
    sim.apply_assignment({0: [("station", 1)]})
    assert v.plan == [("dropoff", 0), ("station", 1)]
    assert v.path[-1] == P(600, 0)
    assert v.leg_end == pytest.approx(150.0)


def test_midedge_retarget():
    cfg = config(1, [P(0, 0)], 500.0, stations=(P(600, 0), P(0, 600)))
    sim = Simulation(cfg, Policy("greedy"), 0, arrivals=[])
    sim.apply_assignment({0: [("station", 0)]})
    sim._advance(25.0)
    v = sim.vehicles[0]
    assert v.position == P(100, 0)
    sim.apply_assignment({0: [("station", 1)]})
    assert v.path[0] == P(100, 0)
    assert v.leg_end == pytest.approx(25.0 + 700 / 4)


def test_identical_reassignment_not_double_counted():
    cfg = config(2, [P(0, 0), P(600, 600)], 500.0, stations=(P(200, 200),))
    sim = Simulation(cfg, Policy("greedy"), 0, arrivals=[CustomerRequest(0, P(400, 0), P(0, 0), 0.0)])
    sim.waiting.append(0)
    plans = {0: [("customer", 0)], 1: [("station", 0)]}
    sim.apply_assignment(plans)
    n_c, n_s = len(sim.log.customer_dispatch), len(sim.log.station_dispatch)
    sim.apply_assignment(plans)
    assert (len(sim.log.customer_dispatch), len(sim.log.station_dispatch)) == (n_c, n_s)


def test_apply_rejects_unknown_ids():
    sim = Simulation(config(1, [P(0, 0)]), Policy("greedy"), 0, arrivals=[])
    with pytest.raises(ValueError):
        sim.apply_assignment({9: [("station", 0)]})
    with pytest.raises(ValueError):
        sim.apply_assignment({0: [("customer", 3)]})


class CheckedSimulation(Simulation):
    def _settle(self):
        out = super()._settle()
        assert self.conservation_ok()
        return out


@pytest.mark.parametrize("kind", ["greedy", "proposed_dynamic", "vrp"])
def test_conservation_and_continuity(kind):
    cfg = config(4, None, 600.0, rate=1 / 30, stations=(P(200, 200), P(400, 400)))
    sim = CheckedSimulation(cfg, Policy(kind, params=QUICK), 3, trace=True)
    rep = sim.run()
    assert sim.conservation_ok()
    assert rep.created > 0
    for (t0, a), (t1, b) in zip(sim.trace, sim.trace[1:]):
        for p, q in zip(a, b):
            assert GRID.distance(p, q) <= GRID.speed * (t1 - t0) + 1e-6


def test_wait_at_least_dispatch_estimate():
    cfg = config(3, None, 2000.0, rate=1 / 40, stations=(P(200, 200), P(400, 400)))
    sim = Simulation(cfg, Policy("greedy"), 5)
    sim.run()
    assert sim.pickup_time
    for cid, t in sim.pickup_time.items():
        wait = t - sim.customers[cid].request_time
        assert wait >= sim.cust_dispatch_time[cid] - 1e-6


def test_deterministic_report():
    cfg = config(4, None, 800.0, rate=1 / 40, stations=(P(200, 200), P(400, 400)))
    policy = Policy("proposed_static", params=QUICK)
    assert run_trial(cfg, policy, 11) == run_trial(cfg, policy, 11)


def test_config_validation():
    with pytest.raises(ValueError):
        config(0)
    with pytest.raises(ValueError):
        config(2, [P(0, 0)])
    with pytest.raises(ValueError):
        config(1, [P(100, 100)])
    with pytest.raises(ValueError):
        Policy("vrp", schedule="reverse")
