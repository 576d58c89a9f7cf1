from ..state import VehicleState, WorldState
from .engine import SimConfig, Simulation, Vehicle, run_trial
from .metrics import METRICS, MetricsReport, TrialLog, aggregate, collect_metrics
from .policies import POLICY_KINDS, Policy, SIM_SOLVER, dispatch_greedy, dispatch_qubo

__all__ = [
    "METRICS", "MetricsReport", "POLICY_KINDS", "Policy", "SIM_SOLVER", "SimConfig",
    "Simulation", "TrialLog", "Vehicle", "VehicleState", "WorldState", "aggregate",
    "collect_metrics", "dispatch_greedy", "dispatch_qubo", "run_trial",
]
