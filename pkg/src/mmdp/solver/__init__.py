from .anneal import SolveReport, SolverParams, qubo_to_ising, solve_sa, solve_sqa
from .exact import brute_force
from .initial import greedy_initial_state
from .metrics import residual_energy, tts
from .schedule import AnnealSchedule

__all__ = [
    "AnnealSchedule", "SolveReport", "SolverParams", "brute_force",
    "greedy_initial_state", "qubo_to_ising", "residual_energy", "solve_sa",
    "solve_sqa", "tts",
]
