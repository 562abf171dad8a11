from .gp import HighSinrError, gp_solve
from .grid import brute_force_oracle
from .problem import InfeasibleProblem, PowerProblem, SolverReport, full_power, interior_start
from .wmmse import InfeasibleStart, mmse_receiver, mse_e_k, surrogate, wmmse_solve

__all__ = [
    "HighSinrError", "InfeasibleProblem", "InfeasibleStart", "PowerProblem", "SolverReport",
    "brute_force_oracle", "full_power", "gp_solve", "interior_start", "mmse_receiver",
    "mse_e_k", "surrogate", "wmmse_solve",
]
