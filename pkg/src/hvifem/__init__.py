"""P1 finite elements for a semipermeable-media hemivariational inequality."""
from .coefficients import (ProblemSpec, estimate_theta, get_problem, load_problem_config,
                           register_problem, registered_problems)
from .errors import HviError
from .fem import assemble
from .mesh import DiscreteField, Mesh, build_uniform_mesh, evaluate_at, prolong
from .nonsmooth import PotentialParams, Selection, clarke_j0, estimate_hj_constants
from .solver import (Diagnostics, HviSolution, SolverParams, cg_solve, diagnose,
                     estimate_lambda_L, estimate_mu_L, smallness_check, solve_hvi,
                     verify_discrete_hvi)
from .study import (ConvergenceRow, StudyConfig, discrete_norm, emit_table,
                    run_convergence_study)

__all__ = [
    "ConvergenceRow", "Diagnostics", "DiscreteField", "HviError", "HviSolution", "Mesh",
    "PotentialParams", "ProblemSpec", "Selection", "SolverParams", "StudyConfig", "assemble",
    "build_uniform_mesh", "cg_solve", "clarke_j0", "diagnose", "discrete_norm", "emit_table",
    "estimate_hj_constants", "estimate_lambda_L", "estimate_mu_L", "estimate_theta",
    "evaluate_at", "get_problem", "load_problem_config", "prolong", "register_problem",
    "registered_problems", "run_convergence_study", "smallness_check", "solve_hvi",
    "verify_discrete_hvi",
]
