"""Survival and ruin probabilities for the annuity model with risky investment.

The library splits the density of the survival probability at a gluing
point u0: a contraction fixed point handles [u0, inf) and a second-kind
Volterra equation handles (0, u0].  The glued, normalized solution is
cross-validated against a jump-diffusion Monte-Carlo simulation.
"""

from .assembly import (
    GluedSolution,
    asymptotic_constant,
    glue_and_normalize,
    ide_residual,
)
from .config import RunConfig, load_config
from .mc import MCConfig, MCEstimate, estimate_ruin, simulate_path
from .model import (
    DerivedConstants,
    JumpDistribution,
    ModelParams,
    choose_u0,
    derive_constants,
    deterministic_dist,
    exponential_dist,
    pareto_dist,
)
from .pipeline import HypothesisError, PipelineResult, run_pipeline
from .tail_solver import TailSolution, solve_tail
from .volterra import VolterraProblem, VolterraSolution, build_problem, solve_volterra

__all__ = [
    "DerivedConstants",
    "GluedSolution",
    "HypothesisError",
    "JumpDistribution",
    "MCConfig",
    "MCEstimate",
    "ModelParams",
    "PipelineResult",
    "RunConfig",
    "TailSolution",
    "VolterraProblem",
    "VolterraSolution",
    "asymptotic_constant",
    "build_problem",
    "choose_u0",
    "derive_constants",
    "deterministic_dist",
    "estimate_ruin",
    "exponential_dist",
    "glue_and_normalize",
    "ide_residual",
    "load_config",
    "pareto_dist",
    "run_pipeline",
    "simulate_path",
    "solve_tail",
    "solve_volterra",
]

__version__ = "0.1.0"
