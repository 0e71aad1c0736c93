"""End-to-end solve and the verification check suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import assembly, volterra
from .assembly import GluedSolution, asymptotic_constant, ide_residual, residual_probes
from .config import RunConfig
from .model import DerivedConstants, derive_constants, choose_u0
from .quadrature import adaptive_quad
from .tail_solver import TailSolution, solve_tail

__all__ = ["PipelineResult", "HypothesisError", "run_pipeline",
           "verification_checks", "pick_barrier"]


class HypothesisError(RuntimeError):
    """The analytic route needs gamma > 1; raised before any work is done."""


@dataclass
class PipelineResult:
    consts: DerivedConstants
    u0: float
    theta: float
    tail: TailSolution
    low: volterra.VolterraSolution
    glued: GluedSolution
    config: RunConfig

    def summary(self) -> dict:
        rep = asymptotic_constant(self.glued, self.consts)
        probes = residual_probes(self.glued)
        res = [ide_residual(self.glued, u, self.config.params, self.config.dist)
               for u in probes]
        return {
            "gamma": self.consts.gamma,
            "alpha": self.consts.alpha,
            "mu": self.consts.mu,
            "u0": self.u0,
            "theta": self.theta,
            "C": self.glued.normalization,
            "C_asym": rep.analytic,
            "C_asym_fitted": rep.fitted,
            "residual_max": max(res),
            "psi": {str(u): float(self.glued.psi(u)) for u in self.config.probes},
        }


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """derive constants -> pick u0 -> far solve -> near solve -> glue."""
    consts = derive_constants(cfg.params)
    if not consts.gamma > 1:
        raise HypothesisError(
            f"gamma = {consts.gamma:.6g} <= 1: the analytic route requires "
            "gamma > 1 (ruin is imminent for gamma <= 1 with full risky "
            "investment); use the Monte-Carlo command instead"
        )
    u0, theta = choose_u0(consts, cfg.dist, safety=cfg.solver.safety)
    tail = solve_tail(consts, cfg.dist, u0, tol=cfg.solver.tol,
                      n_nodes=cfg.solver.tail_nodes)
    problem = volterra.build_problem(tail, consts, cfg.dist,
                                     n_forcing=cfg.solver.forcing_nodes)
    low = volterra.solve_volterra(problem, grid_n=cfg.solver.volterra_n)
    glued = assembly.glue_and_normalize(low, tail, consts, cfg.dist)
    return PipelineResult(consts=consts, u0=u0, theta=theta, tail=tail,
                          low=low, glued=glued, config=cfg)


def pick_barrier(result: PipelineResult, psi_target: float = 1e-3) -> float:
    """Smallest capital level whose ruin probability is below psi_target."""
    rep = asymptotic_constant(result.glued, result.consts)
    b = (rep.analytic / psi_target) ** (1.0 / (result.consts.gamma - 1.0))
    b = max(b, 2.0 * result.u0)
    while result.glued.psi(b) > psi_target:
        b *= 1.25
    return float(b)


def _check_boundary_value(result: PipelineResult) -> tuple:
    """Closed-form value of the density at 0+ vs the marched one."""
    consts, dist = result.consts, result.config.dist
    if consts.mu == 0.0:
        return result.low.g_at_zero, 0.0
    low = result.low
    inner = adaptive_quad(lambda y: low.g(y) * dist.tail(y), 0.0, low.u0,
                          breakpoints=[a for a in dist.atoms if a < low.u0])
    h0 = volterra.tail_income(result.tail, 0.0, consts, dist)
    expected = (h0 + consts.mu * inner) / consts.alpha
    return result.low.g_at_zero, expected


def verification_checks(result: PipelineResult) -> list:
    """Run the cross-cutting invariants; returns (name, passed, detail) rows."""
    cfg = result.config
    consts = result.consts
    glued = result.glued
    checks = []

    probes = residual_probes(glued)
    res = [ide_residual(glued, u, cfg.params, cfg.dist) for u in probes]
    checks.append(("ide_residual_max<=1e-4", max(res) <= 1e-4,
                   f"max residual {max(res):.3e}"))

    ratios = result.tail.ratios
    ok = all(r <= result.theta + 1e-12 for r in ratios)
    worst = max(ratios) if ratios else 0.0
    checks.append(("contraction_ratios<=theta", ok,
                   f"worst ratio {worst:.6f} vs theta {result.theta:.6f}"))

    checks.append(("iterates_monotone", result.tail.monotone, ""))

    # independence from the gluing point: re-solve on [2 u0, inf)
    tail2 = solve_tail(consts, cfg.dist, 2.0 * result.u0, tol=cfg.solver.tol,
                       n_nodes=cfg.solver.tail_nodes)
    us = tail2.grid_u
    diff = np.max(np.abs(result.tail.g(us) - tail2.g(us))
                  * np.exp(consts.gamma * np.log(us)))
    checks.append(("u0_independence", diff <= 10.0 * cfg.solver.tol,
                   f"overlap gap {diff:.3e} vs {10.0 * cfg.solver.tol:.1e}"))

    # growth bound for the near-field solution
    gamma, mu = consts.gamma, consts.mu
    u = result.low.u_nodes
    bound = result.low.kappa_bound * np.exp(
        mu * (result.low.u0 ** gamma - u ** gamma) / (gamma * (gamma - 1.0)))
    ok = bool(np.all(result.low.g_values <= bound * (1.0 + 1e-9)))
    checks.append(("growth_bound", ok, ""))

    got, expected = _check_boundary_value(result)
    scale = max(abs(expected), abs(got), 1e-300)
    tol0 = max(1e-6, 100.0 * (result.low.scheme_error or 0.0) / scale) \
        if math.isfinite(result.low.scheme_error) else 1e-4
    checks.append(("density_at_zero", abs(got - expected) / scale <= tol0,
                   f"got {got:.9e}, closed form {expected:.9e}"))

    checks.append(("phi_at_zero", glued.phi(0.0) == 0.0, ""))

    pr = np.geomspace(result.u0 / 100.0, 100.0 * result.u0, 30)
    phis = glued.phi(pr)
    checks.append(("phi_monotone", bool(np.all(np.diff(phis) > 0)), ""))

    # normalization against an independent quadrature
    u_hi = 100.0 * result.u0
    mass = adaptive_quad(glued.ghat, 0.0, result.u0)
    mass += adaptive_quad(glued.ghat, result.u0, u_hi)
    remainder = (result.tail.w_at_infinity * u_hi ** (1.0 - gamma)
                 / (gamma - 1.0))
    total = glued.normalization * (mass + remainder)
    checks.append(("normalization", abs(total - 1.0) <= 1e-6,
                   f"independent total {total:.9f}"))

    rep = asymptotic_constant(glued, consts)
    ok = (abs(rep.loglog_slope + (gamma - 1.0)) <= 0.01 * (gamma - 1.0)
          and rep.consistent)
    checks.append(("power_law_asymptotics", ok,
                   f"slope {rep.loglog_slope:.4f}, mismatch {rep.mismatch:.2e}"))
    return checks
