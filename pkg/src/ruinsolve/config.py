"""JSON run configuration shared by all CLI commands."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .model import (
    JumpDistribution,
    ModelParams,
    deterministic_dist,
    exponential_dist,
    pareto_dist,
)

__all__ = ["SolverSettings", "MCSettings", "RunConfig",
           "build_distribution", "load_config", "config_from_dict"]


@dataclass(frozen=True)
class SolverSettings:
    safety: float = 2.0
    tol: float = 1e-10
    tail_nodes: int = 256
    volterra_n: int = 512
    forcing_nodes: int = 161

    def __post_init__(self):
        if not self.safety > 1:
            raise ValueError("solver.safety must be > 1")
        if not self.tol > 0:
            raise ValueError("solver.tol must be > 0")


@dataclass(frozen=True)
class MCSettings:
    horizon: float = 50.0
    paths: int = 10000
    dt: float = 0.01
    seed: int = 0
    barrier: float | None = None   # default: picked from the solver solution


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams
    dist: JumpDistribution
    solver: SolverSettings = field(default_factory=SolverSettings)
    mc: MCSettings = field(default_factory=MCSettings)
    probes: tuple = (1.0, 5.0, 10.0)


def build_distribution(doc: dict) -> JumpDistribution:
    kind = doc.get("kind")
    params = doc.get("params", {})
    if kind == "exponential":
        return exponential_dist(params["mean"])
    if kind == "pareto":
        return pareto_dist(params["shape"], params["scale"])
    if kind == "deterministic":
        return deterministic_dist(params["value"])
    raise ValueError(f"unknown distribution kind {kind!r}")


def config_from_dict(doc: dict) -> RunConfig:
    params = ModelParams(
        a=float(doc["a"]), r=float(doc["r"]), sigma=float(doc["sigma"]),
        kappa=float(doc["kappa"]), c=float(doc["c"]), lam=float(doc["lambda"]),
    )
    dist = build_distribution(doc["distribution"])
    solver = SolverSettings(**doc.get("solver", {}))
    mc = MCSettings(**doc.get("mc", {}))
    probes = tuple(float(p) for p in doc.get("probes", (1.0, 5.0, 10.0)))
    return RunConfig(params=params, dist=dist, solver=solver, mc=mc,
                     probes=probes)


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def apply_overrides(cfg: RunConfig, *, seed=None, safety=None, tol=None,
                    paths=None, horizon=None) -> RunConfig:
    """Apply CLI flag overrides on top of the config file."""
    solver = cfg.solver
    mc = cfg.mc
    if safety is not None:
        solver = replace(solver, safety=safety)
    if tol is not None:
        solver = replace(solver, tol=tol)
    if seed is not None:
        mc = replace(mc, seed=seed)
    if paths is not None:
        mc = replace(mc, paths=paths)
    if horizon is not None:
        mc = replace(mc, horizon=horizon)
    return replace(cfg, solver=solver, mc=mc)
