"""Fixed-point solve of the density equation on the far domain [u0, inf).

The unknown is stored in weighted form w(u) = u^gamma e^(alpha/u) g(u) on
the compactified grid v = u0/u in (0, 1], so that the limit w -> 1 at
infinity lives at v = 0 and no artificial truncation of the domain is
needed.  Picard iteration of g = g0 + T g converges geometrically with
rate theta = mu E[xi] / u0 < 1 in the weighted sup norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .model import DerivedConstants, JumpDistribution
from .quadrature import integrate_tail_against_F, integrate_weighted

__all__ = [
    "ContractionError",
    "TailSolution",
    "apply_jump_operator",
    "tail_operator_grid",
    "tail_operator_value",
    "solve_tail",
    "chebyshev_v_grid",
]


class ContractionError(RuntimeError):
    """Raised when the fixed-point iteration cannot be run or did not converge."""


def chebyshev_v_grid(n_nodes: int) -> np.ndarray:
    """Chebyshev-Lobatto nodes on (0, 1], clustered at both ends.

    The v = 0 endpoint (u = infinity) is excluded; the limit value there is
    known analytically and handled separately.
    """
    k = np.arange(1, n_nodes + 1)
    return 0.5 * (1.0 - np.cos(np.pi * k / n_nodes))


def apply_jump_operator(g, u, consts: DerivedConstants, dist: JumpDistribution,
                        eps=1e-12, rtol=1e-11):
    """mu * int_0^inf g(u + z) tail(z) dz, the nonlocal term of the equation."""
    if consts.mu == 0.0:
        return 0.0
    return consts.mu * integrate_tail_against_F(g, u, dist, eps=eps, rtol=rtol)


def _weighted_limit_eval(w_interp, v_lo, w_lo):
    """Vectorized w(v) with linear continuation to the exact limit w(0) = 1.

    Inside the grid the shape-preserving interpolant is used; for v below the
    innermost node the value is interpolated linearly between (0, 1) and
    (v_lo, w_lo), which reproduces the leading 1/u decay of w - 1.
    """

    def w(v):
        v = np.asarray(v, dtype=float)
        inner = w_interp(np.clip(v, v_lo, 1.0))
        return np.where(v < v_lo, 1.0 + (w_lo - 1.0) * (v / v_lo), inner)

    return w


def _weighted_eval(w_of_v, u0, gamma, alpha):
    """Build a vectorized evaluator of g from the weighted profile w(v)."""

    def g(x):
        x = np.asarray(x, dtype=float)
        v = np.minimum(u0 / x, 1.0)
        return w_of_v(v) * np.exp(-gamma * np.log(x) - alpha / x)

    return g


def tail_operator_grid(w_of_v, consts: DerivedConstants, dist: JumpDistribution,
                       u0: float, v_nodes: np.ndarray, eps=1e-12, rtol=1e-11):
    """Weighted values of the smoothing operator T applied to g = w / M.

    Takes the weighted profile w as a function of v = u0/u and returns
    M(u) * (T g)(u) at u = u0 / v for every grid node v, computed as
    mu * int_u^inf t^(gamma-2) e^(alpha/t) phi(t) dt with
    phi(t) = int_0^inf g(t+z) tail(z) dz.  All power-law factors are scaled
    relative to t inside the inner integrand, so nothing overflows even for
    large gamma.  The outer integral is evaluated in the compactified
    coordinate through a shape-preserving interpolant of its integrand,
    with the exact v = 0 limit E[xi]/u0 attached (iterates have w -> 1).
    """
    gamma, alpha, mu = consts.gamma, consts.alpha, consts.mu
    if mu == 0.0:
        return np.zeros_like(v_nodes)
    t_nodes = u0 / v_nodes

    def scaled(t):
        # t^gamma phi(t) = int w(t+z) (t/(t+z))^gamma e^(-alpha/(t+z)) F̄(z) dz
        log_t = math.log(t)

        def integrand(x):
            x = np.asarray(x, dtype=float)
            return w_of_v(u0 / x) * np.exp(-gamma * (np.log(x) - log_t)
                                           - alpha / x)

        return integrate_tail_against_F(integrand, t, dist, eps=eps, rtol=rtol)

    q = np.array([scaled(t) for t in t_nodes])
    h = q * np.exp(alpha * v_nodes / u0) / u0
    h0 = dist.mean / u0
    v_full = np.concatenate(([0.0], v_nodes))
    h_full = np.concatenate(([h0], h))
    anti = PchipInterpolator(v_full, h_full).antiderivative()
    return mu * (anti(v_nodes) - anti(0.0))


def tail_operator_value(g, u, consts: DerivedConstants, dist: JumpDistribution,
                        eps=1e-12, rtol=1e-9):
    """(T g)(u) by nested adaptive quadrature; slow, used as an oracle."""
    gamma, alpha, mu = consts.gamma, consts.alpha, consts.mu
    if mu == 0.0:
        return 0.0

    def phi(t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.array([integrate_tail_against_F(g, ti, dist, eps=eps, rtol=rtol)
                         for ti in t])

    outer = integrate_weighted(phi, u, np.inf, gamma, alpha, rtol=rtol)
    return mu * outer * math.exp(-gamma * math.log(u) - alpha / u)


@dataclass
class TailSolution:
    """Fixed point g on [u0, inf) in weighted storage.

    ``w_values[k]`` holds u^gamma e^(alpha/u) g(u) at u = u0 / v_nodes[k];
    beyond the largest grid abscissa the weighted value is interpolated
    linearly in v = u0/u toward its exact limit 1 at infinity, which
    reproduces the leading 1/u decay of w - 1.
    """

    u0: float
    gamma: float
    alpha: float
    mu: float
    theta: float
    v_nodes: np.ndarray
    w_values: np.ndarray
    deltas: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    monotone: bool = True
    iterations: int = 0
    _w_interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        self._w_interp = PchipInterpolator(self.v_nodes, self.w_values,
                                           extrapolate=False)

    @property
    def grid_u(self) -> np.ndarray:
        return self.u0 / self.v_nodes

    @property
    def w_at_infinity(self) -> float:
        """Weighted value at the outermost node; the true limit is 1."""
        return float(self.w_values[0])

    def w(self, u):
        """Weighted value u^gamma e^(alpha/u) g(u)."""
        u = np.asarray(u, dtype=float)
        v = np.minimum(self.u0 / u, 1.0)
        w_of_v = _weighted_limit_eval(self._w_interp, self.v_nodes[0],
                                      self.w_values[0])
        return w_of_v(v)

    def g(self, u):
        """Evaluate the solution for u >= u0 (vectorized)."""
        u = np.asarray(u, dtype=float)
        return self.w(u) * np.exp(-self.gamma * np.log(u) - self.alpha / u)

    def g_evaluator(self):
        w_of_v = _weighted_limit_eval(self._w_interp, self.v_nodes[0],
                                      self.w_values[0])
        return _weighted_eval(w_of_v, self.u0, self.gamma, self.alpha)


def solve_tail(consts: DerivedConstants, dist: JumpDistribution, u0: float,
               tol: float = 1e-10, n_nodes: int = 256, max_iter: int = 200,
               quad_eps: float = 1e-12, quad_rtol: float = 1e-11) -> TailSolution:
    """Picard iteration for the weighted fixed point on [u0, inf).

    Starts from the explicit solution of the jump-free equation (w = 1) and
    stops once the weighted-norm update is below tol * (1 - theta), which
    bounds the distance to the fixed point by tol.
    """
    if not consts.gamma > 0:
        raise ContractionError(f"tail solve requires gamma > 0, got {consts.gamma}")
    theta = consts.mu * dist.mean / u0
    if theta >= 1.0:
        raise ContractionError(
            f"u0 = {u0} gives theta = {theta:.6g} >= 1: no contraction "
            f"(need u0 > mu E[xi] = {consts.mu * dist.mean:.6g})"
        )
    v = chebyshev_v_grid(n_nodes)
    w = np.ones_like(v)
    sol_kwargs = dict(u0=u0, gamma=consts.gamma, alpha=consts.alpha,
                      mu=consts.mu, theta=theta, v_nodes=v)
    if consts.mu == 0.0:
        return TailSolution(w_values=w, deltas=[], ratios=[], monotone=True,
                            iterations=0, **sol_kwargs)

    # e^(-alpha/u) factor converting |delta w| into the weighted sup norm
    norm_weight = np.exp(-consts.alpha * v / u0)
    deltas: list = []
    ratios: list = []
    monotone = True
    for it in range(1, max_iter + 1):
        w_interp = PchipInterpolator(v, w, extrapolate=False)
        w_of_v = _weighted_limit_eval(w_interp, v[0], w[0])
        w_new = 1.0 + tail_operator_grid(w_of_v, consts, dist, u0, v,
                                         eps=quad_eps, rtol=quad_rtol)
        if np.any(w_new < w - 1e-13):
            monotone = False
        delta = float(np.max(np.abs(w_new - w) * norm_weight))
        if deltas and deltas[-1] > 0:
            ratios.append(delta / deltas[-1])
        deltas.append(delta)
        w = w_new
        if delta <= tol * (1.0 - theta):
            return TailSolution(w_values=w, deltas=deltas, ratios=ratios,
                                monotone=monotone, iterations=it, **sol_kwargs)
    raise ContractionError(
        f"no convergence after {max_iter} iterations; deltas = {deltas[-5:]}"
    )
