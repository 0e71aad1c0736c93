"""Shared numerical integration utilities.

Composite Gauss-Legendre quadrature with panel doubling, semi-infinite
integrals against a jump-size tail function, and weighted integrals with
the factor t^(gamma-2) e^(alpha/t).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = [
    "QuadratureError",
    "GridFunction",
    "adaptive_quad",
    "integrate_tail_against_F",
    "integrate_weighted",
]


class QuadratureError(RuntimeError):
    """Raised when panel refinement fails to stabilize an integral."""

    def __init__(self, message, last=None, previous=None):
        super().__init__(message)
        self.last = last
        self.previous = previous


_GL_CACHE: dict = {}


def _gl_rule(order: int):
    if order not in _GL_CACHE:
        x, w = np.polynomial.legendre.leggauss(order)
        _GL_CACHE[order] = (x, w)
    return _GL_CACHE[order]


def _composite_gl(f, edges, order):
    """Gauss-Legendre quadrature on the panels defined by ``edges``."""
    x, w = _gl_rule(order)
    a = edges[:-1]
    b = edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return float(np.dot(weights, np.asarray(f(nodes), dtype=float)))


def adaptive_quad(f, a, b, rtol=1e-11, atol=1e-300, breakpoints=(),
                  order=12, n0=4, max_doublings=12):
    """Integrate a vectorized ``f`` over [a, b] with panel doubling.

    The panel set starts from ``n0`` panels per sub-segment (segments are
    delimited by interior breakpoints) and doubles until two consecutive
    estimates agree to ``rtol`` (relative) or ``atol`` (absolute).
    Raises :class:`QuadratureError` with the last two estimates otherwise.
    """
    a = float(a)
    b = float(b)
    if b <= a:
        return 0.0
    pts = sorted({a, b} | {float(p) for p in breakpoints if a < p < b})
    n = n0
    estimates = []
    for _ in range(max_doublings + 1):
        edges = np.unique(np.concatenate(
            [np.linspace(lo, hi, n + 1) for lo, hi in zip(pts[:-1], pts[1:])]
        ))
        cur = _composite_gl(f, edges, order)
        if estimates:
            err = abs(cur - estimates[-1])
            if err <= rtol * max(abs(cur), abs(estimates[-1])) or err <= atol:
                return cur
        estimates.append(cur)
        n *= 2
    raise QuadratureError(
        f"quadrature did not stabilize on [{a}, {b}]: "
        f"last={cur!r}, previous={estimates[-2]!r}",
        last=cur, previous=estimates[-2],
    )


@dataclass
class GridFunction:
    """A function known on a strictly increasing node set.

    Evaluation between nodes uses monotone (shape-preserving) cubic
    interpolation; evaluation beyond the last node follows the declared
    ``extrapolation`` rule: "error", "constant" (hold the boundary value)
    or a callable.  Evaluation below the first node mirrors the same rule.
    """

    nodes: np.ndarray
    values: np.ndarray
    extrapolation: object = "error"
    _interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.size < 2:
            raise ValueError("need at least two nodes")
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("nodes must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        self._interp = PchipInterpolator(self.nodes, self.values, extrapolate=False)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.empty_like(x)
        inside = (x >= self.nodes[0]) & (x <= self.nodes[-1])
        out[inside] = self._interp(x[inside])
        if np.any(~inside):
            if callable(self.extrapolation):
                out[~inside] = self.extrapolation(x[~inside])
            elif self.extrapolation == "constant":
                out[~inside] = np.where(x[~inside] < self.nodes[0],
                                        self.values[0], self.values[-1])
            else:
                raise ValueError(
                    f"evaluation outside [{self.nodes[0]}, {self.nodes[-1]}] "
                    "with extrapolation='error'"
                )
        return float(out[0]) if scalar else out

    def antiderivative(self):
        return self._interp.antiderivative()

    def derivative(self):
        return self._interp.derivative()


def truncation_point(dist, eps):
    """Smallest z (up to bisection slack) with int_z^inf tail <= eps * mean."""
    target = eps * dist.mean
    hi = max(dist.mean, 1.0)
    for _ in range(200):
        if float(dist.integrated_tail(hi)) <= target:
            break
        hi *= 2.0
    else:
        raise QuadratureError("tail of the jump distribution decays too slowly")
    lo = 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if float(dist.integrated_tail(mid)) <= target:
            hi = mid
        else:
            lo = mid
    return hi


def integrate_tail_against_F(g, u, dist, eps=1e-12, rtol=1e-11,
                             breakpoints=()):
    """int_0^inf g(u + z) tail(z) dz with controlled tail truncation.

    The domain is cut at z_max where the remaining tail mass of F is below
    eps * E[xi]; the neglected remainder is bounded by
    sup_{x >= u+z_max} |g(x)| * eps * E[xi] and is not added back.  Extra
    ``breakpoints`` (in z) mark known kinks of g(u + z).
    """
    z_max = truncation_point(dist, eps)
    bps = [p for p in dist.atoms if 0.0 < p < z_max]
    bps += [p for p in breakpoints if 0.0 < p < z_max]
    # heavy tails put z_max many decades out; decade breakpoints keep the
    # uniform-panel refinement effective on power-law integrands
    d = max(dist.mean, 1e-12)
    while d < z_max:
        if d > 0.0:
            bps.append(d)
        d *= 10.0
    return adaptive_quad(lambda z: np.asarray(g(u + z)) * dist.tail(z),
                         0.0, z_max, rtol=rtol, breakpoints=bps)


def integrate_weighted(g, lo, hi, gamma, alpha, rtol=1e-11):
    """int_lo^hi t^(gamma-2) e^(alpha/t) g(t) dt, 0 < lo < hi <= inf.

    An infinite upper limit is handled by the substitution s = 1/t, which
    requires s^(-gamma) g(1/s) to stay bounded as s -> 0, i.e. g must decay
    at least like t^(-gamma).
    """
    if not lo > 0:
        raise ValueError("lo must be > 0")
    if np.isinf(hi):
        def integrand(s):
            t = 1.0 / s
            return np.exp(-gamma * np.log(s) + alpha * s) * np.asarray(g(t))

        val = adaptive_quad(integrand, 0.0, 1.0 / lo, rtol=rtol)
        if not np.isfinite(val):
            raise QuadratureError("weighted integrand is not integrable up to infinity")
        return val
    if hi <= lo:
        return 0.0

    def integrand(t):
        return np.exp((gamma - 2.0) * np.log(t) + alpha / t) * np.asarray(g(t))

    return adaptive_quad(integrand, lo, hi, rtol=rtol)
