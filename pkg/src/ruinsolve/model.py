"""Model parameters, reduced constants and jump-size distributions.

The capital reserve follows a linear SDE with multiplicative noise plus a
compound-Poisson income stream.  Everything downstream works with three
reduced constants (gamma, alpha, mu) obtained by dividing the generator by
the diffusion coefficient kappa^2 sigma^2 / 2.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ModelParams:
    """Primitive parameters of the reserve process.

    a      drift of the risky asset (1/time)
    r      riskless rate (1/time)
    sigma  volatility of the risky asset (1/sqrt(time)), > 0
    kappa  fraction of the reserve held in the risky asset, in (0, 1]
    c      annuity payout rate (currency/time), > 0
    lam    jump intensity (1/time), >= 0 (lam = 0 gives the jump-free
           degenerate model used as a closed-form check)
    """

    a: float
    r: float
    sigma: float
    kappa: float
    c: float
    lam: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0 < self.kappa <= 1:
            raise ValueError(f"kappa must be in (0, 1], got {self.kappa}")
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        for name in ("a", "r"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def drift(self) -> float:
        """Effective linear drift (a - r) kappa + r of the invested reserve."""
        return (self.a - self.r) * self.kappa + self.r

    @property
    def volatility(self) -> float:
        """Effective volatility kappa * sigma of the invested reserve."""
        return self.kappa * self.sigma


@dataclass(frozen=True)
class DerivedConstants:
    """Reduced constants of the first-order equation for the density g = Phi'.

    gamma = 2((a-r)kappa + r) / (kappa^2 sigma^2)   (dimensionless)
    alpha = 2c / (kappa^2 sigma^2)                  (currency)
    mu    = 2 lambda / (kappa^2 sigma^2)            (1/currency)

    The analytic pipeline requires gamma > 1; the tail fixed point alone
    only needs gamma > 0.
    """

    gamma: float
    alpha: float
    mu: float

    def __post_init__(self):
        for name in ("gamma", "alpha", "mu"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")


def derive_constants(params: ModelParams) -> DerivedConstants:
    """Reduce the six primitive parameters to (gamma, alpha, mu)."""
    denom = params.kappa ** 2 * params.sigma ** 2
    return DerivedConstants(
        gamma=2.0 * params.drift / denom,
        alpha=2.0 * params.c / denom,
        mu=2.0 * params.lam / denom,
    )


class JumpDistribution(ABC):
    """Distribution of the (strictly positive) jump sizes.

    Implementations must have F(0) = 0 and a finite mean.  ``tail_left`` is
    the left limit of the tail function, which differs from ``tail`` only at
    atoms; it is what enters the kernel limits at the origin.
    """

    #: locations of atoms of F (empty for continuous distributions)
    atoms: tuple = ()

    @property
    @abstractmethod
    def mean(self) -> float:
        """E[xi], finite by assumption."""

    @abstractmethod
    def tail(self, z):
        """Tail function 1 - F(z); equals 1 for z <= 0.  Vectorized."""

    @abstractmethod
    def tail_left(self, z):
        """Left limit of the tail function at z.  Vectorized."""

    @abstractmethod
    def integrated_tail(self, z):
        """Integral of the tail function over [z, infinity), z >= 0."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size=None):
        """Draw jump sizes; strictly positive."""

    def pdf(self, z):
        """Density of F where one exists; None otherwise."""
        return None


class ExponentialJumps(JumpDistribution):
    """Exponential jump sizes with the given mean."""

    def __init__(self, mean: float):
        if not mean > 0:
            raise ValueError(f"mean must be > 0, got {mean}")
        self._mean = float(mean)

    @property
    def mean(self) -> float:
        return self._mean

    def tail(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z <= 0, 1.0, np.exp(-np.maximum(z, 0.0) / self._mean))

    def tail_left(self, z):
        return self.tail(z)

    def integrated_tail(self, z):
        z = np.asarray(z, dtype=float)
        return self._mean * np.where(z <= 0, 1.0, np.exp(-np.maximum(z, 0.0) / self._mean))

    def sample(self, rng, size=None):
        return rng.exponential(self._mean, size=size)

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z < 0, 0.0, np.exp(-np.maximum(z, 0.0) / self._mean) / self._mean)

    def __repr__(self):
        return f"ExponentialJumps(mean={self._mean})"


class ParetoJumps(JumpDistribution):
    """Lomax (Pareto type II) jumps: tail (1 + z/scale)^(-shape), shape > 1."""

    def __init__(self, shape: float, scale: float):
        if not shape > 1:
            raise ValueError(f"shape must be > 1 for a finite mean, got {shape}")
        if not scale > 0:
            raise ValueError(f"scale must be > 0, got {scale}")
        self.shape = float(shape)
        self.scale = float(scale)

    @property
    def mean(self) -> float:
        return self.scale / (self.shape - 1.0)

    def tail(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z <= 0, 1.0, (1.0 + np.maximum(z, 0.0) / self.scale) ** (-self.shape))

    def tail_left(self, z):
        return self.tail(z)

    def integrated_tail(self, z):
        z = np.asarray(z, dtype=float)
        return (
            self.scale
            / (self.shape - 1.0)
            * np.where(z <= 0, 1.0, (1.0 + np.maximum(z, 0.0) / self.scale) ** (1.0 - self.shape))
        )

    def sample(self, rng, size=None):
        # inverse transform: F^-1(q) = scale * ((1-q)^(-1/shape) - 1)
        q = rng.random(size=size)
        return self.scale * ((1.0 - q) ** (-1.0 / self.shape) - 1.0)

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(
            z < 0,
            0.0,
            self.shape / self.scale * (1.0 + np.maximum(z, 0.0) / self.scale) ** (-self.shape - 1.0),
        )

    def __repr__(self):
        return f"ParetoJumps(shape={self.shape}, scale={self.scale})"


class DeterministicJumps(JumpDistribution):
    """All jumps equal a single positive value (one atom)."""

    def __init__(self, value: float):
        if not value > 0:
            raise ValueError(f"value must be > 0, got {value}")
        self.value = float(value)
        self.atoms = (self.value,)

    @property
    def mean(self) -> float:
        return self.value

    def tail(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z < self.value, 1.0, 0.0)

    def tail_left(self, z):
        z = np.asarray(z, dtype=float)
        return np.where(z <= self.value, 1.0, 0.0)

    def integrated_tail(self, z):
        z = np.asarray(z, dtype=float)
        return np.maximum(self.value - np.maximum(z, 0.0), 0.0)

    def sample(self, rng, size=None):
        if size is None:
            return self.value
        return np.full(size, self.value)

    def __repr__(self):
        return f"DeterministicJumps(value={self.value})"


def exponential_dist(mean: float) -> JumpDistribution:
    return ExponentialJumps(mean)


def pareto_dist(shape: float, scale: float) -> JumpDistribution:
    return ParetoJumps(shape, scale)


def deterministic_dist(value: float) -> JumpDistribution:
    return DeterministicJumps(value)


def choose_u0(consts: DerivedConstants, dist: JumpDistribution, safety: float = 2.0):
    """Pick the gluing point u0 and the contraction constant theta.

    u0 = safety * mu * E[xi] guarantees theta = mu E[xi] / u0 = 1/safety < 1.
    With mu = 0 the fixed-point operator vanishes and any positive u0 works;
    we fall back to safety * E[xi] to keep the two sub-domains non-trivial.
    """
    if not safety > 1:
        raise ValueError(f"safety must be > 1 (theta < 1 needed), got {safety}")
    m = dist.mean
    if not (math.isfinite(m) and m > 0):
        raise ValueError(f"jump mean must be positive and finite, got {m}")
    if consts.mu > 0:
        u0 = safety * consts.mu * m
    else:
        u0 = safety * m
    theta = consts.mu * m / u0
    return u0, theta
