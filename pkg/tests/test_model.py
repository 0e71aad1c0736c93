import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import romberg
from ruinsolve.model import (
    DerivedConstants,
    ModelParams,
    choose_u0,
    derive_constants,
    deterministic_dist,
    exponential_dist,
    pareto_dist,
)

finite = dict(allow_nan=False, allow_infinity=False)


def test_reference_constants():
    consts = derive_constants(ModelParams(a=2.0, r=0.1, sigma=1.0,
                                          kappa=1.0, c=1.0, lam=1.0))
    assert consts.gamma == pytest.approx(4.0, rel=1e-15)
    assert consts.alpha == pytest.approx(2.0, rel=1e-15)
    assert consts.mu == pytest.approx(2.0, rel=1e-15)


@given(a=st.floats(-5, 5, **finite), r=st.floats(-1, 1, **finite),
       sigma=st.floats(0.05, 5, **finite), kappa=st.floats(0.05, 1, **finite),
       c=st.floats(0.01, 10, **finite), lam=st.floats(0, 10, **finite))
def test_constants_formulas(a, r, sigma, kappa, c, lam):
    p = ModelParams(a=a, r=r, sigma=sigma, kappa=kappa, c=c, lam=lam)
    consts = derive_constants(p)
    denom = kappa ** 2 * sigma ** 2
    assert consts.gamma == pytest.approx(2 * ((a - r) * kappa + r) / denom,
                                         rel=1e-12, abs=1e-12)
    assert consts.alpha == pytest.approx(2 * c / denom, rel=1e-12)
    assert consts.mu == pytest.approx(2 * lam / denom, rel=1e-12)
    assert consts.alpha > 0 and consts.mu >= 0


@given(a=st.floats(0.01, 5, **finite), sigma=st.floats(0.05, 5, **finite))
def test_fully_invested_zero_rate_reduction(a, sigma):
    # kappa = 1, r = 0: gamma collapses to 2a / sigma^2
    p = ModelParams(a=a, r=0.0, sigma=sigma, kappa=1.0, c=1.0, lam=0.0)
    assert derive_constants(p).gamma == pytest.approx(2 * a / sigma ** 2,
                                                      rel=1e-12)


@pytest.mark.parametrize("bad", [
    dict(sigma=0.0), dict(sigma=-1.0), dict(kappa=0.0), dict(kappa=1.5),
    dict(kappa=-0.2), dict(c=0.0), dict(c=-1.0), dict(lam=-0.5),
    dict(a=math.inf), dict(r=math.nan),
])
def test_param_validation(bad):
    base = dict(a=2.0, r=0.1, sigma=1.0, kappa=1.0, c=1.0, lam=1.0)
    base.update(bad)
    with pytest.raises(ValueError):
        ModelParams(**base)


def test_derived_validation():
    with pytest.raises(ValueError):
        DerivedConstants(gamma=1.0, alpha=0.0, mu=0.0)
    with pytest.raises(ValueError):
        DerivedConstants(gamma=1.0, alpha=1.0, mu=-1.0)


@pytest.mark.parametrize("dist", [
    exponential_dist(0.7), pareto_dist(2.5, 1.3), pareto_dist(1.5, 0.4),
])
def test_mean_matches_integrated_tail(dist):
    # E[xi] = int_0^inf tail(z) dz, checked by an independent integrator
    z_hi = dist.mean
    while float(dist.integrated_tail(z_hi)) > 1e-9 * dist.mean:
        z_hi *= 2.0
    edges, d = [0.0], min(dist.mean, z_hi)
    while d < z_hi:
        edges.append(d)
        d *= 8.0
    edges.append(z_hi)
    total = sum(romberg(lambda z: float(np.asarray(dist.tail(z))), lo, hi)
                for lo, hi in zip(edges[:-1], edges[1:]))
    total += float(dist.integrated_tail(z_hi))
    assert total == pytest.approx(dist.mean, rel=1e-8)


def test_deterministic_dist_shape():
    dist = deterministic_dist(1.5)
    assert dist.mean == 1.5
    assert dist.atoms == (1.5,)
    assert float(np.asarray(dist.tail(1.4))) == 1.0
    assert float(np.asarray(dist.tail(1.5))) == 0.0
    assert float(np.asarray(dist.tail_left(1.5))) == 1.0
    assert float(np.asarray(dist.integrated_tail(0.0))) == 1.5
    assert float(np.asarray(dist.integrated_tail(1.0))) == 0.5


@pytest.mark.parametrize("dist", [
    exponential_dist(1.0), pareto_dist(2.0, 1.0), deterministic_dist(1.0),
])
@given(zs=st.lists(st.floats(0, 50, **finite), min_size=2, max_size=10))
@settings(max_examples=25, deadline=None)
def test_tail_is_a_survival_function(dist, zs):
    zs = np.sort(np.asarray(zs))
    t = np.asarray(dist.tail(zs), dtype=float)
    assert np.all((t >= 0.0) & (t <= 1.0))
    assert np.all(np.diff(t) <= 1e-15)
    tl = np.asarray(dist.tail_left(zs), dtype=float)
    assert np.all(tl >= t - 1e-15)


@pytest.mark.parametrize("dist", [
    exponential_dist(2.0), pareto_dist(3.0, 1.0), deterministic_dist(0.5),
])
def test_samples_positive_and_mean(dist):
    rng = np.random.default_rng(1234)
    x = np.asarray(dist.sample(rng, size=200_000), dtype=float)
    assert np.all(x > 0)
    assert np.mean(x) == pytest.approx(dist.mean, rel=0.02)


def test_choose_u0_contraction():
    consts = DerivedConstants(gamma=4.0, alpha=2.0, mu=2.0)
    dist = exponential_dist(1.0)
    u0, theta = choose_u0(consts, dist, safety=2.0)
    assert u0 == pytest.approx(4.0)
    assert theta == pytest.approx(0.5)
    assert theta < 1.0
    with pytest.raises(ValueError):
        choose_u0(consts, dist, safety=1.0)
    with pytest.raises(ValueError):
        choose_u0(consts, dist, safety=0.5)


def test_choose_u0_jump_free_fallback():
    consts = DerivedConstants(gamma=4.0, alpha=2.0, mu=0.0)
    u0, theta = choose_u0(consts, exponential_dist(1.5), safety=2.0)
    assert u0 == pytest.approx(3.0)
    assert theta == 0.0
