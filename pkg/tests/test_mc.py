import dataclasses
import math

import numpy as np
import pytest

from conftest import REF_PARAMS
from ruinsolve.mc import MCConfig, estimate_ruin, path_rng, simulate_path
from ruinsolve.model import ModelParams, exponential_dist

DIST = exponential_dist(1.0)


def small_cfg(**kw):
    base = dict(horizon=20.0, dt=0.02, n_paths=200, barrier=50.0, seed=3)
    base.update(kw)
    return MCConfig(**base)


def test_zero_capital_is_immediate_ruin():
    est = estimate_ruin(REF_PARAMS, DIST, 0.0, small_cfg())
    assert est.p_hat == 1.0
    assert est.ci_halfwidth == 0.0
    assert est.n_ruined == est.n_paths


def test_bitwise_reproducibility():
    a = estimate_ruin(REF_PARAMS, DIST, 1.0, small_cfg())
    b = estimate_ruin(REF_PARAMS, DIST, 1.0, small_cfg())
    assert a.to_json() == b.to_json()
    assert a.p_hat == b.p_hat and a.n_censored == b.n_censored
    c = estimate_ruin(REF_PARAMS, DIST, 1.0, small_cfg(seed=4))
    assert c.to_json() != a.to_json()


def test_order_independence():
    cfg = small_cfg()
    rng = np.random.default_rng(99)
    perm = rng.permutation(cfg.n_paths)
    a = estimate_ruin(REF_PARAMS, DIST, 1.0, cfg)
    b = estimate_ruin(REF_PARAMS, DIST, 1.0, cfg, path_indices=perm)
    assert a.p_hat == b.p_hat
    assert (a.n_ruined, a.n_barrier, a.n_censored) == \
        (b.n_ruined, b.n_barrier, b.n_censored)


def test_path_streams_are_distinct():
    x = path_rng(0, 0).standard_normal(4)
    y = path_rng(0, 1).standard_normal(4)
    z = path_rng(0, 0).standard_normal(4)
    assert not np.allclose(x, y)
    np.testing.assert_array_equal(x, z)


def test_barrier_must_exceed_capital():
    with pytest.raises(ValueError):
        estimate_ruin(REF_PARAMS, DIST, 60.0, small_cfg(barrier=50.0))


def test_deterministic_limit_threshold():
    # nearly-zero volatility, no jumps: the reserve follows
    # x' = drift x - c, so ruin occurs iff u < c / drift exactly
    params = ModelParams(a=0.4, r=0.0, sigma=1e-4, kappa=1.0, c=1.0, lam=0.0)
    threshold = params.c / params.drift           # = 2.5
    cfg = small_cfg(horizon=60.0, n_paths=40, barrier=1e4, dt=0.01)
    below = estimate_ruin(params, DIST, threshold - 0.1, cfg)
    above = estimate_ruin(params, DIST, threshold + 0.1, cfg)
    assert below.p_hat == 1.0
    assert above.p_hat == 0.0
    assert above.n_censored == 0  # every surviving path reaches the barrier


def test_monotone_in_capital():
    cfg = small_cfg(n_paths=400)
    p1 = estimate_ruin(REF_PARAMS, DIST, 1.0, cfg).p_hat
    p5 = estimate_ruin(REF_PARAMS, DIST, 5.0, cfg).p_hat
    assert p1 > p5


def test_single_path_outcome_fields():
    cfg = small_cfg()
    out = simulate_path(REF_PARAMS, DIST, 1.0, cfg, path_rng(cfg.seed, 0))
    assert out.kind in ("ruined", "barrier", "censored")
    assert 0.0 <= out.time <= cfg.horizon + 1e-12


def test_bias_note_accounting():
    cfg = small_cfg(horizon=2.0)  # short horizon forces censoring
    est = estimate_ruin(REF_PARAMS, DIST, 5.0, cfg, psi_at_barrier=1e-3)
    assert est.bias_note == pytest.approx(1e-3 + est.n_censored / est.n_paths)
    assert est.n_ruined + est.n_barrier + est.n_censored == est.n_paths


def test_dt_refinement_consistency():
    # halving dt must not move the estimate beyond joint noise + small bias
    cfg1 = small_cfg(n_paths=1500, dt=0.04, seed=21)
    cfg2 = small_cfg(n_paths=1500, dt=0.01, seed=22)
    a = estimate_ruin(REF_PARAMS, DIST, 1.0, cfg1)
    b = estimate_ruin(REF_PARAMS, DIST, 1.0, cfg2)
    joint = math.hypot(a.ci_halfwidth, b.ci_halfwidth)
    assert abs(a.p_hat - b.p_hat) <= joint + 0.02


def test_config_validation():
    with pytest.raises(ValueError):
        MCConfig(horizon=0.0, dt=0.01, n_paths=10, barrier=10.0, seed=0)
    with pytest.raises(ValueError):
        MCConfig(horizon=1.0, dt=0.0, n_paths=10, barrier=10.0, seed=0)
    with pytest.raises(ValueError):
        MCConfig(horizon=1.0, dt=0.01, n_paths=0, barrier=10.0, seed=0)
    with pytest.raises(ValueError):
        MCConfig(horizon=1.0, dt=0.01, n_paths=10, barrier=0.0, seed=0)
