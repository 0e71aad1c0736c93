import dataclasses

import pytest

from ruinsolve.config import RunConfig
from ruinsolve.model import (
    ModelParams,
    derive_constants,
    deterministic_dist,
    exponential_dist,
)
from ruinsolve.pipeline import run_pipeline

# Reference parameter set: gamma = 4, alpha = 2, mu = 2, u0 = 4, theta = 0.5
REF_PARAMS = ModelParams(a=2.0, r=0.1, sigma=1.0, kappa=1.0, c=1.0, lam=1.0)


@pytest.fixture(scope="session")
def ref_config():
    return RunConfig(params=REF_PARAMS, dist=exponential_dist(1.0))


@pytest.fixture(scope="session")
def ref_consts():
    return derive_constants(REF_PARAMS)


@pytest.fixture(scope="session")
def ref_result(ref_config):
    return run_pipeline(ref_config)


@pytest.fixture(scope="session")
def nojump_config(ref_config):
    params = dataclasses.replace(REF_PARAMS, lam=0.0)
    return dataclasses.replace(ref_config, params=params)


@pytest.fixture(scope="session")
def nojump_result(nojump_config):
    return run_pipeline(nojump_config)


@pytest.fixture(scope="session")
def atom_config(ref_config):
    return dataclasses.replace(ref_config, dist=deterministic_dist(1.0))


@pytest.fixture(scope="session")
def atom_result(atom_config):
    return run_pipeline(atom_config)
