import math

import numpy as np
import pytest
from scipy.special import gammaincc

from oracles import romberg
from ruinsolve.assembly import (
    asymptotic_constant,
    glue_and_normalize,
    ide_residual,
    integration_by_parts_gap,
    residual_probes,
)

# pinned regression values for the reference configuration
REF_C = 0.8563603589
REF_PSI = {1.0: 0.1410581215298, 5.0: 0.0021430983559904,
           10.0: 0.0002800828477052}


def test_jump_free_closed_form(nojump_result):
    # Phi(u) = Q(gamma-1, alpha/u), C = alpha^(gamma-1)/Gamma(gamma-1)
    glued = nojump_result.glued
    gamma, alpha = nojump_result.consts.gamma, nojump_result.consts.alpha
    c_exact = alpha ** (gamma - 1.0) / math.gamma(gamma - 1.0)
    assert glued.normalization == pytest.approx(c_exact, rel=1e-12)
    u = np.geomspace(0.05, 50.0, 40)
    np.testing.assert_allclose(glued.phi(u), gammaincc(gamma - 1.0, alpha / u),
                               rtol=0.0, atol=1e-12)


def test_reference_regression_values(ref_result):
    glued = ref_result.glued
    assert glued.normalization == pytest.approx(REF_C, rel=1e-9)
    for u, psi in REF_PSI.items():
        assert glued.psi(u) == pytest.approx(psi, rel=1e-9)


def test_phi_boundary_and_monotone(ref_result):
    glued = ref_result.glued
    assert glued.phi(0.0) == 0.0
    u = np.geomspace(1e-3, 1e3, 200)
    phi = glued.phi(u)
    assert np.all(np.diff(phi) > 0.0)
    assert np.all((phi >= 0.0) & (phi <= 1.0))
    assert glued.phi(1e8) == pytest.approx(1.0, abs=1e-12)


def test_phi_psi_complement(ref_result):
    glued = ref_result.glued
    u = np.linspace(0.0, glued.u0, 30)
    np.testing.assert_allclose(glued.phi(u) + glued.psi(u), 1.0, atol=1e-12)


def test_normalization_independent(ref_result):
    # C * (romberg mass on [0, 100 u0] + analytic tail remainder) = 1
    glued = ref_result.glued
    gamma = ref_result.consts.gamma
    u_hi = 100.0 * glued.u0
    mass = romberg(lambda u: float(glued.ghat(u)), 0.0, glued.u0)
    mass += romberg(lambda u: float(glued.ghat(u)), glued.u0, u_hi)
    mass += (ref_result.tail.w_at_infinity * u_hi ** (1.0 - gamma)
             / (gamma - 1.0))
    assert glued.normalization * mass == pytest.approx(1.0, abs=1e-6)


def test_density_continuous_at_gluing_point(ref_result):
    glued = ref_result.glued
    below = glued.ghat(glued.u0 * (1.0 - 1e-9))
    above = glued.ghat(glued.u0 * (1.0 + 1e-9))
    assert below == pytest.approx(above, rel=1e-6)


def test_asymptotics(ref_result):
    rep = asymptotic_constant(ref_result.glued, ref_result.consts)
    gamma = ref_result.consts.gamma
    assert abs(rep.loglog_slope + (gamma - 1.0)) <= 0.01 * (gamma - 1.0)
    assert rep.consistent
    # stabilized tail power: u^(gamma-1) Psi(u) at u and 2u agree to 2%
    u = 30.0 * ref_result.u0
    a = u ** (gamma - 1.0) * ref_result.glued.psi(u)
    b = (2 * u) ** (gamma - 1.0) * ref_result.glued.psi(2 * u)
    assert abs(a - b) / a <= 0.02


def test_ide_residual_spot_checks(ref_result, ref_config):
    glued = ref_result.glued
    for u in (0.05, 0.5, glued.u0, 3.0 * glued.u0, 50.0 * glued.u0):
        assert ide_residual(glued, u, ref_config.params,
                            ref_config.dist) <= 1e-4


def test_ide_residual_negative_control(ref_result, ref_config):
    # corrupting the density must blow up the residual: the check has teeth
    glued = ref_result.glued

    class Corrupted:
        u0 = glued.u0

        def ghat(self, u):
            u = np.asarray(u, dtype=float)
            return glued.ghat(u) * (1.0 + 0.05 * np.sin(u))

    bad = Corrupted()
    assert ide_residual(bad, 1.0, ref_config.params, ref_config.dist) > 1e-3


def test_integration_by_parts_gap(ref_result, ref_config):
    for u in (1.0, 5.0, 10.0):
        gap = integration_by_parts_gap(ref_result.glued, u, ref_config.dist)
        assert gap <= 1e-6


def test_integration_by_parts_gap_atom(atom_result, atom_config):
    for u in (1.0, 5.0):
        gap = integration_by_parts_gap(atom_result.glued, u, atom_config.dist)
        assert gap <= 1e-6


def test_residual_probes_layout(ref_result):
    probes = residual_probes(ref_result.glued, n=100)
    u0 = ref_result.glued.u0
    assert probes[0] == pytest.approx(u0 / 100.0)
    assert probes[-1] == pytest.approx(100.0 * u0)
    assert u0 in probes
    assert np.all(np.diff(probes) > 0)


def test_glue_rejects_gamma_below_one(ref_result):
    import dataclasses

    bad = dataclasses.replace(ref_result.consts, gamma=0.9)
    with pytest.raises(ValueError):
        glue_and_normalize(ref_result.low, ref_result.tail, bad,
                           ref_result.config.dist)


def test_export_table(tmp_path, ref_result, ref_config):
    import csv

    from ruinsolve.assembly import CSV_HEADER, export_table

    path = tmp_path / "table.csv"
    us = [0.5, 1.0, 4.0, 10.0]
    export_table(ref_result.glued, us, path, ref_config.params,
                 ref_config.dist)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_HEADER
    assert len(rows) == 1 + len(us)
    for row in rows[1:]:
        vals = [float(x) for x in row]
        assert abs(vals[1] + vals[2] - 1.0) <= 1e-9   # phi + psi = 1
        assert vals[4] <= 1e-4                        # residual column
