import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullcone.decay_calculus import BigO
from nullcone.kerr_background import (
    DomainError, InvalidParametersError, KerrParams, background_curvature, background_ricci,
    bl_metric, bl_metric_inverse, curvature_fd, decay_table, double_null_frame, horizon_radius,
    radius_from_tortoise, ricci_fd, tortoise_closed_form, tortoise_coords, verify_decay_class,
)


@pytest.mark.parametrize("M,a,expected", [(1, 0, 2.0), (1, 1, 1.0), (1, 0.6, 1.8)])
def test_horizon_radius(M, a, expected):
    assert horizon_radius(KerrParams(M, a)) == pytest.approx(expected, abs=1e-14)


def test_overspinning_rejected():
    with pytest.raises(InvalidParametersError):
        KerrParams(1.0, 1.5)


def test_schwarzschild_metric_values():
    g = bl_metric(KerrParams(1.0), 4.0, math.pi / 2)
    assert g[0, 0] == pytest.approx(-0.5)
    assert g[1, 1] == pytest.approx(2.0)
    assert g[3, 3] == pytest.approx(16.0)
    assert np.allclose(g, g.T)


def test_minkowski_metric_is_spherical():
    r, th = 3.0, 0.7
    g = bl_metric(KerrParams(0.0), r, th)
    assert np.allclose(g, np.diag([-1.0, 1.0, r**2, (r * math.sin(th))**2]), atol=1e-15)


def test_kerr_inverse_metric():
    p = KerrParams(1.0, 0.5)
    g, gi = bl_metric(p, 10.0, 1.0), bl_metric_inverse(p, 10.0, 1.0)
    assert np.max(np.abs(g @ gi - np.eye(4))) < 1e-12


def test_metric_domain_errors():
    with pytest.raises(DomainError):
        bl_metric(KerrParams(1.0), 1.5, 1.0)
    with pytest.raises(ValueError):
        bl_metric(KerrParams(1.0), 5.0, 0.0)


def test_tortoise_values():
    assert tortoise_coords(KerrParams(1.0), 4.0)[0] == pytest.approx(4.0, abs=1e-12)
    assert tortoise_coords(KerrParams(0.0), 7.5)[0] == pytest.approx(7.5, abs=1e-14)


def test_kerr_tortoise_derivative():
    p = KerrParams(1.0, 0.3)
    r, h = 50.0, 1e-3
    d = (tortoise_coords(p, r + h)[0] - tortoise_coords(p, r - h)[0]) / (2 * h)
    exact = (r**2 + p.a**2) / p.delta(r)
    assert d == pytest.approx(exact, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(2.1, 500.0))
def test_tortoise_inversion_round_trip(r):
    p = KerrParams(1.0)
    assert radius_from_tortoise(p, tortoise_closed_form(p, r)) == pytest.approx(r, rel=1e-11)


def test_frame_lapse_and_normalization():
    assert double_null_frame(KerrParams(0.0), -3.0, 5.0).Omega == 0.5
    p = KerrParams(1.0)
    rs = tortoise_closed_form(p, 100.0)
    fr = double_null_frame(p, -rs, rs, theta=1.2)
    assert fr.r == pytest.approx(100.0, rel=1e-12)
    assert fr.Omega == pytest.approx(0.5 * math.sqrt(0.98), rel=1e-12)
    assert fr.normalization_residual(bl_metric(p, fr.r, 1.2)) < 1e-10


def test_frame_needs_nonrotating_background():
    with pytest.raises(InvalidParametersError):
        double_null_frame(KerrParams(1.0, 0.2), 0.0, 20.0)


def test_minkowski_cone_values():
    c = background_ricci(KerrParams(0.0), {"r": 5.0})
    assert c.trchi == 2 / 5 and c.trchib == -2 / 5 and c.omega == 0 and c.omegab == 0
    R = background_curvature(KerrParams(0.0), {"r": 5.0})
    assert all(np.all(np.asarray(v) == 0) for v in R.as_dict().values())


@pytest.mark.parametrize("r", [10.0, 47.0, 300.0])
def test_ricci_matches_finite_differences(r):
    p = KerrParams(1.0)
    exact, fd = background_ricci(p, {"r": r}).as_dict(), ricci_fd(p, r).as_dict()
    scale = abs(exact["trchi"])
    for k in exact:
        assert np.max(np.abs(exact[k] - fd[k])) <= 1e-8 * scale, k


def test_symmetry_and_signs():
    c = ricci_fd(KerrParams(1.0), 12.0)
    for k in ("chihat", "chibhat", "eta", "etab", "zeta"):
        assert np.max(np.abs(getattr(c, k))) < 1e-9
    assert c.trchi * c.trchib < 0


def test_rho_value_and_oracle():
    p = KerrParams(1.0)
    assert background_curvature(p, {"r": 10.0}).rho == pytest.approx(-0.002, rel=1e-14)
    fd = curvature_fd(p, 10.0)
    assert fd.rho == pytest.approx(-0.002, rel=1e-7)
    assert abs(fd.sigma) < 1e-10 and np.max(np.abs(fd.beta)) < 1e-10


def test_decay_class_checks():
    p = KerrParams(1.0)
    r = np.geomspace(10, 1000, 200)
    trchi = [(x, background_ricci(p, {"r": x}).trchi - 2 / x) for x in r]
    rep = verify_decay_class(trchi, BigO(1, 2))
    assert rep["pass"] and rep["constant"] <= 3
    rho = verify_decay_class([(x, -2 / x**3) for x in r], BigO(1, 3))
    assert rho["pass"] and rho["constant"] == pytest.approx(2.0)
    assert not verify_decay_class([(x, 1.0) for x in r], BigO(0, 1))["pass"]


def test_decay_class_input_errors():
    with pytest.raises(ValueError):
        verify_decay_class([], BigO(1, 2))
    with pytest.raises(ValueError):
        verify_decay_class([(10, 1.0), (20, 1.0)], BigO(1, 2))


def test_decay_table_rows():
    rows = decay_table(KerrParams(1.0), n_samples=20)
    names = {row["quantity"] for row in rows}
    assert {"trchi-2/r", "rho", "omega"} <= names
    assert all(math.isfinite(row["normalized_constant"]) for row in rows)
