import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullcone.grid import (
    GridField, NullGrid, background_arrays, conjmap, grid_lp_norm, make_grid, op_d, op_dstar,
    sphere_l2,
)
from nullcone.kerr_background import DomainError
from nullcone.sphere_calculus import SphereField, d1, d2_star, lp_norm, random_field


def test_minkowski_background_is_closed_form():
    g = make_grid(-10, -5, 0, 10, 6, 11, 4)
    u, ub = np.meshgrid(g.u_nodes, g.ub_nodes, indexing="ij")
    assert np.array_equal(g.r, 0.5 * (ub - u))
    assert np.all(g.Omega == 0.5)


def test_schwarzschild_radius_monotone():
    g = make_grid(-30, -20, 0, 20, 5, 9, 4, M=1.0)
    assert np.all(np.diff(g.r, axis=1) > 0) and np.all(np.diff(g.r, axis=0) < 0)
    bg = background_arrays(1.0, g.u_nodes[:, None], g.ub_nodes[None, :])
    assert np.all(bg["trchi"] * bg["trchib"] < 0)


def test_grid_must_stay_exterior():
    with pytest.raises(DomainError):
        make_grid(-1, 1, 0, 2, 3, 3, 2)
    with pytest.raises(ValueError):
        NullGrid(np.array([-3.0, -4.0]), np.array([0.0, 1.0]), 2)


def test_cones_and_causal_mask():
    g = make_grid(-10, -5, 0, 10, 6, 11, 4)
    out, inc = g.outgoing(2), g.ingoing(3)
    assert out.point(4.0) == (g.u_nodes[2], 4.0) and inc.point(-7.0) == (-7.0, g.ub_nodes[3])
    assert np.array_equal(out.r, g.r[2]) and np.array_equal(inc.r, g.r[:, 3])
    mask = g.causal_mask(2, 3)
    assert mask.sum() == 3 * 4 and mask[2, 3] and not mask[3, 3]


def test_batched_operators_match_sphere_operators():
    rng = np.random.default_rng(0)
    xi = random_field(1, 6, rng, radius=3.0)
    assert np.allclose(op_d(1, xi.coeffs, 3.0), d1(xi).coeffs, atol=1e-14)
    assert np.allclose(op_dstar(2, xi.coeffs, 3.0), d2_star(xi).coeffs, atol=1e-14)
    with pytest.raises(ValueError):
        op_d(3, xi.coeffs, 1.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31))
def test_conjmap_is_an_involution_and_conjugates(seed):
    f = random_field("0pair", 5, np.random.default_rng(seed))
    c = conjmap(f.coeffs)
    assert np.allclose(conjmap(c), f.coeffs, atol=1e-15)
    assert np.allclose(SphereField("0pair", c).grid(), np.conj(f.grid()), atol=1e-12)


@pytest.mark.parametrize("rank", ["0pair", 1, 2])
def test_grid_norms_match_quadrature(rank):
    f = random_field(rank, 6, np.random.default_rng(3), radius=2.0)
    assert sphere_l2(f.coeffs, rank, 2.0) == pytest.approx(lp_norm(f, 2), rel=1e-12)
    assert grid_lp_norm(f.coeffs, rank, 2.0, 4) == pytest.approx(lp_norm(f, 4), rel=1e-10)


def test_grid_field_shape_check():
    gf = GridField.zeros(2, 3, 4, 5)
    assert gf.L == 5 and gf.spin == 2
    with pytest.raises(ValueError):
        GridField(1, np.zeros((3, 3)))
