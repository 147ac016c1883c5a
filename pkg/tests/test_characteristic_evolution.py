import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nullcone import characteristic_evolution as ce
from nullcone.grid import make_grid, sphere_l2
from nullcone.kerr_background import KerrParams
from nullcone.sphere_calculus import SphereField, random_field


def cone(n, u=-20.0, ub1=180.0, L=4):
    return make_grid(u, u + 1.0, 0.0, ub1, 2, n, L).outgoing(0)


def test_area_radius_minkowski_exact():
    g = make_grid(-10, -5, 0, 10, 6, 21, 2)
    exact = g.r.copy()
    assert np.max(np.abs(ce.evolve_area_radius(g).r - exact)) < 1e-10


def test_area_radius_schwarzschild_vs_tortoise():
    errs = []
    for n in (21, 41, 81):
        g = make_grid(-30, -20, 0, 40, 3, n, 2, M=1.0)
        exact = g.r.copy()
        errs.append(np.max(np.abs(ce.evolve_area_radius(g, KerrParams(1.0)).r - exact)))
    assert errs[-1] < 1e-8
    assert errs[0] / errs[1] >= 15 and errs[1] / errs[2] >= 15


def test_area_radius_rejects_rotation():
    with pytest.raises(ValueError):
        ce.evolve_area_radius(make_grid(-10, -5, 0, 10, 3, 3, 2, M=1.0), KerrParams(1.0, 0.5))


@pytest.mark.parametrize("lam0,weight", [(1.0, 1.0), (0.5, 0.0)])
def test_free_transport_conserves_weighted_norm(lam0, weight):
    U = random_field(1, 4, np.random.default_rng(1), radius=10.0, lmin=1)
    c = cone(41)
    out = ce.propagate_outgoing(U, None, lam0, 2, c)
    assert out["lambda1"] == weight
    assert np.max(np.abs(out["trace"] / out["trace"][0] - 1)) < 1e-6
    assert c.r[-1] / c.r[0] >= 10 and out["holds"]


def test_ingoing_mirror():
    V = random_field(2, 4, np.random.default_rng(2), radius=50.0, lmin=2)
    g = make_grid(-100, -10, 0, 1, 41, 2, 4)
    out = ce.propagate_ingoing(V, None, 1.0, 2, g.ingoing(0))
    assert np.max(np.abs(out["trace"] / out["trace"][0] - 1)) < 1e-6
    # unweighted |V| grows as r shrinks
    raw = sphere_l2(out["coeffs"], 2, g.r[:, 0])
    assert raw[-1] > 5 * raw[0]
    with pytest.raises(ValueError):
        ce.propagate_ingoing(V, None, 1.0, 2, g.outgoing(0))


def test_duhamel_forcing():
    # nabla_4 U + trchi U = c r^-3 on Minkowski: r^2 U = r0^2 U0 + c log(r / r0)
    L = 3
    c = cone(81, L=L)
    U0 = random_field(1, L, np.random.default_rng(3), radius=c.r[0], lmin=1)
    cf = random_field(1, L, np.random.default_rng(4), lmin=1).coeffs
    F = lambda ub: cf * (0.5 * (ub - c.fixed)) ** -3
    out = ce.propagate_outgoing(U0, F, 1.0, 2, c)
    r = c.r[:, None, None]
    exact = (c.r[0]**2 * U0.coeffs + cf * np.log(r / c.r[0])) / r**2
    trace = c.r * sphere_l2(exact, 1, c.r)
    assert np.max(np.abs(out["trace"] - trace) / trace) < 1e-6
    assert out["holds"]


def test_transport_fourth_order():
    U = random_field(1, 4, np.random.default_rng(0), radius=10.0, lmin=1)
    errs = []
    for n in (6, 11, 21):
        c = cone(n)
        o = ce.propagate_outgoing(U, None, 1.0, 2, c, substeps=1)
        errs.append(np.max(np.abs(o["coeffs"][-1] - U.coeffs * (c.r[-1] / c.r[0]) ** -2)))
    assert errs[0] / errs[1] >= 15 and errs[1] / errs[2] >= 15


def test_transport_argument_checks():
    U = random_field(1, 4, np.random.default_rng(0), radius=10.0)
    with pytest.raises(ce.UnsupportedLambdaError):
        ce.propagate_outgoing(U, None, -0.5, 2, cone(5))
    with pytest.raises(ValueError):
        ce.propagate_outgoing(U, None, 1.0, 3, cone(5))


def test_gronwall_bound_on_known_solution():
    t = np.linspace(0, 3, 3001)
    k = np.cos(t)
    bound = ce.gronwall_bound(t, 2.0, k)
    assert np.max(np.abs(bound - 2.0 * np.exp(np.sin(t)))) < 1e-6


@pytest.mark.parametrize("profile,a", [("peeling", 4.0), ("pointwise", 3.5), ("l2", 4.5)])
def test_profile_exponents(profile, a):
    assert ce.profile_exponent(5, profile) == a


def test_resonant_profile_rejected():
    g = make_grid(-40, -10, 0, 3, 4, 4, 4)
    with pytest.raises(ValueError):
        ce.power_law_data(g, 3, "peeling")  # a = 3
    with pytest.raises(ValueError):
        ce.profile_exponent(5, "cubic")


def small_grid(n=16, L=4):
    return make_grid(-40, -10, 0, 0.2 * (n - 1), n, n, L)


def test_zero_data_stays_zero():
    g = small_grid()
    res = ce.evolve_linear_bianchi(ce.zero_data(g), g, 5)
    assert all(not np.any(v) for v in res.fields.values())


def test_alphab_sources_betab_like_mode_oracle():
    g = small_grid()
    data = ce.alphab_only_data(g, 2, 0)
    res = ce.evolve_linear_bianchi(data, g, 5)
    orc = ce.mode_oracle(data, g, 2, 0)
    L = g.L
    betab = res.fields["betab"][:, :, 2, L]
    assert np.max(np.abs(betab)) > 0
    for k in ce.COMPONENTS:
        lib = res.fields[k][:, :, 2, L]
        scale = max(np.max(np.abs(lib)), np.max(np.abs(orc[k])), 1e-300)
        assert np.max(np.abs(lib - orc[k])) / scale < 1e-6, k


def test_mode_support_is_preserved():
    g = small_grid()
    data = ce.power_law_data(g, 5, modes=((3, 1),))
    res = ce.evolve_linear_bianchi(data, g, 5)
    L = g.L
    for k, v in res.fields.items():
        v = np.abs(v)
        keep = np.zeros(v.shape[-2:], bool)
        keep[3, L + 1] = keep[3, L - 1] = True
        assert np.max(v[..., ~keep]) <= 1e-12 * max(np.max(v), 1.0), k


def test_r0_bounded_and_slope_fit():
    g = small_grid()
    res = ce.evolve_linear_bianchi(ce.power_law_data(g, 5), g, 5)
    r0 = ce.r0_ratio(res)
    assert 0 < r0["ratio"] <= 2.0
    fit = ce.betab_decay_slope(res)
    assert fit["window"] == [10.0, 40.0] and fit["slope"] < 0
    assert np.isfinite(fit["r2"])


def test_slope_fit_exact_power():
    x = np.geomspace(10, 100, 12)
    fit = ce.fit_decay_slope(x, 3 * x**-2.5)
    assert fit["slope"] == pytest.approx(-2.5) and fit["r2"] == pytest.approx(1.0)


def test_stability_guard():
    g = make_grid(-40, -10, 0, 30, 8, 8, 6)
    with pytest.raises(ce.StabilityError):
        ce.evolve_linear_bianchi(ce.zero_data(g), g, 5)


def test_divergence_detected():
    g = small_grid(8)
    data = ce.zero_data(g)
    data.betab0[2, g.L] = np.nan
    with pytest.raises(ce.DivergenceError):
        ce.evolve_linear_bianchi(data, g, 5)


def test_band_limit_mismatch():
    g = small_grid(8)
    with pytest.raises(ValueError):
        ce.evolve_linear_bianchi(ce.zero_data(small_grid(8, L=3)), g, 5)


def test_sobolev_constant_field_closed_form():
    c = cone(41, L=2)
    coeffs = np.zeros((41, 3, 5), complex)
    coeffs[:, 0, 2] = math.sqrt(4 * math.pi)
    rep = ce.sobolev_check(coeffs, "0pair", c, nab=np.zeros_like(coeffs))
    r0, r1 = c.r[0], c.r[-1]
    exact = r1**1.5 * (4 * math.pi) ** 0.25 / math.sqrt(8 * math.pi * (r1**3 - r0**3) / 3)
    assert rep["ratio"] == pytest.approx(exact, rel=1e-3)
    assert rep["ratio"] <= 2
    sphere = SphereField("0pair", coeffs[0], 2.0)
    assert ce.standard_sobolev_ratio(sphere) == pytest.approx((4 * math.pi) ** -0.25, rel=1e-12)


def test_sobolev_zero_field_and_missing_derivative():
    c = cone(9, L=2)
    z = np.zeros((9, 3, 5), complex)
    assert ce.sobolev_check(z, 1, c, nab="fd")["ratio"] == 0.0
    assert ce.standard_sobolev_ratio(SphereField.zeros(1, 2)) == 0.0
    with pytest.raises(ValueError):
        ce.sobolev_check(z, 1, c)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 24), st.sampled_from(["0pair", 1, 2]), st.integers(0, 999))
def test_sobolev_ratio_bounded_in_band_limit(L, rank, seed):
    psi = random_field(rank, L, np.random.default_rng(seed), radius=3.0, lmin=2)
    assert 0 < ce.standard_sobolev_ratio(psi) <= 1.0


def test_pair_fields():
    g = small_grid(8)
    res = ce.evolve_linear_bianchi(ce.power_law_data(g, 5), g, 5)
    a, b = ce.pair_fields(res.fields, "betab-alphab")
    assert np.array_equal(a, -res.fields["betab"]) and np.array_equal(b, res.fields["alphab"])
    with pytest.raises(KeyError):
        ce.pair_fields(res.fields, "alpha-alphab")
