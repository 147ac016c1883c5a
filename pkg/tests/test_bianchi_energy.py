import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nullcone import bianchi_energy as be
from nullcone import characteristic_evolution as ce
from nullcone.grid import Cone, NullGrid, make_grid

AB, BR, RB, BA = be.CANONICAL_PAIRS


def test_pair_constants():
    table = [(p.k, p.a1, p.a2, p.shape) for p in be.CANONICAL_PAIRS]
    assert table == [(2, F(1, 2), 2, 1), (1, 1, F(3, 2), 1), (1, F(3, 2), 1, 2), (2, 2, F(1, 2), 2)]


@pytest.mark.parametrize("pair,p,case", [(AB, 5, "a"), (BR, 4, "b"), (BA, 0, "c"), (RB, 2, "c"),
                                         (BR, 5, "d")])
def test_select_case(pair, p, case):
    assert be.select_case(pair, p) == case


@given(st.fractions(min_value=-3, max_value=12, max_denominator=4))
def test_select_case_matches_sign_table(p):
    for pair in be.CANONICAL_PAIRS:
        A, B = 2 + p - 4 * pair.a1, 4 * pair.a2 - 2 - p
        if A <= 0 and B < 0:
            with pytest.raises(ValueError):
                be.select_case(pair, p)
            continue
        c = be.select_case(pair, p)
        assert c == ("c" if A <= 0 else "a" if B > 0 else "b" if B == 0 else "d")


@pytest.mark.parametrize("s,ps", [(5, [5, 4, 2, 0]), (F(7, 2), [F(7, 2), F(7, 2), 2, 0]),
                                  (7, [6, 4, 2, 0, 7]), (8, [6, 4, 2, 0, F(15, 2)])])
def test_weights_per_regime(s, ps):
    rows = be.regime_weights(s)
    assert [r["p"] for r in rows] == ps
    assert be.s0(9) == F(15, 2)


def test_zero_fields_give_zero_residual():
    g = make_grid(-4, -2, 2, 4, 9, 9, 3)
    z1, z2 = np.zeros((9, 9, 4, 7), complex), np.zeros((9, 9, 4, 7), complex)
    assert not np.any(be.divergence_residual(AB, 5, z1, z2, z1, z2, g))


def test_rank_mismatch_rejected():
    g = make_grid(-4, -2, 2, 4, 5, 5, 3)
    z = np.zeros((5, 5, 4, 7), complex)
    with pytest.raises(be.RankError):
        be.divergence_residual(AB, 5, z, z[..., :2, :], z, z, g)


@pytest.mark.parametrize("M", [0.0, 0.01])
def test_manufactured_convergence(M):
    rep = be.mms_convergence(AB, 5, M=M, sizes=(9, 17, 33))
    assert rep["order"] >= 1.9
    errs = rep["residual_linf"]
    assert errs[0] / errs[1] >= 3.6


def test_constant_field_flux_is_area_integral():
    g = make_grid(-10, -9, 0, 10, 2, 41, 2)
    c = np.zeros((41, 3, 5), complex)
    c[:, 0, 2] = math.sqrt(4 * math.pi)
    cone = g.outgoing(0)
    r = cone.r
    exact = 4 * math.pi * 2 * (r[-1]**3 - r[0]**3) / 3
    assert be.rp_flux(c, "0pair", 0, cone) == pytest.approx(exact, rel=1e-12)
    partial = [be.rp_flux(c[:k], "0pair", 0,
                          Cone("outgoing", 0, -10.0, cone.nodes[:k], r[:k], cone.Omega[:k]))
               for k in (5, 11, 21, 41)]
    assert partial == sorted(partial)


def test_weighted_flux_stays_finite():
    # |psi| = r^-(s/2+2) with p = s: the integrand is 4 pi r^-2 per unit r
    s = 5
    fluxes = []
    for r1 in (1e2, 1e3, 1e4):
        r = np.geomspace(1.0, r1, 2001)
        g = NullGrid(np.array([-2.0]), 2 * r - 2.0, 2)
        cone = g.outgoing(0)
        c = np.zeros((r.size, 3, 5), complex)
        c[:, 0, 2] = math.sqrt(4 * math.pi) * cone.r ** (-s / 2 - 2)
        fluxes.append(be.rp_flux(c, "0pair", s, cone))
        assert fluxes[-1] == pytest.approx(8 * math.pi * (1 - 1 / r1), rel=1e-6)
    assert fluxes == sorted(fluxes) and fluxes[-1] < 8 * math.pi


def test_flux_needs_two_nodes():
    g = make_grid(-2, -1, 0, 3, 2, 4, 2)
    with pytest.raises(ValueError):
        be.rp_flux(np.zeros((1, 3, 5)), "0pair", 0, g.outgoing(0))


@pytest.fixture(scope="module")
def evolved():
    out = {}
    for n in (17, 33, 65):
        g = make_grid(-8, -4, 4, 8, n, n, 4)
        d = ce.power_law_data(g, 5, modes=((2, 0), (3, 1)))
        out[n] = ce.evolve_linear_bianchi(d, g, 5, check_stability=False)
    return out


@pytest.mark.parametrize("name,p", [("alpha-beta", 5), ("beta-rhosigma", 4),
                                    ("rhosigma-betab", 2), ("betab-alphab", 0)])
def test_energy_balance_defect_is_second_order(evolved, name, p):
    defects = []
    for res in evolved.values():
        a, b = ce.pair_fields(res.fields, name)
        eb = be.energy_balance(be.PAIRS[name], p, a, b, res.grid)
        defects.append(abs(eb["relative_defect"]))
    assert defects[-1] < 1e-3
    assert all(x / y > 3.5 for x, y in zip(defects, defects[1:]))


def test_teukolsky_quantities():
    g = make_grid(-8, -4, 4, 8, 9, 9, 3)
    alpha = np.zeros(g.shape + (4, 7), complex)
    alpha[..., 2, 3] = g.r ** -5
    ring, _ = be.teukolsky_quantities(alpha, g)
    assert np.max(np.abs(ring)) < 1e-12
    with pytest.raises(ValueError):
        be.teukolsky_quantities(alpha, g, "beta")
    with pytest.raises(be.StencilError):
        be.teukolsky_residual(alpha[:2], make_grid(-8, -4, 4, 8, 2, 9, 3))


def test_teukolsky_residual_converges(evolved):
    errs = []
    for res in evolved.values():
        t = be.teukolsky_residual(res.fields["alpha"], res.grid)
        errs.append(max(np.max(np.abs(t["first"])), np.max(np.abs(t["second"]))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert orders[-1] >= 1.8 and orders[-1] > orders[0]


def test_norm_weights():
    spec = next(x for x in be.norm_table(5) if x.name == "R_0[alpha]")
    assert spec.weight(5) == (2.5, 0.0)
    d = next(x for x in be.norm_table(7) if x.name == "R_0[alpha]")
    assert d.weight(7) == (3.0, 0.5)
    with pytest.raises(ValueError):
        be.norm_table(3)


def test_regime_tables_agree_at_four():
    main = {x.name: x.weight(4) for x in be._flux_specs("main", 4)}
    low = {x.name: x.weight(4) for x in be._flux_specs("C", 4)}
    assert main == low


def test_norm_suite_zero_and_homogeneity(evolved):
    res = evolved[17]
    zero = {k: np.zeros_like(v) for k, v in res.fields.items()}
    assert all(v == 0 for v in be.norm_suite(zero, res.grid, 5).values.values())
    a = be.norm_suite(res.fields, res.grid, 5).values
    b = be.norm_suite({k: -3j * v for k, v in res.fields.items()}, res.grid, 5).values
    for k in a:
        assert b[k] == pytest.approx(3 * a[k], rel=1e-12)


def test_norm_against_closed_form():
    g = make_grid(-2, -1, 0, 40, 2, 801, 2)
    s = 5
    c = np.zeros(g.shape + (3, 5), complex)
    c[..., 2, 2] = g.r ** (-3.0)
    rep = be.norm_suite({"betab": c}, g, s)
    r = g.r[0]
    # R_0[betab] on C_u: int 2 Omega |u|^(s-1) r^-6 * 2 r^2 dub with |u| = 2 on the first cone
    u = 2.0
    exact = math.sqrt(2 * u ** (s - 1) * 2 * (r[0] ** -3 - r[-1] ** -3) / 3 * 2)
    assert rep.traces["R_0[betab]"]["value"][0] == pytest.approx(exact, rel=1e-6)


@pytest.mark.parametrize("s,comp,form", [
    (8, "alpha", ("sup", F(5), F(1, 2), 0)),
    (7, "alpha", ("L2S", F(5), F(0), F(-1, 2))),
    (5, "betab", ("lp", F(2), F(2), 0)),
])
def test_peeling_examples(s, comp, form):
    forms = be.peeling_exponents(s)[comp]
    assert any((f.norm, f.r_power, f.u_power, f.log_power) == form for f in forms)


def test_peeling_l2_forms():
    alpha8 = {f.norm: f for f in be.peeling_exponents(8)["alpha"]}
    assert alpha8["L2S"].l2_weight() == 4 and alpha8["L2S"].u_power == F(1, 2)
    assert be.peeling_exponents(7)["alpha"][0].l2_weight() == 4
