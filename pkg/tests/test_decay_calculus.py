from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from nullcone.decay_calculus import (
    Affine, BigO, Curvature, DecaySignature, GammaB, GammaG, Lc, ParseError,
    UnknownEquationError, UnsupportedOrderError, check_all, check_equation, commutator_signature,
    derive, flat_limit, leq, load_database, mul, normalize, parse_sum, background_composition,
    totallycheck_table,
)

fracs = st.fractions(min_value=-4, max_value=4, max_denominator=4)
sigs = st.builds(
    DecaySignature,
    tag=st.sampled_from(["BigO", "GammaG", "GammaB"]),
    m_power=st.integers(0, 3),
    r_power=fracs,
    u_power=st.builds(Affine, fracs, fracs),
    deriv=st.integers(0, 1),
    order=st.integers(0, 2),
)


def key(s):
    return (s.m_power, s.r_power, s.u_power, s.order)


@given(sigs, sigs)
def test_mul_commutative(a, b):
    assert key(mul(a, b)) == key(mul(b, a))
    assert mul(a, b).base_tag == mul(b, a).base_tag


@given(sigs, sigs, sigs)
def test_mul_associative(a, b, c):
    assert key(mul(mul(a, b), c)) == key(mul(a, mul(b, c)))


@given(sigs, sigs)
def test_powers_add(a, b):
    p = mul(a, b)
    assert p.m_power == a.m_power + b.m_power
    assert p.r_power == a.r_power + b.r_power
    assert p.u_power == a.u_power + b.u_power


@given(sigs, sigs, sigs)
def test_order_reflexive_transitive(a, b, c):
    assert leq(a, a)
    if leq(a, b) and leq(b, c):
        assert leq(a, c)


@settings(max_examples=200)
@given(sigs, sigs, sigs, sigs)
def test_order_respects_products(a, a2, b, b2):
    if leq(a, a2) and leq(b, b2):
        assert leq(mul(a, b), mul(a2, b2))


def test_canonical_gamma_table():
    g, b = GammaG(), GammaB()
    assert g.r_power == 2 and g.u_power == Affine(Fraction(1, 2), Fraction(-3, 2))
    assert b.r_power == 1 and b.u_power == Affine(Fraction(1, 2), Fraction(-1, 2))
    assert leq(g, b) and not leq(b, g)


def test_product_examples():
    p = mul(BigO(2, 3), BigO(1, 2))
    assert (p.m_power, p.r_power) == (3, 5)
    gg = mul(GammaG(), GammaG())
    assert gg.r_power == 4 and gg.u_power == Affine(1, -3) and gg.order == 2
    assert mul(GammaG(), GammaB()).tag == "GammaB"
    kept = normalize([GammaG(), GammaB()])
    assert len(kept) == 1 and kept[0].tag == "GammaB"


def test_derive_rules():
    out = derive(BigO(1, 2), "nabS")
    assert (out[0].m_power, out[0].r_power, out[0].order) == (1, 3, 0)
    assert key(out[1]) == key(mul(BigO(1, 2), Lc()))
    zero = derive(BigO(0, 0), "nab4")
    assert zero[0].r_power == 1 and all(t.order >= 1 for t in zero[1:])
    g1 = derive(GammaG(), "rnabS")
    assert len(g1) == 1 and g1[0].deriv == 1 and g1[0].r_power == GammaG().r_power
    with pytest.raises(UnsupportedOrderError):
        derive(GammaG(1), "nab4")
    with pytest.raises(ValueError):
        derive(GammaG(), "sideways")


def test_null_structure_error_term_has_zero_margin():
    v = check_equation("nab4-trchi")
    assert v.passed
    err = [t for t in v.terms if t.side == "error"]
    assert err and err[0].claim_margin == 0


def test_alphab_linear_terms_pass():
    assert check_equation("nab4-alphab").passed


def test_corrupted_claim_fails():
    P = parse_sum("nab4:trchi + O0_1*trchi")
    v = check_equation("nab4-trchi", principal=P, error=parse_sum("Gb*Gb"))
    assert not v.passed and v.failures[0].side == "error"


def test_whole_database():
    good = check_all()
    bad = check_all(include_mutants=True)
    assert len(good) >= 30 and all(v.passed for v in good)
    assert len(bad) >= 10 and not any(v.passed for v in bad)


def test_unknown_equation():
    with pytest.raises(UnknownEquationError):
        check_equation("nab5-nothing")


def test_commutators():
    t = commutator_signature(("rnab", "nab4"))
    assert [str(x) for x in t] == ["Gg*Op_rnab", "O2_3*Op_rnab", "Gg1", "O2_3"]
    t3 = commutator_signature(("rnab", "nab3"))
    assert [str(x) for x in t3] == ["Gb*Op_rnab", "O2_3*Op_rnab", "Gb1", "O2_3"]
    assert [str(x) for x in flat_limit(t)] == ["Gg*Op_rnab", "Gg1"]
    with pytest.raises(KeyError):
        commutator_signature(("nab3", "nab3"))


def test_parser():
    terms = parse_sum("Gb*(alpha,beta) + O1_2")
    assert len(terms) == 3
    assert terms[0].factors[1].tag == "Curvature:alpha"
    assert terms[0].signature.tag == "GammaB"
    for bad in ("Gg*(", "Gg + ", "frobnicate"):
        with pytest.raises(ParseError):
            parse_sum(bad)


def test_curvature_weights():
    assert Curvature("alphab").r_power == 1 and Curvature("rho").r_power == 3
    with pytest.raises(ValueError):
        Curvature("gamma")


def test_background_composition_and_commutation_defects():
    rows = {r["quantity"]: r for r in background_composition()}
    assert rows["trchi-2/r"]["reproduced"] and rows["rho"]["reproduced"]
    assert not rows["Omega-1/2"]["reproduced"]
    assert all(r["ok"] for r in totallycheck_table())


def test_database_records_have_sources():
    db = load_database()
    assert all(rec.principal for rec in db.values())
    assert all(rec.source for rec in db.values() if not rec.mutant)
    assert all(rec.note for rec in db.values() if rec.mutant)
