"""Decay signature algebra for schematic Γ_g / Γ_b / O^p_q bookkeeping.

A signature records how a schematic quantity is bounded in the exterior
region r >= |u| >= 1:

    |X| <~ eps^order * M^m_power * r^(-r_power) * |u|^(-(alpha*s + beta)),

where s is the decay parameter, kept symbolic and constrained to an
interval (default [4, 6]). ``deriv`` counts angular derivatives under the
r-weighted convention, so it does not change the powers.

Comparison ("decays at least as fast", written a <= b) ignores constants and
powers of M. Writing x = log r >= y = log|u| >= 0, the bound a/b <~ 1 holds on
the whole region iff it holds along the two extreme rays |u| = 1 and |u| = r,
at both ends of the s interval, and order(a) >= order(b).
"""
from __future__ import annotations

import configparser
import itertools
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from importlib import resources
from typing import Iterable, Sequence

DEFAULT_S_RANGE = (Fraction(4), Fraction(6))

TAG_RANK = {"BigO": 0, "Operator": 0, "Curvature": 1, "GammaG": 2, "GammaB": 3}


class UnsupportedOrderError(ValueError):
    """Raised when a derivative beyond the controlled order is requested."""


class UnknownEquationError(KeyError):
    """Raised for an equation id missing from the database."""


class ParseError(ValueError):
    """Raised for malformed schematic expressions."""


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class Affine:
    """alpha * s + beta, the exponent of |u|^-1."""

    alpha: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _frac(self.alpha))
        object.__setattr__(self, "beta", _frac(self.beta))

    def __add__(self, other: "Affine") -> "Affine":
        return Affine(self.alpha + other.alpha, self.beta + other.beta)

    def __sub__(self, other: "Affine") -> "Affine":
        return Affine(self.alpha - other.alpha, self.beta - other.beta)

    def at(self, s) -> Fraction:
        return self.alpha * _frac(s) + self.beta

    def __str__(self) -> str:
        if self.alpha == 0:
            return str(self.beta)
        a = "" if self.alpha == 1 else f"{self.alpha}*"
        if self.beta == 0:
            return f"{a}s"
        sign = "+" if self.beta > 0 else "-"
        return f"{a}s{sign}{abs(self.beta)}"


@dataclass(frozen=True)
class DecaySignature:
    tag: str
    m_power: int = 0
    r_power: Fraction = Fraction(0)
    u_power: Affine = field(default_factory=Affine)
    deriv: int = 0
    order: int = 0
    name: str = ""

    def __post_init__(self):
        base = self.tag.split(":")[0]
        if base not in TAG_RANK:
            raise ValueError(f"unknown tag {self.tag!r}")
        object.__setattr__(self, "r_power", _frac(self.r_power))
        if self.deriv < 0:
            raise ValueError("derivative count must be non-negative")

    @property
    def base_tag(self) -> str:
        return self.tag.split(":")[0]

    def __mul__(self, other: "DecaySignature") -> "DecaySignature":
        return mul(self, other)

    def label(self) -> str:
        return self.name or describe(self)

    def as_dict(self) -> dict:
        return {"tag": self.tag, "m_power": self.m_power, "r_power": str(self.r_power),
                "u_power": str(self.u_power), "deriv": self.deriv, "order": self.order}


def describe(sig: DecaySignature) -> str:
    return (f"eps^{sig.order} M^{sig.m_power} r^-({sig.r_power}) |u|^-({sig.u_power})"
            + ("'" * sig.deriv))


def BigO(p: int, q) -> DecaySignature:
    """Kerr-background class O^p_q: M^p / r^q, no epsilon."""
    q = _frac(q)
    return DecaySignature("BigO", m_power=int(p), r_power=q, name=f"O{p}_{q}")


def r_power(k) -> DecaySignature:
    """The plain factor r^k."""
    return DecaySignature("BigO", r_power=-_frac(k), name=f"r^{k}")


def GammaG(deriv: int = 0) -> DecaySignature:
    return DecaySignature("GammaG", 0, Fraction(2), Affine(Fraction(1, 2), Fraction(-3, 2)),
                          deriv, 1, "Gg" + ("1" if deriv else ""))


def GammaB(deriv: int = 0) -> DecaySignature:
    return DecaySignature("GammaB", 0, Fraction(1), Affine(Fraction(1, 2), Fraction(-1, 2)),
                          deriv, 1, "Gb" + ("1" if deriv else ""))


# Pointwise weights read off the curvature norms: (r_power, |u| exponent).
# alpha-check uses the beta-check weight, a weaker bound since r >= |u|.
CURVATURE_WEIGHTS = {
    "alpha": (Fraction(7, 2), Affine(Fraction(1, 2), -2)),
    "beta": (Fraction(7, 2), Affine(Fraction(1, 2), -2)),
    "rho": (Fraction(3), Affine(Fraction(1, 2), Fraction(-3, 2))),
    "sigma": (Fraction(3), Affine(Fraction(1, 2), Fraction(-3, 2))),
    "betab": (Fraction(2), Affine(Fraction(1, 2), Fraction(-1, 2))),
    "alphab": (Fraction(1), Affine(Fraction(1, 2), Fraction(1, 2))),
}

# Background values of the curvature components, as O^p_q classes.
KERR_CURVATURE = {"alpha": (3, 5), "alphab": (3, 5), "beta": (2, 4), "betab": (2, 4),
                  "rho": (1, 3), "sigma": (2, 4)}


def Curvature(name: str, deriv: int = 0) -> DecaySignature:
    if name not in CURVATURE_WEIGHTS:
        raise ValueError(f"unknown curvature component {name!r}")
    q, w = CURVATURE_WEIGHTS[name]
    return DecaySignature(f"Curvature:{name}", 0, q, w, deriv, 1, name + ("1" if deriv else ""))


def Operator(name: str) -> DecaySignature:
    """Placeholder factor for a differential operator in commutator expansions."""
    q = {"rnab": 0, "nab": 1, "nab3": 0, "nab4": 1}[name]
    u = Affine(0, 1) if name == "nab3" else Affine()
    return DecaySignature(f"Operator:{name}", 0, q, u, 0, 0, f"Op_{name}")


# --- algebra -----------------------------------------------------------------

def mul(a: DecaySignature, b: DecaySignature) -> DecaySignature:
    """Product of two signatures: powers and orders add."""
    ra, rb = TAG_RANK[a.base_tag], TAG_RANK[b.base_tag]
    if ra == rb and a.base_tag == "Curvature" and a.tag != b.tag:
        tag = "Curvature"
    else:
        tag = a.tag if ra >= rb else b.tag
    name = "*".join(x for x in (a.name, b.name) if x)
    return DecaySignature(tag, a.m_power + b.m_power, a.r_power + b.r_power,
                          a.u_power + b.u_power, max(a.deriv, b.deriv), a.order + b.order, name)


def product(factors: Iterable[DecaySignature]) -> DecaySignature:
    out = DecaySignature("BigO", name="")
    for f in factors:
        out = mul(out, f)
    return out


def _s_points(s_range) -> tuple[Fraction, Fraction]:
    lo, hi = (_frac(s_range[0]), _frac(s_range[1]))
    if lo > hi:
        raise ValueError("empty s interval")
    return lo, hi


def margin(a: DecaySignature, b: DecaySignature, s_range=DEFAULT_S_RANGE) -> Fraction:
    """Worst-case excess decay exponent of a over b on the exterior region.

    Non-negative iff a/b is bounded (ignoring the epsilon order). The value
    is the minimum over the rays |u| = 1 and |u| = r and both ends of s.
    """
    dq = a.r_power - b.r_power
    vals = []
    for s in _s_points(s_range):
        dw = a.u_power.at(s) - b.u_power.at(s)
        vals.extend([dq, dq + dw])
    return min(vals)


def leq(a: DecaySignature, b: DecaySignature, s_range=DEFAULT_S_RANGE) -> bool:
    """a decays at least as fast as b."""
    return a.order >= b.order and margin(a, b, s_range) >= 0


def normalize(terms: Sequence[DecaySignature], s_range=DEFAULT_S_RANGE) -> list[DecaySignature]:
    """Drop terms dominated by another term with the same epsilon order."""
    kept: list[DecaySignature] = []
    for i, t in enumerate(terms):
        dominated = False
        for j, o in enumerate(terms):
            if i == j or o.order != t.order:
                continue
            if leq(t, o, s_range) and (not leq(o, t, s_range) or j < i):
                dominated = True
                break
        if not dominated:
            kept.append(t)
    return kept


def flat_limit(terms: Sequence["SchematicTerm"]) -> list["SchematicTerm"]:
    """Terms surviving M = 0."""
    return [t for t in terms if t.signature.m_power == 0]


# --- derivatives -------------------------------------------------------------

DIRECTIONS = ("nab3", "nab4", "nabS", "rnabS")


def _shift(sig: DecaySignature, dq=0, du=0, deriv=None) -> DecaySignature:
    if sig.base_tag == "BigO" and du == 0:
        return replace(BigO(sig.m_power, sig.r_power + dq), deriv=sig.deriv if deriv is None else deriv)
    return replace(sig, r_power=sig.r_power + dq, u_power=sig.u_power + Affine(0, du),
                   deriv=sig.deriv if deriv is None else deriv, name="")


def derive(sig: DecaySignature, direction: str) -> list[DecaySignature]:
    """Schematic derivative of a signature, as a list of summands.

    ``nabS`` is the angular derivative and ``rnabS`` its r-weighted form
    r*nabla; ``nab4`` and ``nab3`` stand for Omega*nabla_4 and Omega*nabla_3.
    Background classes follow the O^p_q derivative rules; Gamma classes and
    products containing them move to their (1)-class.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"unknown direction {direction!r}")
    if sig.base_tag == "Operator":
        raise ValueError("cannot differentiate an operator placeholder")
    if sig.order == 0:
        if sig.deriv != 0:
            raise ValueError("background classes carry no derivative count")
        lin = {"nab4": [J()], "nabS": [Lc()], "rnabS": [Lc()],
               "nab3": [GammaG(), Jb(), Lc()]}[direction]
        main = _shift(sig, dq=1)
        if direction == "rnabS":
            main = sig
            lin = [mul(r_power(1), x) for x in lin]
        return [main] + [mul(sig, x) for x in lin]
    if sig.deriv >= 1:
        raise UnsupportedOrderError("only one derivative of a Gamma class is controlled")
    if direction == "rnabS":
        return [_shift(sig, deriv=1)]
    if direction == "nabS":
        return [_shift(sig, dq=1, deriv=1)]
    if direction == "nab4":
        return [_shift(sig, dq=1, deriv=1)]
    return [_shift(sig, du=1, deriv=1)]


def principal_scale(sig: DecaySignature, direction: str) -> DecaySignature:
    """Size of a derivative of a checked quantity, used for equation budgets.

    Angular and outgoing derivatives gain r^-1, incoming ones gain |u|^-1.
    No order cap is applied since the unknown may already be a (1)-quantity.
    """
    if direction in ("nabS", "nab4"):
        return _shift(sig, dq=1, deriv=sig.deriv + 1)
    if direction == "nab3":
        return _shift(sig, du=1, deriv=sig.deriv + 1)
    raise ValueError(f"unknown direction {direction!r}")


# --- named quantities --------------------------------------------------------

def J() -> DecaySignature:
    return replace(GammaG(1), name="J")


def Jb() -> DecaySignature:
    return replace(GammaB(1), name="Jb")


def Lc() -> DecaySignature:
    return replace(GammaG(1), name="L")


def _gg_scaled(k: int, name: str) -> DecaySignature:
    return replace(mul(r_power(k), GammaG()), name=name)


_GOOD = ("trchi", "trchib", "chihat", "eta", "etab", "zeta", "omega")
_BAD = ("chibhat", "omegab")


def _named(token: str) -> DecaySignature:
    if token in ("Gg", "Gg1"):
        return GammaG(len(token) - 2)
    if token in ("Gb", "Gb1"):
        return GammaB(len(token) - 2)
    if token == "J":
        return J()
    if token == "Jb":
        return Jb()
    if token == "L":
        return Lc()
    if token in _GOOD:
        return replace(GammaG(), name=token)
    if token in _BAD:
        return replace(GammaB(), name=token)
    if token in ("mu", "mub"):
        return replace(mul(r_power(-1), GammaG(1)), name=token)
    if token in ("Omegac", "bc"):
        return _gg_scaled(1, token)
    if token == "rc":
        return _gg_scaled(2, token)
    if token in ("gammaAB", "epsAB"):
        # coordinate components: r^2 times the normalised r*Gamma_g deviation
        return _gg_scaled(3, token)
    base = token[:-1] if token.endswith("1") else token
    if base in CURVATURE_WEIGHTS:
        return Curvature(base, 1 if base != token else 0)
    if token.startswith("Op_"):
        return Operator(token[3:])
    m = re.fullmatch(r"O(-?\d+)_(-?\d+)", token)
    if m:
        return BigO(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"r(?:\^(-?\d+(?:/\d+)?))?", token)
    if m:
        return r_power(Fraction(m.group(1) or 1))
    raise ParseError(f"unknown schematic token {token!r}")


# --- schematic terms and parsing ---------------------------------------------

@dataclass(frozen=True)
class SchematicTerm:
    factors: tuple[DecaySignature, ...]
    context: str = ""
    text: str = ""

    def __post_init__(self):
        if not self.factors:
            raise ValueError("a schematic term needs at least one factor")
        object.__setattr__(self, "factors", tuple(self.factors))

    @property
    def signature(self) -> DecaySignature:
        return product(self.factors)

    def __str__(self) -> str:
        return self.text or "*".join(f.label() for f in self.factors)


def _split_top(text: str, sep: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError(f"unbalanced parentheses in {text!r}")
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise ParseError(f"unbalanced parentheses in {text!r}")
    parts.append("".join(cur))
    return [p.strip() for p in parts]


def _parse_factor(tok: str) -> list[DecaySignature]:
    tok = tok.strip()
    if not tok:
        raise ParseError("empty factor")
    if tok.startswith("(") and tok.endswith(")"):
        return [f for alt in _split_top(tok[1:-1], ",") for f in _parse_factor(alt)]
    if ":" in tok:
        op, inner = tok.split(":", 1)
        return [replace(principal_scale(s, op), name=f"{op}:{s.name}") for s in _parse_factor(inner)]
    return [_named(tok)]


def parse_sum(text: str, context: str = "") -> list[SchematicTerm]:
    """Parse 'A*B + C*(x,y)' into schematic terms, expanding tuples."""
    text = text.strip()
    if not text:
        return []
    terms = []
    for part in _split_top(text, "+"):
        if not part:
            raise ParseError(f"empty summand in {text!r}")
        choices = [_parse_factor(f) for f in _split_top(part, "*")]
        for combo in itertools.product(*choices):
            terms.append(SchematicTerm(combo, context, "*".join(c.name for c in combo)))
    return terms


# --- equation database -------------------------------------------------------

@dataclass(frozen=True)
class EquationRecord:
    eq_id: str
    source: str
    principal: str
    linear: str
    error: str
    claim_linear: str = ""
    claim_error: str = ""
    mutant: bool = False
    note: str = ""


def load_database(text: str | None = None) -> dict[str, EquationRecord]:
    """Read the shipped equation database (or an alternative text)."""
    if text is None:
        text = resources.files("nullcone").joinpath("data/equations.txt").read_text()
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp.read_string(text)
    out = {}
    for sec in cp.sections():
        d = cp[sec]
        out[sec] = EquationRecord(
            eq_id=sec, source=d.get("source", ""), principal=d.get("principal", ""),
            linear=d.get("linear", ""), error=d.get("error", ""),
            claim_linear=d.get("claim_linear", ""), claim_error=d.get("claim_error", ""),
            mutant=d.getboolean("mutant", False), note=d.get("note", ""))
    return out


@dataclass
class TermVerdict:
    side: str
    term: str
    signature: DecaySignature
    budget_margin: Fraction | None
    claim_margin: Fraction | None
    passed: bool

    def as_dict(self) -> dict:
        f = lambda x: None if x is None else float(x)
        return {"side": self.side, "term": self.term, "signature": self.signature.as_dict(),
                "budget_margin": f(self.budget_margin), "claim_margin": f(self.claim_margin),
                "passed": self.passed}


@dataclass
class Verdict:
    eq_id: str
    passed: bool
    terms: list[TermVerdict]

    @property
    def failures(self) -> list[TermVerdict]:
        return [t for t in self.terms if not t.passed]

    @property
    def min_margin(self) -> float:
        vals = [min(x for x in (t.budget_margin, t.claim_margin) if x is not None)
                for t in self.terms if t.budget_margin is not None or t.claim_margin is not None]
        return float(min(vals)) if vals else float("inf")

    def as_dict(self) -> dict:
        return {"eq_id": self.eq_id, "passed": self.passed,
                "min_margin": self.min_margin, "terms": [t.as_dict() for t in self.terms]}


def _best_margin(sig: DecaySignature, refs: Sequence[SchematicTerm], s_range) -> Fraction | None:
    """Largest margin against any reference term of no higher epsilon order."""
    best = None
    for ref in refs:
        rs = ref.signature
        if sig.order < rs.order:
            continue
        m = margin(sig, rs, s_range)
        best = m if best is None or m > best else best
    return best


def check_terms(eq_id: str, principal: Sequence[SchematicTerm], linear: Sequence[SchematicTerm],
                error: Sequence[SchematicTerm], claim_linear: Sequence[SchematicTerm] = (),
                claim_error: Sequence[SchematicTerm] = (), s_range=DEFAULT_S_RANGE) -> Verdict:
    if not principal:
        raise ValueError(f"{eq_id}: no principal terms to set the budget")
    out = []
    for side, terms, claims in (("linear", linear, claim_linear), ("error", error, claim_error)):
        for t in terms:
            sig = t.signature
            bm = _best_margin(sig, principal, s_range)
            cm = _best_margin(sig, claims, s_range) if claims else None
            ok = bm is not None and bm >= 0 and (not claims or (cm is not None and cm >= 0))
            out.append(TermVerdict(side, str(t), sig, bm, cm, ok))
    return Verdict(eq_id, all(t.passed for t in out), out)


def check_equation(eq_id: str, principal=None, linear=None, error=None,
                   s_range=DEFAULT_S_RANGE, database: dict | None = None) -> Verdict:
    """Type-check one database equation; explicit term lists override the record."""
    db = load_database() if database is None else database
    if eq_id not in db:
        raise UnknownEquationError(eq_id)
    rec = db[eq_id]
    P = parse_sum(rec.principal, f"{eq_id}:principal") if principal is None else principal
    Lin = parse_sum(rec.linear, f"{eq_id}:linear") if linear is None else linear
    E = parse_sum(rec.error, f"{eq_id}:error") if error is None else error
    return check_terms(eq_id, P, Lin, E, parse_sum(rec.claim_linear), parse_sum(rec.claim_error),
                       s_range)


def check_all(include_mutants: bool = False, s_range=DEFAULT_S_RANGE) -> list[Verdict]:
    db = load_database()
    return [check_equation(k, s_range=s_range, database=db)
            for k, rec in db.items() if rec.mutant == include_mutants]


# --- commutators ---------------------------------------------------------------

COMMUTATORS = {
    ("rnab", "nab4"): "Gg*Op_rnab + O2_3*Op_rnab + Gg1 + O2_3",
    ("rnab", "nab3"): "Gb*Op_rnab + O2_3*Op_rnab + Gb1 + O2_3",
    ("nab", "nab4"): "O0_1*Op_nab + Gg*Op_nab + O2_3*Op_nab + r^-1*Gg1 + O2_4",
    ("nab", "nab3"): "O0_1*Op_nab + Gb*Op_nab + O2_3*Op_nab + r^-1*Gb1 + O2_4",
    ("nab4", "nab3"): "Gg*Op_nab3 + Gb*(Op_nab4,Op_nab) + O1_2*(Op_nab3,Op_nab4,Op_nab) + r^-1*Gg1 + O2_4",
    ("Omnab4", "Omnab3"): "Gb*Op_nab + O2_3*Op_nab + r^-1*Gg1 + O2_4",
}


def commutator_signature(pair: tuple[str, str]) -> list[SchematicTerm]:
    """Schematic expansion of a commutator of frame derivatives."""
    key = tuple(pair)
    if key not in COMMUTATORS:
        raise KeyError(f"no commutator formula for {pair!r}")
    return parse_sum(COMMUTATORS[key], f"[{key[0]},{key[1]}]")


# --- background compositions -------------------------------------------------

# quantity: (background + linearized pieces composed, stated class)
BACKGROUND_TABLE = {
    "trchi-2/r": ("O1_2 + trchi + O0_2*rc", "O1_2 + Gg"),
    "trchib+2/r": ("O1_2 + trchib + O0_2*rc", "O1_2 + Gb"),
    "chihat": ("O2_3 + chihat", "O2_3 + Gg"),
    "chibhat": ("O2_3 + chibhat", "O2_3 + Gb"),
    "eta": ("O2_3 + eta", "O2_3 + Gg"),
    "etab": ("O2_3 + etab", "O2_3 + Gg"),
    "omega": ("O1_2 + omega", "O1_2 + Gg"),
    "omegab": ("O1_2 + omegab", "O1_2 + Gb"),
    "b": ("O2_2 + bc", "O2_2 + r*Gg"),
    "Omega-1/2": ("O1_1 + Omegac", "O1_2 + r*Gg"),
    "gamma": ("O0_0 + r*Gg", "O0_0 + r*Gg"),
    "eps": ("O0_0 + r*Gg", "O0_0 + r*Gg"),
    "alpha": ("O3_5 + alpha", "O3_5 + alpha"),
    "alphab": ("O3_5 + alphab", "O3_5 + alphab"),
    "beta": ("O2_4 + beta", "O2_4 + beta"),
    "betab": ("O2_4 + betab", "O2_4 + betab"),
    "rho": ("O1_3 + rho", "O1_3 + rho"),
    "sigma": ("O2_4 + sigma", "O2_4 + sigma"),
}


def _covered(terms, by, s_range) -> bool:
    return all(any(leq(t.signature, b.signature, s_range) for b in by) for t in terms)


def background_composition(s_range=DEFAULT_S_RANGE) -> list[dict]:
    """Compose background classes with linearized ones and compare with the stated table.

    The background value of Omega - 1/2 is O^1_1 (it is -M/(2r) + ...), so that
    row does not reproduce the stated O^1_2 and is reported as such.
    """
    rows = []
    for q, (comp, stated) in BACKGROUND_TABLE.items():
        c = parse_sum(comp)
        st = parse_sum(stated)
        norm = normalize([t.signature for t in c], s_range)
        rows.append({"quantity": q, "composed": [describe(s) for s in norm],
                     "stated": stated, "reproduced": _covered(c, st, s_range)})
    return rows


def totallycheck_table(s_range=DEFAULT_S_RANGE) -> list[dict]:
    """Compare the commutation defect r*L*psi_K with the checked (1)-quantity."""
    rows = []
    for name, (p, q) in KERR_CURVATURE.items():
        target = Curvature(name, 1)
        if name in ("rho", "sigma"):
            rows.append({"psi": name, "defect": None, "margin": None, "ok": True})
            continue
        defect = product([r_power(1), Lc(), BigO(p, q)])
        m = margin(defect, target, s_range)
        rows.append({"psi": name, "defect": describe(defect), "margin": float(m),
                     "ok": leq(defect, target, s_range)})
    return rows


__all__ = [
    "Affine", "DecaySignature", "SchematicTerm", "BigO", "GammaG", "GammaB", "Curvature",
    "Operator", "J", "Jb", "Lc", "r_power", "mul", "product", "margin", "leq", "normalize",
    "flat_limit", "derive", "principal_scale", "parse_sum", "load_database", "check_equation",
    "check_terms", "check_all", "commutator_signature", "background_composition",
    "totallycheck_table", "Verdict", "TermVerdict", "EquationRecord", "UnsupportedOrderError",
    "UnknownEquationError", "ParseError", "DEFAULT_S_RANGE",
]
