"""Bianchi pairs, their r^p-weighted divergence identities and the weighted norm families.

A Bianchi pair couples two curvature components psi1, psi2 through

    shape 1:  nabla_3 psi1 + a1 trchib psi1 = -k d_k^* psi2 + h1,
              nabla_4 psi2 + a2 trchi  psi2 =    d_k   psi1 + h2,
    shape 2:  nabla_3 psi1 + a1 trchib psi1 =    d_k   psi2 + h1,
              nabla_4 psi2 + a2 trchi  psi2 = -k d_k^* psi1 + h2.

Multiplying by r^p psi and using d_k a . b - a . d_k^* b = div(a conj b)
gives a divergence identity whose bulk coefficients decide which
weighted estimate the pair admits (cases a-d).

Fields live on a :class:`~nullcone.grid.NullGrid` as coefficient arrays of
shape (n_u, n_ub, L+1, 2L+1). Cone integrals use the measure
2 Omega d(node) dA, the boundary measure produced by the identity.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from . import spectral as sp
from .decay_calculus import Affine
from .grid import GridField, NullGrid, background_arrays, grid_lp_norm, op_d, op_dstar, sphere_l2
from .report import NormReport
from .sphere_calculus import SPIN, RankError, _norm_rank

__all__ = [
    "BianchiPair", "CANONICAL_PAIRS", "TEUKOLSKY_PAIR", "PAIRS", "StencilError",
    "select_case", "regime_weights", "s0",
    "identity_terms", "divergence_residual", "manufactured_pair", "mms_convergence",
    "rp_flux", "cone_flux", "energy_balance",
    "NormSpec", "norm_table", "regime", "norm_suite",
    "teukolsky_quantities", "teukolsky_residual",
    "PeelingForm", "peeling_exponents",
]

F = Fraction


class StencilError(ValueError):
    """A finite-difference stencil needs nodes the grid does not have."""


# ---------------------------------------------------------------- pairs

@dataclass(frozen=True)
class BianchiPair:
    """Parameters of a Bianchi pair (psi1, psi2)."""

    name: str
    k: int
    a1: Fraction
    a2: Fraction
    shape: int
    psi1_rank: object
    psi2_rank: object
    canonical_p: str
    psi1: str = "psi1"
    psi2: str = "psi2"

    @property
    def weights(self) -> tuple[int, int]:
        """Multipliers (c1, c2) of |psi1|^2 and |psi2|^2 in the identity."""
        return (1, self.k) if self.shape == 1 else (self.k, 1)

    @property
    def spins(self) -> tuple[int, int]:
        return SPIN[_norm_rank(self.psi1_rank)], SPIN[_norm_rank(self.psi2_rank)]


CANONICAL_PAIRS = (
    BianchiPair("alpha-beta", 2, F(1, 2), F(2), 1, 2, 1, "s", "alpha", "beta"),
    BianchiPair("beta-rhosigma", 1, F(1), F(3, 2), 1, 1, "0pair", "4", "beta", "(rho,-sigma)"),
    BianchiPair("rhosigma-betab", 1, F(3, 2), F(1), 2, "0pair", 1, "2", "(rho,sigma)", "-betab"),
    BianchiPair("betab-alphab", 2, F(2), F(1, 2), 2, 1, 2, "0", "-betab", "alphab"),
)
TEUKOLSKY_PAIR = BianchiPair("teukolsky", 2, F(0), F(5, 2), 1, 2, 1, "s0",
                             "alpha_ring", "alpha_slash")
PAIRS = {p.name: p for p in CANONICAL_PAIRS + (TEUKOLSKY_PAIR,)}


def s0(s) -> Fraction:
    """Flux weight of the Teukolsky pair, min(s, 15/2)."""
    return min(F(str(s)), F(15, 2))


def select_case(pair: BianchiPair, p) -> str:
    """Case label from the signs of A = 2 + p - 4 a1 and B = 4 a2 - 2 - p.

    (a) A > 0, B > 0;  (b) A > 0, B = 0;  (c) A <= 0, B >= 0;  (d) A > 0, B < 0.
    """
    p = F(str(p)) if not isinstance(p, Fraction) else p
    A = 2 + p - 4 * pair.a1
    B = 4 * pair.a2 - 2 - p
    if A > 0 and B > 0:
        return "a"
    if A > 0 and B == 0:
        return "b"
    if A <= 0 and B >= 0:
        return "c"
    if A > 0 and B < 0:
        return "d"
    raise ValueError(f"no estimate covers 2+p-4a1={A} <= 0 with 4a2-2-p={B} < 0")


def regime_weights(s) -> list[dict]:
    """The weights p used for each pair in the s regimes, with the selected case."""
    s = F(str(s))
    if s <= 3:
        raise ValueError("decay rate s must exceed 3")
    if s < 4:
        ps = [s, s, F(2), F(0)]
    elif s <= 6:
        ps = [s, F(4), F(2), F(0)]
    else:
        ps = [F(6), F(4), F(2), F(0)]
    rows = [{"pair": pair.name, "p": p, "case": select_case(pair, p)}
            for pair, p in zip(CANONICAL_PAIRS, ps)]
    if s > 6:
        rows.append({"pair": TEUKOLSKY_PAIR.name, "p": s0(s),
                     "case": select_case(TEUKOLSKY_PAIR, s0(s))})
    return rows


# ---------------------------------------------------------------- identity

def _pointwise(coeffs: np.ndarray, spin: int, g: sp.SphereGrid) -> np.ndarray:
    return g.synthesis(coeffs, spin)


def _sq(v: np.ndarray, spin: int) -> np.ndarray:
    return np.abs(v)**2 * (1.0 if spin == 0 else 2.0)


def _dot(a: np.ndarray, b: np.ndarray, spin: int) -> np.ndarray:
    return (a * np.conj(b)).real * (1.0 if spin == 0 else 2.0)


def _bg(grid: NullGrid) -> dict:
    return background_arrays(grid.M, grid.u_nodes[:, None], grid.ub_nodes[None, :])


def _check_fields(pair: BianchiPair, psi1: np.ndarray, psi2: np.ndarray) -> None:
    for name, arr in (("psi1", psi1), ("psi2", psi2)):
        a = np.asarray(arr)
        if a.ndim != 4 or a.shape[-1] != 2 * a.shape[-2] - 1:
            raise RankError(f"{name} must have shape (n_u, n_ub, L+1, 2L+1)")
    if np.shape(psi1) != np.shape(psi2):
        raise RankError(f"psi1 and psi2 shapes differ: {np.shape(psi1)} vs {np.shape(psi2)}")


def identity_terms(pair: BianchiPair, p, psi1, psi2, h1, h2, grid: NullGrid) -> dict:
    """Pointwise LHS and RHS of the pair's divergence identity on every node.

    Returns grid values of shape (n_u, n_ub, nlat, nlon). The divergence
    terms Div(A e3) = (Omega^2 r^2)^-1 d_u(Omega r^2 A) and the e4 mirror are
    taken with second-order finite differences in u and ub.
    """
    _check_fields(pair, psi1, psi2)
    p = float(F(str(p)))
    k = pair.k
    c1, c2 = pair.weights
    s1, s2 = pair.spins
    a1, a2 = float(pair.a1), float(pair.a2)
    L = psi1.shape[-2] - 1
    g = sp.SphereGrid(2 * L)
    bg = {key: v[..., None, None] for key, v in _bg(grid).items()}
    r, Om = bg["r"], bg["Omega"]
    v1, v2 = _pointwise(psi1, s1, g), _pointwise(psi2, s2, g)
    w1, w2 = _pointwise(h1, s1, g), _pointwise(h2, s2, g)
    n1, n2 = _sq(v1, s1), _sq(v2, s2)
    rp = r**p

    A1 = c1 * rp * n1
    A2 = c2 * rp * n2
    div3 = np.gradient(Om * r**2 * A1, grid.u_nodes, axis=0, edge_order=2) / (Om**2 * r**2)
    div4 = np.gradient(Om * r**2 * A2, grid.ub_nodes, axis=1, edge_order=2) / (Om**2 * r**2)
    lhs = (div3 + div4
           + c1 * (2 * a1 - 1 - p / 2) * rp * bg["trchib"] * n1
           + c2 * (2 * a2 - 1 - p / 2) * rp * bg["trchi"] * n2)

    # w = (spin-k field) * conj(spin-(k-1) field), a 1-form; div w = Re d1 w.
    hi, lo = (psi1, psi2) if pair.shape == 1 else (psi2, psi1)
    s_hi, s_lo = (s1, s2) if pair.shape == 1 else (s2, s1)
    wv = _pointwise(hi, s_hi, g) * np.conj(_pointwise(lo, s_lo, g))
    wc = g.analysis(wv, 1)
    divw = g.synthesis(op_d(1, wc, r[..., 0, 0]), 0).real

    rhs = (2 * k * rp * divw
           + 2 * c1 * rp * _dot(v1, w1, s1) + 2 * c2 * rp * _dot(v2, w2, s2)
           - 2 * c1 * rp * bg["omegab"] * n1 - 2 * c2 * rp * bg["omega"] * n2
           + c1 * p * r**(p - 1) * (bg["e3r"] - r * bg["trchib"] / 2) * n1
           + c2 * p * r**(p - 1) * (bg["e4r"] - r * bg["trchi"] / 2) * n2)
    return {"lhs": lhs, "rhs": rhs, "grid": g}


def divergence_residual(pair: BianchiPair, p, psi1, psi2, h1, h2, grid: NullGrid,
                        correction=None) -> np.ndarray:
    """LHS minus RHS of the divergence identity at interior grid nodes.

    ``correction`` optionally adds a pair (c1, c2) to the sources (h1, h2);
    it models the lower-order correction that vanishes on exact backgrounds.
    """
    psi1, psi2 = _unwrap(pair, psi1, psi2)
    if correction is not None:
        h1, h2 = h1 + correction[0], h2 + correction[1]
    t = identity_terms(pair, p, psi1, psi2, h1, h2, grid)
    return (t["lhs"] - t["rhs"])[1:-1, 1:-1]


def _unwrap(pair: BianchiPair, psi1, psi2):
    """Accept GridField or bare arrays; GridField ranks must match the pair."""
    out = []
    for name, psi, want in (("psi1", psi1, pair.psi1_rank), ("psi2", psi2, pair.psi2_rank)):
        if isinstance(psi, GridField):
            if psi.rank != _norm_rank(want):
                raise RankError(f"{name} has rank {psi.rank!r}, pair {pair.name} needs {want!r}")
            psi = psi.coeffs
        out.append(np.asarray(psi))
    _check_fields(pair, *out)
    return out


def pair_sources(pair: BianchiPair, psi1, psi2, d3psi1, d4psi2, grid: NullGrid):
    """Sources (h1, h2) making (psi1, psi2) an exact solution of the pair system.

    ``d3psi1`` and ``d4psi2`` are exact coordinate derivatives d_u psi1 and
    d_ub psi2 of the coefficient arrays.
    """
    bg = _bg(grid)
    r = bg["r"]
    Om = bg["Omega"][..., None, None]
    trb = bg["trchib"][..., None, None]
    tr = bg["trchi"][..., None, None]
    k = pair.k
    n3 = d3psi1 / Om + float(pair.a1) * trb * psi1
    n4 = d4psi2 / Om + float(pair.a2) * tr * psi2
    if pair.shape == 1:
        return n3 + k * op_dstar(k, psi2, r), n4 - op_d(k, psi1, r)
    return n3 - op_d(k, psi2, r), n4 + k * op_dstar(k, psi1, r)


def manufactured_pair(pair: BianchiPair, grid: NullGrid, rng: np.random.Generator,
                      L: int = 3, freq: float = 1.0) -> dict:
    """Smooth separable fields f(u, ub) Y with sources computed exactly."""
    U, UB = np.meshgrid(grid.u_nodes, grid.ub_nodes, indexing="ij")
    s1, s2 = pair.spins

    def harmonic(spin):
        c = rng.standard_normal((L + 1, 2 * L + 1)) + 1j * rng.standard_normal((L + 1, 2 * L + 1))
        return np.where(sp.valid_mask(L, spin), c, 0.0) / np.sqrt(2.0)

    Y1, Y2 = harmonic(s1), harmonic(s2)
    ph = rng.uniform(0, 2 * np.pi, 2)
    a, b, c, d = 0.9 * freq, 0.6 * freq, 0.5 * freq, 0.8 * freq
    f1 = np.cos(a * U + b * UB + ph[0])
    f1u = -a * np.sin(a * U + b * UB + ph[0])
    f2 = np.sin(c * U - d * UB + ph[1])
    f2ub = -d * np.cos(c * U - d * UB + ph[1])
    ex = (Ellipsis, None, None)
    psi1, psi2 = f1[ex] * Y1, f2[ex] * Y2
    h1, h2 = pair_sources(pair, psi1, psi2, f1u[ex] * Y1, f2ub[ex] * Y2, grid)
    return {"psi1": psi1, "psi2": psi2, "h1": h1, "h2": h2}


def mms_convergence(pair: BianchiPair, p, M: float = 0.0, sizes=(9, 17, 33, 65),
                    u_range=(-4.0, -2.0), ub_range=(2.0, 4.0), L: int = 3, seed: int = 0,
                    freq: float = 0.5) -> dict:
    """Sup-norm residual of the identity on manufactured solutions under grid halving."""
    errs, hs = [], []
    for n in sizes:
        rng = np.random.default_rng(seed)
        grid = NullGrid(np.linspace(*u_range, n), np.linspace(*ub_range, n), L, M)
        mf = manufactured_pair(pair, grid, rng, L, freq)
        res = divergence_residual(pair, p, mf["psi1"], mf["psi2"], mf["h1"], mf["h2"], grid)
        errs.append(float(np.max(np.abs(res))))
        hs.append((u_range[1] - u_range[0]) / (n - 1))
    errs, hs = np.array(errs), np.array(hs)
    orders = np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])
    return {"pair": pair.name, "p": F(str(p)), "M": M, "h": hs.tolist(),
            "residual_linf": errs.tolist(), "orders": orders.tolist(),
            "order": float(np.min(orders))}


# ---------------------------------------------------------------- fluxes

def _quad(values: np.ndarray, x: np.ndarray, rule: str) -> float:
    if rule == "simpson":
        return float(integrate.simpson(values, x=x))
    if rule == "trapezoid":
        return float(integrate.trapezoid(values, x=x))
    raise ValueError(f"unknown quadrature rule {rule!r}")


def cone_flux(density: np.ndarray, cone, rule: str = "simpson") -> float:
    """Integral over a cone of a per-node sphere integral, measure 2 Omega d(node)."""
    nodes = np.asarray(cone.nodes, dtype=float)
    if nodes.size < 2:
        raise ValueError("cone segment needs at least two nodes")
    return _quad(2.0 * np.asarray(cone.Omega) * density, nodes, rule)


def rp_flux(coeffs: np.ndarray, rank, p, cone, rule: str = "simpson") -> float:
    """Integral of r^p |psi|^2 over a cone; ``coeffs`` has one sphere per cone node."""
    coeffs = np.asarray(coeffs)
    if coeffs.ndim != 3 or coeffs.shape[0] != np.asarray(cone.nodes).size:
        raise ValueError("need one coefficient array per cone node")
    if coeffs.shape[0] < 2:
        raise ValueError("cone segment needs at least two nodes")
    r = np.asarray(cone.r, dtype=float)
    dens = r**float(F(str(p))) * sphere_l2(coeffs, rank, r)**2
    return cone_flux(dens, cone, rule)


def energy_balance(pair: BianchiPair, p, psi1: np.ndarray, psi2: np.ndarray, grid: NullGrid,
                   rule: str = "simpson") -> dict:
    """Integrated identity for a homogeneous solution on the whole grid rectangle.

    The psi1 flux lives on outgoing cones and the psi2 flux on ingoing
    cones. On Minkowski with h = 0 the identity reads
    out_final + in_final + bulk = out_initial + in_initial, with
    bulk = int c1 A r^(p-1)|psi1|^2 + c2 B r^(p-1)|psi2|^2.
    """
    p = F(str(p))
    c1, c2 = pair.weights
    pf = float(p)
    A = float(2 + p - 4 * pair.a1)
    B = float(4 * pair.a2 - 2 - p)
    r1 = pair.psi1_rank
    r2 = pair.psi2_rank
    nu, nub = grid.shape
    out0 = c1 * rp_flux(psi1[0], r1, p, grid.outgoing(0), rule)
    out1 = c1 * rp_flux(psi1[-1], r1, p, grid.outgoing(nu - 1), rule)
    in0 = c2 * rp_flux(psi2[:, 0], r2, p, grid.ingoing(0), rule)
    in1 = c2 * rp_flux(psi2[:, -1], r2, p, grid.ingoing(nub - 1), rule)
    r = grid.r
    # dvol = 2 Omega^2 r^2 du dub dA_unit; the sphere integrals carry the r^2.
    n1 = sphere_l2(psi1, r1, r)**2
    n2 = sphere_l2(psi2, r2, r)**2
    meas = 2.0 * grid.Omega**2
    trb, tr = -4.0 * grid.Omega / r, 4.0 * grid.Omega / r
    b1 = c1 * (2 * float(pair.a1) - 1 - pf / 2) * r**pf * trb * n1 * meas
    b2 = c2 * (2 * float(pair.a2) - 1 - pf / 2) * r**pf * tr * n2 * meas

    def integral(f):
        return _quad(np.array([_quad(row, grid.ub_nodes, rule) for row in f]), grid.u_nodes, rule)

    bulk1, bulk2 = integral(b1), integral(b2)
    case = select_case(pair, p)
    initial = out0 + in0
    # Terms with a negative coefficient are moved to the right-hand side.
    left = out1 + in1 + max(bulk1, 0.0) + max(bulk2, 0.0)
    right = initial - min(bulk1, 0.0) - min(bulk2, 0.0)
    return {"pair": pair.name, "p": p, "case": case, "A": A, "B": B,
            "fluxes": {"out_initial": out0, "in_initial": in0, "out_final": out1, "in_final": in1},
            "bulk": {"psi1": bulk1, "psi2": bulk2, "total": bulk1 + bulk2},
            "slack": right - left, "relative_defect": (right - left) / max(left, right, 1e-300)}


# ---------------------------------------------------------------- norms

@dataclass(frozen=True)
class NormSpec:
    """One weighted norm: family, quantity, weight r^r_power |u|^u_power, order q.

    ``family`` is one of R (outgoing flux), Rb (ingoing flux), RS (sphere
    L^p, supremum over p in {2, 4}), O, Ostar, Ocirc. For sphere norms the
    weight is r^(r_power + q - 2/p) when ``lp_shift`` is set.
    """

    family: str
    quantity: str
    r_power: Affine
    u_power: Affine
    q: int = 0
    lp_shift: bool = False
    log_power: Fraction = F(0)

    def weight(self, s, p: int = 2) -> tuple[float, float]:
        a = float(self.r_power.at(s)) + (self.q if self.family in ("O", "Ostar", "Ocirc") else 0)
        if self.lp_shift:
            a -= 2.0 / p
        return a, float(self.u_power.at(s))

    @property
    def name(self) -> str:
        return f"{self.family}_{self.q}[{self.quantity}]"


def _A(alpha, beta) -> Affine:
    return Affine(F(alpha), F(beta))


_HALF_S = _A(F(1, 2), 0)


def regime(s) -> str:
    s = F(str(s))
    if s <= 3:
        raise ValueError("decay rate s must exceed 3")
    if s < 4:
        return "C"
    if s <= 6:
        return "main"
    return "D"


def _flux_specs(reg: str, s) -> list[NormSpec]:
    out = {  # outgoing cones
        "alpha": (_HALF_S, _A(0, 0)),
        "beta": (_A(0, 2), _A(F(1, 2), -2)),
        "rhosigma": (_A(0, 1), _A(F(1, 2), -1)),
        "betab": (_A(0, 0), _HALF_S),
    }
    inc = {  # ingoing cones
        "beta": (_HALF_S, _A(0, 0)),
        "rhosigma": (_A(0, 2), _A(F(1, 2), -2)),
        "betab": (_A(0, 1), _A(F(1, 2), -1)),
        "alphab": (_A(0, 0), _HALF_S),
    }
    if reg == "C":
        out["beta"] = (_HALF_S, _A(0, 0))
        inc["rhosigma"] = (_HALF_S, _A(0, 0))
    elif reg == "D":
        s_0 = s0(s)
        out["alpha"] = (_A(0, 3), _A(F(1, 2), -3))
        inc["beta"] = (_A(0, 3), _A(F(1, 2), -3))
        inc["alpha"] = (_A(0, s_0 / 2), _A(F(1, 2), -s_0 / 2))
    specs = []
    for q in (0, 1):
        specs += [NormSpec("R", n, rp, up, q) for n, (rp, up) in out.items()]
        specs += [NormSpec("Rb", n, rp, up, q) for n, (rp, up) in inc.items()]
    return specs


def _sphere_specs(reg: str, s) -> list[NormSpec]:
    if reg == "main":
        tab = [("beta", _A(0, F(7, 2)), _A(F(1, 2), -2)),
               ("beta", _A(F(1, 2), 1), _A(0, F(1, 2))),
               ("rhosigma", _A(0, 3), _A(F(1, 2), F(-3, 2))),
               ("betab", _A(0, 2), _A(F(1, 2), F(-1, 2)))]
    elif reg == "C":
        tab = [("beta", _A(F(1, 2), F(3, 2)), _A(0, 0)),
               ("beta", _A(F(1, 2), 1), _A(0, F(1, 2))),
               ("rhosigma", _A(F(1, 2), 1), _A(0, F(1, 2))),
               ("betab", _A(0, 2), _A(F(1, 2), F(-1, 2)))]
    else:
        tab = [("beta", _A(0, F(7, 2)), _A(F(1, 2), -2)),
               ("beta", _A(0, 4), _A(F(1, 2), F(-5, 2))),
               ("rhosigma", _A(0, 3), _A(F(1, 2), F(-3, 2))),
               ("betab", _A(0, 2), _A(F(1, 2), F(-1, 2))),
               ("alphab", _A(0, 1), _A(F(1, 2), F(1, 2)))]
    specs = [NormSpec("RS", n, rp, up, 0, True) for n, rp, up in tab]
    if reg == "D":
        specs.append(_alpha_sphere_spec(s))
    return specs


def _alpha_sphere_spec(s) -> NormSpec:
    """L^2(S) norm of alpha for s > 6 (no p-supremum)."""
    s = F(str(s))
    if s < 7:
        return NormSpec("RS", "alpha", _A(F(1, 2), F(1, 2)), _A(0, 0))
    if s == 7:
        return NormSpec("RS", "alpha", _A(0, 4), _A(0, 0), log_power=F(-1, 2))
    return NormSpec("RS", "alpha", _A(0, 4), _A(F(1, 2), F(-7, 2)))


_O_GOOD = ("Omega_trchi", "Omega_trchib", "chihat", "eta", "etab", "Omega_omega")
_O_BAD = ("chibhat", "Omega_omegab")


def _ricci_specs() -> list[NormSpec]:
    specs = []
    for q in (0, 1):
        specs += [NormSpec("O", n, _A(0, 2), _A(F(1, 2), F(-3, 2)), q, True) for n in _O_GOOD]
        specs += [NormSpec("O", n, _A(0, 1), _A(F(1, 2), F(-1, 2)), q, True) for n in _O_BAD]
        specs.append(NormSpec("O", "Omega", _A(0, 1), _A(F(1, 2), F(-3, 2)), q, True))
        specs += [NormSpec("O", n, _A(0, -1), _A(F(1, 2), F(-3, 2)), q, True)
                  for n in ("gamma", "in")]
        specs.append(NormSpec("O", "b", _A(0, 2), _A(F(1, 2), F(-3, 2)), q, True))
        specs += [NormSpec("Ocirc", n, _A(F(1, 2), F(1, 2)), _A(0, 0), q, True)
                  for n in ("Omega_trchib", "etab", "Omega_omega")]
        specs += [NormSpec("Ostar", n, _A(0, 2), _A(F(1, 2), F(-3, 2)), q, True)
                  for n in ("chihat", "trchi", "trchib", "zeta", "L")]
        specs += [NormSpec("Ostar", n, _A(0, 1), _A(F(1, 2), F(-1, 2)), q, True)
                  for n in ("chibhat", "Jb")]
        specs += [NormSpec("Ostar", n, _A(0, 1), _A(F(1, 2), F(-3, 2)), q, True)
                  for n in ("gamma", "in")]
        specs.append(NormSpec("Ostar", "mubm", _A(0, 3), _A(F(1, 2), F(-3, 2)), q, True))
    specs += [NormSpec("O", n, _A(0, 2), _A(F(1, 2), F(-3, 2)), 0, True) for n in ("J", "L")]
    specs.append(NormSpec("O", "Jb", _A(0, 1), _A(F(1, 2), F(-1, 2)), 0, True))
    return specs


def norm_table(s) -> list[NormSpec]:
    """Every weighted norm in force for decay rate s."""
    reg = regime(s)
    return _flux_specs(reg, s) + _sphere_specs(reg, s) + _ricci_specs()


FIELD_RANKS = {"alpha": 2, "beta": 1, "rhosigma": "0pair", "betab": 1, "alphab": 2}


def _sphere_sq(coeffs: np.ndarray, rank, r: np.ndarray, q: int) -> np.ndarray:
    """int_S |(r nabla)^q psi|^2 dA, batched over leading axes."""
    if q == 0:
        return sphere_l2(coeffs, rank, r)**2
    rank = _norm_rank(rank)
    s = SPIN[rank]
    fac = 0.5 if rank == "0pair" else 1.0
    up = np.sum(np.abs(sp.eth(coeffs, s))**2, axis=(-2, -1))
    down = np.sum(np.abs(sp.ethbar(coeffs, s))**2, axis=(-2, -1))
    return fac * (up + down) * r**2


def _flux_trace(spec: NormSpec, coeffs: np.ndarray, rank, grid: NullGrid, s, rule: str):
    a, b = spec.weight(s)
    r, U = grid.r, np.abs(grid.u_nodes)[:, None] * np.ones_like(grid.r)
    dens = r**(2 * a) * U**(2 * b) * _sphere_sq(coeffs, rank, r, spec.q)
    if spec.family == "R":
        vals = [cone_flux(dens[i], grid.outgoing(i), rule) for i in range(grid.shape[0])]
        coord = grid.u_nodes
    else:
        vals = [cone_flux(dens[:, j], grid.ingoing(j), rule) for j in range(grid.shape[1])]
        coord = grid.ub_nodes
    return coord, np.sqrt(np.maximum(vals, 0.0))


def _sphere_norm(spec: NormSpec, coeffs: np.ndarray, rank, grid: NullGrid, s) -> np.ndarray:
    r, U = grid.r, np.abs(grid.u_nodes)[:, None] * np.ones_like(grid.r)
    ps = (2,) if spec.log_power or not spec.lp_shift else (2, 4)
    best = np.zeros(grid.shape)
    for p in ps:
        a, b = spec.weight(s, p)
        w = r**a * U**b * np.log(r)**float(spec.log_power)
        best = np.maximum(best, w * grid_lp_norm(coeffs, rank, r, p))
    return best


def norm_suite(fields: dict, grid: NullGrid, s, rule: str = "simpson",
               run_id: str = "norms") -> NormReport:
    """Every curvature (and supplied Ricci) norm of the regime on the grid.

    ``fields`` maps component names (alpha, beta, rhosigma, betab, alphab, or
    a Ricci coefficient name with a ``(rank, coeffs)`` tuple) to coefficient
    arrays of shape (n_u, n_ub, L+1, 2L+1). Flux norms are reported as the
    supremum over cones together with the per-cone trace.
    """
    s = F(str(s))
    reg = regime(s)
    rep = NormReport(run_id, meta={"s": s, "regime": reg, "measure": "2 Omega d(node) dA",
                                   "quadrature": rule})
    for spec in norm_table(s):
        entry = fields.get(spec.quantity)
        if entry is None:
            continue
        rank, coeffs = (entry if isinstance(entry, tuple)
                        else (FIELD_RANKS[spec.quantity], entry))
        if spec.family in ("R", "Rb"):
            coord, vals = _flux_trace(spec, coeffs, rank, grid, s, rule)
            rep.values[spec.name] = float(np.max(vals))
            rep.traces[spec.name] = {"coordinate": coord, "value": vals}
            continue
        if spec.q:
            continue  # derivative sphere norms are only tabulated
        name = spec.name if spec.family != "RS" else f"RS[{spec.quantity}|{spec.r_power}]"
        vals = _sphere_norm(spec, coeffs, rank, grid, s)
        rep.values[name] = max(rep.values.get(name, 0.0), float(np.max(vals)))
    return rep


# ---------------------------------------------------------------- Teukolsky

def teukolsky_quantities(coeffs: np.ndarray, grid: NullGrid, which: str = "alpha"):
    """(ring, slash) = (r^-4 nabla_4(r^5 alpha), r d_2 alpha), or the alphab mirror with nabla_3."""
    coeffs = np.asarray(coeffs)
    axis = {"alpha": 1, "alphab": 0}.get(which)
    if axis is None:
        raise ValueError("which must be 'alpha' or 'alphab'")
    nodes = grid.ub_nodes if axis == 1 else grid.u_nodes
    if nodes.size < 3:
        raise StencilError("the nabla stencil needs at least three nodes along the cone")
    r = grid.r[..., None, None]
    Om = grid.Omega[..., None, None]
    ring = np.gradient(r**5 * coeffs, nodes, axis=axis, edge_order=2) / (Om * r**4)
    slash = op_d(2, coeffs, grid.r) * r
    return ring, slash


def teukolsky_residual(alpha: np.ndarray, grid: NullGrid) -> dict:
    """Residuals of the flat-space Teukolsky pair equations at interior nodes.

    nabla_3 ring + 2 d_2^* slash - 4 alpha / r and
    nabla_4 slash + (5/2) trchi slash - d_2 ring.
    """
    if min(grid.shape) < 3:
        raise StencilError("Teukolsky residuals need three nodes in each null direction")
    ring, slash = teukolsky_quantities(alpha, grid)
    r = grid.r[..., None, None]
    Om = grid.Omega[..., None, None]
    n3 = np.gradient(ring, grid.u_nodes, axis=0, edge_order=2) / Om
    n4 = np.gradient(slash, grid.ub_nodes, axis=1, edge_order=2) / Om
    e1 = n3 + 2 * op_dstar(2, slash, grid.r) - 4 * alpha / r
    e2 = n4 + 2.5 * (4 * Om / r) * slash - op_d(2, ring, grid.r)
    return {"first": e1[1:-1, 1:-1], "second": e2[1:-1, 1:-1]}


# ---------------------------------------------------------------- peeling

@dataclass(frozen=True)
class PeelingForm:
    """Decay weight of one component: |r^(a - 2/p) |u|^b (log r)^c psi|_{p,S} bounded.

    ``norm`` is 'lp' (supremum over p in [2, 4]; sup-norm equivalent r^a),
    'L2S' (p = 2 only), 'sup' (pointwise) or 'flux' (no sphere bound).
    """

    component: str
    norm: str
    r_power: Fraction | None
    u_power: Fraction | None
    log_power: Fraction = F(0)
    source: str = ""

    def l2_weight(self) -> Fraction | None:
        """Exponent of r in the L^2(S) form."""
        if self.r_power is None:
            return None
        return self.r_power - 1 if self.norm in ("lp", "L2S", "sup") else None


def peeling_exponents(s) -> dict[str, list[PeelingForm]]:
    """Decay forms of each curvature component in the regime of s."""
    s = F(str(s))
    if s <= 3:
        raise ValueError("decay rate s must exceed 3")
    h = F(1, 2)
    tab: dict[str, list[PeelingForm]] = {}

    def add(comp, *forms):
        tab[comp] = list(forms)

    if s > 6:
        src = "strong peeling" if s > 7 else "appendix D"
        add("beta", PeelingForm("beta", "lp", F(4), (s - 5) * h, source=src))
        add("rhosigma", PeelingForm("rhosigma", "lp", F(3), (s - 3) * h, source=src))
        add("betab", PeelingForm("betab", "lp", F(2), (s - 1) * h, source=src))
        add("alphab", PeelingForm("alphab", "lp", F(1), (s + 1) * h, source=src))
        if s > 7:
            add("alpha", PeelingForm("alpha", "L2S", F(5), (s - 7) * h, source="subpeeling"),
                PeelingForm("alpha", "sup", F(5), (s - 7) * h, source="strong peeling"))
        elif s == 7:
            add("alpha", PeelingForm("alpha", "L2S", F(5), F(0), F(-1, 2), source="peeling alpha"))
        else:
            add("alpha", PeelingForm("alpha", "L2S", (s + 3) * h, F(0), source="peeling alpha"))
        return tab
    if s >= 4:
        add("beta", PeelingForm("beta", "lp", F(7, 2), (s - 4) * h, source="R0S"),
            PeelingForm("beta", "lp", (s + 2) * h, h, source="R0S ingoing"))
        add("rhosigma", PeelingForm("rhosigma", "lp", F(3), (s - 3) * h, source="R0S"))
    else:
        add("beta", PeelingForm("beta", "lp", (s + 3) * h, F(0), source="appendix C"),
            PeelingForm("beta", "lp", (s + 2) * h, h, source="R0S ingoing"))
        add("rhosigma", PeelingForm("rhosigma", "lp", (s + 2) * h, h, source="appendix C"))
    add("betab", PeelingForm("betab", "lp", F(2), (s - 1) * h, source="R0S"))
    add("alpha", PeelingForm("alpha", "flux", None, None, source="flux only"))
    add("alphab", PeelingForm("alphab", "flux", None, None, source="flux only"))
    return tab
