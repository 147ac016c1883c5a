"""Characteristic evolution on double null grids.

Contents: the area-radius integrator, transport integrators with
weighted-trace checks, a Gronwall utility, the linearized Bianchi driver
with an independent per-mode oracle, initial data builders, decay-slope
fits and Sobolev ratio checks.

The linear driver evolves the curvature components alpha, beta,
Z = rho + i sigma, betab and alphab on a Schwarzschild (or Minkowski)
background with all Ricci perturbations frozen at zero:

    nabla_3 alpha  + 1/2 trchib alpha  = -2 d2* beta + 4 omegab alpha
    nabla_4 beta   + 2 trchi beta      =  d2 alpha   - 2 omega beta
    nabla_4 Z      + 3/2 trchi Z       =  conj(d1 beta)
    nabla_4 betab  + trchi betab       =  d1* Z      + 2 omega betab
    nabla_4 alphab + 1/2 trchi alphab  =  2 d2* betab + 4 omega alphab

and, on the initial ingoing cone, the nabla_3 equations

    nabla_3 betab + 2 trchib betab = -d2 alphab - 2 omegab betab
    nabla_3 Z     + 3/2 trchib Z   = -d1 betab
    nabla_3 beta  + trchib beta    = -d1* conj(Z) + 2 omegab beta.

Angular operators are diagonal on spin-weighted harmonics except for the
complex conjugation, which couples m and -m within each l.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate

from . import spectral as sp
from .bianchi_energy import FIELD_RANKS, cone_flux, norm_suite
from .grid import (Cone, GridField, NullGrid, background_arrays, conjmap, grid_lp_norm,
                   make_grid, sphere_l2)
from .kerr_background import KerrParams, StepSizeError, background_ricci, radius_from_tortoise
from .report import NormReport
from .sphere_calculus import SPIN, SphereField, _norm_rank, grad_norm_sq

__all__ = [
    "NullGrid", "make_grid", "StabilityError", "DivergenceError", "UnsupportedLambdaError",
    "evolve_area_radius", "propagate_outgoing", "propagate_ingoing", "gronwall_bound",
    "InitialData", "power_law_data", "alphab_only_data", "zero_data", "profile_exponent",
    "EvolutionResult", "evolve_linear_bianchi", "mode_oracle", "fit_decay_slope",
    "betab_decay_slope", "r0_ratio", "sobolev_check", "standard_sobolev_ratio",
    "COMPONENTS", "pair_fields",
]

COMPONENTS = ("alpha", "beta", "rhosigma", "betab", "alphab")


class StabilityError(ValueError):
    """The ub step exceeds the angular stability guard r_min / (L (L+1))."""


class DivergenceError(RuntimeError):
    """NaN or inf appeared during an evolution."""


class UnsupportedLambdaError(ValueError):
    """Transport weight lambda_0 < 0 is outside the transport estimate."""


# ---------------------------------------------------------------- area radius

def _rk4(f: Callable, y0, x: np.ndarray) -> np.ndarray:
    out = [np.asarray(y0, dtype=float)]
    for a, b in zip(x[:-1], x[1:]):
        h, y = b - a, out[-1]
        k1 = f(a, y)
        k2 = f(a + h / 2, y + h / 2 * k1)
        k3 = f(a + h / 2, y + h / 2 * k2)
        k4 = f(b, y + h * k3)
        out.append(y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
    return np.array(out)


def evolve_area_radius(grid: NullGrid, background: KerrParams | None = None) -> NullGrid:
    """Fill grid.r by integrating dr/dub = r (Omega trchi)/2 along every outgoing cone.

    Initial radii on the first ingoing cone come from the tortoise
    inversion; Omega trchi is read from the background Ricci coefficients.
    """
    params = background if background is not None else KerrParams(grid.M)
    if params.a != 0:
        raise ValueError("area radius integration is implemented for a = 0")

    def rhs(_x, r):
        vals = []
        for ri in np.atleast_1d(r):
            if not np.isfinite(ri) or ri <= params.r_plus:
                raise StepSizeError(f"radius {ri} left the exterior; reduce the ub step")
            c = background_ricci(params, {"r": ri})
            om = 0.5 * math.sqrt(1.0 - 2.0 * params.M / ri)
            vals.append(0.5 * ri * om * c.trchi)
        return np.array(vals)

    if params.M == 0:
        r0 = 0.5 * (grid.ub_nodes[0] - grid.u_nodes)
    else:
        r0 = np.array([radius_from_tortoise(params, 0.5 * (grid.ub_nodes[0] - u))
                       for u in grid.u_nodes])
    r = _rk4(rhs, r0, grid.ub_nodes).T
    if np.any(~np.isfinite(r)) or np.any(np.diff(r, axis=1) <= 0):
        raise StepSizeError("r is not increasing along an outgoing cone; reduce the ub step")
    grid.r = r
    grid.Omega = 0.5 * np.sqrt(1.0 - 2.0 * params.M / r)
    return grid


# ---------------------------------------------------------------- transport

def _forcing(F, x: float, like: np.ndarray) -> np.ndarray:
    if F is None:
        return np.zeros_like(like)
    return np.asarray(F(x), dtype=complex)


def _propagate(U0: SphereField, F, lam0: float, p: int, cone: Cone, substeps: int,
               direction: str, rtol: float) -> dict:
    if lam0 < 0:
        raise UnsupportedLambdaError("the transport estimate assumes lambda_0 >= 0")
    if p not in (2, 4):
        raise ValueError("p must be 2 or 4")
    key = "trchi" if direction == "outgoing" else "trchib"
    nodes = np.asarray(cone.nodes, dtype=float)

    def rhs(x, c):
        bg = cone.background_at(x)
        return bg["Omega"] * (_forcing(F, x, c) - lam0 * bg[key] * c)

    fine = np.concatenate([np.linspace(a, b, substeps + 1)[:-1] for a, b in
                           zip(nodes[:-1], nodes[1:])] + [nodes[-1:]])
    out = [np.asarray(U0.coeffs, dtype=complex)]
    for a, b in zip(fine[:-1], fine[1:]):
        h, y = b - a, out[-1]
        k1 = rhs(a, y)
        k2 = rhs(a + h / 2, y + h / 2 * k1)
        k3 = rhs(a + h / 2, y + h / 2 * k2)
        k4 = rhs(b, y + h * k3)
        out.append(y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4))
    coeffs = np.array(out)[::substeps]
    lam1 = 2.0 * (lam0 - 1.0 / p)
    r = np.asarray(cone.r, dtype=float)
    trace = r**lam1 * grid_lp_norm(coeffs, U0.rank, r, p)
    if F is None:
        fnorm = np.zeros_like(r)
    else:
        Fc = np.array([_forcing(F, x, out[0]) for x in nodes])
        fnorm = r**lam1 * grid_lp_norm(Fc, U0.rank, r, p)
    bound = trace[0] + integrate.cumulative_trapezoid(np.asarray(cone.Omega) * fnorm, nodes,
                                                     initial=0.0)
    slack = bound - trace
    return {"coeffs": coeffs, "trace": trace, "bound": bound, "lambda1": lam1,
            "holds": bool(np.all(slack >= -rtol * max(1e-300, float(np.max(np.abs(bound)))))),
            "nodes": nodes}


def propagate_outgoing(U0: SphereField, F, lam0: float, p: int, cone: Cone,
                       substeps: int = 4, rtol: float = 1e-6) -> dict:
    """Integrate nabla_4 U + lam0 trchi U = F along an outgoing cone with RK4.

    ``F`` is None or a callable ub -> coefficient array. Returns the per-node
    coefficients, the trace |r^lam1 U|_{p,S} with lam1 = 2(lam0 - 1/p) and
    the discrete bound trace(0) + int Omega |r^lam1 F|_{p,S} dub. ``holds``
    allows a relative slack ``rtol`` for the integration error.
    """
    if cone.kind != "outgoing":
        raise ValueError("propagate_outgoing needs an outgoing cone")
    return _propagate(U0, F, lam0, p, cone, substeps, "outgoing", rtol)


def propagate_ingoing(V0: SphereField, Fb, lam0: float, p: int, cone: Cone,
                      substeps: int = 4, rtol: float = 1e-6) -> dict:
    """Mirror of :func:`propagate_outgoing` for nabla_3 V + lam0 trchib V = Fb along u."""
    if cone.kind != "ingoing":
        raise ValueError("propagate_ingoing needs an ingoing cone")
    return _propagate(V0, Fb, lam0, p, cone, substeps, "ingoing", rtol)


def gronwall_bound(t: np.ndarray, c: float, k: np.ndarray) -> np.ndarray:
    """c exp(int_0^t k), the Gronwall bound for a(t) <= c + int k a."""
    return c * np.exp(integrate.cumulative_trapezoid(np.asarray(k, float), t, initial=0.0))


# ---------------------------------------------------------------- data

@dataclass
class InitialData:
    """Characteristic data: alpha on the first outgoing cone, alphab on the first
    ingoing cone, and beta, Z = rho + i sigma, betab on the corner sphere."""

    alpha_out: np.ndarray
    alphab_in: np.ndarray
    beta0: np.ndarray
    rhosigma0: np.ndarray
    betab0: np.ndarray
    profile: str = "custom"
    exponent: float | None = None

    @property
    def L(self) -> int:
        return self.beta0.shape[-2] - 1


def zero_data(grid: NullGrid) -> InitialData:
    L = grid.L
    z = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    nu, nub = grid.shape
    return InitialData(np.zeros((nub,) + z.shape, complex), np.zeros((nu,) + z.shape, complex),
                       z.copy(), z.copy(), z.copy(), "zero")


def profile_exponent(s, profile: str = "peeling") -> float:
    """Pointwise r-exponent a of the data |psi| ~ r^-a.

    peeling: a = (s+3)/2, the decay r^-2 |u|^-(s-1)/2 of betab at r ~ |u|.
    pointwise: a = s/2 + 1.  l2: |psi|_{2,S} ~ r^-(s/2+1), so a = s/2 + 2.
    """
    s = float(Fraction(str(s)))
    table = {"peeling": (s + 3) / 2, "pointwise": s / 2 + 1, "l2": s / 2 + 2}
    if profile not in table:
        raise ValueError(f"unknown data profile {profile!r}")
    return table[profile]


def _mode_factors(L: int):
    l = np.arange(L + 1, dtype=float)[:, None]
    c2 = np.sqrt(np.clip((l - 1) * (l + 2), 0, None))
    c1 = np.sqrt(l * (l + 1))
    return c1, c2


def power_law_data(grid: NullGrid, s, profile: str = "peeling", amplitude: float = 1.0,
                   modes=((2, 0), (2, 1), (3, -2)), seed: int = 0) -> InitialData:
    """Flat-space data with every component ~ r^-a on the first ingoing cone.

    betab = A r^-a Y_lm and the nabla_3 equations fix alphab, Z, beta and
    alpha as r^-a multiples; alpha on the first outgoing cone continues the
    same profile. Modes need l >= 2.
    """
    a = profile_exponent(s, profile)
    if any(abs(a - k) < 1e-12 for k in (1, 2, 3)):
        raise ValueError(f"exponent {a} is resonant with the transport equations")
    L = grid.L
    rng = np.random.default_rng(seed)
    c1, c2 = _mode_factors(L)
    A = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    for l, m in modes:
        if l < 2 or l > L or abs(m) > l:
            raise ValueError(f"mode ({l}, {m}) unavailable")
        A[l, m + L] = amplitude * (rng.standard_normal() + 1j * rng.standard_normal())
    with np.errstate(divide="ignore", invalid="ignore"):
        Ab = np.where(c2 > 0, -np.sqrt(2.0) * (a - 4) * A / c2, 0.0)  # alphab
    B = -np.sqrt(2.0) * c1 * A / (a - 3)                      # Z
    C = -c1 * conjmap(B) / (np.sqrt(2.0) * (a - 2))          # beta
    D = -np.sqrt(2.0) * c2 * C / (a - 1)                      # alpha
    r_in = grid.r[:, 0]
    r_out = grid.r[0, :]
    r0 = grid.r[0, 0]
    return InitialData(
        alpha_out=D[None] * r_out[:, None, None]**(-a),
        alphab_in=Ab[None] * r_in[:, None, None]**(-a),
        beta0=C * r0**(-a), rhosigma0=B * r0**(-a), betab0=A * r0**(-a),
        profile=profile, exponent=a)


def alphab_only_data(grid: NullGrid, l: int = 2, m: int = 0, amplitude: float = 1.0,
                     exponent: float = 3.0) -> InitialData:
    """Data supported in alphab on the first ingoing cone; zero corner values."""
    data = zero_data(grid)
    L = grid.L
    if not 2 <= l <= L:
        raise ValueError("alphab modes need 2 <= l <= L")
    data.alphab_in[:, l, m + L] = amplitude * grid.r[:, 0]**(-exponent)
    data.profile, data.exponent = "alphab", exponent
    return data


# ---------------------------------------------------------------- driver

@dataclass
class EvolutionResult:
    grid: NullGrid
    fields: dict[str, np.ndarray]
    report: NormReport
    data: InitialData
    meta: dict = field(default_factory=dict)

    def field(self, name: str) -> GridField:
        return GridField(FIELD_RANKS[name], self.fields[name])


def _coefficients(grid: NullGrid):
    """Per-node scalar coefficients of the linear system, shape (n_u, n_ub, 1, 1)."""
    bg = {k: v[..., None, None] for k, v in grid.background().items()}
    return bg


def evolve_linear_bianchi(data: InitialData, grid: NullGrid, s, rule: str = "simpson",
                          check_stability: bool = True) -> EvolutionResult:
    """Trapezoidal characteristic integration of the linear Bianchi system.

    alpha is advanced along u with its nabla_3 equation and the other four
    components along ub with their nabla_4 equations; the alpha-beta pair
    is solved as a 2x2 system per mode at every node, the rest sequentially.
    """
    L = grid.L
    nu, nub = grid.shape
    if data.L != L:
        raise ValueError("data band limit differs from the grid band limit")
    hub = np.diff(grid.ub_nodes)
    r_min = float(np.min(grid.r))
    if check_stability and L > 0 and hub.size and np.max(hub) > r_min / (L * (L + 1)) * (1 + 1e-12):
        raise StabilityError(f"ub step {np.max(hub):.4g} exceeds r_min/(L(L+1)) = "
                             f"{r_min / (L * (L + 1)):.4g}")
    bg = _coefficients(grid)
    c1, c2 = _mode_factors(L)
    Om, r = bg["Omega"], bg["r"]
    tr, trb, om, omb = bg["trchi"], bg["trchib"], bg["omega"], bg["omegab"]

    # d2, d2* -> c2/(sqrt2 r); d1 (spin 1) -> sqrt2 c1/r; d1* (spin 0) -> c1/(sqrt2 r)
    d2 = c2 / (np.sqrt(2.0) * r)
    d1 = np.sqrt(2.0) * c1 / r
    d1s = c1 / (np.sqrt(2.0) * r)
    # nabla_4 system (derivatives in ub)
    Pb = Om * (-2 * tr - 2 * om)
    Qb = Om * d2
    Pz = Om * (-1.5 * tr)
    Pbb = Om * (-tr + 2 * om)
    Pab = Om * (-0.5 * tr + 4 * om)
    # nabla_3 equations (derivatives in u)
    Pa = Om * (-0.5 * trb + 4 * omb)
    Qa = Om * (-2 * d2)
    Pb3 = Om * (-trb + 2 * omb)
    Pz3 = Om * (-1.5 * trb)
    Pbb3 = Om * (-2 * trb - 2 * omb)

    shape = (nu, nub, L + 1, 2 * L + 1)
    f = {k: np.zeros(shape, dtype=complex) for k in COMPONENTS}
    masks = {k: sp.valid_mask(L, SPIN[_norm_rank(FIELD_RANKS[k])]) for k in COMPONENTS}

    def trap(y0, h, p0, p1, s0, s1):
        """Trapezoid step for y' = p y + src with implicit diagonal part."""
        return (y0 * (1 + 0.5 * h * p0) + 0.5 * h * (s0 + s1)) / (1 - 0.5 * h * p1)

    # first ingoing cone (j = 0), integrate in u
    f["alphab"][:, 0] = data.alphab_in
    f["betab"][0, 0] = data.betab0
    f["rhosigma"][0, 0] = data.rhosigma0
    f["beta"][0, 0] = data.beta0
    f["alpha"][:, :] = 0.0
    f["alpha"][0, :] = data.alpha_out
    for i in range(1, nu):
        h = grid.u_nodes[i] - grid.u_nodes[i - 1]
        a, b = (i - 1, 0), (i, 0)
        sb = [-Om[n] * d2[n] * f["alphab"][n] for n in (a, b)]
        f["betab"][b] = trap(f["betab"][a], h, Pbb3[a], Pbb3[b], *sb)
        sz = [-Om[n] * d1[n] * f["betab"][n] for n in (a, b)]
        f["rhosigma"][b] = trap(f["rhosigma"][a], h, Pz3[a], Pz3[b], *sz)
        sbe = [-Om[n] * d1s[n] * conjmap(f["rhosigma"][n]) for n in (a, b)]
        f["beta"][b] = trap(f["beta"][a], h, Pb3[a], Pb3[b], *sbe)
        sa = [Qa[n] * f["beta"][n] for n in (a, b)]
        f["alpha"][b] = trap(f["alpha"][a], h, Pa[a], Pa[b], *sa)

    def ub_chain(i, j, h):
        """Advance Z, betab, alphab from (i, j-1) to (i, j) given beta at both nodes."""
        a, b = (i, j - 1), (i, j)
        sz = [Om[n] * conjmap(d1[n] * f["beta"][n]) for n in (a, b)]
        f["rhosigma"][b] = trap(f["rhosigma"][a], h, Pz[a], Pz[b], *sz)
        sbb = [Om[n] * d1s[n] * f["rhosigma"][n] for n in (a, b)]
        f["betab"][b] = trap(f["betab"][a], h, Pbb[a], Pbb[b], *sbb)
        sab = [2 * Om[n] * d2[n] * f["betab"][n] for n in (a, b)]
        f["alphab"][b] = trap(f["alphab"][a], h, Pab[a], Pab[b], *sab)

    # first outgoing cone (i = 0), integrate in ub
    for j in range(1, nub):
        h = grid.ub_nodes[j] - grid.ub_nodes[j - 1]
        a, b = (0, j - 1), (0, j)
        sbe = [Qb[n] * f["alpha"][n] for n in (a, b)]
        f["beta"][b] = trap(f["beta"][a], h, Pb[a], Pb[b], *sbe)
        ub_chain(0, j, h)

    # interior
    for i in range(1, nu):
        hu = grid.u_nodes[i] - grid.u_nodes[i - 1]
        for j in range(1, nub):
            hb = grid.ub_nodes[j] - grid.ub_nodes[j - 1]
            n, au, ab = (i, j), (i - 1, j), (i, j - 1)
            ra = f["alpha"][au] * (1 + 0.5 * hu * Pa[au]) + 0.5 * hu * Qa[au] * f["beta"][au]
            rb = f["beta"][ab] * (1 + 0.5 * hb * Pb[ab]) + 0.5 * hb * Qb[ab] * f["alpha"][ab]
            m11 = 1 - 0.5 * hu * Pa[n]
            m12 = -0.5 * hu * Qa[n]
            m21 = -0.5 * hb * Qb[n]
            m22 = 1 - 0.5 * hb * Pb[n]
            det = m11 * m22 - m12 * m21
            f["alpha"][n] = (m22 * ra - m12 * rb) / det
            f["beta"][n] = (m11 * rb - m21 * ra) / det
            ub_chain(i, j, hb)
        if not all(np.all(np.isfinite(f[k][i])) for k in COMPONENTS):
            raise DivergenceError(f"non-finite values on the outgoing cone u = {grid.u_nodes[i]}")
    for k in COMPONENTS:
        f[k] = np.where(masks[k], f[k], 0.0)
    grid.fields = {k: GridField(FIELD_RANKS[k], v) for k, v in f.items()}
    rep = norm_suite(f, grid, s, rule=rule, run_id="evolve")
    rep.meta.update({"profile": data.profile, "exponent": data.exponent, "M": grid.M,
                     "L": L, "shape": list(grid.shape)})
    return EvolutionResult(grid, f, rep, data)


# ---------------------------------------------------------------- oracle

def mode_oracle(data: InitialData, grid: NullGrid, l: int, m: int) -> dict[str, np.ndarray]:
    """Scalar re-implementation of the linear scheme for the (l, m) and (l, -m) modes.

    Returns per-node values of every component at (l, m). Eigenvalues of
    the angular operators are written out explicitly.
    """
    L = grid.L
    if not 0 <= l <= L or abs(m) > l:
        raise ValueError("mode outside the band limit")
    ms = sorted({m, -m})
    nu, nub = grid.shape
    lam_d2 = math.sqrt(max((l - 1) * (l + 2), 0)) / math.sqrt(2.0)
    lam_d1 = math.sqrt(2.0 * l * (l + 1))
    lam_d1s = math.sqrt(l * (l + 1) / 2.0)
    valid = {"alpha": l >= 2, "beta": l >= 1, "rhosigma": True, "betab": l >= 1, "alphab": l >= 2}
    V = {k: {mm: np.zeros((nu, nub), dtype=complex) for mm in ms} for k in COMPONENTS}
    M = grid.M

    def bgv(i, j):
        r = float(grid.r[i, j])
        O = 0.5 * math.sqrt(1.0 - 2.0 * M / r)
        return r, O, 4 * O / r, -4 * O / r, -M / (4 * O * r * r), M / (4 * O * r * r)

    def conj_of(arr, i, j, mm):
        # coefficient (l, mm) of the conjugate of a spin-0 function
        return (-1) ** (mm % 2) * np.conj(arr[-mm][i, j]) if -mm in arr else 0.0

    def step(y0, h, p0, p1, s0, s1):
        return (y0 * (1 + 0.5 * h * p0) + 0.5 * h * (s0 + s1)) / (1 - 0.5 * h * p1)

    for mm in ms:
        idx = mm + L
        V["alphab"][mm][:, 0] = data.alphab_in[:, l, idx]
        V["alpha"][mm][0, :] = data.alpha_out[:, l, idx]
        V["betab"][mm][0, 0] = data.betab0[l, idx]
        V["rhosigma"][mm][0, 0] = data.rhosigma0[l, idx]
        V["beta"][mm][0, 0] = data.beta0[l, idx]
    for i in range(1, nu):
        h = grid.u_nodes[i] - grid.u_nodes[i - 1]
        B0, B1 = bgv(i - 1, 0), bgv(i, 0)
        for mm in ms:
            src = [-B[1] * lam_d2 / B[0] * V["alphab"][mm][k, 0] for B, k in ((B0, i - 1), (B1, i))]
            V["betab"][mm][i, 0] = step(V["betab"][mm][i - 1, 0], h, B0[1] * (-2 * B0[3] - 2 * B0[5]),
                                        B1[1] * (-2 * B1[3] - 2 * B1[5]), *src)
        for mm in ms:
            src = [-B[1] * lam_d1 / B[0] * V["betab"][mm][k, 0] for B, k in ((B0, i - 1), (B1, i))]
            V["rhosigma"][mm][i, 0] = step(V["rhosigma"][mm][i - 1, 0], h, -1.5 * B0[1] * B0[3],
                                           -1.5 * B1[1] * B1[3], *src)
        for mm in ms:
            src = [-B[1] * lam_d1s / B[0] * conj_of(V["rhosigma"], k, 0, mm)
                   for B, k in ((B0, i - 1), (B1, i))]
            V["beta"][mm][i, 0] = step(V["beta"][mm][i - 1, 0], h, B0[1] * (-B0[3] + 2 * B0[5]),
                                       B1[1] * (-B1[3] + 2 * B1[5]), *src)
        for mm in ms:
            src = [-2 * B[1] * lam_d2 / B[0] * V["beta"][mm][k, 0] for B, k in ((B0, i - 1), (B1, i))]
            V["alpha"][mm][i, 0] = step(V["alpha"][mm][i - 1, 0], h, B0[1] * (-0.5 * B0[3] + 4 * B0[5]),
                                        B1[1] * (-0.5 * B1[3] + 4 * B1[5]), *src)

    def chain(i, j, h):
        Ba, Bb = bgv(i, j - 1), bgv(i, j)
        nodes = ((Ba, j - 1), (Bb, j))
        for mm in ms:
            src = [B[1] * lam_d1 / B[0] * conj_of(V["beta"], i, k, mm) for B, k in nodes]
            V["rhosigma"][mm][i, j] = step(V["rhosigma"][mm][i, j - 1], h, -1.5 * Ba[1] * Ba[2],
                                           -1.5 * Bb[1] * Bb[2], *src)
        for mm in ms:
            src = [B[1] * lam_d1s / B[0] * V["rhosigma"][mm][i, k] for B, k in nodes]
            V["betab"][mm][i, j] = step(V["betab"][mm][i, j - 1], h, Ba[1] * (-Ba[2] + 2 * Ba[4]),
                                        Bb[1] * (-Bb[2] + 2 * Bb[4]), *src)
        for mm in ms:
            src = [2 * B[1] * lam_d2 / B[0] * V["betab"][mm][i, k] for B, k in nodes]
            V["alphab"][mm][i, j] = step(V["alphab"][mm][i, j - 1], h, Ba[1] * (-0.5 * Ba[2] + 4 * Ba[4]),
                                         Bb[1] * (-0.5 * Bb[2] + 4 * Bb[4]), *src)

    for i in range(nu):
        for j in range(1, nub):
            hb = grid.ub_nodes[j] - grid.ub_nodes[j - 1]
            Ba, Bb = bgv(i, j - 1), bgv(i, j)
            pb0, pb1 = Ba[1] * (-2 * Ba[2] - 2 * Ba[4]), Bb[1] * (-2 * Bb[2] - 2 * Bb[4])
            qb0, qb1 = Ba[1] * lam_d2 / Ba[0], Bb[1] * lam_d2 / Bb[0]
            for mm in ms:
                be, al = V["beta"][mm], V["alpha"][mm]
                if i == 0:
                    be[i, j] = step(be[i, j - 1], hb, pb0, pb1, qb0 * al[i, j - 1], qb1 * al[i, j])
                    continue
                hu = grid.u_nodes[i] - grid.u_nodes[i - 1]
                Bu = bgv(i - 1, j)
                pa0, pa1 = Bu[1] * (-0.5 * Bu[3] + 4 * Bu[5]), Bb[1] * (-0.5 * Bb[3] + 4 * Bb[5])
                qa0, qa1 = -2 * Bu[1] * lam_d2 / Bu[0], -2 * Bb[1] * lam_d2 / Bb[0]
                ra = al[i - 1, j] * (1 + 0.5 * hu * pa0) + 0.5 * hu * qa0 * be[i - 1, j]
                rb = be[i, j - 1] * (1 + 0.5 * hb * pb0) + 0.5 * hb * qb0 * al[i, j - 1]
                mat = np.array([[1 - 0.5 * hu * pa1, -0.5 * hu * qa1],
                                [-0.5 * hb * qb1, 1 - 0.5 * hb * pb1]])
                al[i, j], be[i, j] = np.linalg.solve(mat, np.array([ra, rb]))
            chain(i, j, hb)
    return {k: (V[k][m] if valid[k] else np.zeros((nu, nub), complex)) for k in COMPONENTS}


# ---------------------------------------------------------------- diagnostics

def fit_decay_slope(x: np.ndarray, y: np.ndarray) -> dict:
    """Least-squares slope of log y against log x with its r^2."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    pred = A @ coef
    ss = float(np.sum((ly - ly.mean())**2))
    r2 = 1.0 - float(np.sum((ly - pred)**2)) / ss if ss > 0 else 1.0
    return {"slope": float(coef[0]), "intercept": float(coef[1]), "r2": r2,
            "window": [float(np.min(x)), float(np.max(x))]}


def betab_decay_slope(result: EvolutionResult, r_weight: float = 1.0, j: int = -1) -> dict:
    """Slope of r^r_weight |betab|_{2,S} against |u| on the ingoing cone with index j."""
    g = result.grid
    r = g.r[:, j]
    y = r**r_weight * sphere_l2(result.fields["betab"][:, j], 1, r)
    return fit_decay_slope(np.abs(g.u_nodes), y)


_OUT = ("alpha", "beta", "rhosigma", "betab")
_IN = ("beta", "rhosigma", "betab", "alphab")


def r0_ratio(result: EvolutionResult) -> dict:
    """Weighted q = 0 fluxes on the final cones relative to the initial cones.

    R0 combines R_0 over outgoing cones and Rb_0 over ingoing cones in
    quadrature; 'initial' uses the first outgoing and ingoing cones and
    'final' the last ones.
    """
    tr = result.report.traces
    ini = fin = 0.0
    for fam, names in (("R", _OUT), ("Rb", _IN)):
        for n in names:
            vals = tr[f"{fam}_0[{n}]"]["value"]
            ini += vals[0]**2
            fin += vals[-1]**2
    ini, fin = math.sqrt(ini), math.sqrt(fin)
    return {"initial": ini, "final": fin, "ratio": fin / ini if ini > 0 else 0.0}


# ---------------------------------------------------------------- Sobolev

def _segment_l2(dens: np.ndarray, cone: Cone) -> float:
    return math.sqrt(max(cone_flux(dens, cone, "trapezoid"), 0.0))


def sobolev_check(coeffs: np.ndarray, rank, cone: Cone, nab=None) -> dict:
    """Ratio of the sphere L^4 bound to the cone norms along a segment.

    Outgoing: |r F|_{4,S} / (|F| + |r nabla F| + |r nabla_4 F|) with cone
    L^2 norms. Ingoing: |r^1/2 |u|^1/2 F|_{4,S} / (|F| + |r nabla F| +
    ||u| nabla_3 F|). The left side is taken on the last sphere of the
    segment. ``nab`` holds the nabla_4 (or nabla_3) coefficients per node, or
    'fd' for second-order finite differences. 0/0 is reported as 0.
    """
    from .bianchi_energy import _sphere_sq
    coeffs = np.asarray(coeffs)
    nodes = np.asarray(cone.nodes, float)
    if nab is None:
        raise ValueError("sobolev_check needs the null derivative of the field (or 'fd')")
    if isinstance(nab, str):
        if nab != "fd" or nodes.size < 3:
            raise ValueError("finite-difference derivatives need 'fd' and three nodes")
        nab = np.gradient(coeffs, nodes, axis=0, edge_order=2) / np.asarray(cone.Omega)[:, None, None]
    nab = np.asarray(nab)
    r = np.asarray(cone.r, float)
    n0 = _segment_l2(_sphere_sq(coeffs, rank, r, 0), cone)
    n1 = _segment_l2(_sphere_sq(coeffs, rank, r, 1), cone)
    if cone.kind == "outgoing":
        w_last = r[-1]
        n2 = _segment_l2(r**2 * _sphere_sq(nab, rank, r, 0), cone)
    else:
        uabs = np.abs(nodes)
        w_last = math.sqrt(r[-1] * uabs[-1])
        n2 = _segment_l2(uabs**2 * _sphere_sq(nab, rank, r, 0), cone)
    lhs = w_last * float(grid_lp_norm(coeffs[-1], rank, r[-1], 4))
    rhs = n0 + n1 + n2
    return {"lhs": lhs, "rhs": rhs, "ratio": 0.0 if rhs == 0 and lhs == 0 else lhs / rhs,
            "kind": cone.kind}


def standard_sobolev_ratio(psi: SphereField) -> float:
    """sup_S r^1/2 |F| over (int_S |F|^4 + |r nabla F|^4)^1/4; 0 for the zero field."""
    L = psi.L
    g = sp.SphereGrid(L + 1, nlat=2 * L + 4, nlon=4 * L + 6)
    r = psi.radius
    c = sp.pad(psi.coeffs, L + 1)
    vals = np.abs(g.synthesis(c, psi.spin)) * (1.0 if psi.rank == "0pair" else np.sqrt(2.0))
    grad = r**2 * grad_norm_sq(psi, g)
    denom = float(np.sum(g.area_weights(r) * (vals**4 + grad**2))) ** 0.25
    num = math.sqrt(r) * float(np.max(vals))
    if denom == 0:
        return 0.0
    return num / denom


def pair_fields(fields: dict, name: str) -> tuple[np.ndarray, np.ndarray]:
    """(psi1, psi2) coefficient arrays of a canonical pair built from evolved fields."""
    table = {
        "alpha-beta": lambda f: (f["alpha"], f["beta"]),
        "beta-rhosigma": lambda f: (f["beta"], conjmap(f["rhosigma"])),
        "rhosigma-betab": lambda f: (f["rhosigma"], -f["betab"]),
        "betab-alphab": lambda f: (-f["betab"], f["alphab"]),
    }
    if name not in table:
        raise KeyError(f"unknown pair {name!r}")
    return table[name](fields)
