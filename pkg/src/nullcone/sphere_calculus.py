"""Tensor calculus on round 2-spheres in a spin-weighted spectral representation.

Fields are stored as spin-weighted coefficient arrays, using the complex
null vector m = (e_theta + i e_phi)/sqrt(2):

* a pair of scalars (f, f*) is the spin-0 function F = f + i f*,
* a 1-form xi is the spin-1 function xi_m = xi(m),
* a symmetric traceless 2-tensor U is the spin-2 function U_mm = U_11 + i U_12.

With eth, ethbar from :mod:`nullcone.spectral` and a sphere of radius r:

    d1 xi      <->  -sqrt(2) ethbar(xi_m) / r        (div xi + i curl xi)
    d1* (f,f*) <->  eth(F) / (sqrt(2) r)
    d2 U       <->  -ethbar(U_mm) / (sqrt(2) r)
    d2* xi     <->  eth(xi_m) / (sqrt(2) r)

The Hodge dual multiplies xi_m and U_mm by -i. The orientation is fixed by
eps_12 = 1 for (e_theta, e_phi), which is right-handed about the outward
normal.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import spectral as sp
from .spectral import SphereGrid, eth, ethbar

Rank = Literal["0pair", 1, 2]
SPIN = {"0pair": 0, 1: 1, 2: 2}

__all__ = [
    "RankError", "SolvabilityError", "UnsupportedExponentError",
    "SphereField", "HodgeSystemSolution", "SphereGrid",
    "hodge_dual", "d1", "d2", "d1_star", "d2_star", "laplacian",
    "gauss_curvature", "pointwise_norm", "grad_norm_sq", "lp_norm", "s_average",
    "random_field", "verify_hodge_identities", "solve_hodge",
    "poincare_ratio", "poincare_minimum", "to_ambient", "ambient_laplacian",
    "hessian_norm_sq", "dot", "divergence_integral",
]


class RankError(ValueError):
    """Operator applied to a field of the wrong rank."""


class SolvabilityError(ValueError):
    """Right-hand side has content in the kernel of the adjoint operator."""


class UnsupportedExponentError(ValueError):
    """L^p norm requested for p outside {2, 4}."""


def _norm_rank(rank) -> Rank:
    if rank in ("0pair", 0, "0"):
        return "0pair"
    if rank in (1, "1"):
        return 1
    if rank in (2, "2"):
        return 2
    raise RankError(f"unknown rank {rank!r}")


@dataclass
class SphereField:
    """A spin-weighted field on a round sphere of radius ``radius``.

    ``coeffs`` has shape (L+1, 2L+1). ``conformal`` optionally holds grid
    values of phi for the perturbed metric exp(2 phi) times the round one;
    it is only consulted by :func:`poincare_ratio`.
    """

    rank: Rank
    coeffs: np.ndarray
    radius: float = 1.0
    conformal: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.rank = _norm_rank(self.rank)
        c = np.asarray(self.coeffs, dtype=complex)
        L = c.shape[0] - 1
        if c.shape != (L + 1, 2 * L + 1):
            raise ValueError(f"bad coefficient shape {c.shape}")
        self.coeffs = np.where(sp.valid_mask(L, self.spin), c, 0.0)
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def spin(self) -> int:
        return SPIN[self.rank]

    @property
    def L(self) -> int:
        return self.coeffs.shape[0] - 1

    def grid(self, grid: SphereGrid | None = None) -> np.ndarray:
        """Complex spin-weighted values on the collocation grid."""
        grid = grid or SphereGrid(self.L)
        return grid.synthesis(self.coeffs, self.spin)

    def components(self, grid: SphereGrid | None = None) -> np.ndarray:
        """Real components on the grid: (f, f*), (xi_1, xi_2) or (U_11, U_12)."""
        v = self.grid(grid)
        if self.rank == 1:
            v = np.sqrt(2.0) * v
        return np.stack([v.real, v.imag])

    @classmethod
    def from_components(cls, rank, comps, L: int, radius: float = 1.0,
                        grid: SphereGrid | None = None) -> "SphereField":
        rank = _norm_rank(rank)
        grid = grid or SphereGrid(L)
        v = np.asarray(comps[0]) + 1j * np.asarray(comps[1])
        if rank == 1:
            v = v / np.sqrt(2.0)
        return cls(rank, sp.pad(grid.analysis(v, SPIN[rank]), L), radius)

    @classmethod
    def zeros(cls, rank, L: int, radius: float = 1.0) -> "SphereField":
        return cls(rank, np.zeros((L + 1, 2 * L + 1), dtype=complex), radius)

    def with_coeffs(self, coeffs: np.ndarray, rank=None) -> "SphereField":
        return SphereField(self.rank if rank is None else rank, coeffs, self.radius)

    def __add__(self, other: "SphereField") -> "SphereField":
        _same(self, other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SphereField") -> "SphereField":
        _same(self, other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, c: float) -> "SphereField":
        return self.with_coeffs(self.coeffs * c)

    __rmul__ = __mul__

    def __neg__(self) -> "SphereField":
        return self.with_coeffs(-self.coeffs)


def _same(a: SphereField, b: SphereField) -> None:
    if a.rank != b.rank or a.L != b.L:
        raise RankError("fields differ in rank or band limit")


@dataclass
class HodgeSystemSolution:
    """Solution of a Hodge system with its forward residual and measured constants."""

    field: SphereField
    residual: float
    elliptic_constants: dict = field(default_factory=dict)


def gauss_curvature(radius: float) -> float:
    return 1.0 / radius**2


def hodge_dual(xi: SphereField) -> SphereField:
    """*xi_A = eps_AB xi^B and *U_AB = eps_AC U^C_B; applying twice negates."""
    if xi.rank not in (1, 2):
        raise RankError("Hodge dual is defined for 1-forms and 2-tensors only")
    return xi.with_coeffs(-1j * xi.coeffs)


def d1(xi: SphereField) -> SphereField:
    """d1 xi = (div xi, curl xi)."""
    if xi.rank != 1:
        raise RankError("d1 acts on 1-forms")
    return SphereField("0pair", -np.sqrt(2.0) * ethbar(xi.coeffs, 1) / xi.radius, xi.radius)


def d1_star(f: SphereField) -> SphereField:
    """d1* (f, f*) = -grad f + *grad f*."""
    if f.rank != "0pair":
        raise RankError("d1* acts on scalar pairs")
    return SphereField(1, eth(f.coeffs, 0) / (np.sqrt(2.0) * f.radius), f.radius)


def d2(U: SphereField) -> SphereField:
    """d2 U = div U."""
    if U.rank != 2:
        raise RankError("d2 acts on symmetric traceless 2-tensors")
    return SphereField(1, -ethbar(U.coeffs, 2) / (np.sqrt(2.0) * U.radius), U.radius)


def d2_star(xi: SphereField) -> SphereField:
    """d2* xi = -(1/2) grad-hat-otimes xi."""
    if xi.rank != 1:
        raise RankError("d2* acts on 1-forms")
    return SphereField(2, eth(xi.coeffs, 1) / (np.sqrt(2.0) * xi.radius), xi.radius)


def laplacian(psi: SphereField) -> SphereField:
    """Connection Laplacian, eigenvalue -(l(l+1) - s^2)/r^2 on spin-s modes."""
    s, c = psi.spin, psi.coeffs
    lap = 0.5 * (eth(ethbar(c, s), s - 1) + ethbar(eth(c, s), s + 1))
    return psi.with_coeffs(lap / psi.radius**2)


def random_field(rank, L: int, rng: np.random.Generator, radius: float = 1.0,
                 lmin: int = 0) -> SphereField:
    """Gaussian random band-limited field with unit-variance coefficients."""
    c = rng.standard_normal((L + 1, 2 * L + 1)) + 1j * rng.standard_normal((L + 1, 2 * L + 1))
    c[:lmin] = 0.0
    return SphereField(rank, c / np.sqrt(2.0), radius)


# ---------------------------------------------------------------- norms

def _quad_grid(L: int, degree: int) -> SphereGrid:
    """Grid integrating products of total band limit ``degree`` exactly."""
    nlat = max(L + 1, degree // 2 + 1)
    nlon = max(2 * L + 1, degree + 1)
    return SphereGrid(L, nlat=nlat, nlon=nlon)


def pointwise_norm(psi: SphereField, grid: SphereGrid | None = None) -> np.ndarray:
    """|psi| on the grid: |F| for pairs and sqrt(2)|psi_m...| for tensors."""
    v = np.abs(psi.grid(grid))
    return v if psi.rank == "0pair" else np.sqrt(2.0) * v


def grad_norm_sq(psi: SphereField, grid: SphereGrid | None = None) -> np.ndarray:
    """|grad psi|^2 on the grid."""
    grid = grid or SphereGrid(psi.L + 1)
    s, c = psi.spin, sp.pad(psi.coeffs, psi.L + 1)
    up = np.abs(grid.synthesis(eth(c, s), s + 1))**2
    down = np.abs(grid.synthesis(ethbar(c, s), s - 1))**2
    fac = 0.5 if psi.rank == "0pair" else 1.0
    return fac * (up + down) / psi.radius**2


def hessian_norm_sq(phi: SphereField, grid: SphereGrid | None = None) -> np.ndarray:
    """|grad^2 phi|^2 for the first slot of a scalar pair (phi real)."""
    if phi.rank != "0pair":
        raise RankError("Hessian is computed for scalars")
    grid = grid or SphereGrid(phi.L + 2)
    f = SphereField("0pair", _real_part_coeffs(phi.coeffs), phi.radius)
    c = sp.pad(f.coeffs, grid.L)
    lap = 0.5 * (eth(ethbar(c, 0), -1) + ethbar(eth(c, 0), 1)) / f.radius**2
    hmm = eth(eth(c, 0), 1) / (2.0 * f.radius**2)
    lapv = grid.synthesis(lap, 0).real
    return 0.5 * lapv**2 + 2.0 * np.abs(grid.synthesis(hmm, 2))**2


def _real_part_coeffs(c: np.ndarray) -> np.ndarray:
    """Coefficients of Re F given those of F (spin 0): (a_lm + (-1)^m conj a_l,-m)/2."""
    L = c.shape[0] - 1
    m = np.arange(-L, L + 1)
    flipped = np.conj(c[:, ::-1]) * ((-1.0) ** m)[None, :]
    return 0.5 * (c + flipped)


def lp_norm(psi: SphereField, p: int = 2, radius: float | None = None) -> float:
    """(integral over S of |psi|^p)^(1/p) on a sphere of radius ``radius``."""
    if p not in (2, 4):
        raise UnsupportedExponentError(f"p={p} is not supported; use 2 or 4")
    r = psi.radius if radius is None else radius
    grid = _quad_grid(psi.L, p * psi.L)
    vals = pointwise_norm(psi, grid)
    return float(np.sum(grid.area_weights(r) * vals**p) ** (1.0 / p))


def _lp_of_values(vals: np.ndarray, grid: SphereGrid, r: float, p: int) -> float:
    return float(np.sum(grid.area_weights(r) * np.abs(vals)**p) ** (1.0 / p))


def s_average(psi: SphereField, slot: int = 0) -> float:
    """Average over the sphere of one slot of a scalar pair."""
    if psi.rank != "0pair":
        raise RankError("averages are taken of scalars")
    a00 = psi.coeffs[0, psi.L] / np.sqrt(4.0 * np.pi)
    return float(a00.real if slot == 0 else a00.imag)


def dot(a: SphereField, b: SphereField, grid: SphereGrid | None = None) -> np.ndarray:
    """Pointwise inner product a . b for fields of equal rank."""
    _same(a, b)
    grid = grid or _quad_grid(a.L, 2 * a.L)
    prod = (a.grid(grid) * np.conj(b.grid(grid))).real
    return prod if a.rank == "0pair" else 2.0 * prod


def divergence_integral(xi: SphereField) -> float:
    """Integral of div xi over the sphere; vanishes by the divergence theorem."""
    div = d1(xi)
    grid = SphereGrid(div.L)
    return float(np.sum(grid.area_weights(xi.radius) * div.grid(grid).real))


# ---------------------------------------------------------------- ambient oracle

def _frame_vectors(grid: SphereGrid):
    T, P = grid.mesh()
    x = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)])
    eth_v = np.stack([np.cos(T) * np.cos(P), np.cos(T) * np.sin(P), -np.sin(T)])
    eph_v = np.stack([-np.sin(P), np.cos(P), np.zeros_like(P)])
    return x, eth_v, eph_v


def to_ambient(psi: SphereField, grid: SphereGrid) -> np.ndarray:
    """Cartesian components of a tangent field on the unit-normal embedding.

    Returns shape (2, ng...) for pairs, (3, ng...) for 1-forms and
    (3, 3, ng...) for 2-tensors.
    """
    comp = psi.components(grid)
    if psi.rank == "0pair":
        return comp
    _, et, ep = _frame_vectors(grid)
    if psi.rank == 1:
        return comp[0] * et + comp[1] * ep
    U11, U12 = comp
    return (U11 * (et[:, None] * et[None] - ep[:, None] * ep[None])
            + U12 * (et[:, None] * ep[None] + ep[:, None] * et[None]))


def _scalar_gradient(values: np.ndarray, grid: SphereGrid, radius: float) -> np.ndarray:
    """Tangential ambient gradient of a real band-limited scalar, shape (3, ng...)."""
    # for spin 0, -eth f = d_theta f + i csc(theta) d_phi f
    g = -grid.synthesis(eth(grid.analysis(values, 0), 0), 1)
    _, et, ep = _frame_vectors(grid)
    return (g.real[None] * et.reshape((3,) + (1,) * (g.ndim - 2) + grid.shape)
            + g.imag[None] * ep.reshape((3,) + (1,) * (g.ndim - 2) + grid.shape)) / radius


def _projector(grid: SphereGrid) -> np.ndarray:
    x, _, _ = _frame_vectors(grid)
    return np.eye(3)[:, :, None, None] - x[:, None] * x[None]


def _project_slot(P: np.ndarray, arr: np.ndarray, k: int) -> np.ndarray:
    moved = np.moveaxis(arr, k, 0)
    out = np.einsum("abij,b...ij->a...ij", P, moved)
    return np.moveaxis(out, 0, k)


def ambient_laplacian(T: np.ndarray, grid: SphereGrid, radius: float, tensor_rank: int) -> np.ndarray:
    """Connection Laplacian of an ambient tangent tensor by repeated projection.

    The covariant derivative of a tangent tensor is the tangential projection,
    in every slot, of the ambient derivative of its Cartesian components.
    """
    P = _projector(grid)

    def nabla(arr, nslots):
        out = _scalar_gradient(arr, grid, radius)
        for k in range(1, nslots + 1):
            out = _project_slot(P, out, k)
        return out

    second = nabla(nabla(T, tensor_rank), tensor_rank + 1)
    return np.einsum("kk...->...", second)


# ---------------------------------------------------------------- identities

def _identity_residuals(L: int, rng: np.random.Generator, radius: float) -> tuple[dict, dict]:
    Lo = L + 8
    grid = SphereGrid(Lo)
    K = gauss_curvature(radius)
    res, absolute = {}, {}

    def record(name, lhs, rhs):
        err = float(np.max(np.abs(lhs - rhs)))
        absolute[name] = err
        res[name] = err / max(float(np.max(np.abs(rhs))), 1e-300)

    f = random_field("0pair", L, rng, radius)
    lhs = to_ambient(d1(d1_star(f)), grid)
    rhs = -np.stack([ambient_laplacian(c, grid, radius, 0) for c in to_ambient(f, grid)])
    record("d1 d1* = -Lap_0", lhs, rhs)

    xi = random_field(1, L, rng, radius)
    lap_xi = ambient_laplacian(to_ambient(xi, grid), grid, radius, 1)
    amb_xi = to_ambient(xi, grid)
    lhs = to_ambient(d1_star(d1(xi)), grid)
    record("d1* d1 = -Lap_1 + K", lhs, -lap_xi + K * amb_xi)
    lhs = to_ambient(d2(d2_star(xi)), grid)
    record("d2 d2* = -Lap_1/2 - K/2", lhs, -0.5 * lap_xi - 0.5 * K * amb_xi)

    U = random_field(2, L, rng, radius)
    lap_U = ambient_laplacian(to_ambient(U, grid), grid, radius, 2)
    lhs = to_ambient(d2_star(d2(U)), grid)
    record("d2* d2 = -Lap_2/2 + K", lhs, -0.5 * lap_U + K * to_ambient(U, grid))
    return res, absolute


def verify_hodge_identities(L: int = 16, trials: int = 100, radius: float = 1.0,
                            seed: int = 0) -> dict:
    """Max residual of the four Hodge identities over random band-limited fields.

    The spectral compositions d1 d1*, d1* d1, d2 d2*, d2* d2 are compared
    with the connection Laplacian computed independently in Cartesian
    components, by tangential projection of scalar gradients. ``residuals``
    are relative to the sup of the right-hand side; ``absolute`` carries the
    raw sup differences, which scale as 1/r^2.
    """
    rng = np.random.default_rng(seed)
    worst: dict[str, float] = {}
    worst_abs: dict[str, float] = {}
    for _ in range(trials):
        rel, ab = _identity_residuals(L, rng, radius)
        for k in rel:
            worst[k] = max(worst.get(k, 0.0), rel[k])
            worst_abs[k] = max(worst_abs.get(k, 0.0), ab[k])
    return {"L": L, "trials": trials, "radius": radius, "residuals": worst,
            "absolute": worst_abs, "max_residual": max(worst.values())}


# ---------------------------------------------------------------- Hodge systems

def _modes(coeffs: np.ndarray, ls) -> list[tuple[int, int]]:
    L = coeffs.shape[0] - 1
    out = []
    for l in ls:
        if l > L:
            continue
        for m in range(-l, l + 1):
            if abs(coeffs[l, m + L]) > 0:
                out.append((l, m))
    return out


def solve_hodge(system: str, rhs: SphereField, tol: float = 1e-12) -> HodgeSystemSolution:
    """Solve Lap phi = f, d1 xi = (f, f*) or d2 U = xi on the round sphere.

    The solution is the one orthogonal to the kernel. Right-hand sides with
    content in the cokernel raise :class:`SolvabilityError` naming the modes.
    """
    r, L = rhs.radius, rhs.L
    scale = max(np.max(np.abs(rhs.coeffs)), 1e-300)
    l = np.arange(L + 1, dtype=float)[:, None]
    if system == "laplacian":
        if rhs.rank != "0pair":
            raise RankError("laplacian system takes a scalar pair")
        bad = _modes(np.where(np.abs(rhs.coeffs) > tol * scale, rhs.coeffs, 0), [0])
        if bad:
            raise SolvabilityError(f"right-hand side has nonzero mean, modes {bad}")
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(l > 0, -r**2 * rhs.coeffs / (l * (l + 1)), 0.0)
        sol = SphereField("0pair", c, r)
        resid = _max_abs(laplacian(sol).coeffs - np.where(l > 0, rhs.coeffs, 0))
    elif system == "d1":
        if rhs.rank != "0pair":
            raise RankError("d1 system takes a scalar pair")
        bad = _modes(np.where(np.abs(rhs.coeffs) > tol * scale, rhs.coeffs, 0), [0])
        if bad:
            raise SolvabilityError(f"d1 has no l=0 range; offending modes {bad}")
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(l > 0, r * rhs.coeffs / (np.sqrt(2.0) * np.sqrt(l * (l + 1))), 0.0)
        sol = SphereField(1, c, r)
        resid = _max_abs(d1(sol).coeffs - rhs.coeffs)
    elif system == "d2":
        if rhs.rank != 1:
            raise RankError("d2 system takes a 1-form")
        bad = _modes(np.where(np.abs(rhs.coeffs) > tol * scale, rhs.coeffs, 0), [1])
        if bad:
            raise SolvabilityError(f"d2 has no l=1 range; offending modes {bad}")
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(l > 1, np.sqrt(2.0) * r * rhs.coeffs / np.sqrt((l + 2) * (l - 1)), 0.0)
        sol = SphereField(2, c, r)
        resid = _max_abs(d2(sol).coeffs - rhs.coeffs)
    else:
        raise ValueError(f"unknown Hodge system {system!r}")
    return HodgeSystemSolution(sol, resid, _elliptic_constants(system, sol, rhs))


def _max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def _elliptic_constants(system: str, sol: SphereField, rhs: SphereField) -> dict:
    """Measured ratios of solution norms to |rhs|_p for p = 2, 4."""
    r, L = sol.radius, sol.L + 2
    out = {}
    for p in (2, 4):
        grid = _quad_grid(L, p * L)
        f_p = _lp_of_values(pointwise_norm(rhs, grid), grid, r, p)
        if f_p == 0:
            continue
        if system == "laplacian":
            phi = SphereField("0pair", _real_part_coeffs(sol.coeffs), r)
            mean = s_average(phi)
            centered = phi.coeffs.copy()
            centered[0, phi.L] = 0.0
            vals = {
                "hessian": np.sqrt(hessian_norm_sq(phi, grid)),
                "r^-1 grad": np.sqrt(grad_norm_sq(phi, grid)) / r,
                "r^-2 (phi - avg)": np.abs(grid.synthesis(centered, 0).real) / r**2,
            }
            del mean
        else:
            vals = {"grad": np.sqrt(grad_norm_sq(sol, grid)),
                    "r^-1 field": pointwise_norm(sol, grid) / r}
        out[f"p={p}"] = {k: _lp_of_values(v, grid, r, p) / f_p for k, v in vals.items()}
    return out


# ---------------------------------------------------------------- Poincare

def _component_factor(norm: str) -> float:
    if norm == "component":
        return 2.0
    if norm == "full":
        return 1.0
    raise ValueError("norm must be 'component' or 'full'")


def poincare_ratio(alpha: SphereField, norm: str = "component") -> float:
    """|r d2 alpha|^2_{L^2} / |alpha|^2_{L^2}.

    The 1-form r d2 alpha uses the full norm. With ``norm="component"`` the
    tensor alpha is measured by alpha_11^2 + alpha_12^2, otherwise by the full
    contraction alpha_AB alpha^AB, which is twice as large. If
    ``alpha.conformal`` is set, the metric is exp(2 phi) times the round one.
    """
    if alpha.rank != 2:
        raise RankError("Poincare ratio is defined on symmetric traceless 2-tensors")
    if not np.any(alpha.coeffs):
        raise ZeroDivisionError("zero field has no Poincare ratio")
    fac = _component_factor(norm)
    L = alpha.L
    if alpha.conformal is None:
        grid = _quad_grid(L, 2 * L)
        w = grid.area_weights(1.0)
        num = np.sum(w * np.abs(grid.synthesis(ethbar(alpha.coeffs, 2), 1))**2)
        den = np.sum(w * 2.0 * np.abs(grid.synthesis(alpha.coeffs, 2))**2)
        return float(fac * num / den)
    phi = np.asarray(alpha.conformal)
    grid = SphereGrid(L, nlat=phi.shape[0], nlon=phi.shape[1])
    w = grid.area_weights(1.0)
    r2 = np.sum(w * np.exp(2 * phi)) / (4.0 * np.pi)
    num = np.sum(w * np.exp(-4 * phi) * np.abs(grid.synthesis(ethbar(alpha.coeffs, 2), 1))**2)
    den = np.sum(w * np.exp(-2 * phi) * 2.0 * np.abs(grid.synthesis(alpha.coeffs, 2))**2)
    return float(fac * r2 * num / den)


def conformal_perturbation(eps: float, rng: np.random.Generator, grid: SphereGrid,
                           lmax: int = 4) -> np.ndarray:
    """phi = (eps/2) g with g a random smooth function of sup norm 1 on the grid.

    The metric exp(2 phi) gamma then differs from gamma by a relative amount eps.
    """
    c = rng.standard_normal((lmax + 1, 2 * lmax + 1)) + 1j * rng.standard_normal((lmax + 1, 2 * lmax + 1))
    c = _real_part_coeffs(np.where(sp.valid_mask(lmax, 0), c, 0))
    c[0, lmax] = 0.0
    g = SphereGrid(lmax, nlat=grid.nlat, nlon=grid.nlon).synthesis(c, 0).real
    return 0.5 * eps * g / np.max(np.abs(g))


def poincare_minimum(L: int = 12, eps: float = 0.0, norm: str = "component",
                     seed: int = 0, trials: int = 1, oversample: int = 3) -> dict:
    """Minimum Poincare ratio over spin-2 fields of band limit L.

    Solves the generalized Hermitian eigenproblem of the two quadratic forms
    on an oversampled grid. With eps > 0 the minimum is taken over ``trials``
    random conformal perturbations of relative size eps.
    """
    from scipy.linalg import eigh

    fac = _component_factor(norm)
    rng = np.random.default_rng(seed)
    grid = SphereGrid(L, nlat=oversample * (L + 1), nlon=oversample * (2 * L + 1))
    w = grid.area_weights(1.0)
    mask = sp.valid_mask(L, 2)
    idx = np.argwhere(mask)
    basis, dbasis = [], []
    for l, mi in idx:
        c = np.zeros((L + 1, 2 * L + 1), dtype=complex)
        c[l, mi] = 1.0
        basis.append(grid.synthesis(c, 2).ravel())
        dbasis.append(grid.synthesis(ethbar(c, 2), 1).ravel())
    B0, D0 = np.array(basis), np.array(dbasis)
    results = []
    for _ in range(max(trials, 1) if eps > 0 else 1):
        phi = conformal_perturbation(eps, rng, grid) if eps > 0 else np.zeros(grid.shape)
        wv = w.ravel()
        r2 = np.sum(wv * np.exp(2 * phi.ravel())) / (4.0 * np.pi)
        A = (D0.conj() * (wv * np.exp(-4 * phi.ravel()))) @ D0.T
        Bm = (B0.conj() * (2.0 * wv * np.exp(-2 * phi.ravel()))) @ B0.T
        vals = eigh(A, Bm, eigvals_only=True, subset_by_index=[0, 0])
        results.append(float(fac * r2 * vals[0]))
    return {"L": L, "eps": eps, "norm": norm, "minimum": min(results), "per_trial": results}
