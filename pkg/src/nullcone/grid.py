"""Double null (u, ub) meshes with per-node spheres and batched spin operators.

Fields on a grid are stored as coefficient arrays of shape
(n_u, n_ub, L+1, 2L+1), one spin-weighted expansion per sphere S(u, ub).
On spherically symmetric backgrounds the frame components of S-tensors
are parallel along e3 and e4, so nabla_4 acts on coefficients as
Omega^-1 d/dub and nabla_3 as Omega^-1 d/du.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import spectral as sp
from .kerr_background import DomainError, KerrParams, radius_from_tortoise
from .sphere_calculus import SPIN, RankError, SphereField, _norm_rank

__all__ = [
    "NullGrid", "GridField", "Cone", "background_arrays", "make_grid",
    "op_d", "op_dstar", "conjmap", "grid_lp_norm", "sphere_l2",
]


def background_arrays(M: float, u: np.ndarray, ub: np.ndarray) -> dict[str, np.ndarray]:
    """Schwarzschild double null background on the (u, ub) mesh.

    ``u`` and ``ub`` broadcast against each other. r follows from
    ub - u = 2 r_*; for M = 0 this is r = (ub - u)/2 and Omega = 1/2.
    """
    u, ub = np.broadcast_arrays(np.asarray(u, float), np.asarray(ub, float))
    if np.any(ub - u <= 0):
        raise DomainError("every node needs ub - u > 0")
    if M == 0:
        r = 0.5 * (ub - u)
    else:
        params = KerrParams(M)
        flat = [radius_from_tortoise(params, 0.5 * x) for x in (ub - u).ravel()]
        r = np.asarray(flat).reshape(u.shape)
    Om = 0.5 * np.sqrt(1.0 - 2.0 * M / r)
    return {
        "r": r, "Omega": Om,
        "trchi": 4.0 * Om / r, "trchib": -4.0 * Om / r,
        "omega": -M / (4.0 * Om * r**2), "omegab": M / (4.0 * Om * r**2),
        "e4r": 2.0 * Om, "e3r": -2.0 * Om,
    }


@dataclass
class GridField:
    """A spin-weighted field attached to every node of a null grid."""

    rank: object
    coeffs: np.ndarray

    def __post_init__(self):
        self.rank = _norm_rank(self.rank)
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 4:
            raise ValueError("grid field coefficients need shape (n_u, n_ub, L+1, 2L+1)")

    @property
    def spin(self) -> int:
        return SPIN[self.rank]

    @property
    def L(self) -> int:
        return self.coeffs.shape[-2] - 1

    def at(self, i: int, j: int, radius: float = 1.0) -> SphereField:
        return SphereField(self.rank, self.coeffs[i, j], radius)

    @classmethod
    def zeros(cls, rank, n_u: int, n_ub: int, L: int) -> "GridField":
        return cls(rank, np.zeros((n_u, n_ub, L + 1, 2 * L + 1), dtype=complex))


@dataclass
class Cone:
    """One outgoing (fixed u) or ingoing (fixed ub) null cone of a grid."""

    kind: str
    index: int
    fixed: float
    nodes: np.ndarray
    r: np.ndarray
    Omega: np.ndarray
    M: float = 0.0

    def __post_init__(self):
        if self.kind not in ("outgoing", "ingoing"):
            raise ValueError(f"unknown cone kind {self.kind!r}")

    def point(self, x: float) -> tuple[float, float]:
        """(u, ub) of the sphere with running coordinate x on this cone."""
        return (self.fixed, x) if self.kind == "outgoing" else (x, self.fixed)

    def background_at(self, x) -> dict[str, np.ndarray]:
        u, ub = self.point(x)
        return background_arrays(self.M, u, ub)


@dataclass
class NullGrid:
    """A rectangular characteristic mesh u_nodes x ub_nodes."""

    u_nodes: np.ndarray
    ub_nodes: np.ndarray
    L: int
    M: float = 0.0
    r: np.ndarray | None = None
    Omega: np.ndarray | None = None
    fields: dict[str, GridField] = field(default_factory=dict)

    def __post_init__(self):
        self.u_nodes = np.asarray(self.u_nodes, dtype=float)
        self.ub_nodes = np.asarray(self.ub_nodes, dtype=float)
        for name, x in (("u_nodes", self.u_nodes), ("ub_nodes", self.ub_nodes)):
            if x.ndim != 1 or x.size < 1 or np.any(np.diff(x) <= 0):
                raise ValueError(f"{name} must be a strictly increasing 1-d array")
        if self.ub_nodes[0] - self.u_nodes[-1] <= 0:
            raise DomainError("grid leaves the exterior region ub - u > 0")
        if self.r is None or self.Omega is None:
            bg = self.background()
            self.r, self.Omega = bg["r"], bg["Omega"]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.u_nodes.size, self.ub_nodes.size)

    def background(self) -> dict[str, np.ndarray]:
        return background_arrays(self.M, self.u_nodes[:, None], self.ub_nodes[None, :])

    def outgoing(self, i: int) -> Cone:
        return Cone("outgoing", i, float(self.u_nodes[i]), self.ub_nodes,
                    self.r[i, :], self.Omega[i, :], self.M)

    def ingoing(self, j: int) -> Cone:
        return Cone("ingoing", j, float(self.ub_nodes[j]), self.u_nodes,
                    self.r[:, j], self.Omega[:, j], self.M)

    def causal_mask(self, i: int, j: int) -> np.ndarray:
        """Index mask of the past region of S(u_i, ub_j) inside the grid."""
        mask = np.zeros(self.shape, dtype=bool)
        mask[:i + 1, :j + 1] = True
        return mask


def make_grid(u0: float, u1: float, ub0: float, ub1: float, n_u: int, n_ub: int,
              L: int, M: float = 0.0) -> NullGrid:
    return NullGrid(np.linspace(u0, u1, n_u), np.linspace(ub0, ub1, n_ub), L, M)


# ---------------------------------------------------------------- operators

def op_d(k: int, coeffs: np.ndarray, r) -> np.ndarray:
    """d_k on batched coefficients; ``r`` broadcasts over the leading axes."""
    r = _radius(r, coeffs)
    if k == 1:
        return -np.sqrt(2.0) * sp.ethbar(coeffs, 1) / r
    if k == 2:
        return -sp.ethbar(coeffs, 2) / (np.sqrt(2.0) * r)
    raise RankError(f"d_{k} is not defined")


def op_dstar(k: int, coeffs: np.ndarray, r) -> np.ndarray:
    """Adjoint d_k^* on batched coefficients."""
    r = _radius(r, coeffs)
    if k == 1:
        return sp.eth(coeffs, 0) / (np.sqrt(2.0) * r)
    if k == 2:
        return sp.eth(coeffs, 1) / (np.sqrt(2.0) * r)
    raise RankError(f"d_{k}^* is not defined")


def conjmap(coeffs: np.ndarray) -> np.ndarray:
    """Coefficients of the complex conjugate of a spin-0 function: (-1)^m conj(a_{l,-m})."""
    L = coeffs.shape[-2] - 1
    m = np.arange(-L, L + 1)
    return np.conj(coeffs[..., ::-1]) * ((-1.0) ** m)


def _radius(r, coeffs: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return r.reshape(r.shape + (1,) * (coeffs.ndim - r.ndim)) if r.ndim < coeffs.ndim else r


def sphere_l2(coeffs: np.ndarray, rank, r) -> np.ndarray:
    """|psi|_{2,S} on spheres of radius r by Parseval, batched over leading axes."""
    fac = 1.0 if _norm_rank(rank) == "0pair" else 2.0
    tot = np.sum(np.abs(coeffs)**2, axis=(-2, -1))
    return np.sqrt(fac * tot) * np.asarray(r, dtype=float)


def grid_lp_norm(coeffs: np.ndarray, rank, r, p: int) -> np.ndarray:
    """|psi|_{p,S} for p in {2, 4}, batched over leading axes."""
    if p == 2:
        return sphere_l2(coeffs, rank, r)
    if p != 4:
        raise ValueError("only p = 2 and p = 4 are supported")
    rank = _norm_rank(rank)
    L = coeffs.shape[-2] - 1
    g = sp.SphereGrid(L, nlat=2 * L + 1, nlon=4 * L + 1)
    vals = np.abs(g.synthesis(coeffs, SPIN[rank]))
    if rank != "0pair":
        vals = np.sqrt(2.0) * vals
    w = g.area_weights(1.0)
    r = np.asarray(r, dtype=float)
    return np.sum(w * vals**4, axis=(-2, -1)) ** 0.25 * np.sqrt(r)
