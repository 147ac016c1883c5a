"""Null frame changes with a fixed ingoing direction, parametrised by (lambda, f).

Frames are handled through their pointwise jets. A frame is described at a
point by its connection table

    Gam[a, b, c] = g(D_{e_a} e_b, e_c),   index order (e1, e2, e3, e4),

and a curvature tensor by its frame components R[a, b, c, d]. A transform
carries lambda, the frame components f_A and their first derivatives along
the old frame, which is all that is needed to compute the new connection
table and curvature components exactly at the point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fd_geometry as fdg
from .kerr_background import (CurvatureComps, KerrParams, NullFrame, RicciCoeffs, _bl_metric_raw,
                              _check_exterior, _check_theta, _require_schwarzschild,
                              schwarzschild_frame_fields)

# Gram matrix of (e1, e2, e3, e4).
FRAME_GRAM = np.array([[1.0, 0, 0, 0], [0, 1.0, 0, 0], [0, 0, 0, -2.0], [0, 0, -2.0, 0]])
EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])
I3, I4 = 2, 3


class InvalidTransformError(ValueError):
    """Raised for lambda <= 0 or malformed transform data."""


class PerturbativeRegimeError(ValueError):
    """Raised when |f| exceeds the threshold of the perturbative formulas."""


@dataclass(frozen=True)
class FrameTransform:
    """e4' = lam (e4 + f^B e_B + |f|^2 e3 / 4), e3' = e3 / lam, eA' = eA + f_A e3 / 2.

    ``dlam[a]`` and ``df[a, B]`` are e_a(lam) and e_a(f_B) along the old frame.
    """

    lam: float
    f: np.ndarray
    dlam: np.ndarray = field(default_factory=lambda: np.zeros(4))
    df: np.ndarray = field(default_factory=lambda: np.zeros((4, 2)))

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise InvalidTransformError(f"lambda must be positive, got {self.lam}")
        f = np.asarray(self.f, dtype=float)
        if f.shape != (2,):
            raise InvalidTransformError("f must have two frame components")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "dlam", np.asarray(self.dlam, dtype=float).reshape(4))
        object.__setattr__(self, "df", np.asarray(self.df, dtype=float).reshape(4, 2))

    @classmethod
    def identity(cls) -> "FrameTransform":
        return cls(1.0, np.zeros(2))

    @classmethod
    def from_lapses(cls, Omega: float, Omega_prime: float, f) -> "FrameTransform":
        """lambda tied to the ratio of the two lapses."""
        return cls(Omega / Omega_prime, f)

    def matrix(self) -> np.ndarray:
        """Rows are the new frame vectors in the old basis (e1, e2, e3, e4)."""
        lam, f = self.lam, self.f
        L = np.zeros((4, 4))
        L[0] = [1.0, 0.0, 0.5 * f[0], 0.0]
        L[1] = [0.0, 1.0, 0.5 * f[1], 0.0]
        L[2] = [0.0, 0.0, 1.0 / lam, 0.0]
        L[3] = [lam * f[0], lam * f[1], 0.25 * lam * (f @ f), lam]
        return L

    def matrix_derivative(self) -> np.ndarray:
        """dL[i, b, j] = e_i(L[b, j])."""
        lam, f, dl, df = self.lam, self.f, self.dlam, self.df
        dL = np.zeros((4, 4, 4))
        dL[:, 0, I3] = 0.5 * df[:, 0]
        dL[:, 1, I3] = 0.5 * df[:, 1]
        dL[:, 2, I3] = -dl / lam**2
        dL[:, 3, 0] = dl * f[0] + lam * df[:, 0]
        dL[:, 3, 1] = dl * f[1] + lam * df[:, 1]
        dL[:, 3, I3] = 0.25 * dl * (f @ f) + 0.5 * lam * (df @ f)
        dL[:, 3, I4] = dl
        return dL


def inverse(T: FrameTransform) -> FrameTransform:
    """The transform taking the new frame back to the old one.

    Its parameters are (1/lam, -lam f), with derivatives taken along the new frame.
    """
    L = T.matrix()
    dlam_inv = L @ (-T.dlam / T.lam**2)
    df_inv = L @ (-(np.outer(T.dlam, T.f) + T.lam * T.df))
    return FrameTransform(1.0 / T.lam, -T.lam * T.f, dlam_inv, df_inv)


def compose(T1: FrameTransform, T2: FrameTransform) -> FrameTransform:
    """Apply T1, then T2 (given relative to the frame produced by T1)."""
    Linv = np.linalg.inv(T1.matrix())
    d_lam2 = Linv @ T2.dlam
    d_f2 = Linv @ T2.df
    lam = T1.lam * T2.lam
    f = T1.f + T2.f / T1.lam
    dlam = T1.dlam * T2.lam + T1.lam * d_lam2
    df = T1.df + d_f2 / T1.lam - np.outer(T1.dlam, T2.f) / T1.lam**2
    return FrameTransform(lam, f, dlam, df)


def apply_frame(T: FrameTransform, frame: NullFrame) -> NullFrame:
    """New frame vectors in coordinates. The lapse is divided by lambda."""
    E = np.array([frame.e1, frame.e2, frame.e3, frame.e4])
    new = T.matrix() @ E
    return NullFrame(e3=new[2], e4=new[3], e1=new[0], e2=new[1], Omega=frame.Omega / T.lam,
                     coords=np.array(frame.coords, copy=True), r=frame.r)


# --- connection tables ---------------------------------------------------------

def schwarzschild_connection(params: KerrParams, r: float, theta: float = math.pi / 2) -> np.ndarray:
    """Closed-form connection table of the Schwarzschild double null frame."""
    _require_schwarzschild(params)
    _check_exterior(params, r)
    _check_theta(theta)
    M = params.M
    Om = 0.5 * math.sqrt(1.0 - 2.0 * M / r)
    k = 2.0 * Om / r
    om, omb = -M / (4.0 * Om * r**2), M / (4.0 * Om * r**2)
    G = np.zeros((4, 4, 4))
    for A in (0, 1):
        G[A, I4, A], G[A, A, I4] = k, -k
        G[A, I3, A], G[A, A, I3] = -k, k
    G[I4, I4, I3], G[I4, I3, I4] = 4.0 * om, -4.0 * om
    G[I3, I3, I4], G[I3, I4, I3] = 4.0 * omb, -4.0 * omb
    cot = math.cos(theta) / math.sin(theta)
    G[1, 1, 0], G[1, 0, 1] = -cot / r, cot / r
    return G


def connection_fd(params: KerrParams, r: float, theta: float = math.pi / 2,
                  rel_step: float = 1e-5) -> np.ndarray:
    """Connection table from finite-difference covariant derivatives (oracle path)."""
    _require_schwarzschild(params)
    _check_exterior(params, r)
    _check_theta(theta)
    M = params.M
    h = rel_step * r

    def metric(x):
        return _bl_metric_raw(M, 0.0, x[1], x[2])

    x = np.array([0.0, r, theta, 0.0])
    g = metric(x)
    fields = schwarzschild_frame_fields(M)
    keys = ("1", "2", "3", "4")
    vec = [fields[k](x) for k in keys]
    gam = fdg.christoffel(metric, x, h)
    G = np.zeros((4, 4, 4))
    for a in range(4):
        for b in range(4):
            D = fdg.covariant_derivative(metric, x, vec[a], fields[keys[b]], h, gamma=gam)
            for c in range(4):
                G[a, b, c] = D @ g @ vec[c]
    return G


def transformed_connection(T: FrameTransform, Gam: np.ndarray) -> np.ndarray:
    """Exact connection table of the new frame at the point."""
    L, dL = T.matrix(), T.matrix_derivative()
    term_d = np.einsum("ai,ibj,jk,ck->abc", L, dL, FRAME_GRAM, L)
    term_g = np.einsum("ai,bj,ijk,ck->abc", L, L, Gam, L)
    return term_d + term_g


def ricci_from_connection(Gam: np.ndarray) -> RicciCoeffs:
    A = slice(0, 2)
    chi = Gam[A, I4, A]
    chib = Gam[A, I3, A]
    trchi, trchib = float(np.trace(chi)), float(np.trace(chib))
    eye = np.eye(2)
    return RicciCoeffs(
        trchi=trchi, trchib=trchib,
        omega=0.25 * Gam[I4, I4, I3], omegab=0.25 * Gam[I3, I3, I4],
        chihat=chi - 0.5 * trchi * eye, chibhat=chib - 0.5 * trchib * eye,
        eta=0.5 * Gam[I3, I4, A], etab=0.5 * Gam[I4, I3, A], zeta=0.5 * Gam[A, I4, I3],
        xi=0.5 * Gam[I4, I4, A], xib=0.5 * Gam[I3, I3, A])


def full_chi(c: RicciCoeffs, which: str = "chib") -> np.ndarray:
    tr = c.trchib if which == "chib" else c.trchi
    hat = c.chibhat if which == "chib" else c.chihat
    return hat + 0.5 * tr * np.eye(2)


# --- derivatives of f in the new frame ---------------------------------------

def _new_frame_derivative_of_f(T: FrameTransform) -> np.ndarray:
    """e'_a(f_B) for every new frame vector a."""
    return T.matrix() @ T.df


def covariant_f(T: FrameTransform, Gam_new: np.ndarray) -> np.ndarray:
    """(nabla'_{e'_a} f)_B for a = 1..4, B = 1, 2, using the new frame's horizontal connection."""
    df_new = _new_frame_derivative_of_f(T)
    return df_new - np.einsum("abc,c->ab", Gam_new[:, 0:2, 0:2], T.f)


def div_prime(T: FrameTransform, Gam_new: np.ndarray) -> float:
    D = covariant_f(T, Gam_new)
    return float(D[0, 0] + D[1, 1])


def curl_prime(T: FrameTransform, Gam_new: np.ndarray) -> float:
    D = covariant_f(T, Gam_new)
    return float(D[0, 1] - D[1, 0])


def curl_free_jet(lam: float, f, Gam: np.ndarray, df: np.ndarray | None = None) -> FrameTransform:
    """Transform whose f has vanishing curl on the old spheres at the point.

    Only e_2(f_1) is adjusted. This mimics the f produced by a change of
    double null foliation, for which curl' f is lower order.
    """
    f = np.asarray(f, dtype=float)
    df = np.zeros((4, 2)) if df is None else np.array(df, dtype=float)
    df[1, 0] = df[0, 1] - f @ (Gam[0, 1, 0:2] - Gam[1, 0, 0:2])
    return FrameTransform(lam, f, np.zeros(4), df)


def _check_small(T: FrameTransform, threshold: float) -> None:
    size = float(np.linalg.norm(T.f))
    if size > threshold:
        raise PerturbativeRegimeError(f"|f| = {size:.3g} exceeds the threshold {threshold}")


def transform_ricci(T: FrameTransform, coeffs: RicciCoeffs, background: np.ndarray,
                    threshold: float = 0.1) -> dict:
    """Leading-order Ricci coefficients of the new frame.

    ``background`` is the old frame's connection table, used for the
    derivative terms of f. Only the explicitly displayed terms are kept; the
    schematic remainders (Gamma_b f and O(M/r^2) f) are dropped.
    """
    _check_small(T, threshold)
    lam, f = T.lam, T.f
    Gn = transformed_connection(T, background)
    Df = covariant_f(T, Gn)
    return {
        "trchi": lam * (coeffs.trchi + div_prime(T, Gn)),
        "chib": full_chi(coeffs) / lam,
        "eta": np.asarray(coeffs.eta) + 0.5 * lam * Df[I3],
        "etab": np.asarray(coeffs.etab) + 0.25 * coeffs.trchib * f,
        "xi": lam**2 * (np.asarray(coeffs.xi) + 0.5 * Df[I4] / lam + 0.25 * coeffs.trchi * f),
        "omega": lam * coeffs.omega,
        "curl_f": 0.0,
    }


def direct_ricci(T: FrameTransform, background: np.ndarray) -> dict:
    """Exact recomputation in the new frame, keyed like transform_ricci."""
    Gn = transformed_connection(T, background)
    c = ricci_from_connection(Gn)
    return {"trchi": c.trchi, "chib": full_chi(c), "eta": np.asarray(c.eta),
            "etab": np.asarray(c.etab), "xi": np.asarray(c.xi), "omega": c.omega,
            "curl_f": curl_prime(T, Gn)}


# --- curvature -----------------------------------------------------------------

def hodge(v: np.ndarray) -> np.ndarray:
    """Left dual (*v)_A = eps_AB v_B."""
    return EPS2 @ v


def hotimes(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Symmetric traceless product a_A b_B + a_B b_A - delta_AB a.b."""
    return np.outer(a, b) + np.outer(b, a) - np.eye(2) * (a @ b)


def curvature_from_frame_riemann(R: np.ndarray) -> CurvatureComps:
    A = (0, 1)
    return CurvatureComps(
        alpha=np.array([[R[a, I4, b, I4] for b in A] for a in A]),
        beta=np.array([0.5 * R[a, I4, I3, I4] for a in A]),
        rho=0.25 * R[I3, I4, I3, I4],
        sigma=0.5 * R[0, 1, I3, I4],
        betab=np.array([0.5 * R[a, I3, I3, I4] for a in A]),
        alphab=np.array([[R[a, I3, b, I3] for b in A] for a in A]))


def transformed_riemann(T: FrameTransform, R: np.ndarray) -> np.ndarray:
    L = T.matrix()
    return np.einsum("ai,bj,ck,dl,ijkl->abcd", L, L, L, L, R)


def frame_riemann_fd(params: KerrParams, r: float, theta: float = math.pi / 2,
                     rel_step: float = 1e-3) -> np.ndarray:
    """Riemann tensor in the Schwarzschild frame from finite differences (oracle path)."""
    _require_schwarzschild(params)
    _check_exterior(params, r)
    _check_theta(theta)
    M = params.M

    def metric(x):
        return _bl_metric_raw(M, 0.0, x[1], x[2])

    x = np.array([0.0, r, theta, 0.0])
    h = rel_step * r
    Rm = fdg.riemann_lower(metric, x, h, h_first=min(h, 1e-5 * r))
    fields = schwarzschild_frame_fields(M)
    E = np.array([fields[k](x) for k in ("1", "2", "3", "4")])
    return np.einsum("ai,bj,ck,dl,ijkl->abcd", E, E, E, E, Rm)


def _kulkarni_nomizu(h: np.ndarray, k: np.ndarray) -> np.ndarray:
    return (np.einsum("ac,bd->abcd", h, k) + np.einsum("bd,ac->abcd", h, k)
            - np.einsum("ad,bc->abcd", h, k) - np.einsum("bc,ad->abcd", h, k))


def random_weyl(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """A random algebraic Weyl tensor in the frame basis."""
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    S = rng.standard_normal((6, 6))
    S = S + S.T
    R = np.zeros((4, 4, 4, 4))
    for i, (a, b) in enumerate(pairs):
        for j, (c, d) in enumerate(pairs):
            v = S[i, j]
            R[a, b, c, d], R[b, a, c, d], R[a, b, d, c], R[b, a, d, c] = v, -v, -v, v
    # remove the totally antisymmetric part (first Bianchi identity)
    R = R - (R + np.einsum("abcd->acdb", R) + np.einsum("abcd->adbc", R)) / 3.0
    g = FRAME_GRAM
    gi = np.linalg.inv(g)
    ric = np.einsum("ac,abcd->bd", gi, R)
    rs = float(np.einsum("bd,bd->", gi, ric))
    R = R - 0.5 * _kulkarni_nomizu(ric - rs / 4.0 * g, g) - rs / 24.0 * _kulkarni_nomizu(g, g)
    return scale * R


def transform_curvature(T: FrameTransform, R: CurvatureComps, threshold: float = 0.1) -> CurvatureComps:
    """Curvature components of the new frame from the displayed transformation formulas."""
    _check_small(T, threshold)
    lam, f = T.lam, T.f
    fs = hodge(f)
    beta, betab = np.asarray(R.beta), np.asarray(R.betab)
    alphab = np.asarray(R.alphab)
    alpha = (np.asarray(R.alpha) + hotimes(f, beta) - hotimes(fs, hodge(beta))
             + (hotimes(f, f) - 0.5 * hotimes(fs, fs)) * R.rho + 1.5 * hotimes(f, fs) * R.sigma)
    return CurvatureComps(
        alpha=lam**2 * alpha,
        beta=lam * (beta + 1.5 * (f * R.rho + fs * R.sigma)),
        rho=R.rho - f @ betab,
        sigma=R.sigma - f @ hodge(betab),
        betab=(betab - 0.5 * alphab @ f) / lam,
        alphab=alphab / lam**2)


def direct_curvature(T: FrameTransform, R: np.ndarray) -> CurvatureComps:
    return curvature_from_frame_riemann(transformed_riemann(T, R))


def residuals(pred, exact) -> dict:
    """Max-abs difference per key for dicts or CurvatureComps."""
    if isinstance(pred, CurvatureComps):
        pred, exact = pred.as_dict(), exact.as_dict()
    return {k: float(np.max(np.abs(np.asarray(pred[k]) - np.asarray(exact[k])))) for k in pred}


__all__ = [
    "FrameTransform", "InvalidTransformError", "PerturbativeRegimeError", "inverse", "compose",
    "apply_frame", "schwarzschild_connection", "connection_fd", "transformed_connection",
    "ricci_from_connection", "covariant_f", "curl_free_jet", "div_prime", "curl_prime", "transform_ricci",
    "direct_ricci", "hodge", "hotimes", "curvature_from_frame_riemann", "transformed_riemann",
    "frame_riemann_fd", "random_weyl", "transform_curvature", "direct_curvature", "residuals",
    "FRAME_GRAM",
]
