"""Kerr and Schwarzschild background geometry.

Boyer-Lindquist metric, tortoise coordinates, the Schwarzschild double null
frame with its Ricci coefficients and null curvature components, and a
sampling check of the decay classes O^p_q.

Closed forms are the library path. ``ricci_fd`` and ``curvature_fd`` recompute
the same quantities from finite-difference Christoffel symbols and a
finite-difference Riemann tensor of the metric, and serve as the oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from . import fd_geometry as fdg

__all__ = [
    "InvalidParametersError", "DomainError", "NumericError", "StepSizeError",
    "KerrParams", "NullFrame", "RicciCoeffs", "CurvatureComps",
    "horizon_radius", "bl_metric", "bl_metric_inverse", "tortoise_coords",
    "tortoise_closed_form", "radius_from_tortoise", "double_null_frame",
    "background_ricci", "background_curvature", "ricci_fd", "curvature_fd",
    "verify_decay_class", "schwarzschild_frame_fields", "decay_table",
]


class InvalidParametersError(ValueError):
    """Raised for |a| > M or M < 0."""


class DomainError(ValueError):
    """Raised for points at or inside the horizon, or on the coordinate poles."""


class NumericError(RuntimeError):
    """Raised when a numerical integration or root solve does not converge."""


class StepSizeError(ValueError):
    """Raised when a finite-difference stencil would cross the horizon."""


@dataclass(frozen=True)
class KerrParams:
    """Mass and specific angular momentum of a Kerr background.

    ``M = 0`` is accepted as the Minkowski limit.
    """

    M: float
    a: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.M) and np.isfinite(self.a)):
            raise InvalidParametersError("M and a must be finite")
        if self.M < 0:
            raise InvalidParametersError(f"negative mass M={self.M}")
        if abs(self.a) > self.M:
            raise InvalidParametersError(
                f"|a|={abs(self.a)} exceeds M={self.M}: naked singularity")

    @property
    def r_plus(self) -> float:
        return self.M + math.sqrt(max(self.M**2 - self.a**2, 0.0))

    @property
    def r_minus(self) -> float:
        return self.M - math.sqrt(max(self.M**2 - self.a**2, 0.0))

    def delta(self, r):
        return r**2 + self.a**2 - 2.0 * self.M * r

    def sigma(self, r, theta):
        return r**2 + self.a**2 * np.cos(theta)**2

    def R2(self, r, theta):
        return r**2 + self.a**2 + 2.0 * self.M * self.a**2 * r * np.sin(theta)**2 / self.sigma(r, theta)


def horizon_radius(params: KerrParams) -> float:
    """Outer horizon radius r_+ = M + sqrt(M^2 - a^2)."""
    if abs(params.a) > params.M:
        raise InvalidParametersError("|a| > M")
    return params.r_plus


def _check_exterior(params: KerrParams, r: float) -> None:
    if params.M > 0 and not r > params.r_plus:
        raise DomainError(f"r={r} is not outside the horizon r_+={params.r_plus}")
    if r <= 0:
        raise DomainError(f"r={r} must be positive")


def _check_theta(theta: float) -> None:
    if not (0.0 < theta < math.pi):
        raise DomainError(f"theta={theta} lies on a pole of the (theta, phi) chart")


def bl_metric(params: KerrParams, r: float, theta: float) -> np.ndarray:
    """Covariant Boyer-Lindquist metric in (t, r, theta, phi) ordering."""
    _check_exterior(params, r)
    _check_theta(theta)
    return _bl_metric_raw(params.M, params.a, r, theta)


def _bl_metric_raw(M: float, a: float, r: float, theta: float) -> np.ndarray:
    sig = r**2 + a**2 * math.cos(theta)**2
    dlt = r**2 + a**2 - 2.0 * M * r
    s2 = math.sin(theta)**2
    R2 = r**2 + a**2 + 2.0 * M * a**2 * r * s2 / sig
    g = np.zeros((4, 4))
    g[0, 0] = -(1.0 - 2.0 * M * r / sig)
    g[1, 1] = sig / dlt
    g[2, 2] = sig
    g[3, 3] = R2 * s2
    g[0, 3] = g[3, 0] = -2.0 * M * a * r * s2 / sig
    return g


def bl_metric_inverse(params: KerrParams, r: float, theta: float) -> np.ndarray:
    """Inverse metric from the block structure (t-phi block inverted in closed form)."""
    g = bl_metric(params, r, theta)
    inv = np.zeros((4, 4))
    inv[1, 1] = 1.0 / g[1, 1]
    inv[2, 2] = 1.0 / g[2, 2]
    det = g[0, 0] * g[3, 3] - g[0, 3]**2
    inv[0, 0] = g[3, 3] / det
    inv[3, 3] = g[0, 0] / det
    inv[0, 3] = inv[3, 0] = -g[0, 3] / det
    return inv


def tortoise_closed_form(params: KerrParams, r: float) -> float:
    """Closed form of r_* with r_* - r - 2M log(r/2M) -> 0 at infinity (non-extremal)."""
    M, rp, rm = params.M, params.r_plus, params.r_minus
    if M == 0:
        return float(r)
    if rp == rm:
        raise NumericError("closed form degenerates for the extremal case")
    cp = 2.0 * M * rp / (rp - rm)
    cm = 2.0 * M * rm / (rp - rm)
    out = r + cp * math.log((r - rp) / (2.0 * M))
    if rm > 0:
        out -= cm * math.log((r - rm) / (2.0 * M))
    return out


def tortoise_coords(params: KerrParams, r: float, theta: float = math.pi / 2,
                    rtol: float = 1e-12) -> tuple[float, float]:
    """Tortoise radius and angle (r_*, theta_*) at (r, theta).

    r_* solves dr_*/dr = (r^2 + a^2)/Delta. The integration constant makes
    r_* - r - 2M log(r/2M) vanish at infinity; for a = 0 this gives
    r + 2M log(r/2M - 1). theta_* is returned equal to theta.
    """
    _check_exterior(params, r)
    M, a = params.M, params.a
    if M == 0:
        return float(r), float(theta)
    if a == 0:
        return r + 2.0 * M * math.log(r / (2.0 * M) - 1.0), float(theta)

    def tail(s):
        # (s^2 + a^2)/Delta - 1 - 2M/s without cancellation
        return 2.0 * M * (2.0 * M * s - a**2) / (s * (s**2 + a**2 - 2.0 * M * s))

    val, err = integrate.quad(tail, r, np.inf, epsabs=0.0, epsrel=rtol, limit=200)
    if not np.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
        raise NumericError(f"tortoise integral did not converge: value={val}, error estimate={err}")
    return r + 2.0 * M * math.log(r / (2.0 * M)) - val, float(theta)


def radius_from_tortoise(params: KerrParams, r_star: float) -> float:
    """Invert r_*(r) for the radius outside the horizon."""
    if params.M == 0:
        if r_star <= 0:
            raise DomainError("r_* must be positive in Minkowski")
        return float(r_star)
    rp = params.r_plus

    def fn(r):
        return tortoise_coords(params, r)[0] - r_star

    lo = rp * (1.0 + 1e-14) + 1e-300
    hi = max(2.0 * rp, abs(r_star) + 4.0 * rp)
    while fn(hi) < 0:
        hi *= 2.0
    if fn(lo) > 0:
        raise DomainError(f"r_*={r_star} too close to the horizon to invert")
    return optimize.brentq(fn, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass
class NullFrame:
    """Null frame (e3, e4, e1, e2) as Boyer-Lindquist coordinate components."""

    e3: np.ndarray
    e4: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    Omega: float
    coords: np.ndarray = field(default_factory=lambda: np.zeros(4))
    r: float = float("nan")

    def vectors(self) -> dict[str, np.ndarray]:
        return {"3": self.e3, "4": self.e4, "1": self.e1, "2": self.e2}

    def normalization_residual(self, metric: np.ndarray) -> float:
        """Max deviation of the frame Gram matrix from the null-frame normal form."""
        E = np.array([self.e1, self.e2, self.e3, self.e4])
        gram = E @ metric @ E.T
        target = np.zeros((4, 4))
        target[0, 0] = target[1, 1] = 1.0
        target[2, 3] = target[3, 2] = -2.0
        return float(np.max(np.abs(gram - target)))


def schwarzschild_frame_fields(M: float):
    """Frame fields of the Schwarzschild double null foliation as callables of BL x."""

    def lapse_f(x):
        return 1.0 - 2.0 * M / x[1]

    def e4(x):
        f = lapse_f(x)
        return np.array([1.0 / math.sqrt(f), math.sqrt(f), 0.0, 0.0])

    def e3(x):
        f = lapse_f(x)
        return np.array([1.0 / math.sqrt(f), -math.sqrt(f), 0.0, 0.0])

    def e1(x):
        return np.array([0.0, 0.0, 1.0 / x[1], 0.0])

    def e2(x):
        return np.array([0.0, 0.0, 0.0, 1.0 / (x[1] * math.sin(x[2]))])

    return {"3": e3, "4": e4, "1": e1, "2": e2}


def _require_schwarzschild(params: KerrParams) -> None:
    if params.a != 0:
        raise InvalidParametersError("double null frame machinery is implemented for a = 0 only")


def double_null_frame(params: KerrParams, u: float, ub: float,
                      theta: float = math.pi / 2, phi: float = 0.0) -> NullFrame:
    """Schwarzschild double null frame at (u, ub, theta, phi).

    r follows from ub - u = 2 r_*, and Omega^2 = (1 - 2M/r)/4.
    """
    _require_schwarzschild(params)
    _check_theta(theta)
    r = radius_from_tortoise(params, 0.5 * (ub - u))
    _check_exterior(params, r)
    x = np.array([0.5 * (u + ub), r, theta, phi])
    fields = schwarzschild_frame_fields(params.M)
    omega_lapse = 0.5 * math.sqrt(1.0 - 2.0 * params.M / r)
    return NullFrame(e3=fields["3"](x), e4=fields["4"](x), e1=fields["1"](x),
                     e2=fields["2"](x), Omega=omega_lapse, coords=x, r=r)


@dataclass
class RicciCoeffs:
    """Ricci coefficients in the frame (e1, e2, e3, e4); tensors in the (e1, e2) basis."""

    trchi: float
    trchib: float
    omega: float
    omegab: float
    chihat: np.ndarray
    chibhat: np.ndarray
    eta: np.ndarray
    etab: np.ndarray
    zeta: np.ndarray
    xi: np.ndarray
    xib: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(v, dtype=float) for k, v in self.__dict__.items()}


@dataclass
class CurvatureComps:
    """Null curvature components in the frame (e1, e2, e3, e4)."""

    alpha: np.ndarray
    beta: np.ndarray
    rho: float
    sigma: float
    betab: np.ndarray
    alphab: np.ndarray

    def as_dict(self) -> dict[str, np.ndarray]:
        return {k: np.asarray(v, dtype=float) for k, v in self.__dict__.items()}


def _point_radius(params: KerrParams, point) -> tuple[float, float]:
    """Accept a NullFrame, an (u, ub) pair or a dict with key 'r'."""
    if isinstance(point, NullFrame):
        return point.r, point.Omega
    if isinstance(point, dict):
        r = float(point["r"])
    else:
        u, ub = point
        r = radius_from_tortoise(params, 0.5 * (ub - u))
    _check_exterior(params, r)
    return r, 0.5 * math.sqrt(1.0 - 2.0 * params.M / r)


def background_ricci(params: KerrParams, point) -> RicciCoeffs:
    """Closed-form Schwarzschild Ricci coefficients of the double null frame."""
    _require_schwarzschild(params)
    r, Om = _point_radius(params, point)
    M = params.M
    z1, z2 = np.zeros(2), np.zeros((2, 2))
    return RicciCoeffs(
        trchi=4.0 * Om / r, trchib=-4.0 * Om / r,
        omega=-M / (4.0 * Om * r**2), omegab=M / (4.0 * Om * r**2),
        chihat=z2.copy(), chibhat=z2.copy(), eta=z1.copy(), etab=z1.copy(),
        zeta=z1.copy(), xi=z1.copy(), xib=z1.copy())


def background_curvature(params: KerrParams, point) -> CurvatureComps:
    """Closed-form Schwarzschild null curvature components; only rho = -2M/r^3 survives."""
    _require_schwarzschild(params)
    r, _ = _point_radius(params, point)
    z1, z2 = np.zeros(2), np.zeros((2, 2))
    return CurvatureComps(alpha=z2.copy(), beta=z1.copy(), rho=-2.0 * params.M / r**3,
                          sigma=0.0, betab=z1.copy(), alphab=z2.copy())


def _fd_setup(params: KerrParams, r: float, theta: float, rel_step: float):
    _require_schwarzschild(params)
    _check_exterior(params, r)
    _check_theta(theta)
    h = rel_step * r
    if params.M > 0 and r - 2.0 * h <= params.r_plus:
        raise StepSizeError(f"step {h} reaches the horizon from r={r}")
    M = params.M

    def metric(x):
        return _bl_metric_raw(M, 0.0, x[1], x[2])

    x = np.array([0.0, r, theta, 0.0])
    return metric, x, h, schwarzschild_frame_fields(M)


def ricci_fd(params: KerrParams, r: float, theta: float = math.pi / 2,
             rel_step: float = 1e-3) -> RicciCoeffs:
    """Ricci coefficients from finite-difference Christoffel symbols (oracle path)."""
    metric, x, h, E = _fd_setup(params, r, theta, rel_step)
    g = metric(x)
    vec = {k: fn(x) for k, fn in E.items()}
    gam = fdg.christoffel(metric, x, h)

    def D(a, b):
        return fdg.covariant_derivative(metric, x, vec[a], E[b], h, gamma=gam)

    def gg(X, Y):
        return float(X @ g @ Y)

    A = ("1", "2")
    chi = np.array([[gg(D(a, "4"), vec[b]) for b in A] for a in A])
    chib = np.array([[gg(D(a, "3"), vec[b]) for b in A] for a in A])
    D44, D33, D34, D43 = D("4", "4"), D("3", "3"), D("3", "4"), D("4", "3")
    trchi, trchib = np.trace(chi), np.trace(chib)
    eye = np.eye(2)
    return RicciCoeffs(
        trchi=float(trchi), trchib=float(trchib),
        omega=0.25 * gg(D44, vec["3"]), omegab=0.25 * gg(D33, vec["4"]),
        chihat=chi - 0.5 * trchi * eye, chibhat=chib - 0.5 * trchib * eye,
        eta=np.array([0.5 * gg(D34, vec[b]) for b in A]),
        etab=np.array([0.5 * gg(D43, vec[b]) for b in A]),
        zeta=np.array([0.5 * gg(D(a, "4"), vec["3"]) for a in A]),
        xi=np.array([0.5 * gg(D44, vec[b]) for b in A]),
        xib=np.array([0.5 * gg(D33, vec[b]) for b in A]))


def curvature_fd(params: KerrParams, r: float, theta: float = math.pi / 2,
                 rel_step: float = 1e-3) -> CurvatureComps:
    """Null curvature components from a finite-difference Riemann tensor (oracle path)."""
    metric, x, h, E = _fd_setup(params, r, theta, rel_step)
    Rm = fdg.riemann_lower(metric, x, h, h_first=min(h, 1e-5 * r))
    v = {k: fn(x) for k, fn in E.items()}
    A = ("1", "2")

    def R(a, b, c, d):
        return fdg.contract(Rm, v[a], v[b], v[c], v[d])

    # With eps(e1, e2, e3, e4) = 2 the dual contraction gives sigma = R(1,2,3,4)/2.
    return CurvatureComps(
        alpha=np.array([[R(a, "4", b, "4") for b in A] for a in A]),
        beta=np.array([0.5 * R(a, "4", "3", "4") for a in A]),
        rho=0.25 * R("3", "4", "3", "4"),
        sigma=0.5 * R("1", "2", "3", "4"),
        betab=np.array([0.5 * R(a, "3", "3", "4") for a in A]),
        alphab=np.array([[R(a, "3", b, "3") for b in A] for a in A]))


def verify_decay_class(samples, sig, M: float = 1.0, ceiling: float = 10.0,
                       slope_tol: float = 0.05) -> dict:
    """Sup of |value| r^q / M^p over samples, with a pass flag.

    Passing needs the normalized constant to stay below ``ceiling`` and its
    log-log trend in r to be non-increasing up to ``slope_tol``.
    """
    data = np.asarray(list(samples), dtype=float)
    if data.size == 0:
        raise ValueError("empty sample list")
    data = data.reshape(-1, 2)
    r, val = data[:, 0], data[:, 1]
    if np.any(r <= 0):
        raise ValueError("sample radii must be positive")
    if np.log10(r.max() / r.min()) < 1.0 - 1e-12:
        raise ValueError("samples must cover at least one decade in r")
    p, q = sig.m_power, float(sig.r_power)
    Mp = M**p if p else 1.0
    normalized = np.abs(val) * r**q / Mp
    const = float(np.max(normalized))
    slope = 0.0
    mask = normalized > 0
    if mask.sum() >= 2:
        slope = float(np.polyfit(np.log(r[mask]), np.log(normalized[mask]), 1)[0])
    return {"constant": const, "slope": slope,
            "pass": bool(const <= ceiling and slope <= slope_tol)}


def decay_table(params: KerrParams, r_min: float = 10.0, r_max: float = 1000.0,
                n_samples: int = 200) -> list[dict]:
    """Decay-class rows for the a = 0 background: quantity, class and constant."""
    from .decay_calculus import BigO

    _require_schwarzschild(params)
    M = params.M
    radii = np.geomspace(r_min, r_max, n_samples)
    rows = []
    quantities = {
        "trchi-2/r": (lambda r: 4 * _Om(M, r) / r - 2.0 / r, BigO(1, 2)),
        "trchib+2/r": (lambda r: -4 * _Om(M, r) / r + 2.0 / r, BigO(1, 2)),
        "omega": (lambda r: -M / (4 * _Om(M, r) * r**2), BigO(1, 2)),
        "omegab": (lambda r: M / (4 * _Om(M, r) * r**2), BigO(1, 2)),
        "Omega-1/2": (lambda r: _Om(M, r) - 0.5, BigO(1, 1)),
        "rho": (lambda r: -2.0 * M / r**3, BigO(1, 3)),
    }
    for name, (fn, sig) in quantities.items():
        samples = [(r, fn(r)) for r in radii]
        rep = verify_decay_class(samples, sig, M=M if M > 0 else 1.0)
        for r, v in samples:
            rows.append({"r": float(r), "quantity": name, "value": float(v),
                         "class_q": sig.r_power, "class_p": sig.m_power,
                         "normalized_constant": rep["constant"]})
    return rows


def _Om(M: float, r: float) -> float:
    return 0.5 * math.sqrt(1.0 - 2.0 * M / r)
