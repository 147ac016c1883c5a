"""Finite-difference differential geometry for 4-metrics given as callables.

These routines are the independent oracle path used to check closed-form
frame quantities: Christoffel symbols, covariant derivatives of frame
fields and the Riemann tensor, all from central differences with one
Richardson extrapolation step.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

MetricFn = Callable[[np.ndarray], np.ndarray]
VectorFieldFn = Callable[[np.ndarray], np.ndarray]


def _richardson(op: Callable[[float], np.ndarray], h: float) -> np.ndarray:
    """Combine a second-order difference at steps h and h/2."""
    coarse = op(h)
    fine = op(0.5 * h)
    return (4.0 * fine - coarse) / 3.0


def partial(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    """Coordinate derivatives of ``fn`` at ``x``; the derivative index is first."""
    x = np.asarray(x, dtype=float)

    def central(step: float) -> np.ndarray:
        out = []
        for mu in range(x.size):
            dx = np.zeros_like(x)
            dx[mu] = step
            out.append((np.asarray(fn(x + dx)) - np.asarray(fn(x - dx))) / (2.0 * step))
        return np.array(out)

    return _richardson(central, h)


def directional(fn: Callable[[np.ndarray], np.ndarray], x: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """Derivative of ``fn`` along the coordinate vector ``v`` at ``x``."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    scale = np.max(np.abs(v))
    if scale == 0.0:
        return np.zeros_like(np.asarray(fn(x)), dtype=float)
    w = v / scale

    def central(step: float) -> np.ndarray:
        return (np.asarray(fn(x + step * w)) - np.asarray(fn(x - step * w))) / (2.0 * step)

    return scale * _richardson(central, h)


def christoffel(metric: MetricFn, x: np.ndarray, h: float) -> np.ndarray:
    """Gamma[a, b, c] = Christoffel symbol of the second kind at ``x``."""
    g = np.asarray(metric(x))
    ginv = np.linalg.inv(g)
    dg = partial(metric, x, h)  # dg[c, a, b] = d_c g_ab
    lowered = 0.5 * (np.einsum("bdc->dbc", dg) + np.einsum("cdb->dbc", dg) - dg)
    # lowered[d, b, c] = 1/2 (d_b g_dc + d_c g_db - d_d g_bc)
    return np.einsum("ad,dbc->abc", ginv, lowered)


def covariant_derivative(metric: MetricFn, x: np.ndarray, X: np.ndarray,
                         Y: VectorFieldFn, h: float, gamma: np.ndarray | None = None) -> np.ndarray:
    """D_X Y at ``x`` for a vector field callable ``Y``."""
    gam = christoffel(metric, x, h) if gamma is None else gamma
    return directional(Y, x, X, h) + np.einsum("abc,b,c->a", gam, X, Y(x))


def second_partials(metric: MetricFn, x: np.ndarray, h: float) -> np.ndarray:
    """dd[c, d, a, b] = d_c d_d g_ab from central second differences."""
    x = np.asarray(x, dtype=float)
    n = x.size

    def central(step: float) -> np.ndarray:
        out = np.zeros((n, n) + np.shape(metric(x)))
        g0 = np.asarray(metric(x))
        for c in range(n):
            ec = np.zeros(n)
            ec[c] = step
            out[c, c] = (np.asarray(metric(x + ec)) - 2.0 * g0 + np.asarray(metric(x - ec))) / step**2
            for d in range(c + 1, n):
                ed = np.zeros(n)
                ed[d] = step
                val = (np.asarray(metric(x + ec + ed)) - np.asarray(metric(x + ec - ed))
                       - np.asarray(metric(x - ec + ed)) + np.asarray(metric(x - ec - ed))) / (4.0 * step**2)
                out[c, d] = val
                out[d, c] = val
        return out

    return _richardson(central, h)


def riemann_lower(metric: MetricFn, x: np.ndarray, h: float, h_first: float | None = None) -> np.ndarray:
    """Fully covariant Riemann tensor R_abcd at ``x``.

    Sign convention: R(X, Y, Z, W) = g(D_Z D_W Y - D_W D_Z Y - D_[Z,W] Y, X)
    evaluated on coordinate fields, so that R_abcd = g(R(e_c, e_d) e_b, e_a)
    and round spheres have positive sectional curvature R_abab > 0.
    """
    g = np.asarray(metric(x))
    dd = second_partials(metric, x, h)  # dd[c, d, a, b] = d_c d_d g_ab
    gam = christoffel(metric, x, h if h_first is None else h_first)
    t = 0.5 * (np.einsum("bcad->abcd", dd) + np.einsum("adbc->abcd", dd)
               - np.einsum("bdac->abcd", dd) - np.einsum("acbd->abcd", dd))
    quad = (np.einsum("ebc,ef,fad->abcd", gam, g, gam)
            - np.einsum("ebd,ef,fac->abcd", gam, g, gam))
    return t + quad


def contract(tensor: np.ndarray, *vectors: np.ndarray) -> float:
    """Contract every slot of a covariant tensor with the given vectors."""
    out = tensor
    for v in vectors:
        out = np.tensordot(v, out, axes=(0, 0))
    return float(out)
