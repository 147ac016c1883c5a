"""Spin-weighted spherical harmonic transforms on Gauss-Legendre grids.

Coefficient arrays have shape (L+1, 2L+1) and are indexed [l, m + L];
entries with l < max(|m|, |s|) are ignored and kept at zero.

Conventions
-----------
sY_lm(theta, phi) = (-1)^s sqrt((2l+1)/4pi) d^l_{m,-s}(theta) exp(i m phi),
which reduces to the Condon-Shortley Y_lm for s = 0. The spin-raising
operator is eth = -sin^s(theta) (d_theta + i csc(theta) d_phi) sin^-s(theta), with

    eth    sY_lm =  sqrt((l - s)(l + s + 1)) (s+1)Y_lm,
    ethbar sY_lm = -sqrt((l + s)(l - s + 1)) (s-1)Y_lm.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

MAX_SPIN = 3


def wigner_d_stack(l: int, theta: np.ndarray) -> np.ndarray:
    """Wigner small-d matrices d^l_{m'm}(theta) for every theta.

    Returned shape is (ntheta, 2l+1, 2l+1) with index [j, m'+l, m+l]. Built
    from the eigen-decomposition of J_y, so d = V exp(-i mu theta) V^H.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if l == 0:
        return np.ones((theta.size, 1, 1))
    m = np.arange(-l, l)
    jp = np.sqrt((l - m) * (l + m + 1.0))
    Jplus = np.diag(jp, -1)  # <m+1|J+|m>
    Jy = (Jplus - Jplus.T) / 2.0j
    mu, V = np.linalg.eigh(Jy)
    phase = np.exp(-1j * np.outer(theta, mu))
    d = np.einsum("ik,jk,lk->jil", V, phase, V.conj())
    return d.real


@lru_cache(maxsize=32)
def _tables(L: int, nlat: int) -> tuple[np.ndarray, np.ndarray, dict]:
    x, w = np.polynomial.legendre.leggauss(nlat)
    theta = np.arccos(x)[::-1]  # increasing colatitude
    w = w[::-1].copy()
    lam = {s: np.zeros((L + 1, 2 * L + 1, nlat)) for s in range(-MAX_SPIN, MAX_SPIN + 1)}
    for l in range(L + 1):
        d = wigner_d_stack(l, theta)
        norm = np.sqrt((2 * l + 1) / (4.0 * np.pi))
        for s in range(-min(l, MAX_SPIN), min(l, MAX_SPIN) + 1):
            sign = -1.0 if s % 2 else 1.0
            col = d[:, :, -s + l]  # d^l_{m, -s}
            lam[s][l, L - l:L + l + 1, :] = sign * norm * col.T
    for s in lam:
        lam[s].setflags(write=False)
    theta.setflags(write=False)
    w.setflags(write=False)
    return theta, w, lam


@lru_cache(maxsize=128)
def _transposed(L: int, nlat: int, s: int) -> np.ndarray:
    """Spin-s table reordered to (m, j, l) for batched matrix products."""
    if abs(s) > MAX_SPIN:
        raise ValueError(f"spin {s} beyond the tabulated range")
    out = np.ascontiguousarray(np.transpose(_tables(L, nlat)[2][s], (1, 2, 0)))
    out.setflags(write=False)
    return out


class SphereGrid:
    """Gauss-Legendre x equispaced-phi collocation grid for band limit L.

    ``nlat`` and ``nlon`` default to L+1 and 2L+1, which makes the forward
    transform exact for band-limited data. Larger values give an oversampled
    grid that still transforms band-limit-L data exactly.
    """

    def __init__(self, L: int, nlat: int | None = None, nlon: int | None = None):
        if L < 0:
            raise ValueError("band limit must be non-negative")
        self.L = int(L)
        self.nlat = int(nlat) if nlat is not None else self.L + 1
        self.nlon = int(nlon) if nlon is not None else 2 * self.L + 1
        if self.nlat < self.L + 1 or self.nlon < 2 * self.L + 1:
            raise ValueError("grid too coarse for the band limit")
        self.theta, self.weights, self._lam = _tables(self.L, self.nlat)
        self.phi = 2.0 * np.pi * np.arange(self.nlon) / self.nlon
        self.m = np.arange(-self.L, self.L + 1)
        self.l = np.arange(self.L + 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nlat, self.nlon)

    def area_weights(self, radius: float = 1.0) -> np.ndarray:
        """Quadrature weights for the area element of a radius-r round sphere."""
        return np.outer(self.weights, np.full(self.nlon, 2.0 * np.pi / self.nlon)) * radius**2

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.theta, self.phi, indexing="ij")

    def lam(self, s: int) -> np.ndarray:
        if abs(s) > MAX_SPIN:
            raise ValueError(f"spin {s} beyond the tabulated range")
        return self._lam[s]

    def _lamT(self, s: int) -> np.ndarray:
        return _transposed(self.L, self.nlat, s)

    def synthesis(self, coeffs: np.ndarray, s: int) -> np.ndarray:
        """Grid values sum_lm a_lm sY_lm; leading axes are batch axes."""
        coeffs = self._fit(coeffs)
        lamT = self._lamT(s)  # (m, j, l)
        G = np.matmul(lamT, np.swapaxes(coeffs, -1, -2)[..., None])[..., 0]  # (..., m, j)
        G = np.swapaxes(G, -1, -2)
        spec = np.zeros(G.shape[:-1] + (self.nlon,), dtype=complex)
        spec[..., self.m % self.nlon] = G
        return np.fft.ifft(spec, axis=-1) * self.nlon

    def analysis(self, values: np.ndarray, s: int) -> np.ndarray:
        """Coefficients of grid values, exact for band-limited input."""
        values = np.asarray(values)
        if values.shape[-2:] != self.shape:
            raise ValueError(f"grid values have shape {values.shape}, expected {self.shape}")
        F = np.fft.fft(values, axis=-1) * (2.0 * np.pi / self.nlon)
        G = F[..., self.m % self.nlon]
        Gw = np.swapaxes(G * self.weights[:, None], -1, -2)[..., None]  # (..., m, j, 1)
        out = np.matmul(np.swapaxes(self._lamT(s), -1, -2), Gw)[..., 0]  # (..., m, l)
        return np.swapaxes(out, -1, -2)

    def _fit(self, coeffs: np.ndarray) -> np.ndarray:
        """Zero-pad or check a coefficient array to this grid's band limit."""
        coeffs = np.asarray(coeffs, dtype=complex)
        Lc = coeffs.shape[-2] - 1
        if coeffs.shape[-1] != 2 * Lc + 1:
            raise ValueError(f"bad coefficient shape {coeffs.shape}")
        if Lc == self.L:
            return coeffs
        if Lc > self.L:
            raise ValueError(f"coefficients with band limit {Lc} exceed grid band limit {self.L}")
        out = np.zeros(coeffs.shape[:-2] + (self.L + 1, 2 * self.L + 1), dtype=complex)
        out[..., :Lc + 1, self.L - Lc:self.L + Lc + 1] = coeffs
        return out


def valid_mask(L: int, s: int) -> np.ndarray:
    """Boolean mask of (l, m) slots carrying a spin-s harmonic."""
    l = np.arange(L + 1)[:, None]
    m = np.arange(-L, L + 1)[None, :]
    return (l >= np.abs(m)) & (l >= abs(s))


def eth(coeffs: np.ndarray, s: int) -> np.ndarray:
    """Spin raising: spin s -> s+1."""
    L = coeffs.shape[-2] - 1
    l = np.arange(L + 1, dtype=float)[:, None]
    fac = np.sqrt(np.clip((l - s) * (l + s + 1), 0.0, None))
    return np.where(valid_mask(L, s + 1), coeffs * fac, 0.0)


def ethbar(coeffs: np.ndarray, s: int) -> np.ndarray:
    """Spin lowering: spin s -> s-1."""
    L = coeffs.shape[-2] - 1
    l = np.arange(L + 1, dtype=float)[:, None]
    fac = -np.sqrt(np.clip((l + s) * (l - s + 1), 0.0, None))
    return np.where(valid_mask(L, s - 1), coeffs * fac, 0.0)


def pad(coeffs: np.ndarray, L: int) -> np.ndarray:
    """Embed coefficients into a larger band limit, or truncate to a smaller one."""
    Lc = coeffs.shape[0] - 1
    out = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    k = min(L, Lc)
    out[:k + 1, L - k:L + k + 1] = coeffs[:k + 1, Lc - k:Lc + k + 1]
    return out
