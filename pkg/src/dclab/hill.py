"""Fourier-Galerkin (Hill) form of the periodic systems.

A periodic solution (φ, ψ) of the direct system is an eigenvector of

    σφ_l = λ(l+ν)φ_l + i(cψ)_l,      σψ_l = −λ̄(l−ν)ψ_l − i(c̄φ)_l

and of the adjoint system

    μX_l = λ(l−ν)X_l − i(c̄Z)_l,      μZ_l = −λ̄(l+ν)Z_l + i(cX)_l.

Truncations are taken on arbitrary index ranges so a single level j can be
resolved without assembling the whole window.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig, eigh, lu_factor, lu_solve, svd

from .core import OperatorSpec
from .periodic import PeriodicFunction


def c_modes(spec: OperatorSpec, rel: float = 1e-14) -> dict:
    lmin, coef = spec.c.trimmed(rel)
    return {lmin + i: v for i, v in enumerate(coef) if v != 0}


@dataclass
class HillBasis:
    lphi: np.ndarray
    lpsi: np.ndarray

    @property
    def size(self) -> int:
        return self.lphi.size + self.lpsi.size

    def split(self, v):
        n = self.lphi.size
        return v[:n], v[n:]

    def edge_rows(self, width: int = 3) -> np.ndarray:
        n = self.lphi.size
        rows = []
        for off, size in ((0, n), (n, self.lpsi.size)):
            w = min(width, size)
            rows.extend(range(off, off + w))
            rows.extend(range(off + size - w, off + size))
        return np.unique(rows)

    def edge_mass(self, v, width: int = 3) -> float:
        """Fraction of |v|² carried by the outermost ``width`` modes at each end."""
        p, q = self.split(v)
        tot = np.vdot(v, v).real
        if tot == 0:
            return 1.0
        e = 0.0
        for part in (p, q):
            e += np.vdot(part[:width], part[:width]).real + np.vdot(part[-width:], part[-width:]).real
        return e / tot


def basis_for_level(spec: OperatorSpec, j: int, width: int, adjoint: bool = False) -> HillBasis:
    """Modes around the φ-dominant solution of index j (direct) or the
    X-dominant solution of index −j (adjoint)."""
    modes = c_modes(spec)
    mmin = min(modes) if modes else 0
    mmax = max(modes) if modes else 0
    if not adjoint:
        lphi = np.arange(j - width, j + width + 1)
        lpsi = np.arange(j - width - mmax, j + width - mmin + 1)
    else:
        # Z_l couples to X_{l-m}; X is centred at -j
        lphi = np.arange(-j - width, -j + width + 1)
        lpsi = np.arange(-j - width + mmin, -j + width + mmax + 1)
    return HillBasis(lphi, lpsi)


def symmetric_basis(spec: OperatorSpec, N: int) -> HillBasis:
    l = np.arange(-N, N + 1)
    return HillBasis(l, l.copy())


def hill_matrix(spec: OperatorSpec, basis: HillBasis, adjoint: bool = False) -> np.ndarray:
    lam, nu = spec.lam, spec.nu
    lb = np.conj(lam)
    modes = c_modes(spec)
    n1 = basis.lphi.size
    H = np.zeros((basis.size, basis.size), dtype=complex)
    lp, lq = basis.lphi, basis.lpsi
    if not adjoint:
        H[np.arange(n1), np.arange(n1)] = lam * (lp + nu)
        H[n1 + np.arange(lq.size), n1 + np.arange(lq.size)] = -lb * (lq - nu)
    else:
        H[np.arange(n1), np.arange(n1)] = lam * (lp - nu)
        H[n1 + np.arange(lq.size), n1 + np.arange(lq.size)] = -lb * (lq + nu)
    # coupling: entry (φ_l, ψ_{l-m}) and (ψ_l, φ_{l+m})
    diff = lp[:, None] - lq[None, :]   # = m for the upper block
    for m, cm in modes.items():
        up = diff == m
        if not adjoint:
            H[:n1, n1:][up] += 1j * cm
            H[n1:, :n1][up.T] += -1j * np.conj(cm)
        else:
            # X_l with Z_{l'}: (c̄Z)_l uses conj(c_{-(l-l')}); Z_l with X_{l'}: (cX)_l uses c_{l-l'}
            dn = lp[:, None] - lq[None, :]
            H[:n1, n1:][dn == -m] += -1j * np.conj(cm)
            H[n1:, :n1][(lq[:, None] - lp[None, :]) == m] += 1j * cm
    return H


def eigenpairs(spec: OperatorSpec, basis: HillBasis, adjoint: bool = False):
    H = hill_matrix(spec, basis, adjoint)
    if spec.lam.imag == 0 and not adjoint:
        w, V = eigh(H)
        return w.astype(complex), V
    w, V = eig(H)
    return w, V


def null_space(spec: OperatorSpec, basis: HillBasis, sigma: complex, adjoint: bool = False,
               dim: int = 1) -> tuple:
    """Right singular vectors of H − σI for the ``dim`` smallest singular values."""
    H = hill_matrix(spec, basis, adjoint) - complex(sigma) * np.eye(basis.size)
    if dim == 1:
        # inverse iteration: an LU costs a fraction of the SVD
        ok = True
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            lu = lu_factor(H, check_finite=False)
            g = np.random.default_rng(basis.size)
            x = g.standard_normal(basis.size) + 1j * g.standard_normal(basis.size)
            for _ in range(3):
                y = lu_solve(lu, x, check_finite=False)
                ny = np.linalg.norm(y)
                if not np.isfinite(ny) or ny == 0:
                    ok = False     # exactly singular pivot: let the SVD decide
                    break
                x = y / ny
        if ok:
            smin = float(np.linalg.norm(H @ x))
            if smin <= 1e-6 * max(1.0, float(np.abs(H).max())):
                return x[:, None], np.array([smin]), None
    _, s, Vh = svd(H)
    return np.conj(Vh[-dim:]).T, s[::-1][:dim], s


def to_functions(basis: HillBasis, v, M: int):
    """Fourier vector -> (φ, ψ) sampled on the odd grid of size M."""
    p, q = basis.split(v)
    N = M // 2
    lo = min(basis.lphi.min(), basis.lpsi.min())
    hi = max(basis.lphi.max(), basis.lpsi.max())
    if max(-lo, hi) > N:
        M = 2 * max(-lo, hi) + 1
        N = M // 2
    cp = np.zeros(M, dtype=complex)
    cq = np.zeros(M, dtype=complex)
    cp[basis.lphi + N] = p
    cq[basis.lpsi + N] = q
    return PeriodicFunction.from_coeffs(cp, M), PeriodicFunction.from_coeffs(cq, M)
