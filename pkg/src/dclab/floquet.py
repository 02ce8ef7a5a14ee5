"""Fundamental and monodromy matrices of the periodic 2x2 systems."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import OperatorSpec
from .errors import InvalidInput, NumericFailure
from .periodic import TWO_PI

D = np.diag([1.0, -1.0]).astype(complex)
J = np.array([[0, 1], [1, 0]], dtype=complex)


@dataclass
class FundamentalMatrix:
    sigma: complex
    epsilon: float
    nodes: np.ndarray
    V: np.ndarray        # (n, 2, 2)
    V_sigma: np.ndarray  # (n, 2, 2)
    adjoint: bool = False
    kappa: complex = 0j   # V holds e^{-kappa t} times the true matrix
    steps: int = 0


@dataclass
class Monodromy:
    B: np.ndarray
    B_sigma: np.ndarray
    sigma: complex
    epsilon: float


def _system(spec: OperatorSpec, sigma: complex, adjoint: bool):
    lam = spec.lam
    lb = np.conj(lam)
    nu = spec.nu
    if adjoint:
        d1 = 1j * (sigma + lam * nu) / lam
        d2 = -1j * (sigma + lb * nu) / lb
        p12, p21 = -1.0 / lam, -1.0 / lb
    else:
        d1 = 1j * (sigma - lam * nu) / lam
        d2 = -1j * (sigma - lb * nu) / lb
        p12, p21 = 1.0 / lam, 1.0 / lb
    return d1, d2, p12, p21, 1j / lam, -1j / lb


def coefficient_matrix(spec: OperatorSpec, sigma: complex, t, adjoint: bool = False) -> np.ndarray:
    d1, d2, p12, p21, _, _ = _system(spec, complex(sigma), adjoint)
    c = complex(spec.c(float(t)))
    g1, g2 = (np.conj(c), c) if adjoint else (c, np.conj(c))
    return np.array([[d1, p12 * g1], [p21 * g2, d2]], dtype=complex)


def integrate_system(spec: OperatorSpec, sigma: complex, nodes, tol: float = 1e-10,
                     adjoint: bool = False, kappa: complex = 0j, kappa1: complex = 0j,
                     with_sigma: bool = True, backend: str | None = None) -> FundamentalMatrix:
    """Integrate e^{-κt}V (and its σ-derivative, with κ = κ₀ + κ₁σ) through ``nodes``."""
    if not tol > 0:
        raise InvalidInput("tol must be positive")
    nodes = np.ascontiguousarray(nodes, dtype=float)
    if nodes[0] != 0.0 or np.any(np.diff(nodes) <= 0):
        raise InvalidInput("nodes must start at 0 and increase")
    sigma = complex(sigma)
    d1, d2, p12, p21, dd1, dd2 = _system(spec, sigma, adjoint)
    lmin, coef = spec.c_band()
    try:
        Y, steps, _ = _backend.integrate(
            d1 - kappa, d2 - kappa, p12, p21, bool(adjoint), coef, int(lmin),
            dd1 - kappa1, dd2 - kappa1, nodes, tol, tol, bool(with_sigma), backend=backend)
    except FloatingPointError as exc:
        raise NumericFailure(f"integration failed at sigma={sigma}: {exc}") from exc
    n = nodes.size
    return FundamentalMatrix(sigma, spec.epsilon, nodes, Y[:, :4].reshape(n, 2, 2),
                             Y[:, 4:].reshape(n, 2, 2), adjoint, kappa, int(steps))


def fundamental_matrix(spec: OperatorSpec, sigma: complex, tol: float = 1e-10, M: int = 65,
                       adjoint: bool = False) -> FundamentalMatrix:
    """V on [0, 2π] at the M grid points plus t = 2π, with V(0) = I."""
    nodes = np.append(TWO_PI * np.arange(M) / M, TWO_PI)
    return integrate_system(spec, sigma, nodes, tol, adjoint)


def monodromy(spec: OperatorSpec, sigma: complex, tol: float = 1e-10,
              adjoint: bool = False) -> Monodromy:
    fm = integrate_system(spec, sigma, np.array([0.0, TWO_PI]), tol, adjoint)
    return Monodromy(fm.V[-1], fm.V_sigma[-1], complex(sigma), spec.epsilon)


def liouville_det(spec: OperatorSpec, sigma: complex, t) -> np.ndarray:
    """exp(2bεσt/|λ_ε|²); the adjoint system has the same trace with σ → −μ."""
    lam = spec.lam
    return np.exp(2 * lam.imag * complex(sigma) * np.asarray(t) / abs(lam) ** 2)


def adjoint_transform(fm: FundamentalMatrix) -> FundamentalMatrix:
    """Ṽ(t, −σ̄, −ε) = D conj(V(t, σ, ε)) D."""
    if fm.adjoint:
        raise InvalidInput("expects a direct-system fundamental matrix")
    V = D @ np.conj(fm.V) @ D
    Vs = -(D @ np.conj(fm.V_sigma) @ D)
    return FundamentalMatrix(-np.conj(fm.sigma), -fm.epsilon, fm.nodes, V, Vs, True,
                             np.conj(fm.kappa), fm.steps)


def fg_residual(fm: FundamentalMatrix, fm_bar: FundamentalMatrix, lam: complex) -> np.ndarray:
    """f(σ)conj f(σ̄) − |λ|²g(σ)conj g(σ̄) − 1 with f, g read off V(σ) and V(σ̄).

    V = [[f, conj(λg(σ̄))], [λg, conj f(σ̄)]]·e^{εbσt/|λ|²}; both matrices are
    integrated independently so the identity is a genuine check.
    """
    beta = lam.imag / abs(lam) ** 2
    e = np.exp(-beta * fm.sigma * fm.nodes)
    eb = np.exp(-beta * fm_bar.sigma * fm_bar.nodes)
    f, g = fm.V[:, 0, 0] * e, fm.V[:, 1, 0] * e / lam
    fb, gb = fm_bar.V[:, 0, 0] * eb, fm_bar.V[:, 1, 0] * eb / lam
    return f * np.conj(fb) - abs(lam) ** 2 * g * np.conj(gb) - 1.0
