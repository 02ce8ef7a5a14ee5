"""Second-order planar operators with a point singularity.

𝔻u = a11 u_xx + 2 a12 u_xy + a22 u_yy + a1 u_x + a2 u_y with coefficients
vanishing at the origin.  In polar coordinates

    𝔻u = P u_θθ + 2N u_ρθ + M u_ρρ + Q u_ρ + T u_θ,

and the invariant μ = (1/2π) lim ∮ (A − iB) dθ over shrinking circles, where
A = √(M1 − N1²) and B = N1 in the normalized ratios below.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import radial_derivative, spectral_dt
from .errors import InvalidInput, NumericFailure
from .expr import Expression, parse_expression
from .periodic import TWO_PI

__all__ = ["PlaneOperator", "PolarData", "polar_reduce", "ellipticity_bounds", "invariant_mu",
           "MuEstimate", "first_order_data", "NormalizationReport", "normalize", "plane_from_polar",
           "model_pushforward", "DegeneracyError"]


class DegeneracyError(InvalidInput):
    """The operator leaves the class with two-sided quadratic degeneracy."""


def _field(f):
    if isinstance(f, str):
        f = parse_expression(f)
    if isinstance(f, Expression):
        e = f

        def call(x, y):
            rho = np.hypot(x, y)
            th = np.arctan2(y, x)
            return e(x=x, y=y, rho=rho, r=rho, theta=th, t=th)
        return call
    if callable(f):
        return f
    value = float(f)
    return lambda x, y: np.full(np.broadcast(x, y).shape, value)


@dataclass
class PlaneOperator:
    a11: object
    a12: object
    a22: object
    a1: object = 0.0
    a2: object = 0.0

    def __post_init__(self):
        self._f = [_field(v) for v in (self.a11, self.a12, self.a22, self.a1, self.a2)]

    def coefficients(self, x, y):
        out = []
        for f in self._f:
            v = np.asarray(f(x, y))
            if np.iscomplexobj(v):
                if np.abs(v.imag).max(initial=0.0) > 1e-12 * max(1.0, np.abs(v.real).max(initial=0.0)):
                    raise InvalidInput("coefficients must be real-valued")
                v = v.real
            out.append(np.broadcast_to(v.astype(float), np.broadcast(x, y).shape))
        return tuple(out)

    def scaled(self, s: float) -> "PlaneOperator":
        f = self._f
        return PlaneOperator(*(lambda x, y, g=g: s * g(x, y) for g in f))

    def rotated(self, theta0: float) -> "PlaneOperator":
        """The operator expressed in coordinates rotated by θ₀."""
        c, s = np.cos(theta0), np.sin(theta0)
        R = np.array([[c, -s], [s, c]])

        def coeff(x, y):
            X = c * x - s * y
            Y = s * x + c * y
            a11, a12, a22, a1, a2 = self.coefficients(X, Y)
            A = np.array([[a11, a12], [a12, a22]])
            Ar = np.einsum("ji,jk...,kl->il...", R, A, R)
            b = np.einsum("ji,j...->i...", R, np.array([a1, a2]))
            return Ar[0, 0], Ar[0, 1], Ar[1, 1], b[0], b[1]

        return PlaneOperator(*(lambda x, y, k=k: coeff(x, y)[k] for k in range(5)))


@dataclass
class PolarData:
    P: np.ndarray
    N: np.ndarray
    M: np.ndarray
    Q: np.ndarray
    T: np.ndarray
    M1: np.ndarray
    N1: np.ndarray
    Q1: np.ndarray
    T1: np.ndarray

    def __iter__(self):
        return iter((self.P, self.N, self.M, self.Q, self.T, self.M1, self.N1, self.Q1, self.T1))


def polar_reduce(op: PlaneOperator, rho, theta, floor: float = 1e-12) -> PolarData:
    rho = np.asarray(rho, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if np.any(rho <= 0):
        raise InvalidInput("polar reduction needs rho > 0")
    rho, theta = np.broadcast_arrays(rho, theta)
    c, s = np.cos(theta), np.sin(theta)
    a11, a12, a22, a1, a2 = op.coefficients(rho * c, rho * s)
    q = a11 * s * s - 2 * a12 * s * c + a22 * c * c
    P = q / rho ** 2
    N = (-a11 * s * c + a12 * (c * c - s * s) + a22 * c * s) / rho
    M = a11 * c * c + 2 * a12 * s * c + a22 * s * s
    Q = q / rho + a1 * c + a2 * s
    # chain rule: the u_θ terms of u_xx, u_xy, u_yy carry a factor 2
    T = 2 * (a11 * s * c + a12 * (s * s - c * c) - a22 * s * c) / rho ** 2 + (a2 * c - a1 * s) / rho
    if np.any(P <= floor):
        raise DegeneracyError(f"P = {P.min():.3g} falls below the positivity floor")
    return PolarData(P, N, M, Q, T, M / (rho ** 2 * P), N / (rho * P), Q / (rho * P), T / P)


def ellipticity_bounds(op: PlaneOperator, annulus=(0.01, 0.1), n_rho: int = 16, n_theta: int = 128):
    """(min, max) of (a11 a22 − a12²)/(x²+y²)² over a polar sample of the annulus."""
    r0, r1 = annulus
    if not 0 < r0 < r1:
        raise InvalidInput("annulus must satisfy 0 < r0 < r1")
    rho = np.geomspace(r0, r1, n_rho)[:, None]
    th = TWO_PI * np.arange(n_theta)[None, :] / n_theta
    a11, a12, a22, _, _ = op.coefficients(rho * np.cos(th), rho * np.sin(th))
    q = (a11 * a22 - a12 ** 2) / rho ** 4
    lo, hi = float(q.min()), float(q.max())
    if lo <= 0 or np.any(a11 < -1e-14 * np.abs(a11).max()):
        raise DegeneracyError(f"discriminant ratio reaches {lo:.3g}; degenerate beyond the model class")
    return lo, hi


@dataclass
class MuEstimate:
    mu: complex
    radii: list
    sequence: list
    table: list
    ratios: list = field(default_factory=list)

    @property
    def lam(self) -> complex:
        return 1.0 / self.mu


def _circle_mean(op, rho, n_theta):
    th = TWO_PI * np.arange(n_theta) / n_theta
    d = polar_reduce(op, rho, th)
    disc = d.M1 - d.N1 ** 2
    if np.any(disc <= 0):
        raise DegeneracyError("M1 − N1² is not positive on the circle")
    return complex(np.mean(np.sqrt(disc) - 1j * d.N1))


def invariant_mu(op: PlaneOperator, rho0: float = 0.1, terms: int = 4, n_theta: int = 256,
                 tol: float = 1e-6, full: bool = False):
    """μ from circle means at ρ₀, ρ₀/2, … with Richardson extrapolation in ρ."""
    if terms < 2:
        raise InvalidInput("need at least two radii")
    radii = [rho0 / 2 ** k for k in range(terms)]
    seq = [_circle_mean(op, r, n_theta) for r in radii]
    table = [seq]
    for level in range(1, terms):
        prev = table[-1]
        f = 2.0 ** level
        table.append([(f * prev[i + 1] - prev[i]) / (f - 1) for i in range(len(prev) - 1)])
    diffs = [abs(seq[i + 1] - seq[i]) for i in range(terms - 1)]
    ratios = [diffs[i] / diffs[i + 1] for i in range(len(diffs) - 1) if diffs[i + 1] > 0]
    mu = table[-1][0]
    scale = max(1.0, abs(mu))
    spread = abs(table[-1][0] - table[-2][-1])
    if spread > tol * scale and max(diffs) > tol * scale:
        raise NumericFailure(f"μ sequence does not settle: last extrapolants differ by {spread:.1e}")
    if not mu.real > 0:
        raise NumericFailure(f"Re μ = {mu.real:.3g} is not positive")
    est = MuEstimate(mu, radii, seq, table, ratios)
    return est if full else mu


def first_order_data(op: PlaneOperator, rho, theta=None, n_theta: int = 64):
    """(g, f, B) on the grid rho × theta with X = ∂_θ − ρ g ∂_ρ.

    g = −N1 + i√(M1 − N1²) makes X X̄ reproduce the principal part of 𝔻/P,
    f = X(ρḡ)/ρ = −|g|² + X(ḡ), and 2𝔻u/P = XX̄u + X̄Xu + B Xu + B̄ X̄u.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 1 or rho.size < 5:
        raise InvalidInput("need a 1-d radial grid with at least 5 points")
    theta = TWO_PI * np.arange(n_theta) / n_theta if theta is None else np.asarray(theta, dtype=float)
    d = polar_reduce(op, rho[:, None], theta[None, :])
    disc = d.M1 - d.N1 ** 2
    if np.any(disc <= 0):
        raise DegeneracyError("M1 − N1² must be positive")
    g = -d.N1 + 1j * np.sqrt(disc)
    gb = np.conj(g)
    Xgb = spectral_dt(gb) - rho[:, None] * g * radial_derivative(rho, gb)
    f = -np.abs(g) ** 2 + Xgb
    B = -(f + np.conj(f) + 2 * d.Q1 + 2 * gb * d.T1) / (g - gb)
    return g, f, B


@dataclass
class NormalizationReport:
    mu: complex
    lam: complex
    C1_est: float
    C2_est: float
    rho: np.ndarray
    theta: np.ndarray
    polar: PolarData
    g: np.ndarray
    f: np.ndarray
    B: np.ndarray
    estimate: MuEstimate | None = None
    notes: list = field(default_factory=list)


def normalize(op: PlaneOperator, rho0: float = 0.1, n_rho: int = 16, n_theta: int = 64,
              tol: float = 1e-6) -> NormalizationReport:
    C1, C2 = ellipticity_bounds(op, (rho0 / 16, rho0))
    est = invariant_mu(op, rho0, tol=tol, full=True)
    rho = np.geomspace(rho0 / 16, rho0, n_rho)
    theta = TWO_PI * np.arange(n_theta) / n_theta
    polar = polar_reduce(op, rho[:, None], theta[None, :])
    g, f, B = first_order_data(op, rho, theta)
    disc = polar.M1 - polar.N1 ** 2
    notes = [f"min(M1 − N1²) on samples = {disc.min():.6g}",
             f"vector-field invariant conj(μ) = {np.conj(est.mu):.12g}"]
    if est.ratios:
        notes.append("Richardson ratio test: " + ", ".join(f"{r:.3g}" for r in est.ratios))
    return NormalizationReport(est.mu, 1.0 / est.mu, C1, C2, rho, theta, polar, g, f, B, est, notes)


# constructions used by tests and the CLI -------------------------------------------

def plane_from_polar(P, N, M, Q, T) -> PlaneOperator:
    """Cartesian coefficients of P u_θθ + 2N u_ρθ + M u_ρρ + Q u_ρ + T u_θ.

    Each argument is a callable of (ρ, θ).
    """
    def coeff(x, y):
        rho = np.hypot(x, y)
        th = np.arctan2(y, x)
        c, s = np.cos(th), np.sin(th)
        p, n, m, q, t = (np.asarray(F(rho, th), dtype=float) for F in (P, N, M, Q, T))
        a11 = m * c * c - 2 * n * rho * s * c + p * rho ** 2 * s * s
        a12 = m * c * s + n * rho * (c * c - s * s) - p * rho ** 2 * s * c
        a22 = m * s * s + 2 * n * rho * s * c + p * rho ** 2 * c * c
        a1 = -p * rho * c - 2 * n * s + q * c - t * rho * s
        a2 = -p * rho * s + 2 * n * c + q * s + t * rho * c
        return a11, a12, a22, a1, a2

    return PlaneOperator(*(lambda x, y, k=k: coeff(x, y)[k] for k in range(5)))


def model_pushforward(lam, beta=None) -> PlaneOperator:
    """P = LL̄ + λ̄βL + λβ̄L̄ read in the plane with ρ = r and θ = t."""
    lam = complex(lam)
    l2 = abs(lam) ** 2
    b = lam.imag
    beta = (lambda th: 0.0 * th) if beta is None else beta
    return plane_from_polar(
        lambda r, th: l2 + 0 * r,
        lambda r, th: -b * r,
        lambda r, th: r ** 2,
        lambda r, th: (1 + 2 * np.imag(np.conj(lam) * beta(th))) * r,
        lambda r, th: 2 * l2 * np.real(beta(th)) + 0 * r,
    )
