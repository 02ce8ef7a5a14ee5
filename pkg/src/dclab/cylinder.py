"""Solutions of ℒu = 0 and ℒu = F on cylinders (0, R) × S¹.

The area operator is evaluated by expanding the kernel in its defining
series.  For a family member w with adjoint partner W one has

    ∬ [Ω₁F + conj(Ω₂)F̄] dρdθ/ρ  =  Σ ± w(r,t) ∫ g(ρ) dρ/ρ,   g = ∫ Re(W F) dθ,

with the ρ-integral taken over (r, R) for the upper terms and (0, r) for the
lower ones.  Every factor (r/ρ)^σ that appears is bounded on its range, so
the radial integrals are done with exponential product integration
(cubic interpolation of the smooth part, exact exponential moments).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basic import pairing
from .core import CylinderFunction, apply_operator
from .errors import InvalidInput, NumericFailure
from .kernels import KernelContext, kernel_decomposed, kernel_omega
from .periodic import TWO_PI

__all__ = ["LaurentExpansion", "SolveReport", "laurent_coefficients", "laurent_evaluate",
           "laurent_synthesize", "BoundaryCurve", "circle_curve", "cauchy_integral",
           "solve_T", "semilinear_solve", "patch_check", "PatchResult", "norm_pa",
           "RadialQuadrature"]


# Laurent series --------------------------------------------------------------

@dataclass
class LaurentExpansion:
    coefficients: dict          # (j, branch) -> real coefficient
    ctx: KernelContext = field(repr=False)
    R0: float
    J: int
    drift: float = 0.0          # max change of the coefficients at a second radius

    def __getitem__(self, key):
        return self.coefficients.get(key, 0.0)

    def bound_constant(self, u_max: float) -> float:
        """Smallest C with |a_j| ≤ C R₀^{−Re σ_j} max|u|."""
        C = 0.0
        for term in _terms(self.ctx, self.J):
            a = abs(self.coefficients.get((term.j, term.branch), 0.0))
            C = max(C, a * self.R0 ** term.sigma.real / max(u_max, 1e-300))
        return C


def _terms(ctx: KernelContext, J: int | None = None):
    J = ctx.J if J is None else J
    if J > ctx.J:
        raise InvalidInput(f"J = {J} exceeds the kernel window {ctx.J}")
    return [t for t in ctx.terms if abs(t.j) <= J]


def _row(u: CylinderFunction, R0: float) -> int:
    return int(np.argmin(np.abs(u.radii - R0)))


def _coefficients_at(ctx, u, i, J):
    R0 = float(u.radii[i])
    return {(t.j, t.branch): pairing(t.adjoint, u.values[i], R0) for t in _terms(ctx, J)}


def laurent_coefficients(ctx: KernelContext, u: CylinderFunction, R0: float | None = None,
                         J: int | None = None, R1: float | None = None,
                         tol: float = 1e-8) -> LaurentExpansion:
    """a_j^± = −(1/2π) Re ∫ W(R₀,θ) u(R₀,θ) i dθ, checked at a second radius R₁."""
    J = ctx.J if J is None else int(J)
    i0 = _row(u, R0) if R0 is not None else u.radii.size // 2
    coeffs = _coefficients_at(ctx, u, i0, J)
    drift = 0.0
    if u.radii.size > 1:
        i1 = _row(u, R1) if R1 is not None else (i0 + u.radii.size // 4 + 1) % u.radii.size
        if i1 != i0:
            other = _coefficients_at(ctx, u, i1, J)
            scale = max(1.0, max(abs(v) for v in coeffs.values()))
            # roundoff in u is amplified by R^{−Re σ} in each pairing
            umax = float(np.abs(u.values[[i0, i1]]).max())
            r0, r1 = u.radii[i0], u.radii[i1]
            drift = 0.0
            for term in _terms(ctx, J):
                k = (term.j, term.branch)
                noise = 1e-13 * umax * max(r0 ** -term.sigma.real, r1 ** -term.sigma.real)
                drift = max(drift, max(0.0, abs(coeffs[k] - other[k]) - noise) / scale)
            if drift > tol:
                warnings.warn(f"Laurent coefficients depend on the radius (drift {drift:.2e}); "
                              "u may not solve the homogeneous equation", RuntimeWarning,
                              stacklevel=2)
    return LaurentExpansion(coeffs, ctx, float(u.radii[i0]), J, drift)


def laurent_evaluate(expansion: LaurentExpansion, r, t, bounded: bool = False,
                     tol: float = 0.0) -> np.ndarray:
    """Σ a_j^± w_j^±(r,t); ``bounded`` keeps only Re σ ≥ 0."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.zeros(np.broadcast(r, t).shape, dtype=complex)
    for term in _terms(expansion.ctx, expansion.J):
        a = expansion.coefficients.get((term.j, term.branch), 0.0)
        if abs(a) <= tol:
            continue
        if bounded and term.sigma.real < 0:
            continue
        if np.any(r == 0) and term.sigma.real < 0:
            raise InvalidInput(f"term ({term.j}, {term.branch}) has a pole at r = 0")
        out = out + a * term.direct(r, t)
    return out


def laurent_synthesize(ctx: KernelContext, coefficients: dict, radii, M: int) -> CylinderFunction:
    """Σ a w sampled on radii × M angles."""
    exp = LaurentExpansion(dict(coefficients), ctx, 1.0, ctx.J)
    radii = np.asarray(radii, dtype=float)
    t = TWO_PI * np.arange(M) / M
    R, T = np.meshgrid(radii, t, indexing="ij")
    return CylinderFunction(radii, laurent_evaluate(exp, R, T))


# Cauchy integral -------------------------------------------------------------

@dataclass
class BoundaryCurve:
    """Closed curve (ρ(s), θ(s)), s = 2πk/n, oriented with the domain on its left in ζ."""

    rho: np.ndarray
    theta: np.ndarray
    u: np.ndarray
    drho: np.ndarray
    dtheta: np.ndarray

    @property
    def n(self) -> int:
        return self.rho.size


def circle_curve(R: float, u, n: int = 512, orientation: int = 1) -> BoundaryCurve:
    """Circle ρ = R, counterclockwise (+1) or clockwise (−1); ``u`` samples or a callable u(ρ,θ)."""
    s = TWO_PI * np.arange(n) / n
    theta = s if orientation > 0 else (-s) % TWO_PI
    rho = np.full(n, float(R))
    vals = u(rho, theta) if callable(u) else np.asarray(u, dtype=complex)
    if vals.shape != (n,):
        raise InvalidInput("boundary samples must match the node count")
    return BoundaryCurve(rho, theta, np.asarray(vals, dtype=complex), np.zeros(n),
                         np.full(n, float(np.sign(orientation))))


def cauchy_integral(ctx: KernelContext, curves, r, t) -> np.ndarray:
    """u(z) = −(1/2π) ∮ Ω₁ u dζ/ζ + conj(Ω₂) ū dζ̄/ζ̄ over ∂₀U."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    t = np.broadcast_to(np.asarray(t, dtype=float), r.shape)
    lam = ctx.spec.lam
    out = np.zeros(r.shape, dtype=complex)
    for k in np.ndindex(r.shape):
        acc = 0j
        for c in curves:
            if r[k] > 0:
                sep = np.min(np.hypot(np.log(r[k] / c.rho),
                                      np.angle(np.exp(1j * (t[k] - c.theta)))))
                if sep < 4 * TWO_PI / c.n:
                    warnings.warn("target lies within the boundary band; accuracy degraded",
                                  RuntimeWarning, stacklevel=2)
                kv = kernel_decomposed(ctx, r[k], t[k], c.rho, c.theta)
            else:
                kv = kernel_omega(ctx, r[k], t[k], c.rho, c.theta, warn_tol=np.inf)
            dz = lam * c.drho / c.rho + 1j * c.dtheta
            w = c.u * dz
            acc += np.mean(kv.omega1 * w + np.conj(kv.omega2 * w)) * TWO_PI
        out[k] = -acc / TWO_PI
    return out


# radial exponential integration ----------------------------------------------

def _moments(z: complex, n: int = 4) -> np.ndarray:
    """m_k(z) = ∫₀¹ e^{−zu} u^k du for k < n."""
    m = np.empty(n, dtype=complex)
    if abs(z) < 1.0:
        terms = np.arange(30)
        pw = (-z) ** terms / np.array([math.factorial(int(q)) for q in terms], dtype=float)
        for k in range(n):
            m[k] = np.sum(pw / (terms + k + 1))
        return m
    ez = np.exp(-z)
    m[0] = (1 - ez) / z
    for k in range(1, n):
        m[k] = (k * m[k - 1] - ez) / z
    return m


class RadialQuadrature:
    """∫ e^{σ(s_i − s)} h(s) ds over [s_i, s_end] or [s_0, s_i] on a uniform grid in s."""

    def __init__(self, s: np.ndarray):
        s = np.asarray(s, dtype=float)
        if s.size < 4:
            raise InvalidInput("need at least 4 radial nodes")
        d = np.diff(s)
        if np.max(np.abs(d - d.mean())) > 1e-8 * abs(d.mean()):
            raise InvalidInput("radial grid must be uniform in log r")
        self.s = s
        self.h = float(d.mean())
        P = s.size
        # interval i interpolates on nodes start_i .. start_i+3
        self.start = np.clip(np.arange(P - 1) - 1, 0, P - 4)
        self._inv = {}
        for st in np.unique(self.start - np.arange(P - 1)):
            off = st + np.arange(4)
            self._inv[int(st)] = np.linalg.inv(np.vander(off.astype(float), 4, increasing=True))

    def _poly(self, h: np.ndarray) -> np.ndarray:
        P = self.s.size
        c = np.empty((P - 1, 4), dtype=complex)
        for i in range(P - 1):
            st = self.start[i]
            c[i] = self._inv[int(st - i)] @ h[st:st + 4]
        return c

    def upper(self, sigma: complex, h: np.ndarray) -> np.ndarray:
        c = self._poly(h)
        z = sigma * self.h
        seg = self.h * (c @ _moments(z))
        decay = np.exp(-z)
        out = np.zeros(self.s.size, dtype=complex)
        for i in range(self.s.size - 2, -1, -1):
            out[i] = seg[i] + decay * out[i + 1]
        return out

    def lower(self, sigma: complex, h: np.ndarray) -> np.ndarray:
        rev = RadialQuadrature.__new__(RadialQuadrature)
        rev.s, rev.h, rev.start, rev._inv = self.s, self.h, self.start, self._inv
        return rev.upper(-sigma, h[::-1])[::-1]


# the operator T ----------------------------------------------------------------

@dataclass
class SolveReport:
    solution: CylinderFunction
    residual: float
    iterations: int
    bound_check: float
    flagged: bool = False
    extra: dict = field(default_factory=dict)


def norm_pa(F: CylinderFunction, a: float, p: float) -> float:
    """(∬ |F/r^a|^p r^{2a−1} dr dt)^{1/p} on the log grid."""
    s = np.log(F.radii)
    dens = (np.abs(F.values) ** p).mean(axis=1) * TWO_PI * F.radii ** (2 * a - a * p)
    return float(np.trapezoid(dens, s) ** (1 / p)) if hasattr(np, "trapezoid") else \
        float(np.trapz(dens, s) ** (1 / p))


def _default_p(nu: float) -> float:
    return max(2 / (1 - nu) + 1, 3.0)


def _check_integrable(F: CylinderFunction, a: float, p: float):
    dens = (np.abs(F.values) ** p).mean(axis=1) * F.radii ** (2 * a - a * p)
    peak = dens.max()
    if peak == 0:
        return
    if dens[0] > 1e-3 * peak and dens[0] > dens[1] > dens[2]:
        raise InvalidInput("F/r^a does not look p-integrable near r = 0 on this grid")


def _select(ctx: KernelContext, mode: str, j0, branch, tol=1e-9):
    """(threshold on Re σ, predicate for terms forced to the lower side)."""
    if mode == "plain":
        return 0.0, lambda term: False
    if mode == "hat":
        return 0.0, lambda term: abs(term.sigma.real) < tol
    if mode == "modified":
        if j0 is None:
            raise InvalidInput("modified mode needs j0")
        return ctx.spectral_value(int(j0), branch).real, lambda term: False
    raise InvalidInput(f"unknown T mode {mode!r}")


def _apply_T(ctx, F: CylinderFunction, mode="plain", j0=None, branch="+", tol=1e-9):
    threshold, flip = _select(ctx, mode, j0, branch, tol)
    quad = RadialQuadrature(np.log(F.radii))
    s = quad.s
    t = F.t
    M = F.M
    acc = np.zeros(F.values.shape, dtype=complex)
    tf0 = np.zeros(M, dtype=complex)
    top = 0.0
    total = 0.0
    for term in ctx.terms:
        X = term.X(t)
        Zc = np.conj(term.Z(t))
        A = F.values @ X * (TWO_PI / M)
        Bz = F.values @ Zc * (TWO_PI / M)
        h1 = 0.5 * (A + np.conj(Bz))
        size = float(np.abs(h1).max())
        total = max(total, size)
        if abs(term.j) == ctx.J:
            top = max(top, size)
        if size == 0.0:
            continue
        sig = term.sigma
        upper = sig.real >= threshold - 1e-10 and not flip(term)
        U1 = quad.upper(sig, h1) if upper else quad.lower(sig, h1)
        G = U1 + np.exp(2j * sig.imag * s) * np.conj(U1)
        sign = 1.0 if upper else -1.0
        phi, psi = term.phi(t), term.psi(t)
        acc += sign * (np.outer(G, phi) + np.outer(np.conj(G), np.conj(psi)))
        if upper and sig.real <= 1e-10:
            if abs(sig) > 1e-10:
                tf0[:] = np.nan
            else:
                full = quad.upper(0.0, h1)[0]
                tf0 += (phi + np.conj(psi)) * 2 * full.real
    return -acc / TWO_PI, -tf0 / TWO_PI, top / total if total else 0.0


def solve_T(ctx: KernelContext, F: CylinderFunction, R: float | None = None, mode: str = "plain",
            j0: int | None = None, branch: str = "+", tol: float = 1e-4,
            p: float | None = None) -> SolveReport:
    """TF on the grid of F; F is extended by 0 outside (r_min, R)."""
    spec = ctx.spec
    if R is not None and R < F.radii[-1] * (1 - 1e-12):
        keep = F.radii <= R * (1 + 1e-12)
        F = CylinderFunction(F.radii[keep], F.values[keep])
    p = _default_p(spec.nu) if p is None else p
    _check_integrable(F, spec.a, p)
    if not np.any(F.values):
        zero = F.like(np.zeros_like(F.values))
        return SolveReport(zero, 0.0, 1, 0.0, extra={"tf0": np.zeros(F.M), "tail": 0.0})
    TF, tf0, tail = _apply_T(ctx, F, mode, j0, branch)
    sol = F.like(TF)
    sol.boundary = tf0
    res = _interior_residual(spec, sol, F.values)
    norm = norm_pa(F, spec.a, p)
    bound = float(np.abs(TF).max() / norm) if norm > 0 else 0.0
    flagged = bool(res > tol)
    if tail > 1e-8:
        warnings.warn(f"T truncation: top-level terms carry a fraction {tail:.1e} of the data",
                      RuntimeWarning, stacklevel=2)
    return SolveReport(sol, res, 1, bound, flagged,
                       {"tf0": tf0, "tail": tail, "norm_pa": norm, "p": p, "mode": mode})


def _interior_residual(spec, u: CylinderFunction, rhs: np.ndarray, skip: int = 2) -> float:
    r = apply_operator(spec, u).values - rhs
    if r.shape[0] <= 2 * skip:
        return float(np.abs(r).max())
    return float(np.abs(r[skip:-skip]).max())


# semilinear equation -----------------------------------------------------------

def semilinear_solve(ctx: KernelContext, G, tau: float, u0: CylinderFunction, R: float | None = None,
                     mode: str = "plain", j0: int | None = None, branch: str = "+",
                     tol: float = 1e-10, maxit: int = 30, res_tol: float = 1e-4) -> SolveReport:
    """Picard iteration v ← u0 + T(r^τ |v| G(v, r, t)) on the grid of u0."""
    spec = ctx.spec
    if tau <= spec.a * spec.nu:
        raise InvalidInput("need tau > a*nu")
    if R is not None and R < u0.radii[-1] * (1 - 1e-12):
        keep = u0.radii <= R * (1 + 1e-12)
        u0 = CylinderFunction(u0.radii[keep], u0.values[keep])
    r = u0.radii[:, None]
    t = u0.t[None, :]
    weight = r ** tau

    def rhs(v):
        return weight * np.abs(v) * np.asarray(G(v, r, t), dtype=complex)

    v = u0.values.copy()
    changes = []
    it = 0
    for it in range(1, maxit + 1):
        F = u0.like(rhs(v))
        TF = _apply_T(ctx, F, mode, j0, branch)[0] if np.any(F.values) else 0 * v
        new = u0.values + TF
        change = float(np.abs(new - v).max())
        v = new
        changes.append(change)
        if change < tol * max(1.0, float(np.abs(v).max())):
            break
        if len(changes) >= 4 and all(changes[-k] >= changes[-k - 1] for k in (1, 2, 3)):
            raise NumericFailure(f"Picard iteration does not contract at R = {u0.radii[-1]:.3g}; "
                                 "try a smaller R")
    else:
        raise NumericFailure(f"no convergence in {maxit} Picard iterations; try a smaller R")
    sol = u0.like(v)
    res = _interior_residual(spec, sol, rhs(v))
    extra = {"changes": changes}
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.abs(v / u0.values)
    if np.all(np.isfinite(ratio)):
        extra["ratio_min"] = float(ratio.min())
        extra["ratio_max"] = float(ratio.max())
    return SolveReport(sol, res, it, float(np.abs(v).max()), bool(res > res_tol), extra)


# patching across S₀ ----------------------------------------------------------------

@dataclass
class PatchResult:
    ok: bool
    tag: str
    gaps: dict = field(default_factory=dict)

    def __bool__(self):
        return self.ok


def patch_check(ctx: KernelContext, u_minus: CylinderFunction, u_plus: CylinderFunction,
                delta: float, tol: float = 1e-8) -> PatchResult:
    """Compare the exponent-0 pairings of the two sides at |r| = δ.

    ``u_minus`` holds u(−r, θ) sampled on positive radii.
    """
    imag = [t for t in ctx.terms if abs(t.sigma.real) < 1e-9]
    zero = [t for t in imag if abs(t.sigma) < 1e-9]
    if not zero:
        if any(abs(t.sigma.imag) > 1e-9 for t in imag):
            raise InvalidInput("imaginary nonzero spectral values: the patch criterion does not apply")
        return PatchResult(True, "item 1")
    gaps = {}
    for term in zero:
        W = term.adjoint
        a_plus = pairing(W, u_plus.values[_row(u_plus, delta)], float(delta))
        a_minus = pairing(W, u_minus.values[_row(u_minus, delta)], float(delta))
        gaps[(term.j, term.branch)] = a_plus - a_minus
    ok = all(abs(g) <= tol for g in gaps.values())
    return PatchResult(ok, "item 2", gaps)
