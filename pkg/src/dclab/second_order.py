"""The real second-order operator P = LL̄ + λ̄βL + λβ̄L̄ and its reduction to ℒ.

A real solution u of Pu = F has the L-potential w = B·L̄u, with
B = exp∫₀ᵗβ̄, which solves ℒw = Lw − c w̄ = BF for c = −λ̄βB/B̄.  Going
back, u = Re∫ w/B · dζ/(iaζ) with dζ/ζ = λ dρ/ρ + i dθ.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basic import basic_family
from .core import CylinderFunction, OperatorSpec, apply_operator, radial_derivative, spectral_dt
from .cylinder import RadialQuadrature, SolveReport, _apply_T, _check_integrable, _default_p, norm_pa
from .errors import InvalidInput, NumericFailure
from .kernels import KernelContext, kernel_context
from .periodic import TWO_PI, PeriodicFunction, winding_number
from .spectrum import SpectralValue, SpectrumWindow, default_J0, find_spectral_values

__all__ = ["SecondOrderSpec", "build_P", "apply_P", "l_potential", "reconstruct_u", "q_function",
           "q_functions", "p_series", "RadialSolution", "radial_solutions", "HypothesisReport",
           "hypothesis_H_check", "solve_K", "p_semilinear_solve", "HData"]


@dataclass
class SecondOrderSpec:
    lam: complex
    beta: PeriodicFunction
    k: int
    B: PeriodicFunction
    c: PeriodicFunction
    op: OperatorSpec
    lb_residual: float = 0.0

    @property
    def a(self) -> float:
        return self.lam.real

    @property
    def b(self) -> float:
        return self.lam.imag


def build_P(lam, beta, M: int | None = None, tol: float = 1e-10) -> SecondOrderSpec:
    """Derive k, B, c and the first-order operator ℒ attached to P."""
    lam = complex(lam)
    if not lam.real > 0:
        raise InvalidInput("need Re λ > 0")
    if not isinstance(beta, PeriodicFunction):
        beta = PeriodicFunction.constant(beta, 33) if np.isscalar(beta) else PeriodicFunction(beta)
    kf = beta.mean() / 1j          # (1/2πi)∫β
    k = int(round(kf.real))
    if abs(kf - k) > tol:
        raise InvalidInput(f"(1/2πi)∫β = {kf:.6g} is not an integer")
    if M is None:
        M = max(257, 8 * beta.bandwidth() + 1)
    beta = beta.resample(M)
    t = TWO_PI * np.arange(M) / M
    bb = beta.conj()
    B = PeriodicFunction(np.exp(np.conj(beta.mean()) * t + bb.antiderivative().samples))
    c = -lam.conjugate() * beta * B / B.conj()
    # LB = λβ̄B and, equivalently, LB = −c̄B²/B̄
    LB = lam * B.derivative().samples
    scale = max(1.0, float(np.abs(LB).max()))
    res = max(float(np.abs(LB - lam * bb.samples * B.samples).max()),
              float(np.abs(LB + np.conj(c.samples) * B.samples ** 2 / np.conj(B.samples)).max())) / scale
    if res > 1e-8:
        raise NumericFailure(f"LB identity residual {res:.1e}; increase M")
    if k and winding_number(B) != -k:
        raise NumericFailure("Ind B does not equal −k")
    op = OperatorSpec(lam.real, lam.imag, 0.0, 1.0, c)
    return SecondOrderSpec(lam, beta, k, B, c, op, res)


# discrete operators ---------------------------------------------------------------

def _s_derivs(u: CylinderFunction):
    s = np.log(u.radii)
    us = radial_derivative(s, u.values, 1)
    uss = radial_derivative(s, u.values, 2)
    return us, uss


def apply_P(p: SecondOrderSpec, u: CylinderFunction) -> CylinderFunction:
    """Pu with r∂_r = ∂_s on the log grid; spectral in t."""
    lam = p.lam
    beta = p.beta(u.t)[None, :]
    us, uss = _s_derivs(u)
    ut = u.d_t()
    utt = spectral_dt(ut)
    ust = spectral_dt(us)
    l2 = abs(lam) ** 2
    out = (l2 * utt - 2 * p.b * ust + uss + 2 * l2 * beta.real * ut
           + 2 * np.imag(lam.conjugate() * beta) * us)
    return u.like(out)


def _L(p, u: CylinderFunction, bar: bool = False) -> np.ndarray:
    s = np.log(u.radii)
    us = radial_derivative(s, u.values, 1)
    if bar:
        return p.lam.conjugate() * u.d_t() + 1j * us
    return p.lam * u.d_t() - 1j * us


def l_potential(p: SecondOrderSpec, u: CylinderFunction) -> CylinderFunction:
    """w = B(t)·L̄u."""
    if u.radii.size < 5:
        raise InvalidInput("need at least 5 radii for the difference stencil")
    if np.abs(u.values.imag).max() > 1e-10 * max(1.0, float(np.abs(u.values).max())):
        raise InvalidInput("u must be real-valued")
    return u.like(p.B(u.t)[None, :] * _L(p, u, bar=True))


def _t_primitive(g: np.ndarray, t0_index: int) -> np.ndarray:
    """∫_{t0}^{t} g along the last axis, g periodic with a possibly nonzero mean."""
    M = g.shape[-1]
    t = TWO_PI * np.arange(M) / M
    c = np.fft.fft(g, axis=-1) / M
    l = np.fft.fftfreq(M, 1.0 / M)
    mean = c[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        cc = np.where(l != 0, c / (1j * l), 0)
    prim = np.fft.ifft(cc * M, axis=-1) + mean[..., None] * t
    return prim - prim[..., t0_index:t0_index + 1]


def _s_primitive(quad: RadialQuadrature, h: np.ndarray, i0: int) -> np.ndarray:
    """∫_{s_{i0}}^{s} h ds along axis 0, column by column."""
    out = np.empty_like(h, dtype=complex)
    for m in range(h.shape[1]):
        col = quad.lower(0.0, h[:, m])
        out[:, m] = col - col[i0]
    return out


def reconstruct_u(p: SecondOrderSpec, w: CylinderFunction, basepoint=None, tol: float = 1e-6) -> CylinderFunction:
    """u = Re∫ w/B dζ/(iaζ) from the base point, t-segment first then r-segment.

    The other path order is computed as well; a gap between the two is a
    closed-loop integral and means w is not a potential.
    """
    quad = RadialQuadrature(np.log(w.radii))
    if basepoint is None:
        basepoint = (w.radii[0], 0.0)
    r0, t0 = basepoint
    i0 = int(np.argmin(np.abs(np.log(w.radii / r0))))
    m0 = int(round(t0 / TWO_PI * w.M)) % w.M
    a, lam = p.a, p.lam
    g = w.values / p.B(w.t)[None, :]
    gt = g / a                              # dζ/(iaζ) along t: dθ/a
    gr = lam * g / (1j * a)                 # along r: λ/(ia) ds
    # t then r
    ut = _t_primitive(gt[i0], m0)
    u1 = ut[None, :] + _s_primitive(quad, gr, i0)
    # r then t
    ur = _s_primitive(quad, gr[:, m0:m0 + 1], i0)
    u2 = ur + _t_primitive(gt, m0)
    scale = max(1e-300, float(np.abs(u1.real).max()), float(np.abs(w.values).max()))
    gap = float(np.abs((u1 - u2).real).max()) / scale
    loop = float(np.abs(np.mean(gt.real, axis=1)).max()) * TWO_PI / scale
    if max(gap, loop) > tol:
        raise NumericFailure(f"closed-loop integral {max(gap, loop):.1e}: w is not an L-potential")
    u = w.like(u1.real)
    return u


# q functions and series -----------------------------------------------------------

def q_function(p: SecondOrderSpec, w) -> PeriodicFunction:
    """q with Re[r^σ q] = Re∫₀¹ λw(sr,t)/(iaB) ds/s for the basic solution w."""
    sig = complex(w.sigma)
    if abs(sig) < 1e-12:
        raise InvalidInput("q is undefined at σ = 0; the constant term belongs to u₀")
    M = max(w.phi.M, w.psi.M, p.B.M)
    B = p.B.resample(M)
    phi, psi = w.phi.resample(M), w.psi.resample(M)
    a, lam = p.a, p.lam
    if w.kind != "complex" and abs(sig.imag) < 1e-12:
        return lam / (1j * a * sig.real) * (phi + psi.conj()) / B
    return (lam * phi / B - lam.conjugate() * psi / B.conj()) * (1.0 / (1j * a * sig))


def q_functions(p: SecondOrderSpec, sv: SpectralValue, branch: str | None = None):
    """q for each family member of sv, or for the named branch."""
    fam = basic_family(p.op, sv)
    out = {w.branch: q_function(p, w) for w in fam}
    if branch is None:
        return out
    if branch not in out:
        if len(out) == 1:
            return next(iter(out.values()))
        raise InvalidInput(f"unknown branch {branch!r}")
    return out[branch]


def _window_for(p, js, window):
    if window is not None:
        return window
    lo, hi = min(js), max(js)
    return find_spectral_values(p.op, lo, hi)


def p_series(p: SecondOrderSpec, u0: float, coefficients: dict, r, t,
             window: SpectrumWindow | None = None) -> np.ndarray:
    """u₀ + Σ u_j Re[r^σ q_j(t)], keys (j, branch)."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.full(np.broadcast(r, t).shape, float(u0))
    if not coefficients:
        return out
    window = _window_for(p, [j for j, _ in coefficients], window)
    for (j, branch), coef in coefficients.items():
        sv = window.find(int(j), branch)
        if sv.sigma.real <= 0:
            raise InvalidInput(f"coefficient at nonpositive order σ = {sv.sigma:.6g}")
        q = q_functions(p, sv, branch)
        with np.errstate(divide="ignore"):
            rs = np.where(r > 0, np.exp(sv.sigma * np.log(np.where(r > 0, r, 1.0))), 0.0)
        out = out + float(coef) * np.real(rs * q(t))
    return out


# radial solutions ------------------------------------------------------------------

@dataclass
class RadialSolution:
    k: int
    kind: str                      # "log" or "power"
    p: PeriodicFunction

    def u(self, r, C1: float = 1.0, C2: float = 0.0):
        r = np.asarray(r, dtype=float)
        if self.kind == "log":
            return C1 * np.log(r) + C2
        return C1 * r ** (2 * self._a * self.k) + C2

    _a: float = 1.0


def radial_solutions(p, beta=None, tol: float = 1e-9):
    """Closed form when β = (λ/a)p(t) − ik with p real of zero mean, else None.

    Accepts a SecondOrderSpec or the pair (λ, β).  Here k is the integer of
    that form, which is minus the index integer (1/2πi)∫β stored in p.k.
    """
    if isinstance(p, SecondOrderSpec):
        lam, beta = p.lam, p.beta
    else:
        lam = complex(p)
        if not isinstance(beta, PeriodicFunction):
            beta = PeriodicFunction.constant(beta, 33)
    a, b = lam.real, lam.imag
    beta = beta.samples
    pr = beta.real
    q = beta.imag - b / a * pr              # must equal −k
    kk = -float(np.mean(q))
    k = int(round(kk))
    scale = max(1.0, float(np.abs(beta).max()))
    if np.abs(q - q.mean()).max() > tol * scale or abs(kk - k) > tol * scale:
        return None
    if abs(pr.mean()) > tol * scale:
        return None
    return RadialSolution(k, "log" if k == 0 else "power", PeriodicFunction(pr), a)


# hypothesis 𝓗 -------------------------------------------------------------------

@dataclass
class HypothesisReport:
    verdict: str                   # "satisfied-on-window", "violated", "indeterminate"
    witness: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.verdict == "satisfied-on-window"


def hypothesis_H_check(p: SecondOrderSpec, window: SpectrumWindow | None = None, J: int | None = None,
                       tol: float = 1e-8) -> HypothesisReport:
    """𝓗₁ (every positive order has index j > −k) and 𝓗₂ (Re σ determines σ).

    𝓗₁ is checked in the form the maximum-principle argument uses.  Beyond
    the window the asymptotic law Re σ_j ≈ a j, with twice the γ/j
    correction as margin, decides both parts.
    """
    spec = p.op
    J0 = default_J0(spec)
    if window is None:
        J = max(J0, abs(p.k) + 2, 4) if J is None else J
        window = find_spectral_values(spec, -J, J)
    notes = []
    if window.gaps:
        return HypothesisReport("indeterminate", {"gaps": list(window.gaps)}, ["incomplete window"])
    J = min(-window.j_min, window.j_max)
    a, gam = spec.a, spec.gamma
    if J < max(J0, abs(p.k) + 1):
        return HypothesisReport("indeterminate", {"J": J, "J0": J0},
                                [f"window |j| <= {J} does not reach the asymptotic regime"])
    vals = window.distinct()
    scale = max(1.0, max(abs(v.sigma) for v in vals))
    for v in vals:
        if v.sigma.real > tol * scale and v.j <= -p.k:
            return HypothesisReport("violated", {"part": "H1", "sigma": complex(v.sigma), "j": v.j,
                                                 "k": p.k})
    uniq = []
    for v in vals:
        if all(abs(v.sigma - w.sigma) > tol * scale for w in uniq):
            uniq.append(v)
    for i, v in enumerate(uniq):
        for w in uniq[i + 1:]:
            if abs(v.sigma.real - w.sigma.real) <= tol * scale:
                return HypothesisReport("violated", {"part": "H2", "pair": (complex(v.sigma), complex(w.sigma)),
                                                     "j": (v.j, w.j)})
    # tail certificate
    margin = a * (J + 1) - 2 * gam / (J + 1)
    top = max(abs(v.sigma.real) for v in vals)
    if margin <= 0 or top >= margin:
        return HypothesisReport("indeterminate", {"J": J}, ["tail real parts may meet the window"])
    if a - 4 * gam / (J + 1) ** 2 <= 0:
        return HypothesisReport("indeterminate", {"J": J}, ["tail levels not separated"])
    notes.append(f"tail beyond |j| = {J} certified with margin {margin - top:.3g}")
    return HypothesisReport("satisfied-on-window", {}, notes)


# the operators 𝕂 -------------------------------------------------------------------

def _context(p: SecondOrderSpec, ctx):
    if ctx is None:
        return kernel_context(p.op, J=32)
    if ctx.spec is not p.op and ctx.spec != p.op:
        raise InvalidInput("kernel context does not belong to this operator")
    return ctx


def _K_apply(p, ctx, F: CylinderFunction, mode, j0, branch):
    Bt = p.B(F.t)[None, :]
    BF = F.like(Bt * F.values)
    Tm = "hat" if mode == "hat" else "modified"
    TW, _, tail = _apply_T(ctx, BF, Tm, j0, branch)
    V = TW / Bt
    quad = RadialQuadrature(np.log(F.radii))
    prim = _s_primitive(quad, V, 0)
    # ∫ from s = −∞ to s₀ by the local power law of |V|
    head = np.abs(V[:2]).max(axis=1)
    endpoint = 0.0
    if head[0] > 1e-14 * max(1e-300, float(np.abs(V).max())):
        kappa = math.log(head[1] / head[0]) / quad.h if head[1] > 0 else 0.0
        if kappa <= 0:
            raise NumericFailure("T̂(BF) does not vanish toward r = 0; endpoint of the s-integral fails")
        endpoint = V[0] / kappa
    total = prim + endpoint
    K = np.real(p.lam / (1j * p.a) * total)
    return K, TW, float(np.abs(endpoint).max()) if np.ndim(endpoint) else 0.0, tail


def solve_K(p: SecondOrderSpec, F: CylinderFunction, R: float | None = None, mode: str = "hat",
            j0: int | None = None, branch: str = "+", ctx: KernelContext | None = None,
            tol: float = 1e-3, p_exp: float | None = None) -> SolveReport:
    """𝕂F (mode "hat") or 𝕂_j (mode "modified", index j0) on the grid of F."""
    if np.abs(F.values.imag).max() > 1e-10 * max(1.0, float(np.abs(F.values).max())):
        raise InvalidInput("F must be real")
    if mode not in ("hat", "modified"):
        raise InvalidInput(f"unknown K mode {mode!r}")
    if R is not None and R < F.radii[-1] * (1 - 1e-12):
        keep = F.radii <= R * (1 + 1e-12)
        F = CylinderFunction(F.radii[keep], F.values[keep])
    ctx = _context(p, ctx)
    p_exp = _default_p(0.0) if p_exp is None else p_exp
    _check_integrable(F, p.a, p_exp)
    if not np.any(F.values):
        zero = F.like(np.zeros(F.values.shape))
        return SolveReport(zero, 0.0, 1, 0.0, extra={"K0": 0.0, "endpoint": 0.0})
    K, _, endpoint, tail = _K_apply(p, ctx, F, mode, j0, branch)
    sol = F.like(K)
    r = apply_P(p, sol).values - F.values.real
    res = float(np.abs(r[2:-2]).max())
    norm = norm_pa(F, p.a, p_exp)
    extra = {"K0": endpoint, "endpoint": endpoint, "tail": tail, "mode": mode}
    return SolveReport(sol, res, 1, float(np.abs(K).max() / norm) if norm else 0.0, bool(res > tol), extra)


@dataclass
class HData:
    """H = u f0 + w f1 + w̄ f2 + |u|^{1+α} g1 + |w|^{1+α} g2, w standing for Lu."""

    f0: complex = 0.0
    f1: complex = 0.0
    f2: complex = 0.0
    g1: complex = 0.0
    g2: complex = 0.0
    alpha: float = 1.0

    def __call__(self, u, w):
        al = 1.0 + self.alpha
        return (u * self.f0 + w * self.f1 + np.conj(w) * self.f2
                + np.abs(u) ** al * self.g1 + np.abs(w) ** al * self.g2)

    def is_zero(self) -> bool:
        return not any((self.f0, self.f1, self.f2, self.g1, self.g2))


def p_semilinear_solve(p: SecondOrderSpec, H: HData, eps: float, u0: CylinderFunction, j0: int,
                       branch: str = "+", R: float | None = None, ctx: KernelContext | None = None,
                       tol: float = 1e-10, maxit: int = 40, res_tol: float = 1e-3) -> SolveReport:
    """Picard iteration v ← u0 + 𝕂_j(r^ε Re H(r, t, v, Lv)) and the ratio m = v/u0."""
    if eps <= 0:
        raise InvalidInput("need eps > 0")
    if H.alpha <= 0:
        raise InvalidInput("need alpha > 0")
    if R is not None and R < u0.radii[-1] * (1 - 1e-12):
        keep = u0.radii <= R * (1 + 1e-12)
        u0 = CylinderFunction(u0.radii[keep], u0.values[keep])
    u0 = u0.like(u0.values.real)
    ctx = _context(p, ctx)
    weight = u0.radii[:, None] ** eps

    def rhs(v):
        Lv = _L(p, v)
        return weight * np.real(H(v.values.real, Lv))

    v = u0
    changes = []
    it = 0
    for it in range(1, maxit + 1):
        if H.is_zero():
            changes.append(0.0)
            break
        F = u0.like(rhs(v))
        K = _K_apply(p, ctx, F, "modified", j0, branch)[0]
        new = u0.like(u0.values.real + K)
        change = float(np.abs(new.values - v.values).max())
        v = new
        changes.append(change)
        if change < tol * max(1.0, float(np.abs(v.values).max())):
            break
        if len(changes) >= 4 and all(changes[-k] >= changes[-k - 1] for k in (1, 2, 3)):
            raise NumericFailure(f"Picard iteration does not contract at R = {u0.radii[-1]:.3g}; "
                                 "try a smaller R")
    else:
        raise NumericFailure(f"no convergence in {maxit} Picard iterations; try a smaller R")
    r = apply_P(p, v).values - rhs(v)
    res = float(np.abs(r[2:-2]).max())
    # m = v/u0 away from the nodal set of u0
    u = u0.values.real
    rowmax = np.abs(u).max(axis=1, keepdims=True)
    mask = np.abs(u) >= 0.1 * rowmax
    m = v.values.real[mask] / u[mask]
    extra = {"changes": changes, "C1": float(m.min()), "C2": float(m.max())}
    return SolveReport(v, res, it, float(np.abs(v.values).max()), bool(res > res_tol), extra)
