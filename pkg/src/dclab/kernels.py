"""Cauchy-type kernels built from paired direct and adjoint basic solutions.

With z = r^λ e^{it}, ζ = ρ^λ e^{iθ} and the sum running over the family
members (both branches) of every level,

    Ω₁ =  ½ Σ_{Re σ ≥ 0} w(r,t) W(ρ,θ)        (r < ρ)
    Ω₁ = −½ Σ_{Re σ < 0} w(r,t) W(ρ,θ)        (r > ρ)

and Ω₂ is the same with conj(w).  W is the adjoint partner of w (exponent
−σ) normalized by the circle pairing.  The decomposed path adds the exact
tail of the singular series i(r/ρ)^{λν}[ζ/(ζ−z) + iK L] to the truncated
sum, so only the O(j⁻²) difference terms are truncated.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basic import adjoint_family, basic_family
from .core import OperatorSpec
from .errors import InvalidInput, NumericFailure
from .periodic import PeriodicFunction
from .spectrum import SpectrumWindow, find_spectral_values

__all__ = ["KernelContext", "KernelValue", "kernel_context", "kernel_omega", "kernel_decomposed",
           "modified_kernels", "hat_kernels", "kernel_tail_bound", "decomposed_tail_bound"]

_SIDE_TOL = 1e-10


class _Sparse:
    """Nonnegligible Fourier band of a periodic function, for fast point evaluation."""

    __slots__ = ("l", "c")

    def __init__(self, f: PeriodicFunction, rel: float = 1e-15):
        c = f.coeffs
        mag = np.abs(c)
        keep = np.nonzero(mag > rel * max(mag.max(), 1e-300))[0]
        if keep.size == 0:
            keep = np.array([f.N])
        lo, hi = keep[0], keep[-1] + 1
        self.l = np.arange(lo, hi) - f.N
        self.c = c[lo:hi]

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return np.exp(1j * np.multiply.outer(t, self.l)) @ self.c


@dataclass
class _Term:
    sigma: complex
    j: int
    branch: str
    kind: str
    phi: _Sparse
    psi: _Sparse
    X: _Sparse
    Z: _Sparse
    direct: object = field(repr=False)
    adjoint: object = field(repr=False)


@dataclass
class KernelContext:
    spec: OperatorSpec
    window: SpectrumWindow
    J: int
    eta: float
    terms: list
    k: PeriodicFunction
    c: _Sparse

    def spectral_value(self, j: int, branch: str = "+") -> complex:
        for term in self.terms:
            if term.j == j and term.branch in (branch, "±"):
                return term.sigma
        for term in self.terms:
            if term.j == j:
                return term.sigma
        raise InvalidInput(f"level {j} is not in the kernel window")

    def imaginary_terms(self, tol: float = 1e-9) -> list:
        return [t for t in self.terms if abs(t.sigma.real) < tol]


@dataclass
class KernelValue:
    omega1: np.ndarray
    omega2: np.ndarray
    singular1: np.ndarray | None = None
    singular2: np.ndarray | None = None
    remainder1: np.ndarray | None = None
    remainder2: np.ndarray | None = None
    regime: np.ndarray | None = None   # True where r < ρ

    @property
    def singular_part(self):
        return self.singular1

    @property
    def remainder(self):
        return self.remainder1


def kernel_context(spec: OperatorSpec, J: int = 64, eta: float = 1e-3, tol: float = 1e-10,
                   window: SpectrumWindow | None = None) -> KernelContext:
    """Spectrum on [−J, J] with every family paired to its adjoint family."""
    if J < 1:
        raise InvalidInput("J must be at least 1")
    if window is None:
        window = find_spectral_values(spec, -J, J, tol=tol)
    if window.gaps or window.j_min > -J or window.j_max < J:
        raise NumericFailure(f"spectrum window incomplete for |j| <= {J}: {window.gaps}")
    terms = []
    for sv in window.distinct():
        fam = basic_family(spec, sv)
        adj = adjoint_family(spec, sv, fam)
        for w, W in zip(fam, adj):
            terms.append(_Term(complex(sv.sigma), sv.j, w.branch, sv.kind,
                               _Sparse(w.phi), _Sparse(w.psi), _Sparse(W.phi), _Sparse(W.psi), w, W))
    return KernelContext(spec, window, J, eta, terms, spec.k_function(), _Sparse(spec.c))


# evaluation helpers --------------------------------------------------------

def _prepare(r, t, rho, theta):
    r, t, rho, theta = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, t, rho, theta)))
    if np.any(r < 0) or np.any(rho <= 0):
        raise InvalidInput("need r >= 0 and rho > 0")
    return r, t, rho, theta


def _term_products(term: _Term, lr, t, lrho, theta):
    """(w W, conj(w) W) at matching points, in overflow-free combined form."""
    s = term.sigma
    d = lr - lrho
    ph = s.imag * (lr + lrho)
    base = np.exp(s.real * d)
    e1 = np.exp(s * d)
    e4 = np.exp(s.conjugate() * d)
    e2 = base * np.exp(1j * ph)
    e3 = base * np.exp(-1j * ph)
    f, g = term.phi(t), term.psi(t)
    X, Zb = term.X(theta), np.conj(term.Z(theta))
    gb, fb = np.conj(g), np.conj(f)
    wW = e1 * f * X + e2 * f * Zb + e3 * gb * X + e4 * gb * Zb
    wbW = e3 * fb * X + e4 * fb * Zb + e1 * g * X + e2 * g * Zb
    return wW, wbW


def _raw_sums(ctx: KernelContext, r, t, rho, theta, threshold: float, flip=None):
    """Truncated Ω₁, Ω₂ with the split at Re σ = threshold.

    Terms selected by ``flip`` are placed on the lower side regardless of
    their exponent: Ω − w(z)w*(ζ) for a term that sits on the upper side.
    """
    below = r < rho
    out1 = np.zeros(r.shape, dtype=complex)
    out2 = np.zeros(r.shape, dtype=complex)
    zero = r == 0
    lr = np.log(np.where(zero, 1.0, r))
    lrho = np.log(rho)
    for term in ctx.terms:
        upper = term.sigma.real >= threshold - _SIDE_TOL
        if flip is not None and flip(term):
            upper = False
        mask = below if upper else ~below
        if not mask.any():
            continue
        if upper and term.sigma.real <= _SIDE_TOL and np.any(zero & mask):
            if abs(term.sigma) > _SIDE_TOL:
                raise InvalidInput("purely imaginary exponent is undefined at r = 0")
        idx = mask
        wW, wbW = _term_products(term, lr[idx], t[idx], lrho[idx], theta[idx])
        if upper and term.sigma.real > _SIDE_TOL:
            z = zero[idx]
            wW = np.where(z, 0, wW)
            wbW = np.where(z, 0, wbW)
        sign = 0.5 if upper else -0.5
        out1[idx] += sign * wW
        out2[idx] += sign * wbW
    return out1, out2


def _check_separation(ctx, r, rho, allow_zero=True):
    with np.errstate(divide="ignore"):
        d = np.abs(np.log(np.where(r > 0, r, 1.0) / rho))
    bad = (d < ctx.eta) & (r > 0)
    if np.any(bad):
        raise InvalidInput(f"|log(r/rho)| < eta = {ctx.eta}: use the decomposed kernels")


def kernel_tail_bound(ctx: KernelContext, r, rho) -> np.ndarray:
    """Envelope of the dropped raw terms, Σ_{|j|>J} e^{−a|j||log(r/ρ)|}."""
    d = np.abs(np.log(np.asarray(r, float) / np.asarray(rho, float)))
    q = np.exp(-ctx.spec.a * d)
    scale = max(ctx.spec.c.sup(), 1.0)
    return 2 * scale * q ** (ctx.J + 1) / (1 - q)


def kernel_omega(ctx: KernelContext, r, t, rho, theta, warn_tol: float = 1e-8) -> KernelValue:
    """Raw truncated series; needs |log(r/ρ)| ≥ η."""
    r, t, rho, theta = _prepare(r, t, rho, theta)
    _check_separation(ctx, r, rho)
    o1, o2 = _raw_sums(ctx, r, t, rho, theta, 0.0)
    pos = r > 0
    if pos.any():
        tail = kernel_tail_bound(ctx, r[pos], rho[pos])
        if tail.max() > warn_tol:
            warnings.warn(f"raw kernel truncation tail up to {tail.max():.2e}; "
                          "the decomposed path is more accurate", RuntimeWarning, stacklevel=2)
    return KernelValue(o1, o2, regime=r < rho)


def _singular(ctx: KernelContext, r, t, rho, theta, sigma_c: complex, j_c: int):
    """Closed singular parts and their truncations matched to |j| ≤ J."""
    spec = ctx.spec
    lam = spec.lam
    lr = np.log(r)
    lrho = np.log(rho)
    d = lr - lrho
    below = d < 0
    q = np.exp(lam * d + 1j * (t - theta))
    Q = np.exp(sigma_c * d + 1j * j_c * (t - theta))
    K = ctx.k(t) - ctx.k(theta)
    if np.any(np.abs(1 - q) == 0):
        raise InvalidInput("z = zeta: kernel singular point")
    # L(z, ζ) on each side, kept off the branch cut by the case split
    with np.errstate(divide="ignore", invalid="ignore"):
        L = np.where(below, -np.log(1 - q), -np.log(1 - 1 / q))
    geo = 1 / (1 - q)

    # truncated series with the same level range as the raw sum
    nb = ctx.J - j_c          # m = 0..nb below
    na = ctx.J + j_c          # m = −1..−na above
    p = np.where(below, q, 1 / q)
    geo_t = np.zeros(q.shape, dtype=complex)
    L_t = np.zeros(q.shape, dtype=complex)
    pw = np.ones(q.shape, dtype=complex)
    top = max(nb, na)
    geo_t = np.where(below & (nb >= 0), 1.0 + 0j, 0)
    for m in range(1, top + 1):
        pw = pw * p
        use_b = below & (m <= nb)
        use_a = (~below) & (m <= na)
        geo_t = geo_t + np.where(use_b, pw, 0) - np.where(use_a, pw, 0)
        L_t = L_t + np.where(use_b | use_a, pw / m, 0)

    c_t = ctx.c(t)
    c_th = ctx.c(theta)
    a = spec.a
    P = 1j * Q
    s1 = P * (geo + 1j * K * L)
    s1_t = P * (geo_t + 1j * K * L_t)
    s2 = np.conj(c_t) / (2 * a) * Q * L + np.conj(c_th / (2 * a) * Q * L)
    s2_t = np.conj(c_t) / (2 * a) * Q * L_t + np.conj(c_th / (2 * a) * Q * L_t)
    return s1, s2, s1_t, s2_t


def _decomposed(ctx, r, t, rho, theta, sigma_c, j_c, threshold, flip=None):
    if np.any(r == rho):
        raise InvalidInput("r = rho: the kernel regime is undefined on the diagonal circle")
    if np.any(r == 0):
        raise InvalidInput("the decomposition needs r > 0")
    o1, o2 = _raw_sums(ctx, r, t, rho, theta, threshold, flip)
    s1, s2, s1_t, s2_t = _singular(ctx, r, t, rho, theta, sigma_c, j_c)
    rem1 = o1 - s1_t
    rem2 = o2 - s2_t
    return KernelValue(s1 + rem1, s2 + rem2, s1, s2, rem1, rem2, r < rho)


def kernel_decomposed(ctx: KernelContext, r, t, rho, theta) -> KernelValue:
    """Ω = singular part + C with C summed as matched difference terms."""
    r, t, rho, theta = _prepare(r, t, rho, theta)
    lam_nu = ctx.spec.lam * ctx.spec.nu
    return _decomposed(ctx, r, t, rho, theta, lam_nu, 0, 0.0)


def modified_kernels(ctx: KernelContext, j0: int, branch: str, r, t, rho, theta,
                     decomposed: bool = True) -> KernelValue:
    """Ω_{j₀,1/2}: the split moves to Re σ = Re σ_{j₀}^±; prefactor (r/ρ)^{σ_{j₀}} e^{ij₀(t−θ)}."""
    if abs(j0) > ctx.J:
        raise InvalidInput(f"j0 = {j0} outside the kernel window")
    s0 = ctx.spectral_value(j0, branch)
    r, t, rho, theta = _prepare(r, t, rho, theta)
    if not decomposed:
        _check_separation(ctx, r, rho)
        o1, o2 = _raw_sums(ctx, r, t, rho, theta, s0.real)
        return KernelValue(o1, o2, regime=r < rho)
    return _decomposed(ctx, r, t, rho, theta, s0, j0, s0.real)


def hat_kernels(ctx: KernelContext, r, t, rho, theta, tol: float = 1e-9,
                decomposed: bool = True) -> KernelValue:
    """Ω̂ = Ω − Σ w(z)w*(ζ) over the terms with exponents on the imaginary axis.

    Each such term leaves the ρ > r sum and reappears with the opposite
    sign for ρ < r, so ℒ in (r, t) still sees a fundamental solution.
    Ω̂ vanishes at r = 0.
    """
    r, t, rho, theta = _prepare(r, t, rho, theta)

    def flip(term):
        return abs(term.sigma.real) < tol

    out1 = np.zeros(r.shape, dtype=complex)
    out2 = np.zeros(r.shape, dtype=complex)
    pos = r > 0
    if not pos.any():
        return KernelValue(out1, out2, regime=r < rho)
    args = (r[pos], t[pos], rho[pos], theta[pos])
    if decomposed:
        kv = _decomposed(ctx, *args, ctx.spec.lam * ctx.spec.nu, 0, 0.0, flip)
    else:
        _check_separation(ctx, *args[::2])
        o1, o2 = _raw_sums(ctx, *args, 0.0, flip)
        kv = KernelValue(o1, o2)
    out1[pos] = kv.omega1
    out2[pos] = kv.omega2
    return KernelValue(out1, out2, regime=r < rho)



def decomposed_tail_bound(ctx: KernelContext, r, t, rho, theta, levels: int = 4) -> np.ndarray:
    """C/J bound on the dropped difference terms, C fitted as max j²|term| over the outer levels."""
    r, t, rho, theta = _prepare(r, t, rho, theta)
    lam = ctx.spec.lam
    d = np.log(r / rho)
    below = d < 0
    q = np.exp(lam * d + 1j * (t - theta))
    P = 1j * np.exp(lam * ctx.spec.nu * d)
    K = ctx.k(t) - ctx.k(theta)
    C = np.zeros(r.shape)
    lr, lrho = np.log(r), np.log(rho)
    for n in range(levels):
        for j, side in ((ctx.J - n, below), (-ctx.J + n, ~below)):
            if not side.any():
                continue
            acc = np.zeros(r.shape, dtype=complex)
            for term in ctx.terms:
                if term.j == j:
                    acc += 0.5 * np.sign(j) * _term_products(term, lr, t, lrho, theta)[0]
            diff = acc - P * q ** j * (np.sign(j) + 1j * K / abs(j))
            C = np.where(side, np.maximum(C, np.abs(diff) * j * j / np.maximum(np.abs(q) ** j, 1e-300)), C)
    return C * np.minimum(np.exp(-ctx.spec.a * np.abs(d) * ctx.J), 1.0) / ctx.J
