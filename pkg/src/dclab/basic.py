"""Periodic eigen-solutions, characters, adjoint solutions and asymptotics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import OperatorSpec
from .errors import InvalidInput, InvariantViolation, NumericFailure
from .periodic import PeriodicFunction, winding_number
from .spectrum import SpectralValue, _dominance, level_pairs

__all__ = ["BasicSolution", "basic_solution", "basic_family", "winding_number", "character",
           "adjoint_basic_solution", "adjoint_family", "asymptotic_forms", "pairing",
           "system_residual"]


@dataclass
class BasicSolution:
    """w = r^σφ + conj(r^σψ); for adjoint solutions σ is the adjoint exponent μ."""

    sigma: complex
    branch: str
    phi: PeriodicFunction
    psi: PeriodicFunction
    j: int
    dominant: str
    kind: str = "complex"
    adjoint: bool = False

    @property
    def f(self) -> PeriodicFunction:
        return self.phi + self.psi.conj()

    def __call__(self, r, t):
        r = np.asarray(r, dtype=float)
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            rs = np.where(r > 0, np.exp(self.sigma * np.log(np.where(r > 0, r, 1.0))), 0.0)
        out = rs * self.phi(t) + np.conj(rs * self.psi(t))
        if np.any(r == 0):
            if self.sigma.real < 0 or (self.sigma.real == 0 and self.sigma != 0):
                raise InvalidInput("basic solution is singular or undefined at r = 0")
            if self.sigma == 0:
                out = np.where(r == 0, self.phi(t) + np.conj(self.psi(t)), out)
        return out

    def scaled(self, s: complex) -> "BasicSolution":
        return BasicSolution(self.sigma, self.branch, self.phi * s, self.psi * s, self.j,
                             self.dominant, self.kind, self.adjoint)


def system_residual(spec: OperatorSpec, sol: BasicSolution) -> float:
    """max |(φ,ψ)' − M(σ)(φ,ψ)| at the grid nodes of the pair."""
    lam, nu = spec.lam, spec.nu
    lb = lam.conjugate()
    M = max(sol.phi.M, sol.psi.M, spec.c.M)
    phi, psi = sol.phi.resample(M), sol.psi.resample(M)
    c = spec.c.resample(M).samples
    s = sol.sigma
    if not sol.adjoint:
        r1 = phi.derivative().samples - (1j * (s - lam * nu) / lam * phi.samples + c / lam * psi.samples)
        r2 = psi.derivative().samples - (np.conj(c) / lb * phi.samples - 1j * (s - lb * nu) / lb * psi.samples)
    else:
        r1 = phi.derivative().samples - (1j * (s + lam * nu) / lam * phi.samples - np.conj(c) / lam * psi.samples)
        r2 = psi.derivative().samples - (-c / lb * phi.samples - 1j * (s + lb * nu) / lb * psi.samples)
    scale = max(phi.sup(), psi.sup(), 1e-300)
    return float(max(np.abs(r1).max(), np.abs(r2).max()) / scale)


def _real_basis(pairs):
    out = []
    for phi, psi in pairs:
        out.append((phi, psi))
        out.append((phi * 1j, psi * 1j))
    return out


def _value_at0(phi, psi, real):
    return complex(phi.samples[0] + np.conj(psi.samples[0])) if real else complex(phi.samples[0])


def basic_family(spec: OperatorSpec, sv: SpectralValue) -> list:
    """All normalized basic solutions attached to a spectral value (1 or 2)."""
    pairs = sv.pairs or level_pairs(spec, sv.j, sv.sigma, sv.kind)
    if sv.kind == "complex":
        phi, psi = pairs[0]
        p0 = phi.samples[0]
        if abs(p0) == 0:
            raise NumericFailure("zero dominant component at t = 0")
        phi, psi = phi / p0, psi / p0
        dom = _dominance(phi, psi)
        plus = BasicSolution(sv.sigma, "+", phi, psi, sv.j, dom, "complex")
        return [plus, BasicSolution(sv.sigma, "-", phi * 1j, psi * 1j, sv.j, dom, "complex")]
    basis = _real_basis(pairs)
    A = np.array([[_value_at0(p, q, True).real for p, q in basis],
                  [_value_at0(p, q, True).imag for p, q in basis]])
    targets = {"+": np.array([1.0, 0.0]), "-": np.array([0.0, 1.0])}
    if sv.kind == "simple":
        # one real direction: |f(0)| = 1, Re f(0) > 0
        k = int(np.argmax(np.hypot(A[0], A[1])))
        val = complex(A[0, k], A[1, k])
        x = 1.0 / abs(val)
        if val.real < 0 or (val.real == 0 and val.imag < 0):
            x = -x
        phi, psi = basis[k][0] * x, basis[k][1] * x
        return [BasicSolution(sv.sigma, sv.branch, phi, psi, sv.j, _dominance(phi, psi), "simple")]
    out = []
    P = np.linalg.pinv(A)
    for tag in ("+", "-"):
        x = P @ targets[tag]
        phi = sum((b[0] * xi for b, xi in zip(basis, x)), basis[0][0] * 0)
        psi = sum((b[1] * xi for b, xi in zip(basis, x)), basis[0][1] * 0)
        out.append(BasicSolution(sv.sigma, tag, phi, psi, sv.j, _dominance(phi, psi), "double"))
    return out


def basic_solution(spec: OperatorSpec, sv: SpectralValue, branch: str | None = None) -> BasicSolution:
    branch = branch or (sv.branch if sv.branch in "+-" else "+")
    fam = basic_family(spec, sv)
    if len(fam) == 1:
        return fam[0]
    for w in fam:
        if w.branch == branch:
            return w
    raise InvalidInput(f"unknown branch {branch!r}")


def character(w: BasicSolution) -> tuple:
    """(σ, Ind φ) if φ dominates, (σ̄, Ind ψ̄) if ψ does, (σ, Ind f) for real σ."""
    real = w.kind in ("simple", "double") or w.sigma.imag == 0
    if real:
        return (w.sigma, winding_number(w.f))
    dom = _dominance(w.phi, w.psi)
    if dom == "phi":
        return (w.sigma, winding_number(w.phi))
    if dom == "psi":
        return (w.sigma.conjugate(), winding_number(w.psi.conj()))
    raise InvariantViolation("|φ| − |ψ| changes sign for a non-real exponent")


def pairing(W: BasicSolution, u_values, R0: float = 1.0, theta=None) -> float:
    """−(1/2π) Re ∫ W(R₀,θ) u(R₀,θ) i dθ by the trapezoid rule on the samples of u."""
    u_values = np.asarray(u_values, dtype=complex)
    M = u_values.size
    if theta is None and R0 == 1.0 and M % 2:
        Wv = W.phi.resample(M).samples + np.conj(W.psi.resample(M).samples)
    else:
        theta = 2 * np.pi * np.arange(M) / M if theta is None else theta
        Wv = W(np.full(M, R0), theta)
    return float(-np.mean(Wv * u_values * 1j).real)


def _pair_values(sol, M):
    return sol.phi.resample(M).samples + np.conj(sol.psi.resample(M).samples)


def adjoint_family(spec: OperatorSpec, sv: SpectralValue, direct: list | None = None) -> list:
    """Adjoint solutions at μ = −σ, dual to the direct family under the circle pairing."""
    direct = direct or basic_family(spec, sv)
    pairs = level_pairs(spec, sv.j, sv.sigma, sv.kind, adjoint=True)
    mu = -sv.sigma
    cands = []
    for X, Z in pairs:
        for s in (1.0, 1j):
            cands.append(BasicSolution(mu, "", X * s, Z * s, -sv.j, "", sv.kind, True))
    M = max([c.phi.M for c in cands] + [w.phi.M for w in direct])
    M = M | 1
    G = np.array([[pairing(c, _pair_values(w, M)) for c in cands] for w in direct])
    C = np.linalg.pinv(G)
    out = []
    for b, w in enumerate(direct):
        X = sum((c.phi * C[q, b] for q, c in enumerate(cands)), cands[0].phi * 0)
        Z = sum((c.psi * C[q, b] for q, c in enumerate(cands)), cands[0].psi * 0)
        out.append(BasicSolution(mu, w.branch, X, Z, -sv.j, _dominance(X, Z), sv.kind, True))
    check = np.array([[pairing(Wb, _pair_values(w, M)) for w in direct] for Wb in out])
    if np.abs(check - np.eye(len(direct))).max() > 1e-8:
        raise NumericFailure("adjoint pairing matrix is singular")
    return out


def adjoint_basic_solution(spec: OperatorSpec, w: BasicSolution, sv: SpectralValue | None = None) -> BasicSolution:
    if sv is None:
        sv = SpectralValue(w.sigma, w.j, w.branch, 2 if w.kind == "double" else 1, 0.0, w.kind)
    fam = basic_family(spec, sv)
    adj = adjoint_family(spec, sv, fam)
    for d, a in zip(fam, adj):
        if d.branch == w.branch:
            return a
    return adj[0]


def asymptotic_forms(spec: OperatorSpec, j: int, M: int | None = None):
    """φ_j ≈ e^{ijt}(1 + ik(t)/j),  ψ_j ≈ −i e^{ijt} c̄(t)/(2aj)."""
    if j == 0:
        raise InvalidInput("asymptotic forms need j != 0")
    if M is None:
        M = (8 * (abs(j) + spec.c.bandwidth()) + 1) | 1
    k = spec.k_function().resample(max(M, spec.c.M))
    c = spec.c.resample(k.M)
    t = 2 * np.pi * np.arange(k.M) / k.M
    e = np.exp(1j * j * t)
    phi = PeriodicFunction(e * (1 + 1j * k.samples / j))
    psi = PeriodicFunction(-1j * e * np.conj(c.samples) / (2 * spec.a * j))
    return phi, psi


def adjoint_asymptotic_forms(spec: OperatorSpec, j: int, M: int | None = None):
    """X_{−j} ≈ e^{−ijt}(1 − ik(t)/j),  Z_{−j} ≈ −i e^{−ijt} c(t)/(2aj)."""
    phi, _ = asymptotic_forms(spec, j, M)
    c = spec.c.resample(phi.M)
    t = 2 * np.pi * np.arange(phi.M) / phi.M
    e = np.exp(-1j * j * t)
    k = spec.k_function().resample(phi.M)
    X = PeriodicFunction(e * (1 - 1j * k.samples / j))
    Z = PeriodicFunction(-1j * e * c.samples / (2 * spec.a * j))
    return X, Z
