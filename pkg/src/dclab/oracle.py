"""Closed-form reference data: the single-mode coupling example, the
decoupled spectrum and the radial solutions of P."""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import InvariantViolation, InvalidInput
from .periodic import PeriodicFunction


@dataclass(frozen=True)
class Example3Data:
    c0: complex
    k: int
    epsilon: float
    a: float
    b: float
    j: int
    sigma: complex
    D: complex
    character: tuple  # (sigma, index)

    @property
    def lam(self) -> complex:
        return complex(self.a, self.b * self.epsilon)

    def quadratic_residual(self) -> float:
        lam, s, j, k = self.lam, self.sigma, self.j, self.k
        q = s * s - ((lam - lam.conjugate()) * j + k * lam.conjugate()) * s \
            - (j * (j - k) * abs(lam) ** 2 + abs(self.c0) ** 2)
        return abs(q)

    def phi(self, M: int = 129) -> PeriodicFunction:
        return PeriodicFunction.from_modes({self.j: 1.0}, M)

    def psi(self, M: int = 129) -> PeriodicFunction:
        return PeriodicFunction.from_modes({self.j - self.k: self.D}, M)


def example3_coefficient(c0: complex, k: int, M: int = 129) -> PeriodicFunction:
    """c(t) = i c₀ e^{ikt}."""
    return PeriodicFunction.from_modes({int(k): 1j * complex(c0)}, M)


def example3(c0, k: int, epsilon: float, j: int, a: float = 1.0, b: float = 1.0,
             branch: int = 1, unit_tol: float = 1e-10) -> Example3Data:
    """Closed form of the 2x2 block at level j for c = i c₀ e^{ikt}, ν = 0.

    ``branch=-1`` selects the other square-root sign (the partner value).
    """
    c0 = complex(c0)
    if c0 == 0:
        raise InvalidInput("c0 must be nonzero")
    if a <= 0:
        raise InvalidInput("a must be positive")
    lam = complex(a, b * epsilon)
    shift = complex(a, -b * epsilon) * k / 2
    root = cmath.sqrt((a * j - shift) ** 2 + abs(c0) ** 2)
    sigma = 1j * b * epsilon * j + shift + (root if branch >= 0 else -root)
    D = (lam * j - sigma) / c0
    mod = abs(D)
    if abs(mod - 1.0) <= unit_tol:
        if k % 2:
            raise InvariantViolation(f"|D_j| = 1 with odd k (j={j})")
        char = (sigma, j)
    elif mod < 1:
        char = (sigma, j)
    else:
        char = (sigma.conjugate(), k - j)
    return Example3Data(c0, int(k), float(epsilon), float(a), float(b), int(j), sigma, D, char)


@dataclass(frozen=True)
class DecoupledValue:
    sigma: complex
    family: str  # "phi" or "psi"
    mode: int    # l with φ = e^{ilt} or ψ = e^{ilt}
    index: int   # winding index of the dominant part (Ind φ or Ind ψ̄)


def decoupled_spectrum(lam, nu: float, j_range) -> list:
    """c ≡ 0: {λ(j+ν)} with φ = e^{ijt} and {−λ̄(m−ν)} with ψ = e^{imt}."""
    lam = complex(lam)
    out = []
    for j in j_range:
        out.append(DecoupledValue(lam * (j + nu), "phi", int(j), int(j)))
    for m in j_range:
        out.append(DecoupledValue(-lam.conjugate() * (m - nu), "psi", int(m), -int(m)))
    return out


def radial_oracle(lam, k: int, p: PeriodicFunction | None = None, M: int = 129):
    """Radial solution u of Pu = 0 and its L-potential w, for β = (λ/a)p − ik.

    Returns callables u(r) and w(r, t) and the periodic B.
    """
    lam = complex(lam)
    a = lam.real
    t = 2 * np.pi * np.arange(M) / M
    P = p.resample(M).antiderivative().samples.real if p is not None else np.zeros(M)
    B = PeriodicFunction(np.exp(1j * k * t + lam.conjugate() / a * P))
    if k == 0:
        def u(r):
            return np.log(r)

        def w(r, tt):
            return 1j * np.broadcast_to(B(tt), np.broadcast(r, tt).shape)
    else:
        def u(r):
            return np.asarray(r, dtype=float) ** (2 * a * k)

        def w(r, tt):
            return 2j * a * k * np.asarray(r, dtype=float) ** (2 * a * k) * B(tt)
    return u, w, B
