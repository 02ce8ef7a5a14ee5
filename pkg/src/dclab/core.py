"""Operator data model, grids, the discrete operator and the Green identity."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import simpson

from .errors import InvalidInput
from .periodic import TWO_PI, PeriodicFunction


@dataclass(frozen=True)
class OperatorSpec:
    """ℒ_ε u = λ_ε u_t − i r u_r + iλ_ε ν u − c(t) ū with λ_ε = a + ibε."""

    a: float
    b: float
    nu: float = 0.0
    epsilon: float = 1.0
    c: PeriodicFunction = field(default_factory=lambda: PeriodicFunction.constant(0.0, 33))

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise InvalidInput(f"a must be positive, got {self.a}")
        if not math.isfinite(self.b) or not math.isfinite(self.epsilon):
            raise InvalidInput("b and epsilon must be finite")
        if not (0.0 <= self.nu < 1.0):
            raise InvalidInput(f"nu must lie in [0, 1), got {self.nu}")
        if not isinstance(self.c, PeriodicFunction):
            raise InvalidInput("c must be a PeriodicFunction")

    @property
    def lam(self) -> complex:
        return complex(self.a, self.b * self.epsilon)

    def with_epsilon(self, epsilon: float) -> "OperatorSpec":
        return replace(self, epsilon=float(epsilon))

    def c_band(self):
        """(lowest frequency, coefficients) of c; used by the integrators."""
        return self.c.trimmed()

    @property
    def gamma(self) -> float:
        """(1/4aπ)∫|c|²."""
        return float(np.mean(np.abs(self.c.samples) ** 2) * TWO_PI / (4 * self.a * np.pi))

    def k_function(self) -> PeriodicFunction:
        """k(t) = (1/λ)[γt − (1/2a)∫₀ᵗ|c|²]; periodic by the choice of γ."""
        c2 = PeriodicFunction(np.abs(self.c.samples) ** 2)
        return c2.antiderivative() * (-1.0 / (2 * self.a * self.lam))


@dataclass
class CylinderFunction:
    """Complex samples on radii (increasing, positive) × M equispaced angles."""

    radii: np.ndarray
    values: np.ndarray
    boundary: np.ndarray | None = None  # optional row at r = 0

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.radii.ndim != 1 or self.values.shape[0] != self.radii.size:
            raise InvalidInput("values must have shape (len(radii), M)")
        if np.any(self.radii <= 0) or np.any(np.diff(self.radii) <= 0):
            raise InvalidInput("radii must be positive and strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInput("non-finite cylinder values")

    @property
    def M(self) -> int:
        return self.values.shape[1]

    @property
    def t(self) -> np.ndarray:
        return TWO_PI * np.arange(self.M) / self.M

    @classmethod
    def sample(cls, f, radii, M: int) -> "CylinderFunction":
        radii = np.asarray(radii, dtype=float)
        t = TWO_PI * np.arange(M) / M
        R, T = np.meshgrid(radii, t, indexing="ij")
        return cls(radii, np.broadcast_to(np.asarray(f(R, T), dtype=complex), R.shape).copy())

    def like(self, values) -> "CylinderFunction":
        return CylinderFunction(self.radii, values)

    def d_t(self) -> np.ndarray:
        return spectral_dt(self.values)

    def r_dr(self) -> np.ndarray:
        return self.radii[:, None] * radial_derivative(self.radii, self.values)


@dataclass(frozen=True)
class CylinderDomain:
    """(r_min, r_max) minus radial bands ``exclusions`` = [(r_a, r_b), ...]."""

    r_min: float
    r_max: float
    exclusions: tuple = ()

    def __post_init__(self):
        if not (self.r_max > 0 and self.r_max > self.r_min >= 0):
            raise InvalidInput("need 0 <= r_min < r_max")
        for lo, hi in self.exclusions:
            if not (self.r_min < lo < hi < self.r_max):
                raise InvalidInput("exclusions must lie strictly inside the domain")

    def intervals(self):
        cuts = sorted(self.exclusions)
        out, lo = [], self.r_min
        for a, b in cuts:
            out.append((lo, a))
            lo = b
        out.append((lo, self.r_max))
        return out


def log_radii(r_min: float, r_max: float, P: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(r_min), math.log(r_max), P))


def spectral_dt(values: np.ndarray) -> np.ndarray:
    """∂/∂t along the last axis; the Nyquist mode of even M is dropped."""
    M = values.shape[-1]
    l = np.fft.fftfreq(M, 1.0 / M)
    if M % 2 == 0:
        l[M // 2] = 0
    return np.fft.ifft(1j * l * np.fft.fft(values, axis=-1), axis=-1)


def fornberg_weights(x0: float, x: np.ndarray, m: int) -> np.ndarray:
    """Finite-difference weights for the m-th derivative at x0 on nodes x."""
    n = len(x)
    c = np.zeros((n, m + 1))
    c1, c4 = 1.0, x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2, c5, c4 = 1.0, c4, x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, m]


def _stencils(radii: np.ndarray, order: int, width: int = 5):
    P = radii.size
    if P < width:
        raise InvalidInput(f"need at least {width} radii for the difference stencil")
    h = width // 2
    idx = np.empty((P, width), dtype=int)
    w = np.empty((P, width))
    for i in range(P):
        lo = min(max(i - h, 0), P - width)
        idx[i] = np.arange(lo, lo + width)
        w[i] = fornberg_weights(radii[i], radii[idx[i]], order)
    return idx, w


def radial_derivative(radii: np.ndarray, values: np.ndarray, order: int = 1) -> np.ndarray:
    """4th-order (5-point) derivative in r along axis 0, one-sided at the ends."""
    idx, w = _stencils(np.asarray(radii, dtype=float), order, 5 if order == 1 else 6)
    return np.einsum("pq,pq...->p...", w, values[idx])


def apply_operator(spec: OperatorSpec, u: CylinderFunction) -> CylinderFunction:
    lam = spec.lam
    c = spec.c(u.t)[None, :]
    out = lam * u.d_t() - 1j * u.r_dr() + 1j * lam * spec.nu * u.values - c * np.conj(u.values)
    return u.like(out)


def apply_adjoint(spec: OperatorSpec, v: CylinderFunction) -> CylinderFunction:
    lam = spec.lam
    cb = np.conj(spec.c(v.t))[None, :]
    out = -(lam * v.d_t() - 1j * v.r_dr() - 1j * lam * spec.nu * v.values + cb * np.conj(v.values))
    return v.like(out)


def first_integral_map(spec: OperatorSpec, r, t):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise InvalidInput("first integral needs r > 0")
    z = np.exp(spec.lam * np.log(r) + 1j * np.asarray(t, dtype=float))
    return z if z.ndim else complex(z)


def first_integral_inverse(spec: OperatorSpec, z):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise InvalidInput("z = 0 is not in the image")
    s = np.log(np.abs(z)) / spec.a
    t = np.mod(np.angle(z) - spec.b * spec.epsilon * s, TWO_PI)
    return np.exp(s), t


def reduce_to_normal_form(A: PeriodicFunction, B: PeriodicFunction, lam: complex):
    """Remove the A-term of Lu = Au + B ū by u = m w.

    Returns (nu, m, c). ν = n − Im(A₀/λ) with n = ⌈Im(A₀/λ)⌉, so the integer
    case gives ν = 0 and m carries e^{int}.
    """
    lam = complex(lam)
    if not lam.real > 0:
        raise InvalidInput("Re λ must be positive")
    M = max(A.M, B.M)
    A, B = A.resample(M), B.resample(M)
    A0 = A.mean()
    q = (A0 / lam).imag
    n = round(q) if abs(q - round(q)) < 1e-12 else math.ceil(q)
    nu = float(n - q)
    if nu >= 1.0 or nu < 0.0:
        nu = 0.0
    if abs((A0 / lam).real) > 1e-10:
        warnings.warn("Re(A0/λ) is nonzero; the reduced equation keeps a λ·Re(A0/λ) w term")
    t = TWO_PI * np.arange(M) / M
    m = PeriodicFunction(np.exp(1j * n * t + A.antiderivative().samples / lam))
    c = B * m.conj() / m
    return nu, m, c


class GreenResidual(float):
    """Float residual carrying the two sides and a coarse-grid flag."""

    def __new__(cls, value, boundary=0.0, area=0.0, coarse=False):
        obj = float.__new__(cls, value)
        obj.boundary, obj.area, obj.coarse = boundary, area, coarse
        return obj


def _green_sides(u, v, spec, domain, stride=1):
    r = u.radii[::stride]
    uu = u.like(u.values) if stride == 1 else CylinderFunction(r, u.values[::stride])
    vv = v.like(v.values) if stride == 1 else CylinderFunction(r, v.values[::stride])
    Lu = apply_operator(spec, uu).values
    Lsv = apply_adjoint(spec, vv).values
    integrand = (uu.values * Lsv - Lu * vv.values).mean(axis=1) * TWO_PI
    s = np.log(r)
    area = 0.0
    bnd = 0.0
    for lo, hi in domain.intervals():
        lo = max(lo, r[0])
        i0 = int(np.argmin(np.abs(r - lo)))
        i1 = int(np.argmin(np.abs(r - hi)))
        if i1 - i0 < 2:
            raise InvalidInput("domain interval not resolved by the radial grid")
        area += simpson(integrand[i0:i1 + 1], x=s[i0:i1 + 1]).real
        ring = lambda i: (1j * uu.values[i] * vv.values[i]).mean().real * TWO_PI
        bnd += ring(i1) - ring(i0)
    return bnd, area


def green_residual(u: CylinderFunction, v: CylinderFunction, spec: OperatorSpec,
                   domain: CylinderDomain, tol: float = 1e-6) -> GreenResidual:
    """|Re∮ uv dz/z − (⟨u,ℒ*v⟩ − ⟨ℒu,v⟩)| by independent quadratures."""
    if u.values.shape != v.values.shape or not np.allclose(u.radii, v.radii):
        raise InvalidInput("u and v must share the grid")
    bnd, area = _green_sides(u, v, spec, domain)
    res = abs(bnd - area)
    coarse = False
    if u.radii.size >= 21:
        b2, a2 = _green_sides(u, v, spec, domain, stride=2)
        # the 4th-order estimate of the fine-grid error
        coarse = abs(abs(b2 - a2) - res) / 15.0 > tol
        if coarse:
            warnings.warn("grid too coarse for the requested Green-identity tolerance")
    return GreenResidual(res, bnd, area, coarse)
