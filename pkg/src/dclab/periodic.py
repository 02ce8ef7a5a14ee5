"""Band-limited 2π-periodic complex functions."""

from __future__ import annotations

import numpy as np

from .errors import InvalidInput

TWO_PI = 2.0 * np.pi


def grid(M: int) -> np.ndarray:
    return TWO_PI * np.arange(M) / M


class PeriodicFunction:
    """Samples at t_k = 2πk/M (M odd) with the matching Fourier coefficients.

    ``coeffs[l + N]`` holds the coefficient of e^{ilt} for |l| <= N = (M-1)/2.
    """

    __slots__ = ("samples",)

    def __init__(self, samples):
        s = np.asarray(samples, dtype=complex).ravel()
        if s.size < 3 or s.size % 2 == 0:
            raise InvalidInput(f"PeriodicFunction needs odd M >= 3, got {s.size}")
        if not np.all(np.isfinite(s)):
            raise InvalidInput("non-finite samples")
        self.samples = s

    # construction
    @classmethod
    def from_callable(cls, f, M: int = 129) -> "PeriodicFunction":
        t = grid(M)
        vals = np.broadcast_to(np.asarray(f(t), dtype=complex), t.shape)
        return cls(vals)

    @classmethod
    def from_coeffs(cls, coeffs, M: int | None = None) -> "PeriodicFunction":
        """Coefficients ordered l = -N..N (length 2N+1)."""
        c = np.asarray(coeffs, dtype=complex).ravel()
        if c.size % 2 == 0:
            raise InvalidInput("coefficient vector must have odd length")
        N = c.size // 2
        if M is None:
            M = c.size
        if M % 2 == 0 or M < c.size:
            raise InvalidInput("M must be odd and at least the coefficient length")
        K = M // 2
        full = np.zeros(M, dtype=complex)
        full[K - N:K + N + 1] = c
        return cls(np.fft.ifft(np.fft.ifftshift(full)) * M)

    @classmethod
    def from_modes(cls, modes: dict, M: int = 129) -> "PeriodicFunction":
        """``modes`` maps frequency l to coefficient."""
        N = M // 2
        c = np.zeros(M, dtype=complex)
        for l, v in modes.items():
            if abs(l) > N:
                raise InvalidInput(f"mode {l} exceeds bandwidth of M={M}")
            c[l + N] = v
        return cls.from_coeffs(c, M)

    @classmethod
    def constant(cls, value, M: int = 129) -> "PeriodicFunction":
        return cls(np.full(M, complex(value)))

    # representation
    @property
    def M(self) -> int:
        return self.samples.size

    @property
    def N(self) -> int:
        return self.M // 2

    @property
    def coeffs(self) -> np.ndarray:
        return np.fft.fftshift(np.fft.fft(self.samples)) / self.M

    def coeff(self, l: int) -> complex:
        if abs(l) > self.N:
            return 0j
        return complex(self.coeffs[l + self.N])

    def bandwidth(self, rel: float = 1e-13) -> int:
        c = np.abs(self.coeffs)
        scale = max(c.max(), 1e-300)
        idx = np.nonzero(c > rel * scale)[0]
        if idx.size == 0:
            return 0
        return int(np.max(np.abs(idx - self.N)))

    def trimmed(self, rel: float = 1e-14):
        """(lmin, coefficients) of the nonnegligible band, for fast evaluation."""
        c = self.coeffs
        bw = self.bandwidth(rel)
        return -bw, c[self.N - bw:self.N + bw + 1].copy()

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        lmin, c = self.trimmed()
        l = np.arange(lmin, lmin + c.size)
        return np.exp(1j * np.multiply.outer(t, l)) @ c

    def resample(self, M: int) -> "PeriodicFunction":
        if M == self.M:
            return self
        if M > self.M:
            return PeriodicFunction.from_coeffs(self.coeffs, M)
        K = M // 2
        return PeriodicFunction.from_coeffs(self.coeffs[self.N - K:self.N + K + 1], M)

    # calculus
    def mean(self) -> complex:
        return complex(self.samples.mean())

    def derivative(self) -> "PeriodicFunction":
        l = np.arange(-self.N, self.N + 1)
        return PeriodicFunction.from_coeffs(1j * l * self.coeffs, self.M)

    def antiderivative(self) -> "PeriodicFunction":
        """∫₀ᵗ (f - mean) ds, which is periodic."""
        c = self.coeffs.copy()
        l = np.arange(-self.N, self.N + 1)
        c[self.N] = 0
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(l != 0, c / (1j * l), 0)
        g[self.N] = -g.sum()
        return PeriodicFunction.from_coeffs(g, self.M)

    def integral(self) -> complex:
        return TWO_PI * self.mean()

    def conj(self) -> "PeriodicFunction":
        return PeriodicFunction(np.conj(self.samples))

    def abs_min(self) -> float:
        return float(np.min(np.abs(self.samples)))

    def sup(self) -> float:
        return float(np.max(np.abs(self.samples)))

    # arithmetic (pointwise; products are aliased, callers keep M large enough)
    def _lift(self, other):
        if isinstance(other, PeriodicFunction):
            if other.M != self.M:
                M = max(self.M, other.M)
                return self.resample(M), other.resample(M).samples
            return self, other.samples
        return self, complex(other)

    def __add__(self, other):
        a, b = self._lift(other)
        return PeriodicFunction(a.samples + b)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._lift(other)
        return PeriodicFunction(a.samples - b)

    def __rsub__(self, other):
        a, b = self._lift(other)
        return PeriodicFunction(b - a.samples)

    def __mul__(self, other):
        a, b = self._lift(other)
        return PeriodicFunction(a.samples * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        a, b = self._lift(other)
        return PeriodicFunction(a.samples / b)

    def __neg__(self):
        return PeriodicFunction(-self.samples)

    def __repr__(self):
        return f"PeriodicFunction(M={self.M}, bandwidth={self.bandwidth()})"


def exp_of(f: PeriodicFunction) -> PeriodicFunction:
    return PeriodicFunction(np.exp(f.samples))


def winding_number(f, threshold: float = 1e-10, defect: float = 0.1) -> int:
    """Ind f: total argument increment over a period divided by 2π."""
    from .errors import NumericFailure

    if not isinstance(f, PeriodicFunction):
        f = PeriodicFunction(f)
    need = 8 * (f.bandwidth() + 1) + 1
    if f.M < need:
        f = f.resample(need | 1)
    s = f.samples
    if np.min(np.abs(s)) <= threshold * max(1.0, np.max(np.abs(s))):
        raise NumericFailure("winding number indeterminate: function nearly vanishes")
    steps = np.angle(np.roll(s, -1) / s)
    if np.abs(steps).max() > np.pi / 2:
        # the argument jumps between neighbouring samples: a zero lies in between
        raise NumericFailure("winding number indeterminate: argument jump between samples")
    total = steps.sum() / TWO_PI
    n = int(np.rint(total))
    if abs(total - n) > defect:
        raise NumericFailure(f"winding number rounding defect {abs(total - n):.3g}")
    return n
