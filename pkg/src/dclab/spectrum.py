"""Spectral values: the spectral function, seeding, Newton refinement,
classification by winding index and ε-continuation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import hill
from .core import OperatorSpec
from .errors import InvalidInput, InvariantViolation, NumericFailure
from .floquet import integrate_system, monodromy
from .periodic import TWO_PI, PeriodicFunction, winding_number

_NODES = np.array([0.0, TWO_PI])


@dataclass
class SpectralValue:
    sigma: complex
    j: int
    branch: str            # "+", "-" or "±" (double root carrying both)
    multiplicity: int
    residual: float
    kind: str = "complex"  # "complex", "simple" (real) or "double" (real)
    # periodic pairs (φ, ψ) spanning the eigen-solutions, filled by the finder
    pairs: list = field(default_factory=list, repr=False, compare=False)


@dataclass
class SpectrumWindow:
    values: list
    j_min: int
    j_max: int
    gamma: float
    J0: int
    gaps: list = field(default_factory=list)

    def level(self, j: int) -> list:
        return [v for v in self.values if v.j == j]

    def find(self, j: int, branch: str = "+") -> SpectralValue:
        for v in self.level(j):
            if v.branch == branch or v.branch == "±":
                return v
        raise KeyError((j, branch))

    def distinct(self) -> list:
        """One entry per basic-solution family (complex pairs collapsed)."""
        out = []
        for v in self.values:
            if v.kind == "complex" and v.branch == "-":
                continue
            out.append(v)
        return out


# spectral function ---------------------------------------------------------

def _kappa(spec: OperatorSpec, sigma: complex):
    lam = spec.lam
    lb = lam.conjugate()
    d1 = (1j * sigma / lam - 1j * spec.nu, -1j * spec.nu, 1j / lam)
    d2 = (-1j * sigma / lb + 1j * spec.nu, 1j * spec.nu, -1j / lb)
    return d1 if d1[0].real >= d2[0].real else d2


def scaled_spectral_function(spec: OperatorSpec, sigma: complex, tol: float = 1e-12):
    """(F̃, F̃_σ, κ) with F̃ = e^{−2πκ(σ)}F and κ the dominant diagonal rate."""
    sigma = complex(sigma)
    lam = spec.lam
    kap, k0, k1 = _kappa(spec, sigma)
    fm = integrate_system(spec, sigma, _NODES, tol, kappa=kap, kappa1=k1)
    B, Bs = fm.V[-1], fm.V_sigma[-1]
    rate = 2 * lam.imag / abs(lam) ** 2
    e0 = np.exp(-TWO_PI * kap)
    e1 = np.exp(TWO_PI * (rate * sigma - kap))
    F = np.trace(B) - e0 - e1
    Fs = np.trace(Bs) + TWO_PI * k1 * e0 - TWO_PI * (rate - k1) * e1
    return complex(F), complex(Fs), kap


def spectral_residual(spec: OperatorSpec, sigma: complex, tol: float = 1e-12) -> float:
    """|F̃| relative to the size of its three terms (scale-free root residual)."""
    sigma = complex(sigma)
    lam = spec.lam
    kap, _, k1 = _kappa(spec, sigma)
    fm = integrate_system(spec, sigma, _NODES, tol, kappa=kap, kappa1=k1, with_sigma=False)
    B = fm.V[-1]
    rate = 2 * lam.imag / abs(lam) ** 2
    e0 = np.exp(-TWO_PI * kap)
    e1 = np.exp(TWO_PI * (rate * sigma - kap))
    tr = np.trace(B)
    return float(abs(tr - e0 - e1) / (abs(tr) + abs(e0) + abs(e1)))


def spectral_function(spec: OperatorSpec, sigma: complex, tol: float = 1e-12):
    """F = tr B − 1 − exp(4πbεσ/|λ_ε|²) and its σ-derivative."""
    sigma = complex(sigma)
    lam = spec.lam
    mono = monodromy(spec, sigma, tol)
    rate = 2 * lam.imag / abs(lam) ** 2
    e = np.exp(TWO_PI * rate * sigma)
    F = np.trace(mono.B) - 1 - e
    Fs = np.trace(mono.B_sigma) - TWO_PI * rate * e
    return complex(F), complex(Fs)


def newton(spec: OperatorSpec, sigma0: complex, tol: float = 1e-12, maxit: int = 12,
           real: bool = False, ode_tol: float = 1e-12, max_step: float | None = None):
    """Newton on F̃; returns (σ, |F̃|, iterations, converged).

    Steps are capped at ``max_step`` (default 2a, the scale of the level
    spacing) so that a poor seed cannot throw σ far from the window.
    """
    s = complex(sigma0)
    cap = 2 * spec.a if max_step is None else float(max_step)
    F, Fs, _ = scaled_spectral_function(spec, s, ode_tol)
    best = (s, abs(F))
    for it in range(1, maxit + 1):
        if Fs == 0:
            break
        step = F / Fs
        if real:
            step = step.real
        if abs(step) > cap:
            step *= cap / abs(step)
        s = s - step
        F, Fs, _ = scaled_spectral_function(spec, s, ode_tol)
        if abs(F) < best[1]:
            best = (s, abs(F))
        if abs(step) <= tol * max(1.0, abs(s)):
            return best[0], best[1], it, True
    return best[0], best[1], maxit, False


# seeding and classification ----------------------------------------------

def asymptotic_sigma(spec: OperatorSpec, j: int) -> complex:
    """λ_ε(j+ν) + γ/j."""
    if j == 0:
        raise InvalidInput("asymptotic_sigma needs j != 0")
    return spec.lam * (j + spec.nu) + spec.gamma / j


def default_J0(spec: OperatorSpec) -> int:
    g = spec.gamma
    if g == 0:
        return 1
    return int(math.floor(math.sqrt(4 * g / spec.a))) + 1


def _width(spec: OperatorSpec) -> int:
    bw = spec.c.bandwidth()
    return max(24, 6 * bw + 12)


def _dominance(phi: PeriodicFunction, psi: PeriodicFunction, rel: float = 1e-7) -> str:
    M = max(phi.M, psi.M)
    d = np.abs(phi.resample(M).samples) - np.abs(psi.resample(M).samples)
    scale = max(np.abs(phi.samples).max(), np.abs(psi.samples).max(), 1e-300)
    if np.all(np.abs(d) <= rel * scale):
        return "balanced"
    if d.min() > 0:
        return "phi"
    if d.max() < 0:
        return "psi"
    return "mixed"


def _grid_size(basis: hill.HillBasis, j: int, spec: OperatorSpec) -> int:
    ext = int(max(np.abs(basis.lphi).max(), np.abs(basis.lpsi).max()))
    M = max(2 * ext + 1, 8 * (abs(j) + spec.c.bandwidth()) + 1, 65)
    return M | 1


def _f_of(phi, psi):
    return phi + psi.conj()


def _real_f(phi, psi):
    """A nonzero f = φ + ψ̄ from the real span of (φ,ψ) and i(φ,ψ)."""
    best = None
    for s in (1.0, 1j, np.exp(0.25j * np.pi)):
        f = _f_of(phi * s, psi * s)
        if best is None or f.sup() > best.sup():
            best = f
    return best


def _jconj(phi, psi):
    return psi.conj(), phi.conj()


def _classify_vector(spec, basis, v, sigma, real_tol):
    M = _grid_size(basis, 0, spec)
    phi, psi = hill.to_functions(basis, v, M)
    is_real = abs(sigma.imag) <= real_tol * max(1.0, abs(sigma))
    dom = _dominance(phi, psi)
    if dom == "mixed":
        return None
    if not is_real:
        if dom != "phi":
            return None  # conjugate duplicate of a φ-dominant solution
        return ("complex", winding_number(phi), phi, psi)
    if dom == "balanced":
        return ("simple", winding_number(_real_f(phi, psi)), phi, psi)
    if dom == "psi":
        phi, psi = _jconj(phi, psi)
    return ("double", winding_number(phi), phi, psi)


def _finish_real_simple(cands):
    """Order real simple roots of one level as τ⁻ ≤ τ⁺."""
    cands.sort(key=lambda c: c[0].real)
    out = []
    for tag, (s, res, pairs) in zip(("-", "+"), cands):
        out.append((s, tag, res, pairs))
    return out


def _refine(spec, sigma, kind, newton_tol, ode_tol):
    if kind != "double":
        F0, _, _ = scaled_spectral_function(spec, sigma, ode_tol)
        s, res, _, _ = newton(spec, sigma, newton_tol, 8, real=(kind == "simple"), ode_tol=ode_tol)
        if res < abs(F0) and abs(s - sigma) < 1e-3 * max(1.0, abs(sigma)):
            sigma = s
        if kind == "simple":
            sigma = complex(sigma.real, 0.0)
    return sigma, spectral_residual(spec, sigma, ode_tol)


def level_pairs(spec: OperatorSpec, j: int, sigma: complex, kind: str, adjoint: bool = False):
    """(φ, ψ) pairs spanning the eigen-solutions at a refined σ (or μ = −σ when adjoint)."""
    W = _width(spec)
    target = -sigma if adjoint else sigma
    if kind == "simple":
        N = abs(j) + W + spec.c.bandwidth()
        basis = hill.symmetric_basis(spec, N)
    else:
        basis = hill.basis_for_level(spec, j, W, adjoint)
    vecs, s, _ = hill.null_space(spec, basis, target, adjoint, 1)
    M = _grid_size(basis, j, spec)
    phi, psi = hill.to_functions(basis, vecs[:, 0], M)
    pairs = [(phi, psi)]
    if kind == "double":
        pairs.append(_jconj(phi, psi))
    return pairs


def find_spectral_values(spec: OperatorSpec, j_min: int, j_max: int, tol: float = 1e-10,
                         J0: int | None = None, ode_tol: float = 1e-12) -> SpectrumWindow:
    if j_max < j_min:
        raise InvalidInput("need j_max >= j_min")
    J0 = default_J0(spec) if J0 is None else int(J0)
    W = _width(spec)
    bw = spec.c.bandwidth()
    Jg = max(J0, bw + 4, 8)
    real_tol = 1e-9
    found = {}   # j -> list of (kind, sigma, pairs)
    gaps = []

    small = [j for j in range(j_min, j_max + 1) if abs(j) <= Jg]
    if small:
        N = max(abs(small[0]), abs(small[-1])) + W + bw
        basis = hill.symmetric_basis(spec, N)
        for kind, j, s in _scan(spec, basis, real_tol):
            if j in small:
                found.setdefault(j, []).append((kind, s))

    values = []
    for j in range(j_min, j_max + 1):
        cands = found.get(j, [])
        if abs(j) > Jg or not cands:
            cands = _large_level(spec, j, W, real_tol, ode_tol, tol)
        level = []
        simple = []
        for kind, s in cands:
            s, res = _refine(spec, s, kind, min(tol, 1e-12), ode_tol)
            pairs = level_pairs(spec, j, s, kind)
            if kind == "complex":
                level.append(SpectralValue(s, j, "+", 1, res, kind, pairs))
                level.append(SpectralValue(s, j, "-", 1, res, kind, pairs))
            elif kind == "double":
                level.append(SpectralValue(s, j, "±", 2, res, kind, pairs))
            else:
                simple.append((s, res, pairs))
        for s, tag, res, pairs in _finish_real_simple(simple):
            level.append(SpectralValue(s, j, tag, 1, res, "simple", pairs))
        slots = sum(v.multiplicity for v in level if v.kind != "complex") + \
            sum(1 for v in level if v.kind == "complex")
        if slots != 2:
            if slots > 2:
                raise InvariantViolation(f"level {j}: {slots} basic solutions claim the index")
            gaps.append({"j": j, "found": slots,
                         "rectangle": (spec.a * (j - 2), spec.a * (j + 2))})
        values.extend(level)
    order = {"-": 0, "±": 1, "+": 2}
    values.sort(key=lambda v: (v.j, order[v.branch]))
    return SpectrumWindow(values, j_min, j_max, spec.gamma, J0, gaps)


def _scan(spec, basis, real_tol, near=None, radius=np.inf):
    """Classify every well-resolved Hill eigenvalue as (kind, index, σ)."""
    vals, vecs = hill.eigenpairs(spec, basis)
    M = _grid_size(basis, 0, spec)
    edge = basis.edge_rows()
    used = set()
    out = []
    for k in np.argsort(vals.real):
        if k in used:
            continue
        s = complex(vals[k])
        if near is not None and abs(s - near) > radius:
            continue
        near_real = abs(s.imag) <= 1e-6 * max(1.0, abs(s))
        cluster = [q for q in range(vals.size) if q not in used and
                   abs(vals[q] - s) <= 1e-6 * max(1.0, abs(s))] if near_real else [k]
        used.update(cluster)
        # least edge-supported direction of the cluster span
        Vc, _ = np.linalg.qr(vecs[:, cluster])
        _, sv, Vh = np.linalg.svd(Vc[edge], full_matrices=True)
        x = np.conj(Vh[-1])
        v = Vc @ x
        if np.linalg.norm(Vc[edge] @ x) ** 2 > 1e-10:
            continue
        n_int = int(np.sum(np.r_[sv, np.zeros(len(cluster) - sv.size)] ** 2 <= 1e-10))
        phi, psi = hill.to_functions(basis, v, M)
        try:
            if n_int >= 2:
                kind, j = "double", winding_number(_real_f(phi, psi))
            else:
                cl = _classify_vector(spec, basis, v, s, real_tol)
                if cl is None:
                    continue
                kind, j = cl[0], cl[1]
        except NumericFailure:
            continue
        if kind != "complex":
            s = complex(np.mean(vals[cluster]).real, 0.0)
        out.append((kind, j, s))
    return out


def _large_level(spec, j, W, real_tol, ode_tol, tol):
    """Asymptotic seed, then Newton (complex) or the local Hill value (real)."""
    basis = hill.basis_for_level(spec, j, W)
    seed = asymptotic_sigma(spec, j) if j != 0 else spec.lam * spec.nu
    cands = [(kind, s) for kind, jj, s in
             _scan(spec, basis, real_tol, seed, 0.45 * spec.a) if jj == j]
    if not cands:
        cands = [(kind, s) for kind, jj, s in _scan(spec, basis, real_tol) if jj == j]
    if not cands:
        return []
    cands.sort(key=lambda c: abs(c[1] - seed))
    if any(kind == "simple" for kind, _ in cands):
        return [c for c in cands if c[0] == "simple"][:2]
    kind, s = cands[0]
    if kind == "complex" and j != 0:
        sn, res, it, ok = newton(spec, seed, tol, 6, ode_tol=ode_tol)
        if ok and abs(sn - s) < 1e-6 * max(1.0, abs(s)):
            s = sn
    return [(kind, s)]


def classify_multiplicity(spec: OperatorSpec, sv: SpectralValue, tol: float = 1e-6) -> str:
    """'double' when B(σ) = I to the cluster tolerance, 'simple' otherwise."""
    sigma = sv.sigma
    lam = spec.lam
    growth = max(abs((1j * sigma / lam).real), abs((1j * sigma / lam.conjugate()).real))
    if growth * TWO_PI > 600:
        return "double" if sv.kind == "double" else "simple"
    B = monodromy(spec, sigma, 1e-12).B
    d = np.linalg.norm(B - np.eye(2)) / max(1.0, np.linalg.norm(B))
    if d <= tol:
        return "double"
    if d <= 10 * tol:
        return "indeterminate"
    return "simple"


def _failure_kind(spec: OperatorSpec, j: int, sigma: complex, rel: float = 1e-2) -> str:
    """'collision' when another value of the level sits next to σ, where the
    square-root branch point stalls the corrector."""
    try:
        # complex pairs share σ between the two branches: keep one of each
        others = [v.sigma for v in find_spectral_values(spec, j, j).distinct()]
    except (NumericFailure, InvariantViolation):
        return "corrector-failure"
    near = sorted(abs(s - sigma) for s in others)
    if abs(sigma.imag) > 0:
        near.insert(1, 2 * abs(sigma.imag))     # σ̄ is the partner of a complex value
    if len(near) >= 2 and near[1] <= rel * max(1.0, abs(sigma)):
        return "collision"
    return "corrector-failure"


@dataclass
class HomotopyResult:
    path: list          # (epsilon, sigma)
    event: str          # "persistent", "complex-split", "real-split", "collision", "corrector-failure"
    last_good: float


def track_epsilon_homotopy(spec: OperatorSpec, j: int, branch: str, eps_path,
                           tol: float = 1e-11, min_step: float = 1e-6) -> HomotopyResult:
    """Continue σ_j^branch(ε) from ε = eps_path[0] by predictor/corrector."""
    eps_path = [float(e) for e in eps_path]
    if not eps_path:
        raise InvalidInput("empty eps path")
    start = spec.with_epsilon(eps_path[0])
    win = find_spectral_values(start, j, j)
    sv = win.find(j, branch)
    path = [(eps_path[0], sv.sigma)]
    sigma = sv.sigma
    prev = None
    event = "persistent"
    was_real = sv.kind != "complex"
    eps_prev = eps_path[0]
    for e in eps_path[1:]:
        target, cur = e, eps_prev
        while cur < target - 1e-15 if target > eps_prev else cur > target + 1e-15:
            step = target - cur
            ok = False
            while abs(step) >= min_step:
                trial = cur + step
                pred = sigma if prev is None else sigma + (sigma - prev[1]) * step / (cur - prev[0]) \
                    if cur != prev[0] else sigma
                try:
                    s, res, _, conv = newton(spec.with_epsilon(trial), pred, tol, 10)
                except NumericFailure:      # Newton left the region the integrator handles
                    conv = False
                if conv and abs(s - sigma) <= 0.5 * spec.a:
                    prev = (cur, sigma)
                    cur, sigma = trial, s
                    ok = True
                    break
                step /= 2
            if not ok:
                return HomotopyResult(path, _failure_kind(spec.with_epsilon(cur), j, sigma), cur)
        eps_prev = e
        path.append((e, sigma))
        is_real = abs(sigma.imag) <= 1e-8 * max(1, abs(sigma))
        if was_real and not is_real:
            event = "complex-split"
        elif not was_real and is_real:
            event = "real-split"
        was_real = is_real
    return HomotopyResult(path, event, eps_prev)
