"""The invariant suite behind ``dclab verify``.

Each check returns a record {name, value, tol, ok}.  A check that raises a
library error is reported as failed with the message attached.
"""

from __future__ import annotations

import numpy as np

from .core import CylinderDomain, CylinderFunction, OperatorSpec, green_residual, log_radii
from .errors import DclabError
from .periodic import TWO_PI, PeriodicFunction


def _record(name, value, tol, note=""):
    value = float(value)
    return {"name": name, "value": value, "tol": tol, "ok": bool(np.isfinite(value) and value <= tol),
            "note": note}


def _random_sigma(rng, n):
    return rng.uniform(-3, 3, n) + 1j * rng.uniform(-3, 3, n)


def check_liouville(spec, rng, n=10):
    from .floquet import liouville_det, monodromy

    worst = 0.0
    for s in _random_sigma(rng, n):
        B = monodromy(spec, s, tol=1e-12).B
        ref = liouville_det(spec, s, TWO_PI)
        # det B cancels when the entries grow; measure against the two products
        scale = max(abs(B[0, 0] * B[1, 1]) + abs(B[0, 1] * B[1, 0]), abs(ref))
        worst = max(worst, abs(np.linalg.det(B) - ref) / scale)
    return _record("monodromy determinant", worst, 1e-8)


def check_structure(spec, rng, n=5):
    from .floquet import fg_residual, fundamental_matrix

    worst = 0.0
    for s in _random_sigma(rng, n):
        fm = fundamental_matrix(spec, s, tol=1e-12)
        fb = fundamental_matrix(spec, np.conj(s), tol=1e-12)
        # relative to the size of the two products, which grow like e^{|Re σ| t}
        beta = spec.lam.imag / abs(spec.lam) ** 2
        scale = (np.abs(fm.V[:, :, 0]) * np.abs(np.exp(-beta * s * fm.nodes))[:, None]).max() * \
            (np.abs(fb.V[:, :, 0]) * np.abs(np.exp(-beta * np.conj(s) * fb.nodes))[:, None]).max()
        worst = max(worst, float(np.abs(fg_residual(fm, fb, spec.lam)).max()) / max(1.0, scale))
    return _record("fundamental-matrix structure", worst, 1e-9)


def check_adjoint(spec, rng, n=5):
    from .floquet import adjoint_transform, fundamental_matrix

    worst = 0.0
    for s in _random_sigma(rng, n):
        fm = fundamental_matrix(spec, s)
        direct = adjoint_transform(fm)
        adj = fundamental_matrix(spec.with_epsilon(-spec.epsilon), -np.conj(s), adjoint=True)
        worst = max(worst, float(np.abs(direct.V - adj.V).max()))
    return _record("adjoint relation", worst, 1e-9)


def _single_mode(c: PeriodicFunction):
    """(c0, k) when c = i c0 e^{ikt}, else None."""
    co = c.coeffs
    nz = np.nonzero(np.abs(co) > 1e-13 * max(np.abs(co).max(), 1e-300))[0]
    if nz.size != 1:
        return None
    k = int(nz[0] - c.N)
    return complex(co[nz[0]]) / 1j, k


def check_spectrum(spec, window):
    worst = max((v.residual for v in window.values), default=0.0)
    out = [_record("spectral residual", worst, 1e-8)]
    out.append(_record("window gaps", len(window.gaps), 0))
    sm = _single_mode(spec.c)
    if sm is not None and spec.nu == 0:
        from .oracle import example3

        c0, k = sm
        worst = 0.0
        for v in window.values:
            refs = [example3(c0, k, spec.epsilon, v.j, spec.a, spec.b, br).sigma for br in (1, -1)]
            worst = max(worst, min(abs(v.sigma - r) for r in refs))
        out.append(_record("closed-form single-mode spectrum", worst, 1e-8))
    return out


def check_basic(spec, window):
    from .basic import basic_family, system_residual

    worst = 0.0
    for sv in window.distinct():
        for w in basic_family(spec, sv):
            worst = max(worst, system_residual(spec, w))
    return _record("basic-solution system residual", worst, 1e-8)


def check_green(spec, rng, M=128, P=128):
    radii = log_radii(0.5, 1.0, P)
    t = TWO_PI * np.arange(M) / M
    r, tt = radii[:, None], t[None, :]

    def smooth():
        a = rng.normal(size=(3, 5)) + 1j * rng.normal(size=(3, 5))
        return sum(a[p, l] * r ** p * np.exp(1j * (l - 2) * tt) for p in range(3) for l in range(5))

    u = CylinderFunction(radii, smooth())
    v = CylinderFunction(radii, smooth())
    res = green_residual(u, v, spec, CylinderDomain(0.5, 1.0))
    scale = max(1.0, abs(res.boundary), abs(res.area))
    return _record("Green identity", float(res) / scale, 1e-6)


def check_decoupled_kernel(spec, rng):
    from .kernels import kernel_context, kernel_decomposed

    spec0 = OperatorSpec(spec.a, spec.b, 0.0, spec.epsilon, PeriodicFunction.constant(0.0, 33))
    ctx = kernel_context(spec0, J=64)
    lam = spec0.lam
    worst = 0.0
    for d in (-1.0, -0.2, 0.2, 1.0):
        rho = 0.7
        r = rho * np.exp(d)
        t, th = rng.uniform(0, TWO_PI, 4), rng.uniform(0, TWO_PI, 4)
        z, ze = r ** lam * np.exp(1j * t), rho ** lam * np.exp(1j * th)
        kv = kernel_decomposed(ctx, r, t, rho, th)
        worst = max(worst, float(np.abs(kv.omega1 - 1j * ze / (ze - z)).max()),
                    float(np.abs(kv.omega2).max()))
    return _record("decoupled kernel oracle", worst, 1e-8)


def check_laurent(spec, rng, window, J=4):
    from .cylinder import laurent_coefficients, laurent_synthesize
    from .kernels import kernel_context

    ctx = kernel_context(spec, J=window.j_max, window=window)
    coeffs = {(t.j, t.branch): float(rng.normal()) for t in ctx.terms if abs(t.j) <= J}
    u = laurent_synthesize(ctx, coeffs, log_radii(0.25, 1.0, 64), 128)
    a = laurent_coefficients(ctx, u, R0=0.5, J=J)
    b = laurent_coefficients(ctx, u, R0=0.8, J=J)
    err = max(abs(a[k] - coeffs.get(k, 0.0)) for k in a.coefficients)
    dep = max(abs(a[k] - b[k]) for k in a.coefficients)
    return [_record("Laurent round trip", err, 1e-8), _record("Laurent radius independence", dep, 1e-8)]


def check_normalizer():
    from .normalizer import PlaneOperator, invariant_mu

    mu = invariant_mu(PlaneOperator("x^2+y^2", "0", "x^2+y^2"))
    return _record("normalizer Laplacian mu", abs(mu - 1), 1e-8)


def check_parser(src):
    from .expr import parse_expression

    e = parse_expression(src)
    return _record("expression print/parse", 0.0 if parse_expression(str(e)).tree == e.tree else 1.0, 0.0)


def run_suite(cfg: dict, spec: OperatorSpec) -> list:
    from .spectrum import find_spectral_values

    rng = np.random.default_rng(cfg.get("seed", 0))
    J = max(4, min(int(cfg.get("J", 8)), 8))
    out = []

    def guard(name, fn, *args):
        try:
            res = fn(*args)
        except DclabError as exc:
            out.append({"name": name, "value": float("inf"), "tol": 0.0, "ok": False, "note": str(exc)})
            return
        out.extend(res if isinstance(res, list) else [res])

    guard("monodromy determinant", check_liouville, spec, rng)
    guard("fundamental-matrix structure", check_structure, spec, rng)
    guard("adjoint relation", check_adjoint, spec, rng)
    try:
        window = find_spectral_values(spec, -J, J)
    except DclabError as exc:
        window = None
        out.append({"name": "spectrum window", "value": float("inf"), "tol": 0.0, "ok": False,
                    "note": str(exc)})
    if window is not None:
        guard("spectrum", check_spectrum, spec, window)
        guard("basic solutions", check_basic, spec, window)
        if not window.gaps:
            guard("Laurent", check_laurent, spec, rng, window)
    guard("Green identity", check_green, spec, rng)
    guard("decoupled kernel oracle", check_decoupled_kernel, spec, rng)
    guard("normalizer Laplacian mu", check_normalizer)
    guard("expression print/parse", check_parser, cfg.get("c", "0"))
    return out
