"""End-to-end acceptance checks, one test per criterion.

Each test records a line through the ``acceptance`` fixture; the lines are
printed in a summary section at the end of the run.
"""

import time
import warnings

import numpy as np
import pytest

from dclab.basic import asymptotic_forms, basic_family, character
from dclab.core import CylinderDomain, CylinderFunction, OperatorSpec, apply_operator, green_residual, log_radii
from dclab.cylinder import (LaurentExpansion, cauchy_integral, circle_curve, laurent_coefficients,
                            laurent_evaluate, laurent_synthesize, semilinear_solve, solve_T)
from dclab.floquet import adjoint_transform, fg_residual, fundamental_matrix, liouville_det, monodromy
from dclab.kernels import kernel_decomposed, kernel_omega
from dclab.oracle import example3, example3_coefficient, radial_oracle
from dclab.periodic import TWO_PI, PeriodicFunction
from dclab.spectrum import asymptotic_sigma, find_spectral_values


def test_c01_monodromy_determinant(spec3, acceptance):
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        s = complex(rng.uniform(-4, 4), rng.uniform(-4, 4))
        sp = spec3.with_epsilon(rng.uniform(-1, 1))
        B = monodromy(sp, s, tol=1e-12).B
        ref = liouville_det(sp, s, TWO_PI)
        # relative to the products in det B, which cancel when the entries are large
        worst = max(worst, abs(np.linalg.det(B) - ref) / max(abs(B[0, 0] * B[1, 1]) + abs(B[0, 1] * B[1, 0]), abs(ref)))
    dt = time.perf_counter() - t0
    ok = worst <= 1e-8 and dt <= 10
    acceptance(1, "monodromy determinant", ok, f"residual {worst:.1e} (tol 1e-8), {dt:.1f} s (limit 10 s)")
    assert ok


def test_c02_structure_and_symmetry(spec3, acceptance):
    rng = np.random.default_rng(12)
    lam = spec3.lam
    beta = lam.imag / abs(lam) ** 2
    worst_fg = worst_sym = 0.0
    for _ in range(20):
        s = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        fm = fundamental_matrix(spec3, s, tol=1e-12)
        fb = fundamental_matrix(spec3, np.conj(s), tol=1e-12)
        e = np.exp(beta * s * fm.nodes)
        eb = np.exp(-beta * np.conj(s) * fb.nodes)
        scale = max(1.0, np.abs(fm.V[:, :, 0] / e[:, None]).max() * np.abs(fb.V[:, :, 0] * eb[:, None]).max())
        worst_fg = max(worst_fg, np.abs(fg_residual(fm, fb, lam)).max() / scale)
        f_b, g_b = fb.V[:, 0, 0] * eb, fb.V[:, 1, 0] * eb / lam
        col = np.stack([np.conj(lam * g_b) * e, np.conj(f_b) * e], axis=1)
        worst_sym = max(worst_sym, np.abs(fm.V[:, :, 1] - col).max() / max(1.0, np.abs(col).max()))
    ok = worst_fg <= 1e-9 and worst_sym <= 1e-9
    acceptance(2, "fundamental-matrix structure", ok, f"f/g identity {worst_fg:.1e}, column symmetry {worst_sym:.1e} (tol 1e-9)")
    assert ok


def test_c03_adjoint_relations(spec3, acceptance):
    rng = np.random.default_rng(13)
    worst = 0.0
    for _ in range(10):
        s = complex(rng.uniform(-3, 3), rng.uniform(-3, 3))
        fm = fundamental_matrix(spec3, s, tol=1e-12)
        adj = fundamental_matrix(spec3.with_epsilon(-spec3.epsilon), -np.conj(s), tol=1e-12, adjoint=True)
        worst = max(worst, np.abs(adjoint_transform(fm).V - adj.V).max() / max(1.0, np.abs(adj.V).max()))
    ok = worst <= 1e-9
    acceptance(3, "adjoint relations", ok, f"matrix residual {worst:.1e} (tol 1e-9)")
    assert ok


@pytest.mark.slow
def test_c04_closed_form_spectrum(acceptance):
    worst, mismatches, configs = 0.0, 0, 0
    for k in (0, 1, 2, 3):
        for c0 in (0.3, 1.0, 2 + 1j):
            for eps in (0.0, 0.5, 1.0):
                configs += 1
                spec = OperatorSpec(1.0, 1.0, 0.0, eps, example3_coefficient(c0, k, 33))
                win = find_spectral_values(spec, -10, 10)
                assert not win.gaps
                for sv in win.distinct():
                    refs = [example3(c0, k, eps, sv.j, branch=b) for b in (1, -1)]
                    e = min(refs, key=lambda e: abs(e.sigma - sv.sigma))
                    worst = max(worst, abs(e.sigma - sv.sigma))
                    if sv.kind == "complex":
                        s, ind = character(basic_family(spec, sv)[0])
                        if ind != e.character[1] or abs(s - e.character[0]) > 1e-8 * max(1, abs(s)):
                            mismatches += 1
    ok = worst <= 1e-8 and mismatches == 0
    acceptance(4, "closed-form spectrum", ok, f"{configs} configurations, worst |σ error| {worst:.1e} (tol 1e-8), "
               f"{mismatches} character mismatches")
    assert ok


@pytest.mark.slow
def test_c05_asymptotics(acceptance):
    spec = OperatorSpec(1, 1, 0.3, 1, PeriodicFunction.from_modes({1: 0.5j, -2: 0.3}, 33))
    js = np.array([32, 64, 128, 256])
    es, gp, gs = [], [], []
    for j in js:
        sv = [v for v in find_spectral_values(spec, int(j), int(j)).level(int(j)) if v.branch in ("+", "±")][0]
        es.append(abs(sv.sigma - asymptotic_sigma(spec, int(j))))
        w = basic_family(spec, sv)[0]
        phi, psi = asymptotic_forms(spec, int(j))
        M = max(phi.M, w.phi.M) | 1
        p, q = w.phi.resample(M).samples, w.psi.resample(M).samples
        pa, qa = phi.resample(M).samples, psi.resample(M).samples
        s = np.vdot(pa, p) / np.vdot(pa, pa)     # best complex multiple
        gp.append(np.abs(p / s - pa).max())
        gs.append(np.abs(q / s - qa).max())
    slopes = [np.polyfit(np.log(js), np.log(e), 1)[0] for e in (es, gp, gs)]
    bounded = max(np.array(es) * js ** 2) / min(np.array(es) * js ** 2) < 2
    ok = all(abs(sl + 2) <= 0.3 for sl in slopes) and bounded
    acceptance(5, "asymptotic rates", ok, "log-log slopes σ {:.2f}, φ {:.2f}, ψ {:.2f} (target −2 ± 0.3)".format(*slopes))
    assert ok


def test_c06_decoupled_kernel(ctx0, spec0, acceptance):
    rng = np.random.default_rng(16)
    lam = spec0.lam
    worst = raw = 0.0
    for d in (-2.0, -1.0, -0.5, -0.2, 0.2, 0.5, 1.0, 2.0):
        rho = 0.7
        r = rho * np.exp(d)
        t, th = rng.uniform(0, TWO_PI, 6), rng.uniform(0, TWO_PI, 6)
        z, ze = r ** lam * np.exp(1j * t), rho ** lam * np.exp(1j * th)
        exact = 1j * ze / (ze - z)
        kv = kernel_decomposed(ctx0, r, t, rho, th)
        worst = max(worst, np.abs(kv.omega1 - exact).max(), np.abs(kv.omega2).max())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            raw = max(raw, np.abs(kernel_omega(ctx0, r, t, rho, th).omega1 - exact).max())
    ok = worst <= 1e-8
    acceptance(6, "decoupled kernel oracle", ok, f"decomposed error {worst:.1e} (tol 1e-8); raw truncated sum {raw:.1e}")
    assert ok


def test_c07_laurent_round_trip(ctx3_small, acceptance):
    rng = np.random.default_rng(17)
    coeffs = {(t.j, t.branch): float(rng.normal()) for t in ctx3_small.terms if abs(t.j) <= 4}
    u = laurent_synthesize(ctx3_small, coeffs, log_radii(0.25, 1.0, 64), 128)
    a = laurent_coefficients(ctx3_small, u, R0=0.5, J=4)
    b = laurent_coefficients(ctx3_small, u, R0=0.8, J=4)
    err = max(abs(a[k] - coeffs[k]) for k in coeffs)
    dep = max(abs(a[k] - b[k]) for k in coeffs)
    ok = err <= 1e-8 and dep <= 1e-8
    acceptance(7, "Laurent round trip", ok, f"recovery {err:.1e}, radius dependence {dep:.1e} (tol 1e-8)")
    assert ok


def test_c08_cauchy_formula(ctx3, acceptance):
    rng = np.random.default_rng(18)
    coeffs = {(t.j, t.branch): float(rng.normal()) for t in ctx3.terms if abs(t.j) <= 4}
    ex = LaurentExpansion(coeffs, ctx3, 1.0, ctx3.J)

    def f(r, t):
        return laurent_evaluate(ex, r, t)

    curves = [circle_curve(1.0, f, 512, 1), circle_curve(0.25, f, 512, -1)]
    r = rng.uniform(0.3, 0.9, 8)
    t = rng.uniform(0, TWO_PI, 8)
    err = np.abs(cauchy_integral(ctx3, curves, r, t) - f(r, t)).max()
    ok = err <= 1e-6
    acceptance(8, "Cauchy integral formula", ok, f"interior error {err:.1e} (tol 1e-6), 512 nodes per circle")
    assert ok


def _bump_rhs(spec, P, M=128, const=0.0, manufactured=True):
    radii = log_radii(np.exp(-4), 1.0, P)
    rr, tt = np.meshgrid(radii, TWO_PI * np.arange(M) / M, indexing="ij")
    s0, s1 = np.log(0.1), np.log(0.8)
    x = (np.log(rr) - s0) / (s1 - s0)
    inside = (x > 0) & (x < 1)
    with np.errstate(all="ignore"):
        chi = np.where(inside, np.exp(-1 / np.where(inside, x * (1 - x), 1)), 0.0)
        dchi = np.where(inside, chi * (1 - 2 * x) / np.where(inside, (x * (1 - x)) ** 2, 1) / (s1 - s0), 0.0)
    ang = const + np.exp(1j * tt) + 0.3 * np.exp(-2j * tt)
    u = chi * ang
    if not manufactured:
        return CylinderFunction(radii, u)
    F = spec.lam * chi * (1j * np.exp(1j * tt) - 0.6j * np.exp(-2j * tt)) - 1j * dchi * ang - spec.c(tt) * np.conj(u)
    return CylinderFunction(radii, F)


def test_c09_operator_T(ctx3, ctx0, spec3, spec0, acceptance):
    rep = solve_T(ctx3, _bump_rhs(spec3, 128))
    hat3 = solve_T(ctx3, _bump_rhs(spec3, 128), mode="hat")
    # c ≡ 0 has the exponent σ = 0; a bump F (not of the form ℒu) has TF(0,t) ≠ 0 there
    hat0 = solve_T(ctx0, _bump_rhs(spec0, 128, const=0.5, manufactured=False), mode="hat")
    plain0 = solve_T(ctx0, _bump_rhs(spec0, 128, const=0.5, manufactured=False))
    tf0 = max(np.abs(hat3.extra["tf0"]).max(), np.abs(hat0.extra["tf0"]).max())
    ok = rep.residual <= 1e-4 and hat0.residual <= 1e-4 and plain0.residual <= 1e-4 and tf0 <= 1e-8
    acceptance(9, "operator T", ok, f"residual {rep.residual:.1e} (c≡0: {hat0.residual:.1e}, tol 1e-4); "
               f"hat TF(0,t) {tf0:.1e} (tol 1e-8, plain c≡0 gives {np.abs(plain0.extra['tf0']).max():.1e})")
    assert ok


def test_c10_green_identity(spec3, acceptance):
    res = {}
    for P in (64, 128):
        rng = np.random.default_rng(20)
        radii = log_radii(0.5, 1.0, P)
        t = TWO_PI * np.arange(128) / 128
        r, tt = radii[:, None], t[None, :]
        A = rng.normal(size=(2, 3, 5)) + 1j * rng.normal(size=(2, 3, 5))
        u, v = (CylinderFunction(radii, sum(a[p, l] * r ** p * np.exp(1j * (l - 2) * tt)
                                            for p in range(3) for l in range(5))) for a in A)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            res[P] = float(green_residual(u, v, spec3, CylinderDomain(0.5, 1.0)))
    ok = res[128] <= 1e-6 and res[64] / res[128] >= 4
    acceptance(10, "Green identity", ok, f"residual {res[128]:.1e} at M = P = 128 (tol 1e-6), "
               f"improvement {res[64] / res[128]:.1f}x on doubling (need 4x)")
    assert ok


def test_c11_second_order(p3, p3_ctx, acceptance):
    from dclab.second_order import apply_P, build_P, l_potential, reconstruct_u, solve_K

    lam = 1 + 1j
    p = build_P(lam, PeriodicFunction.constant(-1j, 33))
    u, w, _ = radial_oracle(lam, 1)
    radii = log_radii(0.05, 1.0, 321)
    U = CylinderFunction.sample(lambda r, t: u(r) + 0 * t, radii, 64)
    W = CylinderFunction.sample(w, radii, 64)
    Pu = np.abs(apply_P(p, U).values).max()
    Lw = np.abs(apply_operator(p.op, W).values[2:-2]).max()
    lpot = np.abs(l_potential(p, U).values - W.values).max()
    recon = np.ptp((reconstruct_u(p, W).values - U.values).real)
    # P𝕂F − F for a manufactured bump
    from tests.test_second_order import _bump
    F, _ = _bump(p3, 256)
    kres = solve_K(p3, F, ctx=p3_ctx).residual
    ok = Pu <= 1e-6 and Lw <= 1e-6 and recon <= 1e-6 and kres <= 1e-3
    acceptance(11, "second order", ok, f"Pu {Pu:.1e}, Lw {Lw:.1e}, potential {lpot:.1e} (tol 1e-6); "
               f"reconstruction spread {recon:.1e} (tol 1e-6); PKF - F {kres:.1e} (tol 1e-3)")
    assert ok


def test_c12_normalizer(acceptance):
    from dclab.normalizer import PlaneOperator, invariant_mu, model_pushforward

    lap = invariant_mu(PlaneOperator("x^2+y^2", "0", "x^2+y^2"))
    fam = invariant_mu(PlaneOperator("y^2+4*x^2", "3*x*y", "x^2+4*y^2"))
    mp = model_pushforward(1 + 0.7j)
    scale = max(abs(invariant_mu(mp.scaled(s)) - invariant_mu(mp)) for s in (0.2, 5.0))
    ok = abs(lap - 1) <= 1e-8 and abs(fam - 2) <= 1e-8 and scale <= 1e-12
    acceptance(12, "normalizer", ok, f"|μ - 1| {abs(lap - 1):.1e}, |μ - 2| {abs(fam - 2):.1e} (tol 1e-8); "
               f"scale change {scale:.1e} (tol 1e-12)")
    assert ok


def test_c13_maximum_principle(p3, acceptance):
    from dclab.second_order import build_P, hypothesis_H_check, p_series

    win = find_spectral_values(p3.op, -4, 4)
    assert hypothesis_H_check(p3, window=win)
    rng = np.random.default_rng(23)
    keys = [(v.j, b) for v in win.distinct() if v.sigma.real > 1e-9
            for b in (("+", "-") if v.kind != "simple" else (v.branch,))]
    rad = np.concatenate([[0.0], log_radii(1e-4, 1, 60)])
    t = np.linspace(0, TWO_PI, 128, endpoint=False)
    bad = 0
    for _ in range(20):
        co = {k: rng.normal() for k in keys}
        u0 = rng.normal()
        U = p_series(p3, u0, co, rad[:, None], t[None, :], win)
        on_axis = 0 in (np.unravel_index(U.argmax(), U.shape)[0], np.unravel_index(U.argmin(), U.shape)[0])
        bad += bool(on_axis)
    rep = hypothesis_H_check(build_P(1 + 1j, PeriodicFunction.constant(-1j, 33)))
    wit = rep.witness
    ok = bad == 0 and rep.verdict == "violated" and wit.get("part") == "H1"
    acceptance(13, "maximum principle", ok, f"{bad}/20 trials with an extremum on the axis; "
               f"constant beta = -i gives {rep.verdict} {wit.get('part')} at σ = {wit.get('sigma', 0):.6g}, j = {wit.get('j')}")
    assert ok


@pytest.mark.slow
def test_c14_semilinear(ctx3, p3, p3_ctx, acceptance):
    from dclab.second_order import HData, p_semilinear_solve, p_series

    term = [t for t in ctx3.terms if t.j == 1 and t.branch == "+"][0]
    R = 0.2
    radii = log_radii(R * 1e-4, R, 160)
    u0 = CylinderFunction.sample(lambda r, t: term.direct(r, t), radii, 128)
    lines, ok = [], True
    for mode in ("plain", "modified"):
        rep = semilinear_solve(ctx3, lambda v, r, t: np.ones_like(v), 0.5, u0, mode=mode, j0=1)
        lo, hi = rep.extra["ratio_min"], rep.extra["ratio_max"]
        ok &= rep.iterations <= 30 and 0.1 <= lo <= hi <= 10 and rep.residual <= 1e-3
        lines.append(f"{mode}: {rep.iterations} it, ratio [{lo:.2f}, {hi:.2f}], residual {rep.residual:.1e}")
    Rp = 1e-3
    rad = log_radii(Rp * 1e-4, Rp, 160)
    v0 = CylinderFunction.sample(lambda r, t: p_series(p3, 0.0, {(1, "+"): 1.0}, r, t, p3_ctx.window), rad, 64)
    rep = p_semilinear_solve(p3, HData(f0=1.0, g2=0.5, f1=0.2j), 0.5, v0, j0=1, ctx=p3_ctx)
    lo, hi = rep.extra["C1"], rep.extra["C2"]
    ok &= rep.iterations <= 30 and 0.1 <= lo <= hi <= 10 and rep.residual <= 1e-3
    lines.append(f"second order: {rep.iterations} it, ratio [{lo:.2f}, {hi:.2f}], residual {rep.residual:.1e}")
    acceptance(14, "semilinear solvers", ok, "; ".join(lines))
    assert ok
