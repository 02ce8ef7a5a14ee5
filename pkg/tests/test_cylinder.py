import warnings

import numpy as np
import pytest

from dclab.core import CylinderFunction, log_radii
from dclab.cylinder import (LaurentExpansion, cauchy_integral, circle_curve, laurent_coefficients,
                            laurent_evaluate, laurent_synthesize, norm_pa, patch_check,
                            semilinear_solve, solve_T)
from dclab.errors import InvalidInput, NumericFailure


def _coeffs(ctx, rng, J=4):
    return {(t.j, t.branch): float(rng.normal()) for t in ctx.terms if abs(t.j) <= J}


def test_laurent_round_trip(ctx3_small, rng):
    coeffs = _coeffs(ctx3_small, rng)
    u = laurent_synthesize(ctx3_small, coeffs, log_radii(0.25, 1.0, 64), 128)
    for R0 in (0.5, 0.8):
        ex = laurent_coefficients(ctx3_small, u, R0=R0, J=4)
        assert max(abs(ex[k] - coeffs[k]) for k in coeffs) <= 1e-8
        assert ex.drift <= 1e-8
    assert ex.bound_constant(float(np.abs(u.values).max())) > 0


def test_laurent_drift_flags_non_solutions(ctx3_small):
    radii = log_radii(0.25, 1.0, 64)
    t = 2 * np.pi * np.arange(128) / 128
    u = CylinderFunction(radii, (radii[:, None] ** 2) * np.cos(t)[None, :])
    with pytest.warns(RuntimeWarning):
        ex = laurent_coefficients(ctx3_small, u, R0=0.5, J=4)
    assert ex.drift > 1e-8


def test_laurent_evaluate_bounded(ctx3_small, rng):
    coeffs = _coeffs(ctx3_small, rng, 2)
    ex = LaurentExpansion(coeffs, ctx3_small, 1.0, 2)
    with pytest.raises(InvalidInput):
        laurent_evaluate(ex, 0.0, 0.0)
    v = laurent_evaluate(ex, 0.0, 0.0, bounded=True)
    assert np.isfinite(v)
    with pytest.raises(InvalidInput):
        LaurentExpansion(coeffs, ctx3_small, 1.0, 99).bound_constant(1.0)


def test_cauchy_reproduces_solution(ctx3, rng):
    coeffs = _coeffs(ctx3, rng)
    ex = LaurentExpansion(coeffs, ctx3, 1.0, 64)

    def f(r, t):
        return laurent_evaluate(ex, r, t)

    curves = [circle_curve(1.0, f, 512, 1), circle_curve(0.25, f, 512, -1)]
    r = np.array([0.35, 0.5, 0.7, 0.9])
    t = np.array([0.3, 2.0, 4.0, 5.5])
    got = cauchy_integral(ctx3, curves, r, t)
    assert np.abs(got - f(r, t)).max() <= 1e-6 * max(1.0, np.abs(f(r, t)).max())


def test_circle_curve_validates():
    with pytest.raises(InvalidInput):
        circle_curve(1.0, np.zeros(10), n=12)


def _bump_problem(spec, P, R=1.0, M=128):
    radii = log_radii(R * np.exp(-4), R, P)
    rr, tt = np.meshgrid(radii, 2 * np.pi * np.arange(M) / M, indexing="ij")
    s0, s1 = np.log(0.1), np.log(0.8)
    x = (np.log(rr) - s0) / (s1 - s0)
    inside = (x > 0) & (x < 1)
    with np.errstate(all="ignore"):
        chi = np.where(inside, np.exp(-1 / np.where(inside, x * (1 - x), 1)), 0.0)
        dchi = np.where(inside, chi * (1 - 2 * x) / np.where(inside, (x * (1 - x)) ** 2, 1) / (s1 - s0), 0.0)
    ang = np.exp(1j * tt) + 0.3 * np.exp(-2j * tt)
    dang = 1j * np.exp(1j * tt) - 0.6j * np.exp(-2j * tt)
    u = chi * ang
    F = spec.lam * chi * dang - 1j * dchi * ang - spec.c(tt) * np.conj(u)
    return CylinderFunction(radii, F), u


def test_solve_T_manufactured(ctx3, spec3):
    errs = []
    for P in (64, 128):
        F, u = _bump_problem(spec3, P)
        rep = solve_T(ctx3, F)
        errs.append(np.abs(rep.solution.values - u).max())
        assert not rep.flagged or P == 64
        assert rep.extra["tail"] < 1e-8
        assert rep.bound_check < 1.0
    assert errs[1] <= 1e-6
    assert errs[0] / errs[1] > 8


def test_solve_T_hat_vanishes_at_origin(ctx3, spec3):
    F, _ = _bump_problem(spec3, 64)
    rep = solve_T(ctx3, F, mode="hat")
    assert np.abs(rep.extra["tf0"]).max() <= 1e-8


def test_hat_T_subtracts_value_on_axis(ctx0):
    """With σ = 0 in the spectrum, T̂F = TF − TF(0,t) and both solve ℒu = F."""
    radii = log_radii(np.exp(-4), 1.0, 128)
    t = 2 * np.pi * np.arange(160) / 160
    x = (np.log(radii) - np.log(0.1)) / (np.log(0.8) - np.log(0.1))
    inside = (x > 0) & (x < 1)
    chi = np.where(inside, np.exp(-1 / np.where(inside, x * (1 - x), 1)), 0.0)
    F = CylinderFunction(radii, chi[:, None] * (0.5 + np.exp(1j * t))[None, :])
    plain = solve_T(ctx0, F)
    hat = solve_T(ctx0, F, mode="hat")
    assert np.abs(plain.extra["tf0"]).max() > 1e-3
    assert np.abs(hat.extra["tf0"]).max() == 0
    diff = hat.solution.values - plain.solution.values
    assert np.abs(diff + plain.extra["tf0"][None, :]).max() <= 1e-10
    assert max(plain.residual, hat.residual) <= 1e-4


def test_solve_T_modes_and_validation(ctx3, spec3):
    F, _ = _bump_problem(spec3, 64)
    with pytest.raises(InvalidInput):
        solve_T(ctx3, F, mode="nope")
    with pytest.raises(InvalidInput):
        solve_T(ctx3, F, mode="modified")
    zero = solve_T(ctx3, F.like(np.zeros_like(F.values)))
    assert zero.residual == 0
    rep = solve_T(ctx3, F, mode="modified", j0=1)
    assert rep.residual < 1e-3
    assert norm_pa(F, 1.0, 3.0) > 0


def test_solve_T_rejects_singular_data(ctx3):
    radii = log_radii(1e-4, 1.0, 64)
    F = CylinderFunction(radii, np.ones((64, 32)) / radii[:, None] ** 2)
    with pytest.raises(InvalidInput):
        solve_T(ctx3, F)


def test_semilinear(ctx3):
    term = [t for t in ctx3.terms if t.j == 1 and t.branch == "+"][0]
    R = 0.2
    radii = log_radii(R * 1e-4, R, 160)
    u0 = CylinderFunction.sample(lambda r, t: term.direct(r, t), radii, 128)
    rep = semilinear_solve(ctx3, lambda v, r, t: np.ones_like(v), 0.5, u0)
    assert rep.iterations <= 30
    assert rep.residual <= 1e-3 and not rep.flagged
    ch = rep.extra["changes"]
    assert ch[-1] < ch[0]


def test_semilinear_validation(ctx3_small):
    term = ctx3_small.terms[0]
    u0 = CylinderFunction.sample(lambda r, t: term.direct(r, t), log_radii(0.1, 1.0, 32), 32)
    with pytest.raises(InvalidInput):
        semilinear_solve(ctx3_small, lambda v, r, t: v, -1.0, u0)


def test_semilinear_divergence_reported(ctx3):
    term = [t for t in ctx3.terms if t.j == 1 and t.branch == "+"][0]
    u0 = CylinderFunction.sample(lambda r, t: term.direct(r, t), log_radii(1e-3, 5.0, 96), 64)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(NumericFailure):
            semilinear_solve(ctx3, lambda v, r, t: 50 * np.ones_like(v), 0.5, u0, maxit=12)


def test_patch(ctx0, ctx3_small):
    radii = log_radii(0.1, 1.0, 40)
    t = 2 * np.pi * np.arange(64) / 64
    u = CylinderFunction(radii, np.ones((40, 64)) + radii[:, None] * np.exp(1j * t)[None, :])
    res = patch_check(ctx0, u, u, 0.5)
    assert res and res.tag == "item 2"
    v = u.like(u.values + 0.1)
    assert not patch_check(ctx0, v, u, 0.5)
    assert patch_check(ctx3_small, u, v, 0.5).tag == "item 1"
