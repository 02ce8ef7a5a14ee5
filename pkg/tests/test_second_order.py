import numpy as np
import pytest

from dclab.basic import basic_family
from dclab.core import CylinderFunction, apply_operator, log_radii
from dclab.errors import InvalidInput
from dclab.oracle import radial_oracle
from dclab.periodic import PeriodicFunction
from dclab.second_order import (HData, apply_P, build_P, hypothesis_H_check, l_potential,
                                p_semilinear_solve, p_series, radial_solutions, reconstruct_u,
                                solve_K)

LAM = 1 + 1j


def test_build_P_identities():
    p = build_P(LAM, PeriodicFunction.constant(-1j, 33))
    assert p.k == -1 and p.lb_residual < 1e-10
    q = build_P(LAM, PeriodicFunction.from_modes({1: 0.3j, -2: 0.1}, 33))
    assert q.k == 0 and q.lb_residual < 1e-10
    assert q.op.nu == 0


def test_build_P_validation():
    with pytest.raises(InvalidInput):
        build_P(LAM, PeriodicFunction.constant(0.3j, 33))
    with pytest.raises(InvalidInput):
        build_P(-1 + 1j, 0.0)


def test_radial_solutions():
    assert radial_solutions(build_P(LAM, PeriodicFunction.constant(-1j, 33))).k == 1
    assert radial_solutions(build_P(LAM, PeriodicFunction.constant(0.0, 33))).kind == "log"
    assert radial_solutions(1 + 0.5j, PeriodicFunction.from_modes({1: 0.3j, -2: 0.1}, 33)) is None
    sol = radial_solutions(LAM, -2j)
    assert sol.kind == "power" and sol.u(2.0) == pytest.approx(2.0 ** 4 + 0)


def _radial_pair(P):
    p = build_P(LAM, PeriodicFunction.constant(-1j, 33))
    u, w, _ = radial_oracle(LAM, 1)
    radii = log_radii(0.05, 1, P)
    U = CylinderFunction.sample(lambda r, t: u(r) + 0 * t, radii, 64)
    W = CylinderFunction.sample(w, radii, 64)
    return p, U, W


def test_radial_pair_potential_and_reconstruction():
    errs = []
    for P in (81, 161):
        p, U, W = _radial_pair(P)
        errs.append(np.abs(l_potential(p, U).values - W.values).max())
    assert errs[1] <= 5e-6 and errs[0] / errs[1] > 3
    assert np.abs(apply_operator(p.op, W).values[2:-2]).max() <= 1e-10
    assert np.abs(apply_P(p, U).values).max() <= 1e-4
    d = (reconstruct_u(p, W).values - U.values).real
    assert np.ptp(d) <= 1e-6


def test_series_solves_P(p3, p3_window):
    rad = log_radii(0.05, 1, 161)
    S = CylinderFunction.sample(lambda r, t: p_series(p3, 0.0, {(1, "+"): 1.0, (2, "+"): 0.5}, r, t,
                                                      p3_window), rad, 64)
    assert np.abs(apply_P(p3, S).values[2:-2]).max() <= 1e-5


def test_series_potential_round_trip(p3, p3_window):
    rad = log_radii(0.05, 1, 201)
    co = {(1, "+"): 0.7, (1, "-"): -0.4, (2, "+"): 0.3}
    S = CylinderFunction.sample(lambda r, t: p_series(p3, 0.2, co, r, t, p3_window), rad, 64)
    W = l_potential(p3, S)
    ex = 0
    for (j, b), c in co.items():
        w = [x for x in basic_family(p3.op, p3_window.find(j, b)) if x.branch == b][0]
        ex = ex + c * w(rad[:, None], S.t[None, :])
    assert np.abs(W.values - ex)[3:-3].max() <= 1e-7
    d = (reconstruct_u(p3, W).values - S.values).real
    assert np.ptp(d[3:-3]) <= 1e-7


def test_maximum_principle(p3):
    from dclab.spectrum import find_spectral_values

    win = find_spectral_values(p3.op, -4, 4)
    rng = np.random.default_rng(1)
    keys = [(v.j, b) for v in win.distinct() if v.sigma.real > 1e-9
            for b in (("+", "-") if v.kind != "simple" else (v.branch,))]
    rad = np.concatenate([[0.0], log_radii(1e-4, 1, 60)])
    t = np.linspace(0, 2 * np.pi, 128, endpoint=False)
    for _ in range(20):
        co = {k: rng.normal() for k in keys}
        u0 = rng.normal()
        U = p_series(p3, u0, co, rad[:, None], t[None, :], win)
        # extrema on the outer circle, and u − u(0) changes sign near 0
        assert np.unravel_index(U.argmax(), U.shape)[0] == rad.size - 1
        assert np.unravel_index(U.argmin(), U.shape)[0] == rad.size - 1
        assert U[1].max() > u0 > U[1].min()


def test_hypothesis_H():
    assert hypothesis_H_check(build_P(1.0, PeriodicFunction.constant(0.0, 33)))
    assert hypothesis_H_check(build_P(LAM, PeriodicFunction.constant(0.0, 33)))
    rep = hypothesis_H_check(build_P(LAM, PeriodicFunction.constant(-1j, 33)))
    assert rep.verdict == "violated" and rep.witness["part"] == "H1"
    assert rep.witness["sigma"] == pytest.approx(2.0) and rep.witness["j"] == 1


def test_hypothesis_indeterminate_on_short_window(p3):
    from dclab.spectrum import find_spectral_values

    rep = hypothesis_H_check(p3, window=find_spectral_values(p3.op, 0, 0))
    assert rep.verdict == "indeterminate"


def _bump(p, P):
    lam = p.lam
    s0, s1 = np.log(0.1), np.log(0.8)
    Ls = s1 - s0

    def parts(r):
        x = (np.log(r) - s0) / Ls
        inside = (x > 0) & (x < 1)
        xx = np.where(inside, x, 0.5)
        q = xx - xx * xx
        d1 = (1 - 2 * xx) / q ** 2
        d2 = (-2 * q - 2 * (1 - 2 * xx) ** 2) / q ** 3
        chi = np.where(inside, np.exp(-1 / q), 0)
        return chi, chi * d1 / Ls, chi * (d1 ** 2 + d2) / Ls ** 2

    def g(t, n=0):
        return [np.cos(t) + 0.3 * np.sin(2 * t), -np.sin(t) + 0.6 * np.cos(2 * t),
                -np.cos(t) - 1.2 * np.sin(2 * t)][n]

    def Pu(r, t):
        c, cs, css = parts(r)
        b = p.beta(t)
        l2 = abs(lam) ** 2
        return (l2 * c * g(t, 2) - 2 * lam.imag * cs * g(t, 1) + css * g(t)
                + 2 * l2 * b.real * c * g(t, 1) + 2 * np.imag(lam.conjugate() * b) * cs * g(t))

    rad = log_radii(np.exp(-4), 1, P)
    return (CylinderFunction.sample(Pu, rad, 128).like(CylinderFunction.sample(Pu, rad, 128).values.real),
            CylinderFunction.sample(lambda r, t: parts(r)[0] * g(t), rad, 128))


def test_solve_K_manufactured(p3, p3_ctx):
    diffs = []
    for P in (128, 256):
        F, U = _bump(p3, P)
        rep = solve_K(p3, F, ctx=p3_ctx)
        diffs.append(np.abs(rep.solution.values - U.values.real).max())
        assert abs(rep.solution.values[:3]).max() <= 1e-10
    assert rep.residual <= 1e-4 and diffs[1] <= 1e-7 and diffs[0] / diffs[1] > 8


def test_solve_K_validation(p3, p3_ctx):
    F, _ = _bump(p3, 64)
    with pytest.raises(InvalidInput):
        solve_K(p3, F.like(F.values * 1j), ctx=p3_ctx)
    with pytest.raises(InvalidInput):
        solve_K(p3, F, mode="plain", ctx=p3_ctx)
    assert solve_K(p3, F.like(0 * F.values), ctx=p3_ctx).residual == 0


def test_p_semilinear(p3, p3_ctx):
    win = p3_ctx.window
    R = 1e-3
    rad = log_radii(R * 1e-4, R, 160)
    u0 = CylinderFunction.sample(lambda r, t: p_series(p3, 0.0, {(1, "+"): 1.0}, r, t, win), rad, 64)
    rep = p_semilinear_solve(p3, HData(f0=1.0, g2=0.5, f1=0.2j), 0.5, u0, j0=1, ctx=p3_ctx)
    assert rep.residual <= 1e-6 and rep.iterations <= 40
    assert 0.5 < rep.extra["C1"] <= rep.extra["C2"] < 2
    rep0 = p_semilinear_solve(p3, HData(), 0.5, u0, j0=1, ctx=p3_ctx)
    assert np.abs(rep0.solution.values - u0.values).max() == 0
    with pytest.raises(InvalidInput):
        p_semilinear_solve(p3, HData(f0=1.0), -0.5, u0, j0=1, ctx=p3_ctx)
