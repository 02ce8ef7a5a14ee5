import itertools

import numpy as np
import pytest

from dclab.core import OperatorSpec
from dclab.errors import InvalidInput
from dclab.oracle import decoupled_spectrum, example3, example3_coefficient
from dclab.periodic import PeriodicFunction
from dclab.spectrum import (asymptotic_sigma, classify_multiplicity, find_spectral_values, newton,
                            scaled_spectral_function, spectral_residual, track_epsilon_homotopy)


def _spec(c0, k, eps=1.0, a=1.0, b=1.0):
    return OperatorSpec(a, b, 0.0, eps, example3_coefficient(c0, k, 33))


def test_closed_form_value_is_a_root():
    e = example3(1.0, 2, 1.0, 1)
    assert spectral_residual(_spec(1.0, 2), e.sigma) <= 1e-9


def test_non_root_has_large_residual():
    assert spectral_residual(_spec(0.5, 1), 0.37 + 0.2j) > 1e-3


def test_newton_converges_from_nearby_seed():
    spec = _spec(0.5, 1)
    exact = example3(0.5, 1, 1.0, 2).sigma
    s, res, _, conv = newton(spec, exact + 0.05 - 0.03j)
    assert conv and abs(s - exact) < 1e-10


def test_scaled_function_is_finite_far_out():
    F = scaled_spectral_function(_spec(0.5, 1), 40 + 40j)
    assert np.all(np.isfinite(np.asarray(F[0] if isinstance(F, tuple) else F)))


def test_odd_k_matches_quadratic():
    spec = _spec(0.5, 1)
    win = find_spectral_values(spec, -12, 12)
    assert not win.gaps
    for v in win.values:
        refs = [example3(0.5, 1, 1.0, v.j, branch=s).sigma for s in (1, -1)]
        assert min(abs(v.sigma - r) for r in refs) <= 1e-8


@pytest.mark.parametrize("k,c0,eps", [(0, 0.3, 0.0), (2, 2 + 1j, 0.5), (3, 1.0, 1.0)])
def test_closed_form_grid(k, c0, eps):
    win = find_spectral_values(_spec(c0, k, eps), -6, 6)
    assert not win.gaps
    for v in win.values:
        refs = [example3(c0, k, eps, v.j, branch=s).sigma for s in (1, -1)]
        assert min(abs(v.sigma - r) for r in refs) <= 1e-8


def test_resonant_level_formula():
    # k = 2j₀ with j₀ = 1 and |c₀| > bε: σ = a + sqrt(|c₀|² − b²ε²)
    spec = _spec(2.0, 2)
    vals = sorted(v.sigma.real for v in find_spectral_values(spec, 1, 1).values)
    assert vals[-1] == pytest.approx(1 + np.sqrt(3), abs=1e-8)


def test_odd_k_values_are_simple():
    spec = _spec(0.5, 3)
    for v in find_spectral_values(spec, -4, 4).values:
        assert abs(abs(example3(0.5, 3, 1.0, v.j).D) - 1) > 1e-6
        assert classify_multiplicity(spec, v) == "simple"


def test_asymptotic_consistency_with_closed_form():
    spec = _spec(0.5, 1)
    js = np.array([16, 32, 64, 128, 256])
    err = [abs(example3(0.5, 1, 1.0, int(j)).sigma - asymptotic_sigma(spec, int(j))) for j in js]
    slope = np.polyfit(np.log(js), np.log(err), 1)[0]
    assert slope == pytest.approx(-2, abs=0.3)


def test_asymptotic_sigma_needs_nonzero_j(spec3):
    with pytest.raises(InvalidInput):
        asymptotic_sigma(spec3, 0)


def test_decoupled_spectrum_matches_oracle():
    spec = OperatorSpec(1.0, 0.5, 0.3, 1.0, PeriodicFunction.constant(0.0, 33))
    win = find_spectral_values(spec, -3, 3)
    oracle = {d.sigma for d in decoupled_spectrum(spec.lam, 0.3, range(-3, 4)) if d.family == "phi"}
    for v in win.values:
        assert min(abs(v.sigma - s) for s in oracle) < 1e-10
    assert len(win.distinct()) == 7


def test_window_bookkeeping(spec3):
    win = find_spectral_values(spec3, -3, 3)
    js = [v.j for v in win.values]
    assert js == sorted(js) and set(js) == set(range(-3, 4))
    for j in range(-3, 4):
        lvl = win.level(j)
        assert sum(v.multiplicity for v in lvl if v.kind != "complex") + \
            sum(1 for v in lvl if v.kind == "complex") == 2
    assert win.find(1, "+").j == 1
    with pytest.raises(KeyError):
        win.find(9)


def test_bad_window(spec3):
    with pytest.raises(InvalidInput):
        find_spectral_values(spec3, 2, 1)


def test_homotopy_collision():
    """k = 2, j₀ = 1, c₀ = 0.3: real until bε = |c₀|, then the pair collides."""
    spec = _spec(0.3, 2, eps=0.0)
    res = track_epsilon_homotopy(spec, 1, "+", np.linspace(0, 0.25, 6))
    assert res.event == "persistent"
    assert all(abs(s.imag) < 1e-8 for _, s in res.path)
    for e, s in res.path:
        assert s == pytest.approx(1 + np.sqrt(0.09 - e * e), abs=1e-8)
    res = track_epsilon_homotopy(spec, 1, "+", np.linspace(0, 0.6, 13))
    assert res.event == "collision"
    assert res.last_good == pytest.approx(0.3, abs=1e-4)


def test_homotopy_complex_side():
    spec = _spec(0.3, 2, eps=0.5)
    res = track_epsilon_homotopy(spec, 1, "+", np.linspace(0.5, 1.0, 6))
    assert res.event == "persistent"
    for e, s in res.path:
        assert s == pytest.approx(example3(0.3, 2, e, 1).sigma, abs=1e-8)


def test_homotopy_real_split():
    """Moving from the complex side down through the collision lands on the real axis."""
    spec = _spec(0.3, 2, eps=0.35)
    res = track_epsilon_homotopy(spec, 1, "+", [0.35, 0.31])
    assert res.event == "persistent"
    res = track_epsilon_homotopy(spec, 1, "+", [0.35, 0.2])
    assert res.event in ("collision", "real-split")


@pytest.mark.parametrize("k,c0,eps", list(itertools.product((1, 2), (0.3, 2 + 1j), (0.0, 1.0))))
def test_residuals_reported(k, c0, eps):
    win = find_spectral_values(_spec(c0, k, eps), -2, 2)
    assert max(v.residual for v in win.values) <= 1e-8
