import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amo.arithmetic import Frequency, golden, synthesize, synthesize_to_cap, torus_norm
from amo.errors import DivisorUnderflow, NotDecaying
from amo.localization import analyze_eigenpairs, box_eigenpairs, decay_rates
from amo.reducibility import (
    FourierSeries,
    bloch_transport,
    default_order,
    log_strip_norm,
    small_divisors,
    solve_cohomological,
    strip_norm,
)

GOLD = golden(40)


# ---- Fourier series and norms -------------------------------------------

def test_strip_norm_examples():
    assert strip_norm(FourierSeries.constant(3.0), 0.7) == pytest.approx(3)
    for h in (0.0, 0.3, 1.1):
        assert strip_norm(FourierSeries.cosine(), h) == pytest.approx(math.exp(2 * math.pi * h))
    assert strip_norm(FourierSeries.zero(4), 0.5) == 0
    with pytest.raises(ValueError):
        strip_norm(FourierSeries.cosine(), -0.1)


def test_strip_norm_bounds_sup_on_strip():
    f = FourierSeries.exp_decay(1.0, 20)
    h = 0.1
    z = np.linspace(0, 1, 200) + 1j * h
    vals = np.exp(2j * np.pi * np.multiply.outer(z, f.ks)) @ f.coeffs
    assert np.abs(vals).max() <= strip_norm(f, h) * (1 + 1e-12)


def test_log_strip_norm_no_overflow():
    f = FourierSeries.exp_decay(0.0, 2000)
    assert math.isfinite(log_strip_norm(f, 1.0))
    assert strip_norm(f, 1.0) == math.inf


def test_series_validation():
    with pytest.raises(ValueError):
        FourierSeries(np.ones(4))
    with pytest.raises(ValueError):
        FourierSeries(np.array([1j, 0, 1j]), real_valued=True)


def test_evaluate_cosine():
    t = np.linspace(0, 1, 9)
    assert np.allclose(FourierSeries.cosine(3).evaluate(t), np.cos(2 * np.pi * t))


def test_shift_is_translation():
    f = FourierSeries.exp_decay(0.7, 6)
    t = np.linspace(0, 1, 11)
    assert np.allclose(f.shift(GOLD).evaluate(t), f.evaluate(t + GOLD.alpha))


def test_default_order():
    assert default_order(golden(10)) == min(4 * 89, 89 - 1)
    f = synthesize(0.5, 4, 2)
    assert default_order(f, 3) == 4 * 17
    assert default_order(f) == min(4 * 4935, 2**14, 4935 - 1)


# ---- cohomological equation -----------------------------------------------

def test_constant_gives_zero():
    sol = solve_cohomological(FourierSeries.constant(2.5, 3), GOLD, 1.0, 0.5)
    assert np.all(sol.psi.coeffs == 0)
    assert sol.residual == 0


def test_cosine_on_golden():
    sol = solve_cohomological(FourierSeries.cosine(1), GOLD, 1.0, 0.5)
    a = GOLD.alpha
    for k in (1, -1):
        assert sol.psi.coef(k) == pytest.approx(0.5 / (cmath.exp(2j * math.pi * k * a) - 1), rel=1e-12)
    assert sol.residual <= 1e-12


def test_solution_satisfies_equation_pointwise():
    eta = FourierSeries.exp_decay(1.5, 30)
    sol = solve_cohomological(eta, GOLD, 0.2, 0.1)
    t = np.linspace(0, 1, 17)
    lhs = sol.psi.evaluate(t + GOLD.alpha) - sol.psi.evaluate(t)
    rhs = eta.evaluate(t) - eta.coef(0)
    assert np.allclose(lhs, rhs, atol=1e-10)


coeff_lists = st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                       min_size=9, max_size=9).map(np.array)


@given(coeff_lists, coeff_lists)
def test_linearity_exact(c1, c2):
    f = synthesize(0.5, 4, 2)
    e1, e2 = FourierSeries(c1), FourierSeries(c2)
    s1 = solve_cohomological(e1, f, 1.0, 0.5).psi.coeffs
    s2 = solve_cohomological(e2, f, 1.0, 0.5).psi.coeffs
    s12 = solve_cohomological(e1 + e2, f, 1.0, 0.5).psi.coeffs
    # division by the same divisor distributes over addition up to one rounding
    assert np.allclose(s12, s1 + s2, rtol=1e-14, atol=1e-14 * (np.abs(s1).max() + np.abs(s2).max() + 1))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3), st.integers(1, 200), st.floats(0.05, 1.0))
def test_residual_relative(rate, K, h_in):
    f = synthesize_to_cap(0.5, 2)
    eta = FourierSeries.exp_decay(rate, K)
    sol = solve_cohomological(eta, f, h_in, h_in / 2)
    assert sol.residual <= 1e-10


def test_divisor_underflow():
    f = Frequency((2,))
    with pytest.raises(DivisorUnderflow):
        solve_cohomological(FourierSeries.exp_decay(1.0, 2), f, 1.0, 0.5)


def test_h_order_validation():
    with pytest.raises(ValueError):
        solve_cohomological(FourierSeries.cosine(), GOLD, 0.5, 0.5)


def test_divisor_lower_bound():
    f = synthesize(0.5, 4, 2)
    ks = np.arange(1, f.q[-1])
    div = small_divisors(f, ks)
    tn = np.array([torus_norm(f, int(k)) for k in ks])
    assert np.all(div >= 4 * tn * (1 - 1e-12))
    for n in range(2, f.depth):
        below = ks < f.q[n]
        assert np.all(div[below] >= 4 * torus_norm(f, f.q[n - 1]) * (1 - 1e-12))


def test_resonance_amplification():
    f = synthesize(0.5, 4, 2)
    eta64 = FourierSeries.exp_decay(1.0, 64)
    base = solve_cohomological(eta64, f, 1.0, 0.4)
    assert math.isfinite(base.log_norm_ratio) and base.within_budget
    big = solve_cohomological(FourierSeries.exp_decay(1.0, 256), f, 1.0, 0.95)
    assert not big.within_budget
    assert big.log_norm_ratio - base.log_norm_ratio >= math.log(10)


# ---- Bloch transport -------------------------------------------------------------

def test_bloch_zero_vector():
    with pytest.raises(NotDecaying):
        bloch_transport(np.zeros(21), 0.0, 2.0, GOLD, 0.1)


def test_bloch_extended_vector_rejected():
    u = np.ones(201) / math.sqrt(201)
    with pytest.raises(NotDecaying):
        bloch_transport(u, 0.0, 2.0, GOLD, 0.1)


def test_bloch_near_delta():
    lam, N = 1e3, 60
    reps = analyze_eigenpairs(lam, GOLD, 0.21, N)
    r = min(reps[10:-10], key=lambda r: abs(r.center))
    dev = math.sqrt(max(0.0, 1 - r.vector[r.center + N] ** 2))
    rep = bloch_transport(r.vector, r.energy, lam, GOLD, 0.21, sample_count=40)
    assert rep.residual <= 10 * dev


def _good_pair(lam, freq, phi, N):
    T, w, V = box_eigenpairs(lam, freq, phi, N)
    centers, rates = decay_rates(V, T.sites, N)
    j = int(np.argmin(np.abs(centers) + 1000 * (rates < 0.5)))
    return w[j], V[:, j]


def test_bloch_desk_scale_residual():
    lam, freq, phi = math.exp(1.3), synthesize_to_cap(0.3, 30), 0.37
    E, u = _good_pair(lam, freq, phi, 500)
    assert bloch_transport(u, E, lam, freq, phi).residual <= 1e-3


def test_bloch_residual_decreases_with_N():
    lam, freq, phi = math.exp(1.3), synthesize_to_cap(0.3, 30), 0.37
    res = []
    for N in (250, 500, 1000):
        E, u = _good_pair(lam, freq, phi, N)
        res.append(bloch_transport(u, E, lam, freq, phi, sample_count=100).residual)
    floor = 1e-12  # round-off floor of the Fourier sums
    assert all(b <= a or b <= floor for a, b in zip(res, res[1:]))
