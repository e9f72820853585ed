import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amo.arithmetic import golden
from amo.cocycle import AmoParams
from amo.lyapunov import bj_value, le_batch, le_estimate, phase_grid, strip_profile
from amo.spectrum import bulk_eigenvalues

GOLD = golden(40)


def test_constant_cocycle_limit():
    est = le_estimate(AmoParams(1e-12, 3.0, GOLD), 10_000, 16)
    assert est.value == pytest.approx(math.log((3 + math.sqrt(5)) / 2), abs=1e-3)
    assert est.std_error < 1e-6


def test_supercritical_on_spectrum():
    E = bulk_eigenvalues(2.0, GOLD, 0.0, 500, count=5)
    for e in E:
        est = le_estimate(AmoParams(2.0, float(e), GOLD), 10_000, 32)
        assert 0.67 <= est.value <= 0.72


def test_critical_on_spectrum():
    E = bulk_eigenvalues(1.0, GOLD, 0.0, 500, count=5)
    v, _ = le_batch(1.0, GOLD, E, 10_000, 32)
    assert np.all(v <= 0.02)


def test_off_spectrum_positive():
    for lam in (0.5, 1.0, 2.0):
        est = le_estimate(AmoParams(lam, 3 + 2 * lam, GOLD), 2000, 10)
        assert est.value >= bj_value(lam) + 0.1


@settings(max_examples=15, deadline=None)
@given(st.floats(1.2, 6), st.floats(-8, 8))
def test_lower_bound_everywhere(lam, E):
    # the exponent is at least ln lam at every energy (subharmonicity)
    v, e = le_batch(lam, GOLD, [E], 2000, 10)
    assert v[0] >= math.log(lam) - 0.02


@settings(max_examples=15, deadline=None)
@given(st.floats(0.1, 4), st.floats(-6, 6), st.floats(0, 1))
def test_nonnegative(lam, E, theta):
    v, e = le_batch(lam, GOLD, [E], 1000, 10, theta=theta)
    assert v[0] + 2 * e[0] >= 0


def test_std_error_definition():
    lam, E, n, k = 1.5, 0.4, 1000, 12
    v, e = le_batch(lam, GOLD, [E], n, k)
    per = np.array([le_batch(lam, GOLD, [E], n, 1, theta=t - phase_grid(1)[0])[0][0] for t in phase_grid(k)])
    assert v[0] == pytest.approx(per.mean(), rel=1e-12)
    assert e[0] == pytest.approx(per.std(ddof=1) / math.sqrt(k), rel=1e-9)


def test_phase_grid_equidistributed():
    g = phase_grid(8)
    assert np.all((g >= 0) & (g < 1))
    assert np.allclose(np.sort(np.diff(np.sort(g))), 1 / 8)


def test_validation():
    with pytest.raises(ValueError):
        le_estimate(AmoParams(1, 0, GOLD), 999, 10)
    with pytest.raises(ValueError):
        le_estimate(AmoParams(1, 0, GOLD), 1000, 9)


def test_bj_value():
    assert bj_value(0.5) == 0
    assert bj_value(-4) == pytest.approx(math.log(4))


# ---- strip profile ---------------------------------------------------------

@pytest.fixture(scope="module")
def dual_profile():
    E = float(bulk_eigenvalues(0.5, GOLD, 0.0, 1000, count=3)[1])
    eps = [0.0, 0.9 * math.log(2), math.log(2) + 0.3]
    return strip_profile(0.5, GOLD, E, eps, n_steps=10_000, n_phases=32)


def test_strip_zero_on_spectrum(dual_profile):
    assert abs(dual_profile.entries[0][1].value) <= 0.02


def test_strip_inside_zero_strip(dual_profile):
    assert dual_profile.entries[1][1].value <= 0.02


def test_strip_linear_branch(dual_profile):
    assert dual_profile.entries[2][1].value == pytest.approx(0.3, abs=0.03)


def test_strip_subcritical_verdict(dual_profile):
    assert dual_profile.subcritical
    assert not strip_profile(2.0, GOLD, 0.0, [0.1], 1000, 10).subcritical


def test_strip_monotone_in_eps():
    E = float(bulk_eigenvalues(0.5, GOLD, 0.0, 500, count=3)[1])
    prof = strip_profile(0.5, GOLD, E, np.linspace(0, 1.2, 7), n_steps=4000, n_phases=16)
    vals = prof.values()
    errs = np.array([est.std_error for _, est in prof.entries])
    assert np.all(np.diff(vals) >= -2 * (errs[1:] + errs[:-1]) - 1e-3)


def test_strip_rejects_negative_eps():
    with pytest.raises(ValueError):
        strip_profile(0.5, GOLD, 0.0, [-0.1], 1000, 10)
