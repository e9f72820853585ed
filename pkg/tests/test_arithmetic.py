import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from amo.arithmetic import (
    Frequency,
    beta_estimate,
    convergents_from_quotients,
    diophantine_margin,
    expand,
    golden,
    parse_alpha,
    synthesize,
    synthesize_to_cap,
    torus_norm,
    torus_norm_interval,
)
from amo.errors import DepthOverflow, HorizonExceeded, InsufficientDepth, PrecisionExhausted, RationalInput

quotients = st.lists(st.integers(1, 40), min_size=2, max_size=14).map(tuple)


def _oracle_quotients(expr, depth):
    """Partial quotients after the leading 0, from sympy's exact expansion."""
    it = sympy.continued_fraction_iterator(expr)
    assert next(it) == 0
    return [int(next(it)) for _ in range(depth)]


# ---- expand ----------------------------------------------------------------

def test_expand_golden():
    f = expand("golden", 6)
    assert f.partial_quotients == (1,) * 6
    assert f.q[1:] == (1, 2, 3, 5, 8, 13)


def test_expand_sqrt2m1():
    f = expand("sqrt2m1", 4)
    assert f.partial_quotients == (2, 2, 2, 2)
    assert f.q[1:] == (2, 5, 12, 29)


def test_expand_rational_raises():
    with pytest.raises(RationalInput):
        expand(Fraction(1, 3), 5)
    with pytest.raises(RationalInput):
        expand("1/3", 5)


@pytest.mark.parametrize("expr,name", [((sympy.sqrt(5) - 1) / 2, "golden"), (sympy.sqrt(2) - 1, "sqrt2m1")])
def test_expand_matches_symbolic_oracle(expr, name):
    assert list(expand(name, 60).partial_quotients) == _oracle_quotients(expr, 60)


def test_expand_decimal_string_matches_oracle():
    text = "0.71828182845904523536028747135266249775724709369995"
    expr = sympy.Rational(text)
    f = expand(text, 20)
    assert list(f.partial_quotients) == _oracle_quotients(expr, 20)


def test_expand_float_runs_out_of_precision():
    with pytest.raises(PrecisionExhausted):
        expand((math.sqrt(5) - 1) / 2, 60)


def test_expand_mpf_with_high_precision():
    with mpmath.workdps(60):
        x = mpmath.e - 2
        f = expand(x, 25, precision_bits=180)
    assert list(f.partial_quotients) == _oracle_quotients(sympy.E - 2, 25)


@given(quotients)
def test_expand_value_roundtrip(qs):
    # a final quotient >= 2 makes the expansion of the exact rational unique
    f = Frequency(qs + (2,))
    assert expand(f.value, len(qs)).partial_quotients == qs
    with pytest.raises(RationalInput):
        expand(f.value, len(qs) + 2)


# ---- convergents and Frequency invariants ---------------------------------

def test_convergents_small():
    p, q = convergents_from_quotients([2, 2, 3, 290])
    assert p == [0, 1, 2, 7, 2032]
    assert q == [1, 2, 5, 17, 4935]


@given(quotients)
def test_recurrence_and_coprimality(qs):
    f = Frequency(qs)
    for k in range(1, f.depth + 1):
        assert math.gcd(f.p[k], f.q[k]) == 1
        # p_k q_{k-1} - p_{k-1} q_k = (-1)^(k+1) with p_0 = 0, q_0 = 1
        assert f.p[k] * f.q[k - 1] - f.p[k - 1] * f.q[k] == (-1) ** (k + 1)
    assert all(f.q[k] < f.q[k + 1] for k in range(2, f.depth))


@given(quotients)
def test_value_between_consecutive_convergents(qs):
    f = Frequency(qs + (1, 1, 1))
    x = f.value
    for k in range(1, len(qs)):
        a, b = Fraction(f.p[k], f.q[k]), Fraction(f.p[k + 1], f.q[k + 1])
        assert min(a, b) < x < max(a, b)


def test_frequency_rejects_bad_quotients():
    with pytest.raises(ValueError):
        Frequency((1, 0, 2))
    with pytest.raises(ValueError):
        Frequency(())


@given(quotients, st.lists(st.integers(-10**6, 10**6), min_size=1, max_size=20))
def test_multiples_mod1_against_exact(qs, ks):
    f = Frequency(qs)
    got = f.multiples_mod1(np.array(ks))
    for k, x in zip(ks, got):
        exact = (k * f.value) % 1
        d = abs(float(exact) - x)
        assert min(d, 1 - d) < 1e-12


def test_multiples_mod1_big_denominator():
    f = synthesize(0.5, 5, 2)
    assert f.q[-1] > 2**63
    ks = np.arange(-5000, 5000, 37)
    got = f.multiples_mod1(ks)
    for k, x in zip(ks, got):
        exact = float((int(k) * f.value) % 1)
        d = abs(exact - x)
        assert min(d, 1 - d) < 1e-12


# ---- synthesize ------------------------------------------------------------

def test_synthesize_example():
    f = synthesize(0.5, 4, a1_seed=2)
    assert f.partial_quotients == (2, 2, 3, 290)
    assert f.q[1:] == (2, 5, 17, 4935)
    assert math.log(4935) / 17 == pytest.approx(0.5003, abs=5e-4)


def test_synthesize_tiny_beta_gives_ones():
    f = synthesize(1e-4, 12, 1)
    # ceil(e^{1e-4}/1) = 2 once, then e^{beta q}/q < 1 floors every quotient at 1
    assert f.partial_quotients[1:] == (2,) + (1,) * 10
    assert beta_estimate(f, 1).limsup_proxy < 0.2


def test_synthesize_large_beta_overflows_cap():
    f = synthesize(1.2, 4, 1)
    assert f.partial_quotients[:3] == (1, 4, 81)
    assert beta_estimate(f).per_level[-1] == pytest.approx(1.2, rel=0.05)
    with pytest.raises(DepthOverflow):
        synthesize(1.2, 5, 1)


def test_synthesize_quotient_oracle():
    # independent big-float recomputation of a_{n+1} = max(1, ceil(e^{beta q}/q))
    f = synthesize(0.7, 4, 3)
    for n in range(1, f.depth):
        q = f.q[n]
        with mpmath.workdps(int(0.7 * q / 2.3) + 40):
            a = max(1, int(mpmath.ceil(mpmath.exp(mpmath.mpf(0.7) * q) / q)))
        assert f.partial_quotients[n] == a


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 1.5), st.integers(1, 30))
def test_synthesize_beta_roundtrip(beta, seed):
    f = synthesize_to_cap(beta, seed)
    est = beta_estimate(f, 1).per_level
    for n in range(1, f.depth):
        q = f.q[n]
        if beta * q > math.log(q):
            # q_{n+1} = a q_n + q_{n-1} with a in [e^{beta q}/q, e^{beta q}/q + 1)
            slack = math.log1p(2 * q * math.exp(-beta * q)) / q
            assert -1e-12 <= est[n - 1] - beta <= slack + 1e-12
            if q * math.exp(-beta * q) < 0.02:
                assert abs(est[n - 1] - beta) / beta <= 0.05


def test_synthesize_to_cap_respects_digit_cap():
    f = synthesize_to_cap(0.5, 2, digit_cap=200)
    assert len(str(f.q[-1])) <= 200
    with pytest.raises(DepthOverflow):
        synthesize(0.5, f.depth + 1, 2, digit_cap=200)


# ---- torus norm ------------------------------------------------------------

def test_torus_norm_golden():
    f = golden(30)
    a = (math.sqrt(5) - 1) / 2
    assert torus_norm(f, 1) == pytest.approx(1 - a, abs=1e-12)
    assert torus_norm(f, 2) == pytest.approx(2 * a - 1, abs=1e-12)


def test_torus_norm_horizon():
    f = golden(10)
    with pytest.raises(HorizonExceeded):
        torus_norm(f, f.q[-1])
    with pytest.raises(ValueError):
        torus_norm(f, 0)


@given(quotients)
def test_torus_norm_at_convergents(qs):
    f = Frequency(qs)
    for n in range(1, f.depth):
        lo, hi = torus_norm_interval(f, f.q[n])
        assert hi <= Fraction(1, f.q[n + 1]) + f.q[n] * f.error_bound
        assert lo <= torus_norm(f, f.q[n], exact=True) <= hi


@pytest.mark.parametrize("f", [golden(24), expand("sqrt2m1", 14), synthesize(0.3, 5, 4)], ids=["golden", "sqrt2m1", "synth"])
def test_best_approximation_exhaustive(f):
    for n in range(2, f.depth):
        if f.q[n] > 10**4:
            break
        floor = torus_norm(f, f.q[n - 1], exact=True)
        for k in range(1, f.q[n]):
            assert torus_norm(f, k, exact=True) >= floor


# ---- beta estimate ---------------------------------------------------------

def test_beta_estimate_golden():
    est = beta_estimate(golden(20), 5)
    assert est.limsup_proxy < 0.01
    assert est.limsup_proxy == max(est.per_level[-5:])


def test_beta_estimate_synth_window():
    est = beta_estimate(synthesize(0.5, 4, 2), 1)
    assert est.limsup_proxy == pytest.approx(0.5003, abs=5e-4)
    assert beta_estimate(synthesize(0.5, 4, 2), 2).limsup_proxy == pytest.approx(math.log(17) / 5)


def test_beta_estimate_sqrt2_decreasing():
    vals = [beta_estimate(expand("sqrt2m1", d), 1).limsup_proxy for d in range(4, 11)]
    assert vals[-1] < 0.25
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_beta_estimate_torus_cross_check():
    f = synthesize(0.8, 3, 3)
    est = beta_estimate(f, 2)
    assert est.torus_proxy == pytest.approx(est.limsup_proxy, rel=0.1)


def test_beta_estimate_insufficient_depth():
    with pytest.raises(InsufficientDepth):
        beta_estimate(golden(3), 3)


@given(quotients, st.integers(1, 5))
def test_beta_estimate_positive_and_tail_max(qs, w):
    f = Frequency(qs)
    if f.depth - 1 < w:
        return
    est = beta_estimate(f, w)
    assert all(x > 0 for x in est.per_level)
    assert est.limsup_proxy == max(est.per_level[-w:])


# ---- diophantine margin ----------------------------------------------------

def test_margin_zero_cases():
    f = golden(20)
    assert diophantine_margin(f, f.value / 2, 2.0, 10) == 0
    assert diophantine_margin(f, 0, 2.0, 10) == 0


def test_margin_brute_force():
    f = golden(25)
    got = diophantine_margin(f, Fraction(1, 4), 2.0, 100)
    a = f.mp_value()
    best = min(abs(float(0.5 - m * a) - round(float(0.5 - m * a))) * (abs(m) + 1) ** 2 for m in range(-100, 101))
    assert got > 0
    assert got == pytest.approx(best, rel=1e-9)


def test_margin_horizon():
    f = golden(8)
    with pytest.raises(HorizonExceeded):
        diophantine_margin(f, 0.1, 2.0, f.q[-1])


def test_parse_alpha_forms():
    assert parse_alpha("1,2,3", 0).partial_quotients == (1, 2, 3)
    assert parse_alpha("golden", 5).partial_quotients == (1,) * 5
    assert parse_alpha("2/7", 1).partial_quotients == (3,)
