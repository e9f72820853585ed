"""Continued fractions with exact big-integer convergents.

A frequency is stored through its partial quotients.  Every real-valued
quantity is derived from the deepest convergent p_m/q_m, which differs from
the underlying irrational by less than 1/q_m^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from typing import Sequence

import mpmath
import numpy as np

from .errors import (
    DepthOverflow,
    HorizonExceeded,
    InsufficientDepth,
    PrecisionExhausted,
    RationalInput,
)

DEFAULT_DIGIT_CAP = 10_000
DEFAULT_PRECISION_BITS = 256

_NAMED = {
    "golden": lambda: (mpmath.sqrt(5) - 1) / 2,
    "sqrt2m1": lambda: mpmath.sqrt(2) - 1,
}


def convergents_from_quotients(quotients: Sequence[int]) -> tuple[list[int], list[int]]:
    """Return (p, q) lists indexed 0..m with p_0=0, p_1=1, q_0=1, q_1=a_1."""
    p, q = [0, 1], [1, quotients[0]]
    for a in quotients[1:]:
        p.append(a * p[-1] + p[-2])
        q.append(a * q[-1] + q[-2])
    return p, q


@dataclass(frozen=True)
class Frequency:
    """Irrational rotation number given by its partial quotients a_1..a_m."""

    partial_quotients: tuple[int, ...]
    precision_bits: int = DEFAULT_PRECISION_BITS
    p: tuple[int, ...] = field(init=False, repr=False, compare=False)
    q: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        quotients = tuple(int(a) for a in self.partial_quotients)
        if not quotients:
            raise ValueError("a frequency needs at least one partial quotient")
        if any(a < 1 for a in quotients):
            raise ValueError("partial quotients must be positive integers")
        p, q = convergents_from_quotients(quotients)
        object.__setattr__(self, "partial_quotients", quotients)
        object.__setattr__(self, "p", tuple(p))
        object.__setattr__(self, "q", tuple(q))

    @property
    def depth(self) -> int:
        return len(self.partial_quotients)

    @property
    def convergents(self) -> list[tuple[int, int]]:
        return list(zip(self.p, self.q))

    @property
    def value(self) -> Fraction:
        """Deepest convergent p_m/q_m, the working value of alpha."""
        return Fraction(self.p[-1], self.q[-1])

    @property
    def alpha(self) -> float:
        return self.p[-1] / self.q[-1]

    @property
    def error_bound(self) -> Fraction:
        """Certified bound on |alpha - p_m/q_m|."""
        return Fraction(1, self.q[-1] ** 2)

    def truncated(self, depth: int) -> "Frequency":
        return Frequency(self.partial_quotients[:depth], self.precision_bits)

    def level_of(self, q_target: int) -> int:
        """Index n of the convergent denominator closest to ``q_target``."""
        return min(range(1, self.depth + 1), key=lambda n: (abs(self.q[n] - q_target), n))

    def mp_value(self) -> mpmath.mpf:
        with mpmath.workprec(self.precision_bits):
            return mpmath.mpf(self.p[-1]) / self.q[-1]

    def rotation(self, level: int | None = None) -> Fraction:
        """p_n/q_n at ``level`` or the deepest convergent when level is None."""
        if level is None:
            return self.value
        if not 0 <= level <= self.depth:
            raise IndexError(f"level {level} outside 0..{self.depth}")
        return Fraction(self.p[level], self.q[level])

    def multiples_mod1(self, ks, level: int | None = None) -> np.ndarray:
        """frac(k * rotation) for integer array ``ks``, accurate to ~1e-16."""
        ks = np.asarray(ks, dtype=np.int64)
        rot = self.rotation(level)
        num, den = rot.numerator, rot.denominator
        if den < 2**31 and (ks.size == 0 or np.abs(ks).max() < 2**31):
            r = np.mod(ks * np.int64(num), np.int64(den))
            return r / float(den)
        if ks.size and np.abs(ks).max() >= 2**27:
            return np.array([float(Fraction(int(k) * num % den, den)) for k in ks.ravel()]).reshape(ks.shape)
        # split rot = h1 + h2 + h3 so that k*h1 and k*h2 are exact doubles
        h1 = Fraction(math.floor(rot * 2**26), 2**26)
        rest = rot - h1
        h2 = Fraction(math.floor(rest * 2**52), 2**52)
        h3 = float(rest - h2)
        kf = ks.astype(np.float64)
        out = np.mod(kf * float(h1), 1.0) + np.mod(kf * float(h2), 1.0) + kf * h3
        return np.mod(out, 1.0)

    def phases(self, theta: float, ks, level: int | None = None) -> np.ndarray:
        """(theta + k * rotation) mod 1."""
        return np.mod(theta + self.multiples_mod1(ks, level), 1.0)


@dataclass(frozen=True)
class BetaEstimate:
    per_level: tuple[float, ...]
    limsup_proxy: float
    depth: int
    torus_proxy: float


def _to_fraction(x) -> Fraction:
    if isinstance(x, mpmath.mpf):
        man, exp = x.man_exp
        return Fraction(int(man)) * Fraction(2) ** int(exp)
    return Fraction(x)


def _alpha_interval(alpha, precision_bits: int) -> tuple[Fraction, Fraction]:
    """Enclosing interval [lo, hi] for the requested real number."""
    if isinstance(alpha, Fraction) or isinstance(alpha, int):
        x = Fraction(alpha)
        return x, x
    if isinstance(alpha, str):
        key = alpha.strip().lower()
        if key in _NAMED:
            with mpmath.workprec(precision_bits + 32):
                x = _to_fraction(_NAMED[key]())
            rad = Fraction(1, 2**precision_bits)
            return x - rad, x + rad
        if "/" in key:
            x = Fraction(key)
            return x, x
        d = Decimal(key)
        exponent = d.as_tuple().exponent
        x = Fraction(d)
        rad = Fraction(1, 2) * Fraction(10) ** exponent
        return x - rad, x + rad
    if isinstance(alpha, mpmath.mpf):
        x = _to_fraction(alpha)
        rad = Fraction(1, 2**precision_bits)
        return x - rad, x + rad
    x = Fraction(float(alpha))
    rad = Fraction(math.ulp(float(alpha)))
    return x - rad, x + rad


def expand(alpha, depth: int, precision_bits: int = DEFAULT_PRECISION_BITS) -> Frequency:
    """Partial quotients of ``alpha`` in (0, 1) up to ``depth``.

    ``alpha`` may be a Fraction (exact), a float, an mpmath number, a decimal
    string, or one of the names ``golden`` and ``sqrt2m1``.  Inexact inputs are
    treated as intervals; a quotient is accepted only when both endpoints agree.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    lo, hi = _alpha_interval(alpha, precision_bits)
    if not (0 < lo and hi < 1) and not (lo == hi and 0 < lo < 1):
        raise ValueError("alpha must lie in (0, 1)")
    quotients = []
    for k in range(1, depth + 1):
        if lo == hi == 0:
            raise RationalInput(f"expansion terminates after {k - 1} quotients")
        if lo <= 0:
            raise PrecisionExhausted(f"cannot resolve a_{k} at {precision_bits} bits")
        a_lo, a_hi = math.floor(1 / hi), math.floor(1 / lo)
        if a_lo != a_hi:
            raise PrecisionExhausted(f"cannot resolve a_{k} at {precision_bits} bits")
        quotients.append(a_lo)
        lo, hi = 1 / hi - a_lo, 1 / lo - a_lo
    return Frequency(tuple(quotients), precision_bits)


def golden(depth: int, precision_bits: int = DEFAULT_PRECISION_BITS) -> Frequency:
    return Frequency((1,) * depth, precision_bits)


def _next_quotient(beta: float, q: int, digit_cap: int) -> int:
    try:
        x = beta * float(q)
    except OverflowError:
        raise DepthOverflow("denominator already beyond the digit cap") from None
    if x / math.log(10) > digit_cap + 2:
        raise DepthOverflow(f"next denominator exceeds {digit_cap} digits")
    with mpmath.workdps(int(x / math.log(10)) + 30):
        a = int(mpmath.ceil(mpmath.exp(mpmath.mpf(beta) * q) / q))
    return max(1, a)


def synthesize(
    beta_target: float,
    depth: int,
    a1_seed: int = 1,
    digit_cap: int = DEFAULT_DIGIT_CAP,
    precision_bits: int = DEFAULT_PRECISION_BITS,
) -> Frequency:
    """Frequency with a_{n+1} = max(1, ceil(e^{beta q_n} / q_n))."""
    if beta_target <= 0:
        raise ValueError("beta_target must be positive")
    if depth < 2:
        raise ValueError("depth must be >= 2")
    cap = 10**digit_cap
    quotients = [int(a1_seed)]
    q_prev, q = 1, int(a1_seed)
    while len(quotients) < depth:
        a = _next_quotient(beta_target, q, digit_cap)
        q_next = a * q + q_prev
        if q_next >= cap:
            raise DepthOverflow(f"q_{len(quotients) + 1} exceeds {digit_cap} digits")
        quotients.append(a)
        q_prev, q = q, q_next
    return Frequency(tuple(quotients), precision_bits)


def synthesize_to_cap(
    beta_target: float,
    a1_seed: int = 1,
    digit_cap: int = DEFAULT_DIGIT_CAP,
    max_depth: int = 64,
) -> Frequency:
    """Deepest synthesized frequency that stays within the digit cap."""
    best = None
    for depth in range(2, max_depth + 1):
        try:
            best = synthesize(beta_target, depth, a1_seed, digit_cap)
        except DepthOverflow:
            break
    if best is None:
        raise DepthOverflow("not even two levels fit the digit cap")
    return best


def _torus_numerator(freq: Frequency, k: int) -> int:
    r = (k * freq.p[-1]) % freq.q[-1]
    return min(r, freq.q[-1] - r)


def torus_norm(freq: Frequency, k: int, exact: bool = False):
    """Distance from k*alpha to the nearest integer.

    The value is exact for the deepest convergent; against the true irrational
    it is off by at most |k|/q_m^2 (see ``torus_norm_interval``).
    """
    k = int(k)
    if k == 0:
        raise ValueError("k must be nonzero")
    if abs(k) >= freq.q[-1]:
        raise HorizonExceeded(f"|k|={abs(k)} >= q_depth={freq.q[-1]}")
    x = Fraction(_torus_numerator(freq, k), freq.q[-1])
    return x if exact else float(x)


def torus_norm_interval(freq: Frequency, k: int) -> tuple[Fraction, Fraction]:
    x = torus_norm(freq, k, exact=True)
    err = abs(int(k)) * freq.error_bound
    return max(Fraction(0), x - err), x + err


def beta_estimate(freq: Frequency, tail_window: int = 1) -> BetaEstimate:
    """Per-level ln(q_{n+1})/q_n for n = 1..m-1 and its tail maximum."""
    if tail_window < 1:
        raise ValueError("tail_window must be >= 1")
    m = freq.depth
    if m - 1 < tail_window:
        raise InsufficientDepth(f"need {tail_window + 1} convergents, have {m}")
    q = freq.q
    per_level = tuple(math.log(q[n + 1]) / q[n] for n in range(1, m))
    tail = per_level[-tail_window:]
    # cross-check through (1/q_n) ln(1/||q_n alpha||) at the same levels
    torus = []
    for n in range(1, m):
        num = _torus_numerator(freq, q[n])
        torus.append((math.log(q[-1]) - math.log(num)) / q[n])
    return BetaEstimate(per_level, max(tail), m, max(torus[-tail_window:]))


def diophantine_margin(freq: Frequency, phi, tau: float, horizon: int) -> float:
    """min over |m| <= horizon of ||2 phi - m alpha|| (|m|+1)^tau."""
    if tau <= 1:
        raise ValueError("tau must exceed 1")
    if horizon < 1:
        raise ValueError("horizon must be positive")
    if horizon >= freq.q[-1]:
        raise HorizonExceeded(f"horizon {horizon} >= q_depth={freq.q[-1]}")
    two_phi = 2 * Fraction(phi)
    rot = freq.value
    best = math.inf
    for m in range(-horizon, horizon + 1):
        x = (two_phi - m * rot) % 1
        dist = min(x, 1 - x)
        best = min(best, float(dist) * (abs(m) + 1) ** tau)
        if best == 0:
            break
    return best


def parse_alpha(text: str, depth: int, precision_bits: int = DEFAULT_PRECISION_BITS) -> Frequency:
    """CLI helper: golden, sqrt2m1, a decimal, or an explicit quotient list a1,a2,..."""
    text = text.strip()
    if "," in text or text.startswith("["):
        return Frequency(tuple(int(t) for t in text.strip("[]").split(",") if t.strip()), precision_bits)
    return expand(text, depth, precision_bits)

