"""Transfer matrices of the almost Mathieu operator.

The one-step matrix at phase theta is S(theta) = [[E - 2 lam cos 2pi theta, -1], [1, 0]]
and A_n(theta) = S(theta + (n-1) alpha) ... S(theta).  Long products are kept
as a unit matrix times e^{log_scale}; rescaling uses exact powers of two, so
the unit matrix carries no extra rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import Frequency
from .errors import NotUnimodular, RangeOverflow

LN2 = math.log(2.0)


@dataclass(frozen=True)
class AmoParams:
    """Coupling, energy, frequency, phase and imaginary phase offset.

    A negative coupling is replaced by |lam| together with E -> -E; this is
    the gauge u_n -> (-1)^n u_n.  ``gauge_flipped`` records it and products are
    mapped back so callers always see the matrices of the original operator.
    """

    lam: float
    energy: float
    freq: Frequency
    theta: float = 0.0
    eps_im: float = 0.0
    gauge_flipped: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("coupling must be nonzero")
        if self.eps_im < 0:
            raise ValueError("eps_im must be >= 0")
        if self.lam < 0:
            object.__setattr__(self, "lam", -float(self.lam))
            object.__setattr__(self, "energy", -float(self.energy))
            object.__setattr__(self, "gauge_flipped", True)


def potential(lam: float, phases, eps_im: float = 0.0):
    """2 lam cos(2 pi theta + i eps_im)."""
    x = 2 * np.pi * np.asarray(phases, dtype=float)
    if eps_im:
        return 2 * lam * np.cos(x + 1j * eps_im)
    return 2 * lam * np.cos(x)


def _gauge(unit: np.ndarray, n: int) -> np.ndarray:
    out = unit.copy()
    out[..., 0, 1] *= -1
    out[..., 1, 0] *= -1
    return out if n % 2 == 0 else -out


def amo_matrix(params: AmoParams, theta_eval: float) -> np.ndarray:
    t = params.energy - potential(params.lam, theta_eval, params.eps_im)
    m = np.array([[t, -1], [1, 0]], dtype=complex if params.eps_im else float)
    return _gauge(m, 1) if params.gauge_flipped else m


def sigma_max(unit: np.ndarray) -> np.ndarray:
    """Largest singular value of (..., 2, 2) matrices in closed form."""
    s = np.sum(np.abs(unit) ** 2, axis=(-2, -1))
    det = np.abs(unit[..., 0, 0] * unit[..., 1, 1] - unit[..., 0, 1] * unit[..., 1, 0])
    disc = np.sqrt(np.maximum(s * s - 4 * det * det, 0.0))
    return np.sqrt((s + disc) / 2)


@dataclass(frozen=True)
class ScaledProduct:
    """Matrix e^{log_scale} * unit with max |unit entry| in [1/2, 1)."""

    unit: np.ndarray
    log_scale: float

    @classmethod
    def from_matrix(cls, m) -> "ScaledProduct":
        m = np.asarray(m)
        peak = np.abs(m).max()
        if peak == 0:
            raise ValueError("zero matrix has no scaled form")
        _, e = math.frexp(float(peak))
        return cls(m * math.ldexp(1.0, -e), e * LN2)

    def matrix(self) -> np.ndarray:
        return self.unit * math.exp(self.log_scale)

    def log_norm(self) -> float:
        return self.log_scale + math.log(float(sigma_max(self.unit)))

    def norm(self) -> float:
        return math.exp(self.log_norm())

    def trace(self):
        return (self.unit[0, 0] + self.unit[1, 1]) * math.exp(self.log_scale)

    def log_abs_trace(self) -> float:
        tr = abs(self.unit[0, 0] + self.unit[1, 1])
        return -math.inf if tr == 0 else self.log_scale + math.log(tr)

    def det(self):
        """det of the represented matrix; meaningful only while e^{2 log_scale} * ulp is small."""
        u = self.unit
        du = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
        if du == 0:
            return 0.0 * du
        return du / abs(du) * _safe_exp(math.log(abs(du)) + 2 * self.log_scale)

    def inverse(self) -> "ScaledProduct":
        # det = 1, so the inverse is the adjugate at the same scale
        u = self.unit
        adj = np.array([[u[1, 1], -u[0, 1]], [-u[1, 0], u[0, 0]]])
        return ScaledProduct(adj, self.log_scale)

    def __matmul__(self, other: "ScaledProduct") -> "ScaledProduct":
        prod = ScaledProduct.from_matrix(self.unit @ other.unit)
        return ScaledProduct(prod.unit, prod.log_scale + self.log_scale + other.log_scale)

    def log_norm_apply(self, v) -> float:
        w = self.unit @ np.asarray(v)
        n = float(np.linalg.norm(w))
        return -math.inf if n == 0 else self.log_scale + math.log(n)


def transfer(lam: float, energies, thetas, shifts, eps_im: float = 0.0):
    """Batched products S(theta + s_{n-1}) ... S(theta + s_0).

    ``energies`` and ``thetas`` broadcast to a batch shape; ``shifts`` holds
    frac(k * rotation) for the successive factors.  Returns ``(units, log_scales)``
    with units of shape batch + (2, 2).
    """
    energies, thetas = np.broadcast_arrays(np.asarray(energies, dtype=float), np.asarray(thetas, dtype=float))
    shape = energies.shape
    e_arr, th = energies.ravel(), thetas.ravel()
    dtype = complex if eps_im else float
    a = np.ones_like(e_arr, dtype=dtype)
    b = np.zeros_like(a)
    c = np.zeros_like(a)
    d = np.ones_like(a)
    exp2 = np.zeros(e_arr.shape, dtype=np.int64)
    twopi = 2 * np.pi
    for s in np.asarray(shifts, dtype=float):
        x = twopi * (th + s)
        v = np.cos(x + 1j * eps_im) if eps_im else np.cos(x)
        t = e_arr - 2 * lam * v
        a, b, c, d = t * a - c, t * b - d, a, b
        peak = np.maximum(np.maximum(np.abs(a), np.abs(b)), np.maximum(np.abs(c), np.abs(d)))
        _, e = np.frexp(peak)
        scale = np.ldexp(1.0, -e)
        a, b, c, d = a * scale, b * scale, c * scale, d * scale
        exp2 += e
    units = np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)
    return units.reshape(shape + (2, 2)), (exp2 * LN2).reshape(shape)


def log_norms(lam: float, energies, thetas, shifts, eps_im: float = 0.0) -> np.ndarray:
    """log ||A|| for a batch, without materializing ScaledProduct objects."""
    units, ls = transfer(lam, energies, thetas, shifts, eps_im)
    return ls + np.log(sigma_max(units))


def batch_products(params: AmoParams, thetas, n: int, use_periodic_level: int | None = None):
    """A_n at every phase in ``thetas`` for the coupling and energy of ``params``.

    Returns ``(units, log_scales)``; negative n gives A_{-|n|}.
    """
    if n == 0:
        raise ValueError("n must be nonzero")
    thetas = np.asarray(thetas, dtype=float)
    m = abs(n)
    ks = np.arange(m) if n > 0 else np.arange(-m, 0)
    shifts = params.freq.multiples_mod1(ks, use_periodic_level)
    units, ls = transfer(params.lam, params.energy, thetas, shifts, params.eps_im)
    if n < 0:
        adj = np.empty_like(units)
        adj[..., 0, 0] = units[..., 1, 1]
        adj[..., 1, 1] = units[..., 0, 0]
        adj[..., 0, 1] = -units[..., 0, 1]
        adj[..., 1, 0] = -units[..., 1, 0]
        units = adj
    if params.gauge_flipped:
        units = _gauge(units, m)
    return units, ls


def product(params: AmoParams, n: int, use_periodic_level: int | None = None) -> ScaledProduct:
    """A_n(theta) for n > 0 and A_n(theta - n alpha)^{-1} for n < 0.

    With ``use_periodic_level`` the rotation p_k/q_k replaces alpha.
    """
    units, ls = batch_products(params, params.theta, n, use_periodic_level)
    return ScaledProduct(units, float(ls))


def _log_diff(u1, s1, u2, s2) -> np.ndarray:
    """log ||e^{s1} u1 - e^{s2} u2|| for batches."""
    top = np.maximum(s1, s2)
    diff = u1 * np.exp(s1 - top)[..., None, None] - u2 * np.exp(s2 - top)[..., None, None]
    with np.errstate(divide="ignore"):
        return top + np.log(sigma_max(diff))


@dataclass(frozen=True)
class GapReport:
    """Log-form sups of the periodic-approximation gaps and the reference bound."""

    level: int
    q: int
    log_gap_plus: float
    log_gap_minus: float
    log_shift_gap: float
    log_bound: float

    @property
    def log_gap_pm(self) -> float:
        return max(self.log_gap_plus, self.log_gap_minus)

    @property
    def passed(self) -> bool:
        return self.log_gap_pm <= self.log_bound


def approximation_gaps(params: AmoParams, level: int, theta_grid_size: int = 100, eps: float = 0.1) -> GapReport:
    """sup over a phase grid of ||A~_{+-q} - A_{+-q}|| and ||A_q(. + q alpha) - A_q||.

    The bound (1/q_{n+1}) e^{(ln lam + eps) q_n} is returned in log form.
    """
    freq = params.freq
    if not 1 <= level < freq.depth:
        raise ValueError(f"level must lie in 1..{freq.depth - 1}")
    q = freq.q[level]
    grid = np.arange(theta_grid_size) / theta_grid_size
    logs = {}
    for sign in (1, -1):
        ut, st = batch_products(params, grid, sign * q, level)
        ua, sa = batch_products(params, grid, sign * q)
        logs[sign] = float(np.max(_log_diff(ut, st, ua, sa)))
    shifted = AmoParams(params.lam, params.energy, freq, 0.0, params.eps_im)
    us, ss = batch_products(shifted, freq.phases(0.0, np.full(grid.shape, q)) + grid, q)
    ua, sa = batch_products(shifted, grid, q)
    log_shift = float(np.max(_log_diff(us, ss, ua, sa)))
    log_bound = (math.log(params.lam) + eps) * q - math.log(freq.q[level + 1])
    if not math.isfinite(log_bound):
        raise RangeOverflow("bound is not representable in log form")
    return GapReport(level, q, logs[1], logs[-1], log_shift, log_bound)


def cayley_sum(m, tol: float = 1e-9) -> np.ndarray:
    """M + M^{-1} for a unimodular 2x2 matrix; equals tr(M) Id."""
    m = np.asarray(m)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det - 1) > tol:
        raise NotUnimodular(f"det = {det!r}")
    inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
    return m + inv


@dataclass(frozen=True)
class GordonReport:
    """Log-safe norms of A_{q}v, A_{-q}v, A_{2q}v and |tr A~_q|."""

    q: int
    log_norm_qn: float
    log_norm_neg_qn: float
    log_norm_2qn: float
    log_trace_abs: float

    @property
    def norm_qn(self) -> float:
        return _safe_exp(self.log_norm_qn)

    @property
    def norm_neg_qn(self) -> float:
        return _safe_exp(self.log_norm_neg_qn)

    @property
    def norm_2qn(self) -> float:
        return _safe_exp(self.log_norm_2qn)

    @property
    def trace_abs(self) -> float:
        return _safe_exp(self.log_trace_abs)

    @property
    def max_growth(self) -> float:
        return max(self.norm_qn, self.norm_neg_qn, self.norm_2qn)


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709 else math.inf


def gordon_growth(params: AmoParams, level: int, v, use_periodic: bool = False) -> GordonReport:
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1) > 1e-10:
        raise ValueError("v must be a unit vector")
    q = params.freq.q[level]
    per = level if use_periodic else None
    plus = product(params, q, per)
    minus = product(params, -q, per)
    double = product(params, 2 * q, per)
    trace = product(params, q, level)
    return GordonReport(q, plus.log_norm_apply(v), minus.log_norm_apply(v), double.log_norm_apply(v), trace.log_abs_trace())


def gordon_chain_check(report: GordonReport, eps: float, delta: float) -> bool | None:
    """Check the trace-recurrence implication for given eps and slack delta.

    Returns None when the premises (small norms, small trace) do not hold,
    otherwise whether ||A_{2q} v|| >= 1 - 2 eps^2 - 10 eps delta.
    """
    if report.norm_qn > eps or report.norm_neg_qn > eps or report.trace_abs > 2 * eps + 2 * delta:
        return None
    return report.norm_2qn >= 1 - 2 * eps**2 - 10 * eps * delta


@dataclass(frozen=True)
class RotationNumber:
    value: float
    error: float


def rotation_from_entries(a, b, c, d) -> RotationNumber:
    """Fibered rotation number of the product of matrices [[a_k, b_k], [c_k, d_k]].

    Each projective increment is taken in (-pi/2, 3pi/2], the continuous lift
    for Schroedinger matrices; the Birkhoff average is reported mod 1.
    """
    x, y = 1.0, 0.0
    total = 0.0
    atan2 = math.atan2
    half = -0.5 * math.pi
    for ak, bk, ck, dk in zip(a, b, c, d):
        nx, ny = ak * x + bk * y, ck * x + dk * y
        inc = atan2(x * ny - y * nx, x * nx + y * ny)
        if inc <= half:
            inc += 2 * math.pi
        total += inc
        r = math.hypot(nx, ny)
        x, y = nx / r, ny / r
    n = len(a)
    return RotationNumber((total / (2 * math.pi * n)) % 1.0, 1.0 / n)


def rotation_number(params: AmoParams, iterations: int) -> RotationNumber:
    if params.eps_im:
        raise ValueError("rotation number needs a real cocycle")
    if iterations < 1000:
        raise ValueError("iterations must be >= 1000")
    phases = params.freq.phases(params.theta, np.arange(iterations))
    t = params.energy - potential(params.lam, phases)
    if params.gauge_flipped:
        t = -t  # the original factors, again of Schroedinger form
    ones = np.ones(iterations)
    return rotation_from_entries(t.tolist(), (-ones).tolist(), ones.tolist(), np.zeros(iterations).tolist())
