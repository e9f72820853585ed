"""Eigenvector decay statistics on the box of sites -N..N."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import Frequency, beta_estimate
from .cocycle import transfer
from .errors import RegimeMismatch
from .spectrum import eigh, interior_mask, truncate

# |u| below this is treated as underflow when fitting slopes
TAIL_FLOOR = 1e-300
EDGE_FRACTION = 0.02


def is_good(u, sites, N: int, C: float, eps: float) -> bool:
    """|u(n)| <= e^{-C eps |n|} for every |n| >= (1 - eps) N."""
    return bool(good_mask(np.asarray(u)[:, None], sites, N, C, eps)[0])


def good_mask(U: np.ndarray, sites, N: int, C: float, eps: float) -> np.ndarray:
    """Column-wise ``is_good`` for an array of vectors (sites along axis 0)."""
    sites = np.asarray(sites)
    far = np.abs(sites) >= (1 - eps) * N
    if not far.any():
        return np.ones(U.shape[1], dtype=bool)
    bound = np.exp(-C * eps * np.abs(sites[far]))
    return np.all(np.abs(U[far]) <= bound[:, None], axis=0)


def _slopes(x: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    sw = w.sum(axis=0)
    sx, sy = (w * x).sum(axis=0), (w * y).sum(axis=0)
    sxx, sxy = (w * x * x).sum(axis=0), (w * x * y).sum(axis=0)
    den = sw * sxx - sx * sx
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(den > 0, (sw * sxy - sx * sy) / np.where(den > 0, den, 1), np.nan)


def decay_rates(U: np.ndarray, sites, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Centers and least-squares slopes of -ln|u| against |n - n0|.

    The fit uses |n - n0| in [0.2N, 0.8N] and only entries above ``TAIL_FLOOR``;
    with fewer than two such entries it widens to [1, 0.8N], and as a last
    resort fits the floored values, so the slope is always finite.
    """
    sites = np.asarray(sites)
    mag = np.abs(U)
    center_idx = np.argmax(mag, axis=0)
    centers = sites[center_idx]
    dist = np.abs(sites[:, None] - centers[None, :]).astype(float)
    y = -np.log(np.maximum(mag, TAIL_FLOOR))
    above = mag > TAIL_FLOOR
    rates = np.full(U.shape[1], np.nan)
    for lo, use_floor in ((0.2 * N, False), (1.0, False), (1.0, True)):
        todo = np.isnan(rates)
        if not todo.any():
            break
        w = (dist[:, todo] >= lo) & (dist[:, todo] <= 0.8 * N)
        if not use_floor:
            w &= above[:, todo]
        ok = w.sum(axis=0) >= 2
        r = _slopes(dist[:, todo], y[:, todo], w.astype(float))
        rates[np.flatnonzero(todo)[ok]] = r[ok]
    return centers, np.nan_to_num(rates, nan=0.0)


@dataclass(frozen=True)
class EigenpairReport:
    energy: float
    vector: np.ndarray = field(repr=False)
    sites: np.ndarray = field(repr=False)
    center: int
    decay_rate: float

    def good(self, N: int, C: float, eps: float) -> bool:
        return is_good(self.vector, self.sites, N, C, eps)


def box_eigenpairs(lam: float, freq: Frequency, phi: float, N: int):
    """Truncation to sites -N..N and its eigenpairs (twisted-factorization vectors)."""
    T = truncate(lam, freq, phi, 2 * N + 1, offset=N)
    w, V = eigh(T, True, method="twisted")
    return T, w, V


def analyze_eigenpairs(lam: float, freq: Frequency, phi: float, N: int) -> list[EigenpairReport]:
    """All 2N+1 eigenpairs of the box -N..N, energies ascending."""
    T, w, V = box_eigenpairs(lam, freq, phi, N)
    centers, rates = decay_rates(V, T.sites, N)
    return [EigenpairReport(float(w[j]), V[:, j], T.sites, int(centers[j]), float(rates[j])) for j in range(len(w))]


@dataclass(frozen=True)
class PhaseStats:
    """Good flags and decay rates of the interior eigenpairs for one phase."""

    phi: float
    energies: np.ndarray
    good: np.ndarray
    decay_rates: np.ndarray

    @property
    def fraction(self) -> float:
        return float(self.good.mean()) if len(self.good) else 0.0


def phase_stats(lam: float, freq: Frequency, phi: float, N: int, C: float, eps: float,
                edge_fraction: float = EDGE_FRACTION) -> PhaseStats:
    T, w, V = box_eigenpairs(lam, freq, phi, N)
    keep = interior_mask(w, None, edge_fraction)
    V = V[:, keep]
    _, rates = decay_rates(V, T.sites, N)
    return PhaseStats(float(phi), w[keep], good_mask(V, T.sites, N, C, eps), rates)


def good_fraction(lam: float, freq: Frequency, phi: float, N: int, C: float, eps: float,
                  edge_fraction: float = EDGE_FRACTION) -> float:
    """Share of (N, C, eps)-good eigenvectors among the interior eigenpairs.

    The outermost ``edge_fraction`` of eigenpairs at each end of the spectrum
    are truncation artifacts and are left out of the count.
    """
    return phase_stats(lam, freq, phi, N, C, eps, edge_fraction).fraction


def sample_phases(seed: int, k: int) -> np.ndarray:
    return np.random.default_rng(seed).random(k)


@dataclass(frozen=True)
class LocalizationSummary:
    stats: tuple[PhaseStats, ...]

    @property
    def fractions(self) -> np.ndarray:
        return np.array([s.fraction for s in self.stats])

    @property
    def median_fraction(self) -> float:
        return float(np.median(self.fractions))

    @property
    def median_good_decay(self) -> float:
        """Median decay rate pooled over good eigenpairs of all phases (nan if none)."""
        rates = np.concatenate([s.decay_rates[s.good] for s in self.stats])
        return float(np.median(rates)) if len(rates) else math.nan


def localization_summary(lam: float, freq: Frequency, N: int, C: float, eps: float,
                         n_phases: int = 10, seed: int = 0) -> LocalizationSummary:
    """Per-phase statistics at ``n_phases`` uniform random phases."""
    return LocalizationSummary(tuple(phase_stats(lam, freq, phi, N, C, eps) for phi in sample_phases(seed, n_phases)))


@dataclass(frozen=True)
class WitnessReport:
    level: int
    q: int
    energies: np.ndarray
    growth_2q: np.ndarray
    growth_q: np.ndarray
    growth_neg_q: np.ndarray
    trace_abs: np.ndarray
    unresolved: int

    @property
    def min_growth(self) -> float:
        return float(self.growth_2q.min()) if len(self.growth_2q) else math.nan

    @property
    def min_max_growth(self) -> float:
        """min over pairs of max(|A_q v|, |A_-q v|, |A_2q v|)."""
        if not len(self.growth_2q):
            return math.nan
        return float(np.max([self.growth_q, self.growth_neg_q, self.growth_2q], axis=0).min())


def _apply_norms(lam, energies, phi, shifts, v, invert=False):
    units, ls = transfer(lam, energies, phi, shifts)
    if invert:
        adj = np.empty_like(units)
        adj[:, 0, 0], adj[:, 1, 1] = units[:, 1, 1], units[:, 0, 0]
        adj[:, 0, 1], adj[:, 1, 0] = -units[:, 0, 1], -units[:, 1, 0]
        units = adj
    w = np.einsum("bij,bj->bi", units, v)
    with np.errstate(divide="ignore", over="ignore"):
        return np.exp(ls + np.log(np.linalg.norm(w, axis=1)))


def sc_witness(lam: float, freq: Frequency, phi: float, N: int, level: int,
               edge_fraction: float = EDGE_FRACTION) -> WitnessReport:
    """Trace-recurrence growth of the boundary data (u(0), u(-1)) of interior eigenvectors.

    Pairs whose boundary data underflows to zero are counted as unresolved.
    """
    beta = beta_estimate(freq, 1).limsup_proxy
    if lam <= 1 or math.log(lam) >= beta - 0.1:
        raise RegimeMismatch(f"need 1 < lam and ln lam < beta - 0.1 (lam={lam}, beta={beta:.4f})")
    q = freq.q[level]
    T, w, V = box_eigenpairs(lam, freq, phi, N)
    keep = interior_mask(w, None, edge_fraction)
    w, V = w[keep], V[:, keep]
    v = np.stack([V[N], V[N - 1]], axis=1)
    nv = np.linalg.norm(v, axis=1)
    ok = nv > TAIL_FLOOR
    w, v = w[ok], v[ok] / nv[ok, None]
    g_q = _apply_norms(lam, w, phi, freq.multiples_mod1(np.arange(q)), v)
    g_neg = _apply_norms(lam, w, phi, freq.multiples_mod1(np.arange(-q, 0)), v, invert=True)
    g_2q = _apply_norms(lam, w, phi, freq.multiples_mod1(np.arange(2 * q)), v)
    units, ls = transfer(lam, w, phi, freq.multiples_mod1(np.arange(q), level))
    tr = np.abs(units[:, 0, 0] + units[:, 1, 1]) * np.exp(ls)
    return WitnessReport(level, q, w, g_2q, g_q, g_neg, tr, int((~ok).sum()))

