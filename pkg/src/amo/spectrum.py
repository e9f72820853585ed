"""Truncated operators, rational band sets, integrated density of states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh as dense_eigh
from scipy.linalg import eigh_tridiagonal, LinAlgError

from .arithmetic import Frequency
from .cocycle import transfer
from .errors import AffinityCheckFailed, ConvergenceFailure

_TINY = math.sqrt(np.finfo(float).tiny)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Dirichlet truncation with diagonal 2 lam cos 2pi((j - offset) alpha + theta)."""

    diagonal: np.ndarray
    lam: float
    offset: int = 0

    @property
    def N(self) -> int:
        return len(self.diagonal)

    @property
    def offdiagonal(self) -> np.ndarray:
        return np.ones(self.N - 1)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.N) - self.offset

    def gershgorin(self) -> tuple[float, float]:
        radius = np.full(self.N, 2.0)
        if self.N > 0:
            radius[0] = radius[-1] = 1.0 if self.N > 1 else 0.0
        return float(np.min(self.diagonal - radius)), float(np.max(self.diagonal + radius))

    def to_dense(self) -> np.ndarray:
        e = self.offdiagonal
        return np.diag(self.diagonal) + np.diag(e, 1) + np.diag(e, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        """T @ v for vectors or column blocks."""
        out = self.diagonal.reshape((-1,) + (1,) * (v.ndim - 1)) * v
        out[:-1] += v[1:]
        out[1:] += v[:-1]
        return out


def truncate(lam: float, freq: Frequency, theta: float, N: int, offset: int = 0) -> TridiagonalOperator:
    if N < 1:
        raise ValueError("N must be >= 1")
    sites = np.arange(N) - offset
    diag = 2 * lam * np.cos(2 * np.pi * freq.phases(theta, sites))
    return TridiagonalOperator(diag, float(lam), offset)


def twisted_vectors(d: np.ndarray, e: np.ndarray, eigenvalues, chunk: int = 256) -> np.ndarray:
    """Eigenvectors from twisted LDL^T / UDU^T factorizations.

    Each vector is propagated outward from the twist index in log form, so
    exponentially small tails keep their relative accuracy instead of being
    swamped by round-off of order 1e-16.
    """
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    n, m = len(d), len(eigenvalues)
    out = np.empty((n, m))
    if n == 1:
        out[:] = 1.0
        return out
    e2 = e * e
    for start in range(0, m, chunk):
        lams = eigenvalues[start:start + chunk]
        k = len(lams)
        shifted = d[:, None] - lams[None, :]
        dp = np.empty((n, k))
        dm = np.empty((n, k))
        dp[0] = shifted[0]
        for i in range(1, n):
            prev = np.where(dp[i - 1] == 0, _TINY, dp[i - 1])
            dp[i] = shifted[i] - e2[i - 1] / prev
        dm[-1] = shifted[-1]
        for i in range(n - 2, -1, -1):
            nxt = np.where(dm[i + 1] == 0, _TINY, dm[i + 1])
            dm[i] = shifted[i] - e2[i] / nxt
        gamma = dp + dm - shifted
        r = np.argmin(np.abs(gamma), axis=0)
        dp = np.where(dp == 0, _TINY, dp)
        dm = np.where(dm == 0, _TINY, dm)
        idx = np.arange(n - 1)[:, None]
        # z_i = (-e_i / dp_i) z_{i+1} above the twist, z_{i+1} = (-e_i / dm_{i+1}) z_i below
        up = np.where(idx < r[None, :], -e[:, None] / dp[:-1], 1.0)
        down = np.where(idx >= r[None, :], -e[:, None] / dm[1:], 1.0)
        log_up = np.log(np.abs(up))
        log_down = np.log(np.abs(down))
        sign_up = np.sign(up)
        sign_down = np.sign(down)
        z_log = np.zeros((n, k))
        z_sign = np.ones((n, k))
        z_log[:-1] += np.cumsum(log_up[::-1], axis=0)[::-1]
        z_sign[:-1] *= np.cumprod(sign_up[::-1], axis=0)[::-1]
        z_log[1:] += np.cumsum(log_down, axis=0)
        z_sign[1:] *= np.cumprod(sign_down, axis=0)
        z_log -= z_log.max(axis=0)
        z = z_sign * np.exp(z_log)
        out[:, start:start + k] = z / np.linalg.norm(z, axis=0)
    return out


def _check(T: TridiagonalOperator, w, V, orthogonality: bool) -> bool:
    tol = 1e-10 * (2 + 2 * T.lam)
    res = np.abs(T.matvec(V) - V * w).max(axis=0)
    if np.any(res > tol):
        return False
    if orthogonality and V.shape[1] > 1:
        gram = V.T @ V
        np.fill_diagonal(gram, np.diag(gram) - 1)
        if np.abs(gram).max() > 1e-8:
            return False
    return True


def eigh(T: TridiagonalOperator, want_vectors: bool = True, method: str = "auto"):
    """Ascending eigenvalues (and eigenvectors as columns).

    ``method="auto"`` tries LAPACK's MRRR driver, then bisection with twisted
    factorizations, then a dense solver.  ``method="twisted"`` goes straight to
    bisection plus twisted factorizations; it keeps tails accurate but only
    checks residuals, not orthogonality.
    """
    d, e = np.asarray(T.diagonal, float), T.offdiagonal
    if T.N == 1:
        w = d.copy()
        return (w, np.ones((1, 1))) if want_vectors else w
    if not want_vectors:
        return eigh_tridiagonal(d, e, eigvals_only=True, lapack_driver="stebz")
    if method == "twisted":
        w = eigh_tridiagonal(d, e, eigvals_only=True, lapack_driver="stebz")
        V = twisted_vectors(d, e, w)
        if not _check(T, w, V, orthogonality=False):
            raise ConvergenceFailure("twisted eigenvectors failed the residual check")
        return w, V
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    try:
        w, V = eigh_tridiagonal(d, e, lapack_driver="stemr")
        if _check(T, w, V, orthogonality=True):
            return w, V
    except LinAlgError:
        pass
    w = eigh_tridiagonal(d, e, eigvals_only=True, lapack_driver="stebz")
    V = twisted_vectors(d, e, w)
    if _check(T, w, V, orthogonality=True):
        return w, V
    w, V = dense_eigh(T.to_dense())
    if _check(T, w, V, orthogonality=True):
        return w, V
    raise ConvergenceFailure("no solver met the residual and orthogonality tolerances")


def interior_mask(w: np.ndarray, V: np.ndarray | None = None, edge_fraction: float = 0.02,
                  boundary_fraction: float = 0.05, boundary_weight: float = 0.5) -> np.ndarray:
    """Drop the outermost ``edge_fraction`` of eigenvalues at each end and,
    when vectors are given, states with most of their weight near either edge
    of the box (Dirichlet surface states)."""
    n = len(w)
    cut = int(math.floor(edge_fraction * n))
    keep = np.zeros(n, dtype=bool)
    keep[cut:n - cut] = True
    if V is not None:
        width = max(1, int(math.ceil(boundary_fraction * V.shape[0])))
        p = V**2
        edge = np.maximum(p[:width].sum(axis=0), p[-width:].sum(axis=0))
        keep &= edge <= boundary_weight
    return keep


def bulk_eigenpairs(lam: float, freq: Frequency, theta: float, N: int, count: int | None = None, **mask_kw):
    """Interior eigenpairs of the size-N truncation, optionally thinned to ``count``."""
    T = truncate(lam, freq, theta, N)
    w, V = eigh(T, True, method="twisted")
    keep = np.flatnonzero(interior_mask(w, V, **mask_kw))
    if count is not None and count < len(keep):
        keep = keep[np.round(np.linspace(0, len(keep) - 1, count)).astype(int)]
    return w[keep], V[:, keep]


def bulk_eigenvalues(lam: float, freq: Frequency, theta: float, N: int, count: int | None = None, **mask_kw) -> np.ndarray:
    return bulk_eigenpairs(lam, freq, theta, N, count, **mask_kw)[0]


@dataclass(frozen=True)
class BandSet:
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        for (a, b) in ivs:
            if not a < b:
                raise ValueError(f"empty interval [{a}, {b}]")
        for (_, b0), (a1, _) in zip(ivs, ivs[1:]):
            if not b0 < a1:
                raise ValueError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    @property
    def measure(self) -> float:
        return math.fsum(b - a for a, b in self.intervals)

    def scaled(self, c: float) -> "BandSet":
        ivs = [(c * a, c * b) for a, b in self.intervals]
        if c < 0:
            ivs = [(b, a) for a, b in reversed(ivs)]
        return BandSet(tuple(ivs))

    def contains(self, E: float) -> bool:
        return any(a <= E <= b for a, b in self.intervals)

    def distance(self, E: float) -> float:
        if not self.intervals:
            return math.inf
        return min(0.0 if a <= E <= b else min(abs(E - a), abs(E - b)) for a, b in self.intervals)

    def gaps(self) -> list[tuple[float, float]]:
        return [(b0, a1) for (_, b0), (a1, _) in zip(self.intervals, self.intervals[1:])]


def spectrum_measure(b: BandSet) -> float:
    return b.measure


def _union(intervals) -> list[tuple[float, float]]:
    merged: list[list[float]] = []
    for a, b in sorted(intervals):
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return [(a, b) for a, b in merged if a < b]


def hausdorff(a: BandSet, b: BandSet) -> float:
    """Hausdorff distance between two finite unions of closed intervals."""
    if not a.intervals and not b.intervals:
        return 0.0
    if not a.intervals or not b.intervals:
        return math.inf

    def one_side(x: BandSet, y: BandSet) -> float:
        pts = [e for iv in x.intervals for e in iv]
        pts += [0.5 * (g0 + g1) for g0, g1 in y.gaps() if x.contains(0.5 * (g0 + g1))]
        return max(y.distance(p) for p in pts)

    return max(one_side(a, b), one_side(b, a))


def _cell_potential(lam: float, p: int, q: int, theta: float) -> np.ndarray:
    j = np.arange(q)
    return 2 * lam * np.cos(2 * np.pi * (np.mod(j * p, q) / q + theta))


def _floquet_eigenvalues(v: np.ndarray, sign: int) -> np.ndarray:
    """Eigenvalues of the q-periodic (sign=+1) or antiperiodic (sign=-1) cell."""
    q = len(v)
    if q == 1:
        return np.array([v[0] + 2.0 * sign])
    m = np.diag(v) + np.diag(np.ones(q - 1), 1) + np.diag(np.ones(q - 1), -1)
    m[0, -1] += sign
    m[-1, 0] += sign
    return np.linalg.eigvalsh(m)


class _TraceModel:
    """c0(E), c1(E) of tr A~_q(E, theta) = c0 + c1 cos(2 pi q theta)."""

    def __init__(self, lam: float, p: int, q: int):
        self.lam, self.p, self.q = lam, p, q
        self.shifts = np.mod(np.arange(q) * p, q) / q

    def traces(self, energies, thetas):
        units, ls = transfer(self.lam, energies, thetas, self.shifts)
        return units[..., 0, 0] + units[..., 1, 1], ls

    def margin(self, energies) -> np.ndarray:
        """Sign-faithful scaled version of |c0| - 2 - |c1|; <= 0 inside the union."""
        energies = np.atleast_1d(np.asarray(energies, dtype=float))
        th = np.array([0.0, 0.5 / self.q])
        tr, ls = self.traces(energies[:, None], th[None, :])
        top = ls.max(axis=1)
        ta = tr[:, 0] * np.exp(ls[:, 0] - top)
        tb = tr[:, 1] * np.exp(ls[:, 1] - top)
        c0, c1 = 0.5 * (ta + tb), 0.5 * (ta - tb)
        return np.abs(c0) - 2 * np.exp(-top) - np.abs(c1)

    def verify(self, energies, theta_samples: int, rtol: float = 1e-8) -> None:
        energies = np.atleast_1d(np.asarray(energies, dtype=float))
        th = np.concatenate([[0.0, 0.5 / self.q], np.arange(theta_samples) / (theta_samples * self.q) + 0.25 / (theta_samples * self.q)])
        tr, ls = self.traces(energies[:, None], th[None, :])
        top = ls.max(axis=1, keepdims=True)
        t = tr * np.exp(ls - top)
        c0, c1 = 0.5 * (t[:, :1] + t[:, 1:2]), 0.5 * (t[:, :1] - t[:, 1:2])
        model = c0 + c1 * np.cos(2 * np.pi * self.q * th[None, 2:])
        scale = np.maximum(np.abs(t).max(axis=1, keepdims=True), np.exp(-top))
        misfit = np.abs(model - t[:, 2:]) / scale
        if misfit.max() > rtol:
            raise AffinityCheckFailed(f"trace misfit {misfit.max():.3e} for p/q={self.p}/{self.q}")


def bands_rational(lam: float, p: int, q: int, theta_samples: int = 8, E_resolution: float = 1e-6) -> BandSet:
    """Union over theta of {E : |tr A~_q(E, theta)| <= 2} for rotation p/q."""
    if q < 1 or math.gcd(p, q) != 1:
        raise ValueError("p/q must be a reduced fraction")
    if theta_samples < 8:
        raise ValueError("theta_samples must be >= 8")
    lam = abs(lam)
    p %= q
    model = _TraceModel(lam, p, q)
    cands = [-2 - 2 * lam, 2 + 2 * lam]
    for theta in (0.0, 0.5 / q):
        v = _cell_potential(lam, p, q, theta)
        for sign in (1, -1):
            cands.extend(_floquet_eigenvalues(v, sign))
    cands = np.unique(np.clip(cands, -2 - 2 * lam, 2 + 2 * lam))
    mids = 0.5 * (cands[:-1] + cands[1:])
    wide = np.diff(cands) > 0
    mids = mids[wide]
    lo, hi = cands[:-1][wide], cands[1:][wide]
    model.verify(mids, theta_samples)
    inside = model.margin(mids) <= 0
    bands = _union(zip(lo[inside], hi[inside]))
    bands = [(_refine(model, a, -1, E_resolution), _refine(model, b, 1, E_resolution)) for a, b in bands]
    return BandSet(tuple(_union(bands)))


def _refine(model: _TraceModel, edge: float, outward: int, res: float) -> float:
    """Move ``edge`` to the last inside point within ``res`` of the transition."""
    inner, outer = edge - outward * res, edge + outward * res
    gi, go = model.margin([inner, outer])
    if gi <= 0 < go:
        # bracketed: bisect to the resolution
        while abs(outer - inner) > res / 64:
            mid = 0.5 * (inner + outer)
            if model.margin([mid])[0] <= 0:
                inner = mid
            else:
                outer = mid
        return edge if abs(edge - inner) <= res else inner
    return edge


def ids(lam: float, freq: Frequency, theta: float, N: int, E):
    """Fraction of eigenvalues of the size-N truncation that are <= E."""
    if N < 100:
        raise ValueError("N must be >= 100")
    w = eigh(truncate(lam, freq, theta, N), want_vectors=False)
    counts = np.searchsorted(w, np.asarray(E, dtype=float), side="right")
    return counts / N


def duality_scale_check(lam: float, p: int, q: int, resolution: float = 1e-6) -> float:
    """Hausdorff distance between the bands at lam and lam times the bands at 1/lam."""
    a = bands_rational(lam, p, q, E_resolution=resolution)
    b = bands_rational(1 / lam, p, q, E_resolution=resolution).scaled(lam)
    return hausdorff(a, b)
