"""Fourier series on the circle, the cohomological equation, and dual Bloch waves."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .arithmetic import Frequency, beta_estimate
from .errors import DivisorUnderflow, NotDecaying

MAX_ORDER = 2**14


@dataclass(frozen=True)
class FourierSeries:
    """Coefficients c_k for k = -K..K, stored at index k + K."""

    coeffs: np.ndarray
    real_valued: bool = False
    K: int = field(init=False)
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 1 or len(c) % 2 == 0:
            raise ValueError("need 2K+1 coefficients")
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "K", (len(c) - 1) // 2)
        if self.validate and self.real_valued and not np.allclose(c, np.conj(c[::-1]), rtol=1e-12, atol=0):
            raise ValueError("real-valued series needs c_{-k} = conj(c_k)")

    @property
    def ks(self) -> np.ndarray:
        return np.arange(-self.K, self.K + 1)

    def coef(self, k: int) -> complex:
        return complex(self.coeffs[k + self.K]) if abs(k) <= self.K else 0j

    @classmethod
    def zero(cls, K: int) -> "FourierSeries":
        return cls(np.zeros(2 * K + 1), True)

    @classmethod
    def constant(cls, c: float, K: int = 0) -> "FourierSeries":
        out = np.zeros(2 * K + 1, dtype=complex)
        out[K] = c
        return cls(out, np.isreal(c))

    @classmethod
    def cosine(cls, K: int = 1) -> "FourierSeries":
        """cos 2 pi theta."""
        out = np.zeros(2 * K + 1, dtype=complex)
        out[K - 1] = out[K + 1] = 0.5
        return cls(out, True)

    @classmethod
    def exp_decay(cls, rate: float, K: int) -> "FourierSeries":
        """c_k = e^{-rate |k|}."""
        return cls(np.exp(-rate * np.abs(np.arange(-K, K + 1))).astype(complex), True)

    def __add__(self, other: "FourierSeries") -> "FourierSeries":
        K = max(self.K, other.K)
        return FourierSeries(self.padded(K) + other.padded(K), self.real_valued and other.real_valued, validate=False)

    def __sub__(self, other: "FourierSeries") -> "FourierSeries":
        K = max(self.K, other.K)
        return FourierSeries(self.padded(K) - other.padded(K), self.real_valued and other.real_valued, validate=False)

    def padded(self, K: int) -> np.ndarray:
        out = np.zeros(2 * K + 1, dtype=complex)
        out[K - self.K:K + self.K + 1] = self.coeffs
        return out

    def without_mean(self) -> "FourierSeries":
        c = self.coeffs.copy()
        c[self.K] = 0
        return FourierSeries(c, self.real_valued)

    def shift(self, freq: Frequency) -> "FourierSeries":
        """theta -> f(theta + alpha): c_k -> c_k e^{2 pi i k alpha}."""
        x = freq.multiples_mod1(self.ks)
        return FourierSeries(self.coeffs * np.exp(2j * np.pi * x), self.real_valued, validate=False)

    def evaluate(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.exp(2j * np.pi * np.multiply.outer(theta, self.ks)) @ self.coeffs


def log_strip_norm(f: FourierSeries, h: float) -> float:
    """log of sum |c_k| e^{2 pi |k| h}, computed without overflow."""
    mag = np.abs(f.coeffs)
    nz = mag > 0
    if not nz.any():
        return -math.inf
    return float(logsumexp(np.log(mag[nz]) + 2 * np.pi * np.abs(f.ks[nz]) * h))


def strip_norm(f: FourierSeries, h: float) -> float:
    """sum |c_k| e^{2 pi |k| h}; an upper bound for sup |f| on |Im theta| < h."""
    if h < 0:
        raise ValueError("h must be >= 0")
    x = log_strip_norm(f, h)
    return 0.0 if x == -math.inf else (math.exp(x) if x < 709 else math.inf)


def small_divisors(freq: Frequency, ks) -> np.ndarray:
    """|e^{2 pi i k alpha} - 1| as 2 sin(pi ||k alpha||)."""
    x = freq.multiples_mod1(ks)
    return 2 * np.sin(np.pi * np.minimum(x, 1 - x))


@dataclass(frozen=True)
class CohomologicalSolution:
    psi: FourierSeries
    residual: float
    log_norm_ratio: float
    within_budget: bool

    @property
    def norm_ratio(self) -> float:
        return math.exp(self.log_norm_ratio) if self.log_norm_ratio < 709 else math.inf


def solve_cohomological(eta: FourierSeries, freq: Frequency, h_in: float, h_out: float) -> CohomologicalSolution:
    """psi(theta + alpha) - psi(theta) = eta(theta) - mean(eta).

    ``residual`` is strip_norm of the defect at h_out relative to
    strip_norm(eta, h_in).  ``within_budget`` reports whether h_in - h_out
    exceeds the beta estimate of ``freq``; the solve runs either way.
    """
    if not h_out < h_in:
        raise ValueError("h_out must be smaller than h_in")
    ks = eta.ks
    div = small_divisors(freq, ks)
    nz = ks != 0
    if np.any(div[nz] < 1e-300):
        raise DivisorUnderflow("a divisor vanished; K reaches a multiple of q_depth")
    rot = np.exp(2j * np.pi * freq.multiples_mod1(ks))
    psi_c = np.zeros_like(eta.coeffs)
    psi_c[nz] = eta.coeffs[nz] / (rot[nz] - 1)
    psi = FourierSeries(psi_c, eta.real_valued, validate=False)
    defect = psi.shift(freq) - psi - eta.without_mean()
    log_eta = log_strip_norm(eta, h_in)
    if log_eta == -math.inf:
        residual, ratio = 0.0, -math.inf
    else:
        ld = log_strip_norm(defect, h_out)
        residual = 0.0 if ld == -math.inf else math.exp(min(ld - log_eta, 700))
        ratio = log_strip_norm(psi, h_out) - log_eta
    depth = freq.depth
    beta = beta_estimate(freq, 1).limsup_proxy if depth >= 2 else 0.0
    return CohomologicalSolution(psi, residual, ratio, h_in - h_out > beta)


def default_order(freq: Frequency, level: int | None = None) -> int:
    """4 q_n of the deepest (or given) level, capped at 2^14 and below q_depth.

    Orders at or beyond q_depth meet exact multiples of the stored rational.
    """
    q = freq.q[level if level is not None else -1]
    return int(max(1, min(4 * q, MAX_ORDER, freq.q[-1] - 1)))


@dataclass(frozen=True)
class BlochReport:
    residual: float
    bloch: FourierSeries
    samples: np.ndarray


def bloch_transport(u, energy: float, lam: float, freq: Frequency, phi: float,
                    theta0: float = 0.0, sample_count: int | None = None,
                    min_decay: float = 0.1) -> BlochReport:
    """Dual sequence x_k = e^{2 pi i k phi} psi(theta0 + k alpha), psi(theta) = sum u(n) e^{2 pi i n theta}.

    ``u`` lives on sites -N..N.  The residual is the sup over interior k of the
    dual equation defect divided by max |x_k|.
    """
    from .localization import decay_rates

    u = np.asarray(u, dtype=float)
    if len(u) % 2 == 0:
        raise ValueError("u must live on sites -N..N")
    N = (len(u) - 1) // 2
    sites = np.arange(-N, N + 1)
    if not np.any(u):
        raise NotDecaying("zero vector")
    _, rate = decay_rates(u[:, None], sites, N)
    if rate[0] < min_decay:
        raise NotDecaying(f"fitted decay rate {rate[0]:.3g} < {min_decay}")
    u = u / np.linalg.norm(u)
    S = sample_count if sample_count is not None else N // 2
    ks = np.arange(-S - 1, S + 2)
    # phase of n (theta0 + k alpha) mod 1 through exact integer products n*k
    nk = np.multiply.outer(sites, ks)
    ang = np.mod(np.multiply.outer(sites, np.full(len(ks), theta0)) + freq.multiples_mod1(nk), 1.0)
    psi = (u[:, None] * np.exp(2j * np.pi * ang)).sum(axis=0)
    x = np.exp(2j * np.pi * np.mod(ks * phi, 1.0)) * psi
    pot = 2 / lam * np.cos(2 * np.pi * freq.phases(theta0, ks[1:-1]))
    defect = x[2:] + x[:-2] + pot * x[1:-1] - (energy / lam) * x[1:-1]
    residual = float(np.abs(defect).max() / np.abs(x[1:-1]).max())
    return BlochReport(residual, FourierSeries(u.astype(complex)), x[1:-1])
