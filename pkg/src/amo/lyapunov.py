"""Lyapunov exponents of the transfer-matrix cocycle, real and complexified."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arithmetic import Frequency
from .cocycle import AmoParams, log_norms

# fixed irrational offset of the phase grid
PHASE_OFFSET = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class LeEstimate:
    value: float
    std_error: float
    n_steps: int
    n_phases: int


def phase_grid(n_phases: int, theta: float = 0.0) -> np.ndarray:
    return np.mod(theta + (np.arange(n_phases) + PHASE_OFFSET) / n_phases, 1.0)


def le_batch(
    lam: float,
    freq: Frequency,
    energies,
    n_steps: int,
    n_phases: int,
    eps_im: float = 0.0,
    theta: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Phase-averaged (1/n) log||A_n|| for many energies at once.

    Returns (values, std_errors), one entry per energy.
    """
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    lam = abs(lam)  # |lam| with E -> -E leaves the exponent unchanged
    grid = phase_grid(n_phases, theta)
    shifts = freq.multiples_mod1(np.arange(n_steps))
    e2, th2 = np.meshgrid(energies, grid, indexing="ij")
    per_phase = log_norms(lam, e2, th2, shifts, eps_im) / n_steps
    values = per_phase.mean(axis=1)
    if n_phases > 1:
        errors = per_phase.std(axis=1, ddof=1) / math.sqrt(n_phases)
    else:
        errors = np.zeros_like(values)
    return values, errors


def le_estimate(params: AmoParams, n_steps: int, n_phases: int) -> LeEstimate:
    """Mean over an equidistributed phase grid of (1/n) log||A_n(theta_j)||."""
    if n_steps < 1000:
        raise ValueError("n_steps must be >= 1000")
    if n_phases < 10:
        raise ValueError("n_phases must be >= 10")
    v, e = le_batch(params.lam, params.freq, [params.energy], n_steps, n_phases, params.eps_im, params.theta)
    return LeEstimate(float(v[0]), float(e[0]), n_steps, n_phases)


def bj_value(lam: float) -> float:
    """max(0, ln|lam|), the exponent on the spectrum."""
    return max(0.0, math.log(abs(lam)))


@dataclass(frozen=True)
class StripProfile:
    lam: float
    energy: float
    entries: tuple[tuple[float, LeEstimate], ...]
    tol: float

    @property
    def subcritical(self) -> bool:
        """Every tested eps below ln(1/lam) gives an exponent within tol of zero."""
        if self.lam >= 1:
            return False
        width = -math.log(self.lam)
        tested = [est for eps, est in self.entries if eps < width]
        return bool(tested) and all(abs(est.value) <= self.tol for est in tested)

    def values(self) -> np.ndarray:
        return np.array([est.value for _, est in self.entries])


def strip_profile(
    lam_dual: float,
    freq: Frequency,
    energy: float,
    eps_list,
    n_steps: int = 10_000,
    n_phases: int = 32,
    tol: float = 0.03,
) -> StripProfile:
    """Exponent of the cocycle with phase 2 pi theta + i eps, one entry per eps."""
    entries = []
    for eps in eps_list:
        if eps < 0:
            raise ValueError("eps values must be >= 0")
        v, e = le_batch(lam_dual, freq, [energy], n_steps, n_phases, float(eps))
        entries.append((float(eps), LeEstimate(float(v[0]), float(e[0]), n_steps, n_phases)))
    return StripProfile(abs(lam_dual), float(energy), tuple(entries), tol)
