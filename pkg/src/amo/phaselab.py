"""(lambda, beta) grid sweeps: per-cell diagnostics, classification, CSV and SVG output."""
from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Mapping

import numpy as np

from .arithmetic import DEFAULT_DIGIT_CAP, Frequency, beta_estimate, synthesize_to_cap
from .errors import IncompleteDiagnostics, RegimeMismatch, SweepIncomplete
from .localization import EDGE_FRACTION, box_eigenpairs, good_mask, sample_phases, sc_witness
from .lyapunov import le_batch
from .spectrum import interior_mask

log = logging.getLogger(__name__)

CSV_HEADER = ["lambda", "beta", "le", "subcritical", "good_fraction", "gordon_min", "class"]
CLASSES = ("ac", "sc", "pp", "boundary")
COLORS = {"ac": "#1f77b4", "sc": "#ff7f0e", "pp": "#2ca02c", "boundary": "#7f7f7f"}

DEFAULT_LAMBDAS = tuple(float(x) for x in np.round(np.geomspace(0.25, 8.0, 12), 12))
DEFAULT_BETAS = tuple(float(x) for x in np.round(np.linspace(0.1, 1.5, 8), 12))


@dataclass(frozen=True)
class Thresholds:
    t_pp: float = 0.5
    t_sc: float = 0.2
    le_tol: float = 0.03
    band_lo: float = 0.8
    band_hi: float = 1.25


@dataclass(frozen=True)
class SweepConfig:
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDAS
    beta_grid: tuple[float, ...] = DEFAULT_BETAS
    N: int = 500
    phases: int = 4
    eps: float = 0.2
    le_steps: int = 4000
    seed: int = 0
    out_csv: str = "phase_diagram.csv"
    out_svg: str = "phase_diagram.svg"
    # frequency synthesis: the first quotient fixes the active approximant q_1.
    # None picks min(50, round(detuning_budget / beta)) so that the detuning
    # 1/q_2 ~ e^{-beta q_1} stays resolvable in double precision.
    a1_seed: int | None = None
    detuning_budget: float = 30.0
    digit_cap: int = DEFAULT_DIGIT_CAP
    le_phases: int = 16
    le_energies: int = 16
    # C = ln(lam) - beta - c_offset when positive, otherwise c_floor
    c_offset: float = 0.1
    c_floor: float = 0.5
    workers: int = 1
    thresholds: Thresholds = field(default_factory=Thresholds)

    def __post_init__(self):
        lg = tuple(float(x) for x in self.lambda_grid)
        bg = tuple(float(x) for x in self.beta_grid)
        if not lg or not bg:
            raise ValueError("grids must be nonempty")
        if list(lg) != sorted(lg) or list(bg) != sorted(bg):
            raise ValueError("grids must be sorted ascending")
        if min(lg) <= 0 or min(bg) <= 0:
            raise ValueError("grid values must be positive")
        if self.N < 100:
            raise ValueError("N must be >= 100")
        if isinstance(self.thresholds, Mapping):
            object.__setattr__(self, "thresholds", Thresholds(**self.thresholds))
        object.__setattr__(self, "lambda_grid", lg)
        object.__setattr__(self, "beta_grid", bg)

    @classmethod
    def from_mapping(cls, data: Mapping) -> "SweepConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**dict(data))

    @property
    def manifest_path(self) -> Path:
        return Path(str(self.out_csv) + ".manifest.json")


@dataclass(frozen=True)
class PhaseCell:
    lam: float
    beta: float
    le: float
    subcritical: bool
    good_fraction: float
    gordon_min: float | None
    classification: str

    def row(self) -> list[str]:
        return [
            _fmt(self.lam),
            _fmt(self.beta),
            _fmt(self.le),
            "true" if self.subcritical else "false",
            _fmt(self.good_fraction),
            "" if self.gordon_min is None else _fmt(self.gordon_min),
            self.classification,
        ]


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def expected_class(lam: float, beta: float) -> str:
    """Spectral type predicted for (lam, beta) away from the transition lines."""
    if lam < 1:
        return "ac"
    return "sc" if lam < math.exp(beta) else "pp"


def in_boundary_band(lam: float, beta: float, th: Thresholds = Thresholds()) -> bool:
    return th.band_lo <= lam / math.exp(beta) <= th.band_hi


def _get(diag, key):
    if isinstance(diag, Mapping):
        return diag.get(key)
    return getattr(diag, {"lambda": "lam"}.get(key, key), None)


def _parse_bool(x):
    if isinstance(x, str):
        if x.lower() in ("true", "1"):
            return True
        if x.lower() in ("false", "0"):
            return False
        return None
    return None if x is None else bool(x)


def classify_cell(diagnostics, thresholds: Thresholds = Thresholds()) -> str:
    """ac / sc / pp / boundary from (lambda, beta, le, subcritical, good_fraction).

    Accepts a PhaseCell or a mapping such as a parsed CSV row.
    """
    vals = {}
    for key in ("lambda", "beta", "le", "good_fraction"):
        v = _get(diagnostics, key)
        try:
            v = float(v)
        except (TypeError, ValueError):
            raise IncompleteDiagnostics(f"missing or invalid {key!r}") from None
        if math.isnan(v):
            raise IncompleteDiagnostics(f"{key!r} is nan")
        vals[key] = v
    sub = _parse_bool(_get(diagnostics, "subcritical"))
    if sub is None:
        raise IncompleteDiagnostics("missing 'subcritical'")
    lam, beta, le, gf = vals["lambda"], vals["beta"], vals["le"], vals["good_fraction"]
    th = thresholds
    if in_boundary_band(lam, beta, th):
        return "boundary"
    if lam < 1:
        return "ac" if sub and le <= th.le_tol else "boundary"
    if le >= math.log(lam) - th.le_tol:
        if gf >= th.t_pp:
            return "pp"
        if gf <= th.t_sc:
            return "sc"
    return "boundary"


def cell_constant(lam: float, beta: float, config: SweepConfig) -> float:
    c = math.log(lam) - beta - config.c_offset
    return c if c > 0 else config.c_floor


def default_a1_seed(beta: float, detuning_budget: float = 30.0) -> int:
    """First quotient q_1 with beta q_1 near ``detuning_budget``, clipped to [2, 50]."""
    return int(min(50, max(2, round(detuning_budget / beta))))


def seed_for_beta(beta: float, config: SweepConfig) -> int:
    if config.a1_seed is not None:
        return config.a1_seed
    return default_a1_seed(beta, config.detuning_budget)


def _witness_level(freq: Frequency, N: int) -> int | None:
    levels = [n for n in range(1, freq.depth + 1) if 2 <= freq.q[n] <= N // 2]
    return max(levels) if levels else None


def evaluate_cell(lam: float, freq: Frequency, beta: float, config: SweepConfig, phis) -> PhaseCell:
    N, eps = config.N, config.eps
    C = cell_constant(lam, beta, config)
    fractions = []
    le_energies = None
    for phi in phis:
        T, w, V = box_eigenpairs(lam, freq, float(phi), N)
        keep = interior_mask(w, None, EDGE_FRACTION)
        fractions.append(float(good_mask(V[:, keep], T.sites, N, C, eps).mean()))
        if le_energies is None:
            bulk = np.flatnonzero(interior_mask(w, V, EDGE_FRACTION))
            pick = np.round(np.linspace(0, len(bulk) - 1, min(config.le_energies, len(bulk)))).astype(int)
            le_energies = w[bulk[pick]]
    values, _ = le_batch(lam, freq, le_energies, config.le_steps, config.le_phases)
    # median: a few truncation eigenvalues sit beside exponentially thin bands
    le = float(np.median(values))
    subcritical = False
    if lam < 1:
        width = -math.log(lam)
        strip, _ = le_batch(lam, freq, le_energies, config.le_steps, config.le_phases, eps_im=0.5 * width)
        tol = config.thresholds.le_tol
        subcritical = le <= tol and float(np.median(strip)) <= tol
    gordon = None
    if lam > 1 and math.log(lam) < beta - 0.1:
        level = _witness_level(freq, N)
        if level is not None:
            try:
                gordon = sc_witness(lam, freq, float(phis[0]), N, level).min_growth
            except RegimeMismatch:
                gordon = None
    gf = float(np.median(fractions))
    cell = PhaseCell(lam, beta, le, subcritical, gf, gordon, "boundary")
    return PhaseCell(lam, beta, le, subcritical, gf, gordon, classify_cell(cell, config.thresholds))


def _job(args):
    lam, quotients, beta, config, phis = args
    return evaluate_cell(lam, Frequency(quotients), beta, config, phis)


def write_csv(cells, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for cell in sorted(cells, key=lambda c: (c.beta, c.lam)):
            writer.writerow(cell.row())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_svg(cells, path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "amo-phase-diagram", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6.4, 4.8))
        for cls in CLASSES:
            pts = [(c.beta, c.lam) for c in cells if c.classification == cls]
            if pts:
                b, l = zip(*pts)
                ax.scatter(b, l, s=36, c=COLORS[cls], label=cls, edgecolors="none")
        if cells:
            bs = np.linspace(0, max(c.beta for c in cells) * 1.05, 200)
            ax.plot(bs, np.exp(bs), "k-", lw=1, label=r"$\lambda = e^\beta$")
            ax.axhline(1.0, color="k", lw=0.8, ls="--")
        ax.set_yscale("log")
        ax.set_xlabel(r"$\beta(\alpha)$")
        ax.set_ylabel(r"$\lambda$")
        ax.legend(loc="upper left", fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def _write_manifest(config: SweepConfig, cells, failed, error: str) -> Path:
    manifest = {
        "completed": [[c.lam, c.beta] for c in sorted(cells, key=lambda c: (c.beta, c.lam))],
        "failed": failed,
        "error": error,
        "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(config).items()},
    }
    path = config.manifest_path
    path.write_text(json.dumps(manifest, indent=2, default=str))
    return path


def run_sweep(config: SweepConfig) -> list[PhaseCell]:
    """Evaluate every grid cell, then write the CSV and SVG.

    One frequency is synthesized per beta and reused across lambda; the stored
    beta is the achieved estimate at the deepest level.  On failure the cells
    finished so far are flushed with a manifest and SweepIncomplete is raised.
    """
    freqs = {}
    for b in config.beta_grid:
        f = synthesize_to_cap(b, seed_for_beta(b, config), config.digit_cap)
        freqs[b] = (f, beta_estimate(f, 1).limsup_proxy)
    phis = sample_phases(config.seed, config.phases)
    jobs = [(lam, freqs[b][0].partial_quotients, freqs[b][1], config, phis)
            for b in config.beta_grid for lam in config.lambda_grid]
    cells: list[PhaseCell] = []
    failed = []
    error = ""
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            futures = [pool.submit(_job, j) for j in jobs]
            for j, fut in zip(jobs, futures):
                try:
                    cells.append(fut.result())
                except Exception as exc:  # noqa: BLE001 - reported via manifest
                    failed.append([j[0], j[2]])
                    error = error or repr(exc)
    else:
        for j in jobs:
            try:
                cells.append(_job(j))
            except Exception as exc:  # noqa: BLE001
                failed.append([j[0], j[2]])
                error = repr(exc)
                break
            log.info("cell lam=%.4g beta=%.4g -> %s", cells[-1].lam, cells[-1].beta, cells[-1].classification)
    write_csv(cells, config.out_csv)
    if failed or len(cells) < len(jobs):
        path = _write_manifest(config, cells, failed, error)
        raise SweepIncomplete(f"{len(cells)}/{len(jobs)} cells completed: {error}", path)
    write_svg(cells, config.out_svg)
    return sorted(cells, key=lambda c: (c.beta, c.lam))


def load_config(path) -> SweepConfig:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    data = data.get("sweep", data)
    return SweepConfig.from_mapping(data)


__all__ = [
    "SweepConfig", "PhaseCell", "Thresholds", "classify_cell", "run_sweep", "evaluate_cell",
    "expected_class", "in_boundary_band", "write_csv", "read_csv", "write_svg", "load_config",
]
