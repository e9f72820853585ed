"""Command line entry point: ``amo <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .arithmetic import DEFAULT_DIGIT_CAP, Frequency, beta_estimate, parse_alpha, synthesize, synthesize_to_cap
from .errors import AmoError, InsufficientDepth, SweepIncomplete

log = logging.getLogger("amo")


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _add_freq(p: argparse.ArgumentParser, required: bool = True) -> None:
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--alpha", help="golden, sqrt2m1, a decimal in (0,1), p/q, or a quotient list a1,a2,...")
    g.add_argument("--beta", type=float, help="synthesize a frequency with this beta target")
    p.add_argument("--depth", type=int, default=None, help="continued-fraction depth (default: to the digit cap)")
    p.add_argument("--a1-seed", type=int, default=None, help="first partial quotient of a synthesized frequency")


def _frequency(args) -> Frequency:
    if args.alpha is not None:
        return parse_alpha(args.alpha, args.depth or 40)
    from .phaselab import default_a1_seed

    seed = args.a1_seed if args.a1_seed is not None else default_a1_seed(args.beta)
    if args.depth is not None:
        return synthesize(args.beta, args.depth, seed, DEFAULT_DIGIT_CAP)
    return synthesize_to_cap(args.beta, seed, DEFAULT_DIGIT_CAP)


def _beta_of(freq: Frequency) -> float:
    try:
        return beta_estimate(freq, 1).limsup_proxy
    except InsufficientDepth:
        return 0.0


def _open_out(path):
    return open(path, "w", newline="") if path and path != "-" else sys.stdout


# ---- subcommands -----------------------------------------------------------

def cmd_cf(args) -> int:
    freq = _frequency(args)
    try:
        per_level = beta_estimate(freq, 1).per_level
    except InsufficientDepth:
        per_level = ()
    for n in range(1, freq.depth + 1):
        row = {"n": n, "a": freq.partial_quotients[n - 1], "p": freq.p[n], "q": freq.q[n]}
        if n <= len(per_level):
            row["beta"] = per_level[n - 1]
        if args.json:
            print(json.dumps(row))
        else:
            b = f"  beta={row['beta']:.6g}" if "beta" in row else ""
            print(f"n={n:3d}  a={row['a']}  p/q={row['p']}/{row['q']}{b}")
    return 0


def cmd_cocycle(args) -> int:
    from .cocycle import AmoParams, gordon_growth, product

    freq = _frequency(args)
    params = AmoParams(args.lam, args.energy, freq, args.theta)
    A = product(params, args.n, args.periodic_level)
    out = {"n": args.n, "log_norm": A.log_norm(), "log_abs_trace": A.log_abs_trace()}
    if A.log_norm() < 300:
        out["matrix"] = A.matrix().tolist()
    if args.gordon:
        level = args.periodic_level or _deepest_level(freq, abs(args.n))
        r = gordon_growth(params, level, np.array([1.0, 0.0]))
        out["gordon"] = {"q": r.q, "norm_q": r.norm_qn, "norm_neg_q": r.norm_neg_qn,
                         "norm_2q": r.norm_2qn, "trace_abs": r.trace_abs}
    if args.json:
        print(json.dumps(out))
    else:
        for k, v in out.items():
            print(f"{k}: {v}")
    return 0


def _deepest_level(freq: Frequency, bound: int) -> int:
    levels = [n for n in range(1, freq.depth) if freq.q[n] <= max(bound, 1)]
    return max(levels) if levels else 1


def cmd_le(args) -> int:
    from .lyapunov import le_batch
    from .spectrum import bulk_eigenvalues

    freq = _frequency(args)
    if args.energy_from_truncation:
        energies = bulk_eigenvalues(args.lam, freq, args.theta, args.energy_from_truncation, count=args.count)
    else:
        energies = np.array(_floats(args.energy))
    eps_list = _floats(args.eps_list) if args.eps_list else [0.0]
    fh = _open_out(args.csv)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["E", "eps", "le", "std_error"])
    for eps in eps_list:
        v, e = le_batch(args.lam, freq, energies, args.steps, args.phases, eps)
        for E, x, s in zip(energies, v, e):
            w.writerow([f"{E:.12g}", f"{eps:.6g}", f"{x:.10g}", f"{s:.3g}"])
    if fh is not sys.stdout:
        fh.close()
    return 0


def cmd_spectrum(args) -> int:
    from .spectrum import bands_rational, eigh, truncate

    if args.pq:
        p, q = (int(t) for t in args.pq.split("/"))
        bands = bands_rational(args.lam, p, q, E_resolution=args.resolution)
        table = bool(args.bands or args.csv)
        csv_on_stdout = table and (args.csv or "-") == "-"
        if args.measure:
            print(f"measure {bands.measure:.15g}", file=sys.stderr if csv_on_stdout else sys.stdout)
        if table:
            fh = _open_out(args.csv or "-")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["E_lo", "E_hi"])
            for lo, hi in bands.intervals:
                w.writerow([f"{lo:.15g}", f"{hi:.15g}"])
            if fh is not sys.stdout:
                fh.close()
        return 0
    if args.alpha is None:
        raise SystemExit("spectrum needs --alpha or --pq")
    freq = parse_alpha(args.alpha, args.depth or 40)
    w_ = eigh(truncate(args.lam, freq, args.theta, args.n), want_vectors=False)
    fh = _open_out(args.csv)
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["E"])
    for E in w_:
        writer.writerow([f"{E:.15g}"])
    if fh is not sys.stdout:
        fh.close()
    return 0


def cmd_localize(args) -> int:
    from .localization import phase_stats, sample_phases

    freq = _frequency(args)
    beta = _beta_of(freq)
    if args.c == "auto":
        C = math.log(args.lam) - beta - 0.1
        C = C if C > 0 else 0.5
    else:
        C = float(args.c)
    fh = _open_out(args.csv)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["phi", "E", "decay_rate", "good"])
    fractions = []
    for phi in sample_phases(args.seed, args.phases):
        st = phase_stats(args.lam, freq, phi, args.n, C, args.eps)
        fractions.append(st.fraction)
        for E, r, g in zip(st.energies, st.decay_rates, st.good):
            w.writerow([f"{phi:.12g}", f"{E:.12g}", f"{r:.6g}", "true" if g else "false"])
    if fh is not sys.stdout:
        fh.close()
    print(f"beta={beta:.6g} C={C:.6g} median good_fraction={np.median(fractions):.4f}", file=sys.stderr)
    return 0


def cmd_cohom(args) -> int:
    from .reducibility import FourierSeries, default_order, solve_cohomological

    freq = _frequency(args)
    K = args.k if args.k is not None else default_order(freq)
    if args.eta == "cos":
        eta = FourierSeries.cosine(K)
    elif args.eta.startswith("expdecay:"):
        eta = FourierSeries.exp_decay(float(args.eta.split(":", 1)[1]), K)
    else:
        raise SystemExit(f"unknown --eta {args.eta!r}")
    sol = solve_cohomological(eta, freq, args.h_in, args.h_out)
    out = {"K": K, "beta": _beta_of(freq), "residual": sol.residual,
           "log_norm_ratio": sol.log_norm_ratio, "within_budget": sol.within_budget}
    if args.json:
        print(json.dumps(out))
    else:
        for k, v in out.items():
            print(f"{k}: {v}")
    return 0


def cmd_sweep(args) -> int:
    from dataclasses import replace

    from .phaselab import SweepConfig, load_config, run_sweep

    config = load_config(args.config) if args.config else SweepConfig()
    over = {}
    if args.lambda_grid:
        over["lambda_grid"] = tuple(_floats(args.lambda_grid))
    if args.beta_grid:
        over["beta_grid"] = tuple(_floats(args.beta_grid))
    for key in ("N", "seed", "out_csv", "out_svg", "workers"):
        val = getattr(args, key.lower())
        if val is not None:
            over[key] = val
    config = replace(config, **over)
    try:
        cells = run_sweep(config)
    except SweepIncomplete as exc:
        print(f"sweep incomplete: {exc} (manifest: {exc.manifest_path})", file=sys.stderr)
        return 2
    counts = {}
    for c in cells:
        counts[c.classification] = counts.get(c.classification, 0) + 1
    print(f"{len(cells)} cells -> {config.out_csv}, {config.out_svg}; " +
          ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return 0


# ---- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="amo", description="Almost Mathieu operator numerics")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("cf", help="continued fractions and beta estimates")
    _add_freq(p)
    p.add_argument("--json", action="store_true", help="emit JSON lines")
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("cocycle", help="transfer-matrix products")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--energy", type=float, required=True)
    _add_freq(p)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--periodic-level", type=int, default=None)
    p.add_argument("--gordon", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cocycle)

    p = sub.add_parser("le", help="Lyapunov exponents")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--energy", help="comma-separated energies")
    g.add_argument("--energy-from-truncation", type=int, metavar="N", help="use interior eigenvalues of an N-site truncation")
    p.add_argument("--count", type=int, default=100, help="number of truncation energies")
    _add_freq(p)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=10_000)
    p.add_argument("--phases", type=int, default=32)
    p.add_argument("--eps-list", default=None, help="comma-separated imaginary phase shifts")
    p.add_argument("--csv", default="-")
    p.set_defaults(func=cmd_le)

    p = sub.add_parser("spectrum", help="truncation eigenvalues or rational bands")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--alpha")
    g.add_argument("--pq", help="rational rotation p/q")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--bands", action="store_true")
    p.add_argument("--measure", action="store_true")
    p.add_argument("--resolution", type=float, default=1e-6)
    p.add_argument("--csv", default=None)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("localize", help="eigenvector decay statistics")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    _add_freq(p)
    p.add_argument("--n", type=int, default=500, help="box half-width N (sites -N..N)")
    p.add_argument("--c", default="auto")
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--phases", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default="-")
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("cohom", help="cohomological equation")
    _add_freq(p)
    p.add_argument("--h-in", type=float, required=True)
    p.add_argument("--h-out", type=float, required=True)
    p.add_argument("--k", type=int, default=None, help="Fourier order K")
    p.add_argument("--eta", default="cos", help="cos or expdecay:<rate>")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cohom)

    p = sub.add_parser("sweep", help="phase-diagram sweep")
    p.add_argument("--config", default=None)
    p.add_argument("--lambda-grid", default=None)
    p.add_argument("--beta-grid", default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-svg", default=None)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    if hasattr(sys, "set_int_max_str_digits"):
        sys.set_int_max_str_digits(0)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except AmoError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
