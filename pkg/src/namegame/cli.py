"""Command-line entry point: ``namegame {run,sweep,summarize,preset} ...``."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .engine import ConfigError, run
from .experiments import (PRESETS, RESULT_COLUMNS, SpecError, _fmt, config_from_params,
                          parse_spec, preset, resolve_seed_base, run_seed, run_sweep,
                          summarize)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--replicates", type=int, help="replicates per cell")
    p.add_argument("--seed", type=int, help="seed_base (unsigned 64-bit)")
    p.add_argument("--series", action="store_true", help="write per-run time series CSVs")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="namegame", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, target, helptext in (
            ("run", "spec", "single run of the spec's base configuration"),
            ("sweep", "spec", "all cells x replicates of a spec file"),
            ("preset", "name", f"named sweep: {', '.join(PRESETS)}")):
        p = sub.add_parser(verb, help=helptext)
        p.add_argument(target)
        _common(p)
    p = sub.add_parser("summarize", help="per-cell statistics of a results CSV")
    p.add_argument("csv")
    p.add_argument("--out", help="summary CSV path (default: alongside input)")
    return parser


def _sweep(spec, args) -> None:
    if args.replicates:
        spec.replicates = args.replicates
        spec.validate()
    out = Path(args.out)
    path = run_sweep(spec, out, jobs=args.jobs, series=args.series or None)
    summaries = summarize(path, out / "summary.csv")
    nonconv = sum(s.nonconverged for s in summaries)
    print(f"{spec.name}: {len(summaries)} cells x {spec.replicates} replicates -> {path}"
          f" ({nonconv} non-converged)")


def _run_one(spec, args) -> None:
    cfg = config_from_params(spec.base, seed=run_seed(spec.seed_base, 0, 0))
    res = run(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    row = [0, 0, cfg.seed, cfg.model, cfg.boundary, cfg.N, cfg.L, cfg.d_i, cfg.v, cfg.omega,
           cfg.sigma, cfg.dt, cfg.tau_m, cfg.tau_s, cfg.loss_p, res.converged,
           res.t_c if res.converged else "", res.M, res.M_alt, res.distinct_final, res.steps]
    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        writer.writerow([_fmt(x) for x in row])
    if args.series or spec.series:
        res.write_series(out / "series.csv")
    status = f"t_c = {res.t_c:g} s" if res.converged else f"no consensus after {res.steps} steps"
    print(f"{status}, M = {res.M:.3f}, M_alt = {res.M_alt:.3f}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "summarize":
            src = Path(args.csv)
            out = Path(args.out) if args.out else src.with_name("summary.csv")
            summarize(src, out)
            print(f"wrote {out}")
        elif args.verb == "preset":
            _sweep(preset(args.name, args.replicates, resolve_seed_base(0, args.seed)), args)
        else:
            spec = parse_spec(args.spec, seed_override=args.seed)
            (_run_one if args.verb == "run" else _sweep)(spec, args)
    except (SpecError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
