"""Command line entry point: ``irislab {gen-networks,run,summarize,prob}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .errors import IrisLabError, ParameterError
from .experiments import (
    ExperimentConfig,
    gen_networks,
    preset,
    run_experiment,
    with_overrides,
    write_summary,
)
from .privacy import KINDS, analytic_probability, empirical_probability, quantize_offsets


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(_fraction(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _fraction(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="irislab", description="Chord ring simulator and query-privacy laboratory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-networks", help="write seeded network files")
    g.add_argument("--count", type=int, default=500)
    g.add_argument("--address-bits", type=int, default=23)
    g.add_argument("--nodes", type=int, default=1000)
    g.add_argument("--attackers", type=_fraction, default=0.0, help="adversary fraction stored in the files")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run a preset (E1..E5) or a custom experiment")
    r.add_argument("--experiment", choices=["E1", "E2", "E3", "E4", "E5"], type=str.upper)
    r.add_argument("--alpha", type=_floats, help="comma-separated alphas")
    r.add_argument("--delta-frac", type=_floats, help="comma-separated delta fractions of 2^m, e.g. 1/16,1/4")
    r.add_argument("--attackers", type=_floats, help="comma-separated adversary fractions")
    r.add_argument("--runs", type=int)
    r.add_argument("--nodes", type=int)
    r.add_argument("--address-bits", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--networks", type=int, help="size of the network pool")
    r.add_argument("--networks-dir", help="load networks from files written by gen-networks")
    r.add_argument("--chord-baseline", action="store_true", default=None)
    r.add_argument("--workers", type=int)
    r.add_argument("--out", required=True)

    s = sub.add_parser("summarize", help="summarize every experiment under a results directory")
    s.add_argument("results")
    s.add_argument("--json", action="store_true", help="print the machine-readable summary instead of the table")

    q = sub.add_parser("prob", help="attacker probability for a target offset given a reference offset")
    q.add_argument("--kind", choices=KINDS, required=True)
    q.add_argument("--o", type=int, required=True)
    q.add_argument("--x", type=int, required=True)
    q.add_argument("--delta", type=int, default=100, help="bound in grid units (default: percent grid)")
    q.add_argument("--from", dest="source", help="probabilities CSV (or directory) to estimate from")
    return p


def _cmd_gen(args) -> int:
    paths = gen_networks(args.count, args.address_bits, args.nodes, args.seed, args.out, args.attackers)
    print(f"wrote {len(paths)} network files to {args.out}")
    return 0


def _cmd_run(args) -> int:
    overrides = dict(
        alphas=args.alpha,
        delta_fracs=args.delta_frac,
        fractions=args.attackers,
        runs=args.runs,
        n=args.nodes,
        m=args.address_bits,
        seed=args.seed,
        networks=args.networks,
        network_dir=args.networks_dir,
        chord_baseline=args.chord_baseline,
        workers=args.workers,
        out=args.out,
    )
    base = preset(args.experiment) if args.experiment else ExperimentConfig()
    cfg = with_overrides(base, **overrides)
    out = run_experiment(cfg)
    print(f"{cfg.name}: {len(cfg.combos())} combination(s) x {cfg.runs} runs written to {out}")
    return 0


def _cmd_summarize(args) -> int:
    summary, table = write_summary(args.results)
    print(json.dumps(summary, indent=2, sort_keys=True) if args.json else table)
    return 0


def _load_samples(source: str, grid: int) -> list[tuple[int, int]]:
    path = Path(source)
    files = sorted(path.rglob("*_probabilities.csv")) if path.is_dir() else [path]
    if not files:
        raise ParameterError(f"no probabilities CSV under {source}")
    samples = []
    for f in files:
        with f.open(newline="") as fh:
            for row in csv.DictReader(fh):
                samples.append(
                    quantize_offsets(int(row["target_offset"]), int(row["r_offset"]), int(row["delta"]), grid)
                )
    return samples


def _cmd_prob(args) -> int:
    value = analytic_probability(args.kind, args.o, args.x, args.delta)
    print(f"analytic  {args.kind}(o={args.o}, x={args.x}, delta={args.delta}) = {value:.6f}")
    if args.source:
        est = empirical_probability(_load_samples(args.source, args.delta), args.kind, args.o, args.x)
        shown = "undefined (no sample meets the condition)" if est.value is None else f"{est.value:.6f}"
        print(f"empirical {shown}  [{est.hits}/{est.conditioned} samples]")
    return 0


COMMANDS = {"gen-networks": _cmd_gen, "run": _cmd_run, "summarize": _cmd_summarize, "prob": _cmd_prob}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except IrisLabError as exc:
        print(f"irislab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
