"""Seeded experiment harness: network pools, runs, CSV output, summaries.

Every random quantity is derived from the master seed and a run id, so an
experiment writes byte-identical CSVs no matter how often (or with how many
workers) it is repeated.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .chord import Network, chord_retrieve, generate_network, load_network, save_network
from .errors import ParameterError, SetupError
from .iris import IrisParams, delta_from_fraction, iris_retrieve, predicted_distance, predicted_hops
from .privacy import ColluderModel, analyze_trace
from .ring import RingParams, cw_distance

log = logging.getLogger(__name__)

OUTPUTS = ("distances", "privacy", "probabilities")

DISTANCES_HEADER = ["run_id", "hop_index", "distance_to_target"]
PRIVACY_HEADER = [
    "run_id", "step_index", "node_id", "is_colluder", "prior", "posterior", "ratio", "correct_estimate",
]
PROBABILITIES_HEADER = ["run_id", "step_index", "target_offset", "r_offset", "delta"]
RUNS_HEADER = ["run_id", "network_seed", "requester", "target", "d0", "hops", "terminal"]
MINRATIO_HEADER = ["run_id", "min_ratio"]

# stream tags mixed into the seed sequence
_NET, _PAIR, _ROUTE = 0, 1, 2


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "custom"
    m: int = 23
    n: int = 1000
    runs: int = 100
    alphas: tuple[float, ...] = (0.25,)
    delta_fracs: tuple[float, ...] = (1 / 16,)
    fractions: tuple[float, ...] = (0.0,)
    seed: int = 0
    out: Optional[str] = None
    networks: int = 500
    network_dir: Optional[str] = None
    chord_baseline: bool = False
    outputs: tuple[str, ...] = OUTPUTS
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ParameterError("runs must be at least 1")
        if self.networks < 1:
            raise ParameterError("networks must be at least 1")
        for a in self.alphas:
            if not 0.0 <= a < 1.0:
                raise ParameterError(f"alpha {a} outside [0, 1)")
        for v in (*self.delta_fracs, *self.fractions):
            if not 0.0 <= v <= 1.0:
                raise ParameterError(f"fraction {v} outside [0, 1]")
        unknown = set(self.outputs) - set(OUTPUTS)
        if unknown:
            raise ParameterError(f"unknown outputs {sorted(unknown)}")
        RingParams(self.m)

    @property
    def ring(self) -> RingParams:
        return RingParams(self.m)

    def combos(self) -> list[tuple[float, float, float]]:
        """(f, delta_frac, alpha) triples in output order."""
        return list(itertools.product(self.fractions, self.delta_fracs, self.alphas))


PRESETS: dict[str, dict] = {
    "E1": dict(alphas=(0.25, 0.35, 0.5, 0.75), delta_fracs=(1 / 16,), fractions=(0.0,), runs=100,
               chord_baseline=True, outputs=("distances",)),
    "E2": dict(alphas=(0.35,), delta_fracs=(1 / 4, 1 / 8, 1 / 16, 1 / 32), fractions=(0.0,), runs=100,
               chord_baseline=True, outputs=("distances",)),
    "E3": dict(alphas=(0.25,), delta_fracs=(1 / 4,), fractions=(0.0, 1 / 2, 1 / 3, 1 / 6, 1 / 8), runs=500,
               outputs=("privacy",)),
    "E4": dict(alphas=(0.75,), delta_fracs=(1 / 128,), fractions=(0.0,), runs=500,
               outputs=("probabilities",)),
    "E5": dict(alphas=(0.75,), delta_fracs=(1 / 128,), fractions=(0.0,), runs=500,
               outputs=("probabilities",)),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    key = name.upper()
    if key not in PRESETS:
        raise ParameterError(f"unknown experiment {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig(name=key, **{**PRESETS[key], **overrides})


def derive_seed(master: int, *path: int) -> int:
    return int(np.random.SeedSequence([master, *path]).generate_state(1, dtype=np.uint64)[0])


def network_seed(master: int, index: int) -> int:
    return derive_seed(master, _NET, index)


def gen_networks(count: int, m: int, n: int, seed: int, out_dir, f: float = 0.0) -> list[Path]:
    """Write ``count`` network files whose seeds derive from ``seed``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SetupError(f"cannot create {out}: {exc}") from exc
    ring = RingParams(m)
    paths = []
    for i in range(count):
        net = generate_network(ring, n, f, network_seed(seed, i))
        paths.append(save_network(net, out / f"network_{i:04d}.net"))
    return paths


@lru_cache(maxsize=8)
def _network_files(network_dir: str) -> tuple[Path, ...]:
    files = tuple(sorted(Path(network_dir).glob("*.net")))
    if not files:
        raise SetupError(f"no network files in {network_dir}")
    return files


@lru_cache(maxsize=32)
def _base_network(m: int, n: int, seed: int, index: int, network_dir: Optional[str]) -> Network:
    if network_dir is not None:
        files = _network_files(network_dir)
        net = load_network(files[index % len(files)])
        if net.ring.m != m or net.node_count != n:
            raise SetupError(f"{files[index % len(files)]} has m={net.ring.m}, n={net.node_count}; expected m={m}, n={n}")
        return net
    return generate_network(RingParams(m), n, 0.0, network_seed(seed, index))


@lru_cache(maxsize=64)
def _network(m: int, n: int, seed: int, index: int, network_dir: Optional[str], f: float) -> Network:
    base = _base_network(m, n, seed, index, network_dir)
    return base if f == base.fraction else base.with_adversary_fraction(f)


@dataclass
class RunRecord:
    run_id: int
    network_seed: int
    requester: int
    target: int
    distances: list[int]
    hops: int
    terminal: int
    privacy: list[tuple] = field(default_factory=list)
    min_ratio: Optional[float] = None
    probabilities: list[tuple] = field(default_factory=list)


def network_index(cfg: ExperimentConfig, run_id: int) -> int:
    """Network used by a run; surplus runs share networks in contiguous blocks."""
    if cfg.runs <= cfg.networks:
        return run_id
    return run_id * cfg.networks // cfg.runs


def _pair(cfg: ExperimentConfig, net: Network, run_id: int) -> tuple[int, int]:
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _PAIR, run_id]))
    honest = [v for v in net.nodes if v not in net.adversaries]
    if not honest:
        raise SetupError("every node is an adversary; no requester available")
    requester = honest[int(rng.integers(len(honest)))]
    target = int(rng.integers(0, cfg.ring.size, dtype=np.uint64))
    return requester, target


def _run_one(cfg: ExperimentConfig, combo_index: Optional[int], run_id: int) -> RunRecord:
    """One query; ``combo_index`` None means the vanilla Chord baseline."""
    ring = cfg.ring
    if combo_index is None:
        f, delta_frac, alpha = cfg.fractions[0], None, None
    else:
        f, delta_frac, alpha = cfg.combos()[combo_index]
    index = network_index(cfg, run_id)
    net = _network(cfg.m, cfg.n, cfg.seed, index, cfg.network_dir, f)
    requester, target = _pair(cfg, net, run_id)

    if combo_index is None:
        _, trace = chord_retrieve(net, requester, target)
        params = None
    else:
        params = IrisParams(alpha=alpha, delta=delta_from_fraction(delta_frac, ring))
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _ROUTE, combo_index, run_id]))
        _, trace = iris_retrieve(net, requester, target, params, rng)

    rec = RunRecord(
        run_id=run_id,
        network_seed=net.seed if net.seed is not None else -1,
        requester=requester,
        target=target,
        distances=[s.distance for s in trace.steps],
        hops=trace.hops,
        terminal=trace.terminal,
    )
    if params is None or params.delta == 0:
        return rec
    if "privacy" in cfg.outputs:
        report = analyze_trace(trace, params, ColluderModel(net.adversaries), ring)
        rec.privacy = [
            (i, o.node, int(o.is_colluder), o.prior, o.posterior, repr(o.ratio), int(o.correct_estimate))
            for i, o in enumerate(report.observations)
        ]
        rec.min_ratio = report.min_ratio
    if "probabilities" in cfg.outputs:
        for i, s in enumerate(trace.steps):
            t_off = cw_distance(s.queried, target, ring)
            if t_off <= params.delta:
                rec.probabilities.append((i, t_off, cw_distance(s.queried, s.reference, ring), params.delta))
    return rec


def _run_batch(args) -> list[RunRecord]:
    cfg, combo_index, run_ids = args
    return [_run_one(cfg, combo_index, r) for r in run_ids]


def _collect(cfg: ExperimentConfig, combo_index: Optional[int], pool) -> list[RunRecord]:
    run_ids = range(cfg.runs)
    if pool is None:
        return _run_batch((cfg, combo_index, run_ids))
    chunk = max(1, math.ceil(cfg.runs / (cfg.workers * 4)))
    batches = [(cfg, combo_index, run_ids[i : i + chunk]) for i in range(0, cfg.runs, chunk)]
    return [rec for batch in pool.map(_run_batch, batches) for rec in batch]


def _fmt(v: float) -> str:
    return format(v, ".4g")


def combo_label(f: float, delta_frac: float, alpha: float) -> str:
    return f"a{_fmt(alpha)}_d{_fmt(delta_frac)}_f{_fmt(f)}"


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_records(out: Path, prefix: str, records: list[RunRecord], outputs: Sequence[str]) -> dict[str, str]:
    files = {}

    def emit(kind, header, rows):
        name = f"{prefix}_{kind}.csv"
        _write_csv(out / name, header, rows)
        files[kind] = name

    emit("runs", RUNS_HEADER, (
        (r.run_id, r.network_seed, r.requester, r.target, r.distances[0] if r.distances else 0, r.hops, r.terminal)
        for r in records
    ))
    if "distances" in outputs:
        emit("distances", DISTANCES_HEADER, (
            (r.run_id, i, d) for r in records for i, d in enumerate(r.distances)
        ))
    if "privacy" in outputs:
        emit("privacy", PRIVACY_HEADER, ((r.run_id, *row) for r in records for row in r.privacy))
        emit("minratio", MINRATIO_HEADER, (
            (r.run_id, "" if r.min_ratio is None else repr(r.min_ratio)) for r in records
        ))
    if "probabilities" in outputs:
        emit("probabilities", PROBABILITIES_HEADER, ((r.run_id, *row) for r in records for row in r.probabilities))
    return files


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Run every parameter combination and write CSVs plus ``manifest.json`` into ``cfg.out``."""
    if cfg.out is None:
        raise ParameterError("config has no output directory")
    out = Path(cfg.out)
    if cfg.network_dir is not None:
        _network_files(cfg.network_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SetupError(f"cannot create {out}: {exc}") from exc

    ring = cfg.ring
    manifest = {"config": asdict(cfg), "nu": (ring.size - 1) / cfg.n, "combos": []}
    manifest["config"]["out"] = None  # keep the manifest independent of where it was written
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for ci, (f, dfrac, alpha) in enumerate(cfg.combos()):
            label = combo_label(f, dfrac, alpha)
            log.info("%s: %s, %d runs", cfg.name, label, cfg.runs)
            records = _collect(cfg, ci, pool)
            files = _write_records(out, label, records, cfg.outputs)
            manifest["combos"].append({
                "label": label, "kind": "iris", "alpha": alpha, "delta_frac": dfrac,
                "delta": delta_from_fraction(dfrac, ring), "f": f, "files": files,
            })
        if cfg.chord_baseline:
            records = _collect(cfg, None, pool)
            files = _write_records(out, "chord", records, ("distances",))
            manifest["combos"].append({
                "label": "chord", "kind": "chord", "alpha": None, "delta_frac": None,
                "delta": None, "f": cfg.fractions[0], "files": files,
            })
    finally:
        if pool is not None:
            pool.shutdown()
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def _read_csv(path: Path) -> list[dict[str, str]]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def uniformity_tests(values: Sequence[float], bins: int = 20) -> dict:
    """Chi-square (equal-width bins on [0, 1]) and KS statistics against U(0, 1)."""
    v = np.asarray(values, dtype=float)
    counts, _ = np.histogram(v, bins=bins, range=(0.0, 1.0))
    chi = stats.chisquare(counts)
    ks = stats.kstest(v, "uniform")
    return {
        "samples": int(v.size),
        "chi2": float(chi.statistic),
        "chi2_p": float(chi.pvalue),
        "ks": float(ks.statistic),
        "ks_p": float(ks.pvalue),
    }


def _summarize_combo(base: Path, combo: dict, nu: float) -> dict:
    files = combo["files"]
    runs = _read_csv(base / files["runs"])
    hops = np.array([int(r["hops"]) for r in runs])
    d0 = np.array([int(r["d0"]) for r in runs if int(r["hops"]) > 0], dtype=float)
    row = {
        "label": combo["label"],
        "kind": combo["kind"],
        "alpha": combo["alpha"],
        "delta_frac": combo["delta_frac"],
        "f": combo["f"],
        "runs": len(runs),
        "mean_hops": float(hops.mean()),
        "max_hops": int(hops.max()),
        "mean_d0": float(d0.mean()) if d0.size else 0.0,
    }
    if combo["kind"] == "iris" and d0.size:
        alpha = combo["alpha"]
        row["predicted_hops"] = predicted_hops(row["mean_d0"], nu, alpha)
        if "distances" in files:
            by_hop: dict[int, list[int]] = {}
            for r in _read_csv(base / files["distances"]):
                by_hop.setdefault(int(r["hop_index"]), []).append(int(r["distance_to_target"]))
            row["per_hop"] = [
                {"hop": h, "mean_distance": float(np.mean(v)), "reached": len(v),
                 "predicted": predicted_distance(row["mean_d0"], alpha, h)}
                for h, v in sorted(by_hop.items())
            ]
    if "minratio" in files:
        ratios = [float(r["min_ratio"]) for r in _read_csv(base / files["minratio"]) if r["min_ratio"]]
        row["min_ratio"] = min(ratios) if ratios else None
        row["mean_min_ratio"] = float(np.mean(ratios)) if ratios else None
        row["share_below_half"] = float(np.mean(np.array(ratios) < 0.5)) if ratios else None
    if "probabilities" in files:
        probs = _read_csv(base / files["probabilities"])
        delta = combo["delta"]
        normalized = [int(r["target_offset"]) / delta for r in probs]
        row["uniformity"] = uniformity_tests(normalized) if normalized else None
    return row


def summarize(results_dir) -> dict:
    """Collect per-combination statistics of every experiment below ``results_dir``."""
    base = Path(results_dir)
    manifests = sorted(base.rglob("manifest.json")) if base.is_dir() else []
    if not manifests:
        raise ParameterError(f"no experiment results under {base}")
    summary = {}
    for mf in manifests:
        manifest = json.loads(mf.read_text())
        name = manifest["config"]["name"]
        key = name if name not in summary else str(mf.parent.relative_to(base))
        summary[key] = {
            "nu": manifest["nu"],
            "combos": [_summarize_combo(mf.parent, c, manifest["nu"]) for c in manifest["combos"]],
        }
    return summary


def format_summary(summary: dict) -> str:
    lines = []
    head = f"{'combo':<28}{'runs':>6}{'mean hops':>11}{'max':>5}{'pred hops':>11}{'min ratio':>11}{'chi2 p':>9}"
    for name, exp in summary.items():
        lines.append(f"[{name}]  nu={exp['nu']:.1f}")
        lines.append(head)
        for c in exp["combos"]:
            pred = c.get("predicted_hops")
            mr = c.get("min_ratio")
            uni = c.get("uniformity")
            lines.append(
                f"{c['label']:<28}{c['runs']:>6}{c['mean_hops']:>11.2f}{c['max_hops']:>5}"
                f"{'' if pred is None else format(pred, '.2f'):>11}"
                f"{'' if mr is None else format(mr, '.4f'):>11}"
                f"{'' if not uni else format(uni['chi2_p'], '.3f'):>9}"
            )
        lines.append("")
    return "\n".join(lines)


def write_summary(results_dir) -> tuple[dict, str]:
    summary = summarize(results_dir)
    table = format_summary(summary)
    base = Path(results_dir)
    (base / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (base / "summary.txt").write_text(table + "\n")
    return summary, table


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
