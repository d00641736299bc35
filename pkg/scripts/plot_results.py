#!/usr/bin/env python3
"""Plot hop counts, privacy-ratio histograms and distance histograms from a results tree.

Needs the optional ``plot`` extra (matplotlib).

    python3 scripts/plot_results.py results/ figures/
"""

import argparse
import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def plot_experiment(exp_dir: Path, out: Path) -> None:
    manifest = json.loads((exp_dir / "manifest.json").read_text())
    name = manifest["config"]["name"]
    combos = manifest["combos"]

    fig, ax = plt.subplots()
    labels, hops = [], []
    for c in combos:
        labels.append(c["label"])
        hops.append([int(r["hops"]) for r in read(exp_dir / c["files"]["runs"])])
    ax.boxplot(hops)
    ax.set_xticks(range(1, len(labels) + 1), labels, rotation=30, ha="right", fontsize=7)
    ax.set_ylabel("hops")
    ax.set_title(f"{name}: hops per retrieval")
    fig.tight_layout()
    fig.savefig(out / f"{name}_hops.png", dpi=120)
    plt.close(fig)

    for c in combos:
        files = c["files"]
        if "minratio" in files:
            ratios = [float(r["min_ratio"]) for r in read(exp_dir / files["minratio"]) if r["min_ratio"]]
            fig, ax = plt.subplots()
            ax.hist(ratios, bins=40, range=(0, 1))
            ax.set_xlabel("minimum posterior/prior ratio")
            ax.set_title(f"{name} {c['label']}")
            fig.savefig(out / f"{name}_{c['label']}_ratio.png", dpi=120)
            plt.close(fig)
        if "probabilities" in files:
            rows = read(exp_dir / files["probabilities"])
            norm = [int(r["target_offset"]) / int(r["delta"]) for r in rows]
            fig, ax = plt.subplots()
            ax.hist(norm, bins=20, range=(0, 1))
            ax.set_xlabel("distance to target / delta")
            ax.set_title(f"{name} {c['label']}")
            fig.savefig(out / f"{name}_{c['label']}_distance.png", dpi=120)
            plt.close(fig)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("results", type=Path)
    p.add_argument("out", type=Path)
    args = p.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for mf in sorted(args.results.rglob("manifest.json")):
        plot_experiment(mf.parent, args.out)
        print(f"plotted {mf.parent}")


if __name__ == "__main__":
    main()
