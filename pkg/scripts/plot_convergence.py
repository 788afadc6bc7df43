#!/usr/bin/env python3
"""Plot a `ncbm converge` CSV: sup error vs N per kernel entry, log-log.

Usage: python scripts/plot_convergence.py bulk.csv [edge.csv ...]
Documentation artifact; requires matplotlib.
"""

import sys

import matplotlib.pyplot as plt


def load(path):
    rows = []
    for line in open(path):
        if line.startswith("#") or line.startswith("N,"):
            continue
        n, entry, err = line.strip().split(",")
        rows.append((int(n), entry, float(err)))
    return rows


def main(paths):
    fig, ax = plt.subplots(figsize=(6, 4))
    markers = {"Stilde": "o", "D": "s", "Itilde": "^"}
    for path in paths:
        by_entry = {}
        for n, entry, err in load(path):
            by_entry.setdefault(entry, []).append((n, err))
        for entry, pts in sorted(by_entry.items()):
            pts.sort()
            ax.loglog([p[0] for p in pts], [p[1] for p in pts],
                      marker=markers.get(entry, "x"), label=f"{path}:{entry}")
    ax.set_xlabel("N")
    ax.set_ylabel("sup error vs limit kernel")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = "convergence.png"
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    main(sys.argv[1:])
