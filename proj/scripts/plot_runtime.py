#!/usr/bin/env python3
"""Render runtime-vs-L curves from a `ctrn bench` CSV.

Usage: plot_runtime.py bench.csv [out.png]
"""
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main() -> int:
    if len(sys.argv) < 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    csv_path = sys.argv[1]
    out_path = sys.argv[2] if len(sys.argv) > 2 else "runtime.png"

    series = defaultdict(list)
    d_value = None
    with open(csv_path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "kind,L,d,median_ms":
            print(f"unexpected header: {header}", file=sys.stderr)
            return 2
        for line in fh:
            kind, L, d, ms = line.strip().split(",")
            series[kind].append((int(L), float(ms)))
            d_value = d

    fig, ax = plt.subplots(figsize=(6, 4))
    for kind, points in sorted(series.items()):
        points.sort()
        ax.plot([p[0] for p in points], [p[1] for p in points],
                marker="o", label=kind)
    ax.set_xlabel("sequence length L")
    ax.set_ylabel("median forward+backward time (ms)")
    ax.set_title(f"recurrent encoder runtime, d={d_value}")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    print(f"wrote {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
