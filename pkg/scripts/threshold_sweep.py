#!/usr/bin/env python3
"""Sweep the uniform recovery rate through the epidemic threshold on the
two-node benchmark and print where mu and R0 - 1 change sign.

Usage:
    python scripts/threshold_sweep.py [--points N] [--out DIR]
"""

import argparse
import sys
from pathlib import Path

import numpy as np

import sismob as sm


def run(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=21)
    parser.add_argument("--out", default=None, help="also write a sweep CSV here")
    args = parser.parse_args(argv)

    layer = sm.layer_from_edge_rates(2, [(0, 1, 0.2), (1, 0, 0.2)])
    net = sm.MultiLayerNetwork(layers=(layer,), N=np.array([1000.0]))
    beta = np.array([0.3, 0.2])

    rows = []
    for delta in np.linspace(0.05, 0.45, args.points):
        spec = sm.ModelSpec(net=net, beta=beta, delta=np.full(2, delta))
        report = sm.classify(spec)
        rows.append((delta, report.mu, report.R0, report.classification))
        print(f"delta={delta:8.4f}  mu={report.mu:+.6f}  R0={report.R0:.6f}  "
              f"{report.classification}")

    crossings = [(a[0], b[0]) for a, b in zip(rows, rows[1:])
                 if (a[1] > 0) != (b[1] > 0)]
    if crossings:
        print(f"threshold crossed between delta={crossings[0][0]:.4f} "
              f"and delta={crossings[0][1]:.4f}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "threshold_sweep.csv", "w", encoding="utf-8") as fh:
            fh.write("delta,mu,R0,classification\n")
            for delta, mu, r0, cls in rows:
                fh.write(f"{delta:.17g},{mu:.17g},{r0:.17g},{cls}\n")
        print(f"wrote {out / 'threshold_sweep.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
