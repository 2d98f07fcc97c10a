"""Margin statistics over a seeded corpus of random closed curves.

    python scripts/corpus_margins.py [--count 200] [--N 256] [--seed 2024]
"""
import argparse
import math

import numpy as np

from hadamard_lab import harness, shapes

IDS = ("CURVE-TSC", "KEY", "POSBOUND", "L2MC", "HEINTZE", "TESTFN", "P42")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=200)
    ap.add_argument("--N", type=int, default=256)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    margins = {cid: [] for cid in IDS}
    moments = []
    for i in range(args.count):
        l = 2 * math.pi * rng.uniform(0.05, 1.0)
        c = shapes.fourier_curve_with_length(l, args.N, -1.0, seed=i, ambient_dim=2 + i % 2)
        rep = harness.verify(c)
        moments.append(rep.quantities["moment_residual"])
        for cid in IDS:
            ch = rep.check(cid)
            if ch.applicable:
                margins[cid].append(ch.rel_margin)
    print(f"{'check':10s} {'count':>6s} {'min':>10s} {'median':>10s} {'max':>10s}")
    for cid, m in margins.items():
        m = np.asarray(m)
        print(f"{cid:10s} {m.size:6d} {m.min():+10.4f} {np.median(m):+10.4f} {m.max():+10.4f}")
    print(f"max moment residual {max(moments):.2e}")


if __name__ == "__main__":
    main()
