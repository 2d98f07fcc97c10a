"""Bending energy of racetracks of growing length against the 4 pi sqrt(-delta) reference.

The reference is informational: the table shows the energy staying above it
while the curve inequality fails once the length passes 2 pi / sqrt(-delta).

    python scripts/length_table.py [--d 0.2] [--N 2048] [--out lengths.csv]
"""
import argparse
import csv
import math

from hadamard_lab import harness


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=float, default=0.2)
    ap.add_argument("--N", type=int, default=2048)
    ap.add_argument("--delta", type=float, default=-1.0)
    ap.add_argument("--lengths", type=float, nargs="+", default=[0.5, 1, 2, 4, 6, 9, 12, 18, 24])
    ap.add_argument("--out")
    args = ap.parse_args()

    rows = harness.length_family_rows(args.d, args.lengths, args.N, args.delta)
    ref = 4 * math.pi * math.sqrt(-args.delta)
    print(f"{'L':>6} {'length':>9} {'energy':>10} {'energy/ref':>10} {'CURVE-TSC':>10} {'P42':>10}")
    for r in rows:
        print(f"{r['L']:6.2f} {r['l']:9.4f} {r['willmore']:10.4f} {r['willmore'] / ref:10.4f}"
              f" {r['CURVE-TSC_margin']:+10.4f} {r['P42_margin']:+10.4f}")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)


if __name__ == "__main__":
    main()
