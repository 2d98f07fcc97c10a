"""Equality-case and violation benchmarks with their continuum oracles.

    python scripts/benchmarks.py [--out benchmarks.csv]
"""
import argparse
import csv
import math
import time

from hadamard_lab import harness, shapes


def rows():
    R = 0.5
    rep = harness.verify(shapes.circle(R, 2048, -1.0))
    yield "circle R=0.5", rep, {"lambda1": 1 / math.sinh(R) ** 2}

    R = 0.7
    rep = harness.verify(shapes.geodesic_sphere(R, 4, -1.0))
    yield "sphere R=0.7", rep, {"lambda1": 2 / math.sinh(R) ** 2}

    R = 0.8
    rep = harness.verify_clifford(R, 64, -1.0)
    yield "clifford torus R=0.8", rep, {"lambda1": rep.quantities["lambda1_continuum"]}

    rep = harness.verify(shapes.racetrack(0.2, 18.0, 4096, -1.0))
    yield "racetrack d=0.2 L=18", rep, {}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out")
    args = ap.parse_args()
    table = []
    for label, rep, oracle in rows():
        t = time.perf_counter()
        lam = rep.quantities["lambda1"]
        row = {"shape": label, "lambda1": lam, "lambda1_exact": oracle.get("lambda1")}
        for cid in ("HEINTZE", "WEAK", "CURVE-TSC", "L2MC", "KEY", "TESTFN", "P42"):
            c = rep.check(cid)
            row[cid] = c.rel_margin if c.applicable else None
        row["failing"] = " ".join(rep.failing())
        table.append(row)
        print(f"{label:24s} lambda1 {lam:.6f}"
              + (f" (exact {oracle['lambda1']:.6f})" if "lambda1" in oracle else "")
              + "".join(f"  {k} {v:+.4f}" for k, v in row.items() if k.isupper() and v is not None)
              + (f"  failing: {row['failing']}" if row["failing"] else ""))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(table[0]))
            w.writeheader()
            w.writerows(table)


if __name__ == "__main__":
    main()
