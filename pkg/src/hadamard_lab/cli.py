"""Command-line interface: ``hadamard-lab {generate,verify,sweep,spectrum,com}``.

Exit codes: 0 success / all applicable checks pass, 1 a check fails,
2 bad flags or unreadable input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import barycenter as bc
from . import immersion as im
from . import shapes
from .config import Config, ConfigError
from .harness import CHECK_IDS, flat_row, gamma_mu_family, verify
from .kernel import DomainError
from .operators import export_matrix_market, laplacian
from .spectral import lambda1

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ids(text):
    ids = [x.strip().upper() for x in text.split(",") if x.strip()]
    bad = [i for i in ids if i not in CHECK_IDS]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown check id(s) {', '.join(bad)}; choose from {', '.join(CHECK_IDS)}")
    return ids


def _default_jobs():
    try:
        return max(1, int(os.environ.get("HADAMARD_LAB_JOBS", "1")))
    except ValueError:
        return 1


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load(path) -> im.Immersion:
    try:
        return im.load(path)
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file")
    except (im.ValidationError, DomainError, OSError) as exc:
        raise UsageError(f"{path}: {exc}")


def _config(args) -> Config:
    cfg = Config()
    if getattr(args, "config", None):
        try:
            cfg = Config.load(args.config)
        except (OSError, json.JSONDecodeError, ConfigError, TypeError) as exc:
            raise UsageError(f"{args.config}: {exc}")
    if getattr(args, "format", None):
        cfg.format = args.format
    if getattr(args, "output", None):
        cfg.output = args.output
    return cfg


def _rows_to_csv(rows) -> str:
    if not rows:
        return ""
    keys = list(rows[0])
    for r in rows[1:]:
        keys += [k for k in r if k not in keys]
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=keys)
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


# ------------------------------------------------------------------ commands

def cmd_generate(args) -> int:
    kind = args.kind
    try:
        if kind == "circle":
            imm = shapes.circle(args.R, args.N, args.delta, ambient_dim=args.dim or 2)
        elif kind == "sphere":
            imm = shapes.geodesic_sphere(args.R, args.level, args.delta, ambient_dim=args.dim or 3)
        elif kind == "perturbed_sphere":
            imm = shapes.perturbed_sphere(args.R, args.level, args.delta, args.amplitude, args.seed,
                                          ambient_dim=args.dim or 3)
        elif kind == "clifford_torus":
            imm = shapes.clifford_torus(args.R, args.grid, args.delta)
        elif kind == "racetrack":
            imm = shapes.racetrack(args.d, args.L, args.N, args.delta, ambient_dim=args.dim or 2)
        elif kind == "fourier_curve":
            if args.length is not None:
                imm = shapes.fourier_curve_with_length(args.length, args.N, args.delta, args.seed,
                                                       ambient_dim=args.dim or 2)
            else:
                imm = shapes.fourier_curve(None, args.N, args.delta, args.seed, ambient_dim=args.dim or 2)
        else:  # argparse restricts the choices
            raise UsageError(f"unknown kind {kind}")
    except (ValueError, DomainError) as exc:
        raise UsageError(str(exc))
    _write(json.dumps(im.to_dict(imm)), args.output)
    print(f"{imm.name}: {imm.num_vertices} vertices", file=sys.stderr)
    return EXIT_OK


def _summary(rep) -> str:
    lines = [f"{rep.name}  delta={rep.delta:g}  n={rep.n}  lambda1={rep.quantities['lambda1']:.6g}  "
             f"Vol={rep.quantities['Vol']:.6g}  h={rep.diagnostics['h']:.3g}"]
    for c in rep.checks:
        state = ("pass" if c.passed() else "FAIL") if c.applicable else "n/a "
        lines.append(f"  {c.id:10s} {state}  lhs={c.lhs:.6g}  rhs={c.rhs:.6g}  rel_margin={c.rel_margin:+.4g}"
                     + (f"  ({c.note})" if c.note else ""))
    if rep.diagnostics.get("coarse"):
        lines.append("  warning: coarse resolution, discretisation residual is high")
    for e in rep.errors:
        lines.append(f"  error: {e}")
    return "\n".join(lines)


def cmd_verify(args) -> int:
    cfg = _config(args)
    imm = _load(args.input)
    base = None
    if args.base_point is not None:
        base = np.asarray(args.base_point, dtype=float)
        if base.shape != (imm.space.dim + 1,):
            raise UsageError(f"--base-point needs {imm.space.dim + 1} coordinates, got {base.size}")
        if imm.space.constraint_error(base) > im.LOAD_TOL:
            raise UsageError("--base-point is not on the hyperboloid")
    rep = verify(imm, base=base, config=cfg, checks=args.checks)
    text = rep.to_json() if cfg.format == "json" else rep.to_csv()
    _write(text, cfg.output)
    if args.export_matrices:
        paths = export_matrix_market(laplacian(imm), args.export_matrices)
        print(f"wrote {paths[0]} and {paths[1]}", file=sys.stderr)
    print(_summary(rep), file=sys.stderr)
    return EXIT_OK if rep.passed() else EXIT_FAIL


def _verify_row(payload):
    doc, base, extra, cfg_doc = payload
    rep = verify(im.from_dict(doc), base=base, config=Config.from_dict(cfg_doc))
    return flat_row(rep, extra)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    jobs = args.jobs
    if jobs < 1:
        raise UsageError("--jobs must be at least 1")
    payloads = []
    mu0 = None
    if args.family == "mu":
        if not args.input:
            raise UsageError("the mu family needs an input curve")
        curve = _load(args.input)
        if not curve.is_curve:
            raise UsageError("the mu family needs a curve")
        mus = args.mus or [1.0, 0.8, 0.6, 0.4, 0.2]
        if any(not 0 < m <= 1 for m in mus):
            raise UsageError("every mu must lie in (0, 1]")
        p0 = bc.find_center(curve, tol=cfg.tolerances.barycenter_tol).p0 if args.base_point is None \
            else np.asarray(args.base_point, dtype=float)
        for m in mus:
            c = shapes.radial_shrink(curve, p0, m)
            payloads.append((im.to_dict(c), p0, {"mu": m}, cfg.to_dict()))
        mu0 = gamma_mu_family(curve, p0, mus, cfg, full_reports=False).mu0
    else:
        lengths = args.lengths or [2.0, 6.0, 10.0, 14.0, 18.0]
        for L in lengths:
            try:
                c = shapes.racetrack(args.d, L, args.N, args.delta)
            except ValueError as exc:
                raise UsageError(str(exc))
            payloads.append((im.to_dict(c), None, {"d": args.d, "L": L}, cfg.to_dict()))
    if jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_verify_row, payloads))
    else:
        rows = [_verify_row(p) for p in payloads]
    _write(_rows_to_csv(rows), cfg.output)
    if args.family == "mu":
        print(f"mu0 = {mu0:.12f}" if mu0 is not None else "mu0: no sign change of the CURVE-TSC margin in the grid",
              file=sys.stderr)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    imm = _load(args.input)
    res = lambda1(laplacian(imm), args.method)
    out = {"lambda1": res.lambda1, "residual": res.residual, "method": res.method,
           "num_converged": res.num_converged}
    if imm.is_curve:
        l = im.measures(imm).total
        ref = 4 * math.pi**2 / l**2
        out["reference_4pi2_over_l2"] = ref
        out["rel_err"] = abs(res.lambda1 - ref) / ref
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_com(args) -> int:
    imm = _load(args.input)
    try:
        res = bc.find_center(imm, tol=args.tol)
    except bc.ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(json.dumps({"p0": res.p0.tolist(), "energy": res.energy, "grad_norm": res.grad_norm,
                      "iterations": res.iterations, "residual_moments": res.residual_moments}, indent=2))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hadamard-lab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a benchmark immersion as JSON")
    g.add_argument("kind", choices=shapes.KINDS)
    g.add_argument("--delta", type=float, default=-1.0)
    g.add_argument("--R", type=float, default=0.5)
    g.add_argument("--N", type=int, default=256)
    g.add_argument("--level", type=int, default=3)
    g.add_argument("--grid", type=int, default=32, help="lattice size for the Clifford torus")
    g.add_argument("--d", type=float, default=0.2, help="racetrack offset")
    g.add_argument("--L", type=float, default=18.0, help="racetrack straight length")
    g.add_argument("--length", type=float, help="rescale a fourier_curve to this length")
    g.add_argument("--amplitude", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--dim", type=int, help="ambient dimension m")
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("verify", help="evaluate every inequality on an immersion file")
    v.add_argument("input")
    v.add_argument("--base-point", type=_floats, help="fixed base point (ambient coordinates)")
    v.add_argument("--checks", type=_ids, help="comma-separated subset of check ids")
    v.add_argument("--config")
    v.add_argument("--format", choices=("json", "csv"))
    v.add_argument("--export-matrices", metavar="PREFIX", help="also write stiffness/mass in MatrixMarket format")
    v.add_argument("-o", "--output")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="verify a family and write one CSV row per member")
    s.add_argument("family", choices=("mu", "length"))
    s.add_argument("input", nargs="?", help="curve file (mu family)")
    s.add_argument("--mus", type=_floats)
    s.add_argument("--base-point", type=_floats)
    s.add_argument("--lengths", type=_floats, help="racetrack straight lengths (length family)")
    s.add_argument("--d", type=float, default=0.2)
    s.add_argument("--N", type=int, default=2048)
    s.add_argument("--delta", type=float, default=-1.0)
    s.add_argument("--jobs", type=int, default=_default_jobs())
    s.add_argument("--config")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_sweep)

    e = sub.add_parser("spectrum", help="print the first non-zero eigenvalue")
    e.add_argument("input")
    e.add_argument("--method", choices=("auto", "dense", "iterative"), default="auto")
    e.set_defaults(func=cmd_spectrum)

    c = sub.add_parser("com", help="print the center of mass")
    c.add_argument("input")
    c.add_argument("--tol", type=float, default=1e-10)
    c.set_defaults(func=cmd_com)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
