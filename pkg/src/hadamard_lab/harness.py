"""Evaluate both sides of every eigenvalue / curvature inequality on an immersion.

Every check is stored as ``lhs <= rhs`` so that ``margin = rhs - lhs >= 0``
means satisfied.  ``rel_margin`` is ``margin / |rhs|``.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import barycenter as bc
from .config import Config, Tolerances
from .immersion import Immersion, edge_lengths, measures
from .kernel import (
    arcsh_delta, arcth_delta, ch_delta, minkowski, sh_delta, tangent_norm, th_delta,
)
from .operators import laplacian, mean_curvature
from .shapes import radial_shrink
from .spectral import lambda1, rayleigh

log = logging.getLogger(__name__)

REPORT_FORMAT = "hadamard-lab/report@1"
CHECK_IDS = (
    "HEINTZE", "WEAK", "CURVE-TSC", "L2MC", "KEY", "ROUGH", "CLAIM", "POSBOUND",
    "P41-1", "P41-2", "P42", "LS-REF", "TESTFN",
)
CSV_FIELDS = ("shape", "delta", "n", "id", "lhs", "rhs", "margin", "rel_margin", "applicable",
              "near_equality", "tol", "passed", "note")


@dataclass
class Check:
    id: str
    lhs: float
    rhs: float
    applicable: bool
    note: str = ""
    tol: float = 0.0  # relative tolerance used for pass/fail

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def rel_margin(self) -> float:
        return self.margin / abs(self.rhs) if self.rhs != 0 else math.copysign(math.inf, self.margin) if self.margin else 0.0

    def passed(self) -> bool:
        return bool(self.margin >= -self.tol * abs(self.rhs))

    def to_dict(self) -> dict:
        return {"id": self.id, "lhs": _f(self.lhs), "rhs": _f(self.rhs), "margin": _f(self.margin),
                "rel_margin": _f(self.rel_margin), "applicable": self.applicable, "tol": self.tol,
                "passed": self.passed() if self.applicable else None, "note": self.note}


def _f(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass
class SphereFit:
    center: np.ndarray
    radius: float
    max_deviation: float  # max |r_j - radius|
    rel_stdev: float  # weighted stdev(r) / mean(r)

    def ok(self, tol) -> bool:
        return self.max_deviation <= tol * self.radius


@dataclass
class VerificationReport:
    name: str
    delta: float
    n: int
    quantities: dict
    checks: list
    rigidity: dict
    diagnostics: dict
    errors: list = field(default_factory=list)

    def check(self, cid: str) -> Check:
        for c in self.checks:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def failing(self, ids=None) -> list:
        sel = [c for c in self.checks if (ids is None or c.id in ids)]
        return [c.id for c in sel if c.applicable and not c.passed()]

    def passed(self, ids=None) -> bool:
        return not self.failing(ids)

    def to_dict(self) -> dict:
        return {
            "format": REPORT_FORMAT,
            "name": self.name,
            "delta": self.delta,
            "n": self.n,
            "quantities": {k: _jsonable(v) for k, v in self.quantities.items()},
            "checks": [c.to_dict() for c in self.checks],
            "rigidity": {k: _jsonable(v) for k, v in self.rigidity.items()},
            "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()},
            "errors": list(self.errors),
        }

    def to_json(self, indent=2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def csv_rows(self) -> list:
        rows = []
        for c in self.checks:
            rows.append({
                "shape": self.name, "delta": self.delta, "n": self.n, "id": c.id,
                "lhs": _f(c.lhs), "rhs": _f(c.rhs), "margin": _f(c.margin), "rel_margin": _f(c.rel_margin),
                "applicable": c.applicable, "near_equality": self.rigidity["near_equality"].get(c.id),
                "tol": c.tol, "passed": c.passed() if c.applicable else "", "note": c.note,
            })
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS)
        w.writeheader()
        w.writerows(self.csv_rows())
        return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return _f(v)
    return v


# ------------------------------------------------------------------ pieces

def resolution(imm: Immersion) -> float:
    """Mean edge length in units of the curvature radius ``1/sqrt(-delta)``."""
    return float(np.mean(edge_lengths(imm)) * imm.space.k)


def fit_sphere(imm: Immersion, start, weights=None) -> SphereFit:
    """Metric sphere minimising the weighted variance of distances to the vertices."""
    space = imm.space
    w = measures(imm).w if weights is None else weights
    start = np.asarray(start, dtype=float)
    frame = space.frame(start)
    wn = w / w.sum()

    def radii(z):
        return space.distance(space.exp_map(start, z @ frame), imm.vertices)

    def var(z):
        r = radii(z)
        mean = r @ wn
        return float(((r - mean) ** 2) @ wn)

    res = minimize(var, np.zeros(space.dim), method="BFGS", options={"gtol": 1e-14, "maxiter": 500})
    z = res.x if res.fun <= var(np.zeros(space.dim)) else np.zeros(space.dim)
    center = space.exp_map(start, z @ frame)
    r = space.distance(center, imm.vertices)
    mean = float(r @ wn)
    return SphereFit(center, mean, float(np.max(np.abs(r - mean))), float(np.sqrt(max(var(z), 0.0))) / mean)


def minimality_residual(imm: Immersion, H, center) -> float:
    """``||H - <H, grad r> grad r||_2 / ||H||_2`` for r the distance to ``center``."""
    space = imm.space
    U = space.log_map(imm.vertices, np.broadcast_to(center, imm.vertices.shape))
    n = tangent_norm(U)
    radial = -np.divide(U, n[:, None], out=np.zeros_like(U), where=n[:, None] > 0)
    Hin = H - minkowski(H, radial)[:, None] * radial
    w = measures(imm).w
    num = np.sum(np.maximum(minkowski(Hin, Hin), 0.0) * w)
    den = np.sum(np.maximum(minkowski(H, H), 0.0) * w)
    return float(np.sqrt(num / den)) if den > 0 else 0.0


def curve_tsc_margin(curve: Immersion) -> float:
    """``int kappa^2 ds - (4 pi^2 / l - delta l)``; needs no eigen solve or center."""
    l = measures(curve).total
    return mean_curvature(curve).willmore - (4 * math.pi**2 / l - curve.delta * l)


# ------------------------------------------------------------------ verify

def verify(imm: Immersion, base=None, config: Config | None = None,
           checks=None, spectral_method: str = "auto") -> VerificationReport:
    """Run the full pipeline (center, position field, spectrum) and evaluate every check.

    ``base`` fixes the base point instead of computing the center of mass.
    ``checks`` optionally restricts the ids kept in the report.
    Upstream failures are recorded in ``errors`` and leave dependent checks
    marked not applicable.
    """
    config = config or Config()
    tols: Tolerances = config.tolerances
    delta, n = imm.delta, imm.dim_n
    k = imm.space.k
    errors = []
    mw = measures(imm)
    vol = mw.total
    h = resolution(imm)
    disc = tols.disc_tol(h)

    mc = mean_curvature(imm)
    willmore = mc.willmore
    H2 = willmore / vol
    Hn = math.sqrt(H2)
    maxH2 = float(np.max(mc.norms) ** 2)

    lap = laplacian(imm)
    try:
        spec = lambda1(lap, spectral_method)
        lam, spec_res = spec.lambda1, spec.residual
    except Exception as exc:  # annotate, keep going
        errors.append(f"spectral: {exc}")
        lam, spec_res, spec = math.nan, math.nan, None

    center = None
    if base is None:
        try:
            center = bc.find_center(imm, tol=tols.barycenter_tol)
            p0 = center.p0
        except Exception as exc:
            errors.append(f"barycenter: {exc}")
            p0 = imm.space.project_point(imm.vertices.mean(axis=0))
    else:
        p0 = imm.space.project_point(np.asarray(base, dtype=float))

    pf = bc.position_field(imm, p0)
    X, Xt, Xn = pf.norm, pf.norm_tangential, pf.norm_normal
    th2 = th_delta(pf.radii, delta) ** 2
    int_th2 = float(th2 @ mw.w)
    Rmax = float(pf.radii.max())
    moments = bc.moment_residual(imm, p0)
    testfn_num = float(sum(f @ (lap.stiffness @ f) for f in pf.test_functions))
    testfn_rhs = float(n * np.sum(mw.w / ch_delta(pf.radii, delta) ** 2))
    f_all = pf.test_functions
    rq = testfn_num / float(sum(_centered_mass_norm2(f, mw.w) for f in f_all))

    q = {
        "Vol": vol, "l": vol if n == 1 else None, "lambda1": lam, "H_norm2_sq": H2, "willmore": willmore,
        "max_H_sq": maxH2, "X_norm2": X, "X_tan_norm2": Xt, "X_nor_norm2": Xn, "int_th2": int_th2,
        "R_max": Rmax, "R0": float(arcth_delta(min(X, (1 - 1e-15) / k), delta)),
        "R0_from_H": float(arcth_delta(1.0 / Hn, delta)) if Hn > k else None,
        "p0": p0, "moment_residual": moments, "testfn_rayleigh": rq,
        "lambda1_residual": spec_res,
    }
    if center is not None:
        q["barycenter_iterations"] = center.iterations
        q["barycenter_grad_norm"] = center.grad_norm

    C = []
    has_lam = math.isfinite(lam)
    lam_note = "" if has_lam else "unavailable: eigen solve failed"
    curve = n == 1
    l = vol
    short = curve and l <= 2 * math.pi / k

    C.append(Check("HEINTZE", lam, n * (delta + H2), has_lam and (n >= 2 or short),
                   lam_note or ("" if not curve or short else f"curve length {l:.6g} > 2 pi / sqrt(-delta)"), disc))
    C.append(Check("WEAK", lam, n * (delta + maxH2), has_lam, lam_note, disc))
    if curve:
        tsc = (4 * math.pi**2 / l - delta * l, willmore)
        C.append(Check("CURVE-TSC", tsc[0], tsc[1], True, "" if short else "long curve: not covered by the length bound", disc))
    else:
        C.append(Check("CURVE-TSC", 0.0, 0.0, False, "curves only", disc))

    l2mc_ok = n >= 2 or float(sh_delta(Rmax, delta)) <= 1.0 / k
    C.append(Check("L2MC", vol**2, willmore * int_th2, l2mc_ok,
                   "" if l2mc_ok else "n = 1 with sh(R_max) > 1/sqrt(-delta)", disc))
    C.append(Check("KEY", 1.0 + delta / n * Xt**2, Xn * Hn, True, "", 2 * disc))
    thR = float(th_delta(Rmax, delta))
    C.append(Check("ROUGH", 1.0 / thR + delta / n * thR, Hn, True, "", disc))
    C.append(Check("CLAIM", X + Xn, n / -delta * Hn, n >= 2, "" if n >= 2 else "n >= 2 only", disc))
    if curve:
        C.append(Check("POSBOUND", X**2, 1.0 / (4 * math.pi**2 / l**2 - delta), True, "", disc))
    else:
        C.append(Check("POSBOUND", 0.0, 0.0, False, "curves only", disc))

    # P41: conditions under which the curve inequality is guaranteed
    try:
        fit = fit_sphere(imm, p0)
    except Exception as exc:
        errors.append(f"sphere fit: {exc}")
        fit = None
    on_sphere = fit is not None and fit.ok(tols.sphere_fit_tol)
    cond2 = X**2 * (1 + Xn / X) if X > 0 else 0.0
    if curve:
        C.append(Check("P41-1", tsc[0], tsc[1], on_sphere,
                       f"sphere fit max deviation / radius = {fit.max_deviation / fit.radius:.3g}" if fit else "sphere fit failed", disc))
        c2_ok = cond2 <= 1.0 / -delta and not on_sphere
        C.append(Check("P41-2", tsc[0], tsc[1], c2_ok,
                       f"|X|^2 (1 + |X_perp|/|X|) = {cond2:.6g} vs 1/(-delta) = {1 / -delta:.6g}", disc))
        C.append(Check("P42", min(4 * math.pi**2 / l - delta * l, 8 * math.pi**2 / l), willmore, True, "", disc))
        C.append(Check("LS-REF", 4 * math.pi * k, willmore, False, "reference line only", disc))
    else:
        for cid in ("P41-1", "P41-2", "P42", "LS-REF"):
            C.append(Check(cid, 0.0, 0.0, False, "curves only", disc))
    C.append(Check("TESTFN", testfn_num, testfn_rhs, True, "", disc))
    q["P41_condition"] = cond2

    near = {c.id: bool(c.applicable and abs(c.margin) <= tols.rig_tol * abs(c.rhs)) for c in C}
    rig = {"near_equality": near}
    if fit is not None:
        rig["sphere_fit"] = {"center": fit.center, "radius": fit.radius, "max_radial_deviation": fit.max_deviation,
                             "rel_stdev": fit.rel_stdev, "success": on_sphere}
        rig["minimality_in_sphere"] = minimality_residual(imm, mc.H, fit.center)
    if has_lam and lam > 0:
        rig["predicted_radius"] = float(arcsh_delta(math.sqrt(n / lam), delta))
        if fit is not None:
            rig["radius_rel_error"] = abs(fit.radius - rig["predicted_radius"]) / rig["predicted_radius"]
    rig["heintze_rigid_candidate"] = bool(near["HEINTZE"] and has_lam)

    diag = {"h": h, "disc_tol": disc, "max_edge": float(edge_lengths(imm).max()),
            "mean_curvature_residual": mc.residual, "coarse": h > tols.coarse_h,
            "lambda1_residual": spec_res, "flag_high_residual": bool(h > tols.coarse_h or not (spec_res <= 1e-8)),
            "spectral_method": spec.method if spec is not None else None}

    if checks is not None:
        unknown = set(checks) - set(CHECK_IDS)
        if unknown:
            raise ValueError(f"unknown check id(s): {', '.join(sorted(unknown))}")
        C = [c for c in C if c.id in checks]
    return VerificationReport(imm.name, delta, n, q, C, rig, diag, errors)


def _centered_mass_norm2(f, w):
    g = f - (f @ w) / w.sum()
    return float(g @ (w * g))


# ------------------------------------------------------------------ families

def verify_clifford(R=0.8, Ngrid=64, delta=-1.0, config: Config | None = None) -> VerificationReport:
    """Verify the Clifford torus of the metric 3-sphere of radius R in H^4(delta)."""
    from .shapes import clifford_torus

    rep = verify(clifford_torus(R, Ngrid, delta), config=config)
    a = float(sh_delta(R, delta))
    rep.quantities["lambda1_continuum"] = 2.0 / a**2
    rep.quantities["heintze_rhs_continuum"] = 2.0 * (delta + (float(ch_delta(R, delta)) / a) ** 2)
    return rep


@dataclass
class GammaMuSweep:
    mus: list
    reports: list
    mu0: float | None
    bracket: tuple | None


def gamma_mu_family(curve: Immersion, p0, mus, config: Config | None = None, bisect_tol: float = 1e-10,
                    full_reports: bool = True) -> GammaMuSweep:
    """Radially shrunk copies of ``curve`` about the fixed point ``p0``.

    For each mu the vertex at distance r moves to distance ``arcth(mu th(r))``,
    which scales the position field by exactly mu.  ``mu0`` is the largest mu
    in the sampled grid's sign-change bracket at which the CURVE-TSC margin is
    non-negative, refined by bisection to ``bisect_tol``.
    """
    if not curve.is_curve:
        raise ValueError("gamma_mu_family needs a curve")
    mus = sorted({float(m) for m in mus}, reverse=True)
    for m in mus:
        if not 0 < m <= 1:
            raise ValueError(f"mu must lie in (0, 1], got {m}")
    reports, margins = [], []
    for m in mus:
        c = radial_shrink(curve, p0, m)
        if full_reports:
            rep = verify(c, base=p0, config=config)
            rep.quantities["mu"] = m
            reports.append(rep)
            margins.append(rep.check("CURVE-TSC").margin)
        else:
            margins.append(curve_tsc_margin(c))

    def margin(m):
        return curve_tsc_margin(radial_shrink(curve, p0, m))

    mu0, bracket = None, None
    if margins and margins[0] >= 0:
        mu0 = mus[0]
    else:
        for i in range(1, len(mus)):
            if margins[i] >= 0 > margins[i - 1]:
                lo, hi = mus[i], mus[i - 1]
                while hi - lo > bisect_tol:
                    mid = 0.5 * (lo + hi)
                    if margin(mid) >= 0:
                        lo = mid
                    else:
                        hi = mid
                mu0, bracket = lo, (lo, hi)
                break
    return GammaMuSweep(mus, reports, mu0, bracket)


def length_family_rows(d, lengths, N, delta=-1.0, config: Config | None = None) -> list:
    """Racetracks of increasing length for the energy-versus-reference table."""
    from .shapes import racetrack

    rows = []
    for L in lengths:
        rep = verify(racetrack(d, L, N, delta), config=config)
        rows.append(flat_row(rep, {"L": L, "d": d}))
    return rows


def flat_row(rep: VerificationReport, extra=None) -> dict:
    """One CSV row holding every scalar quantity and every check margin of a report."""
    row = {"shape": rep.name, "delta": rep.delta, "n": rep.n}
    if extra:
        row.update(extra)
    for key, v in rep.quantities.items():
        if key == "p0":
            continue
        row[key] = _f(v) if v is not None else None
    row["ls_reference"] = 4 * math.pi * math.sqrt(-rep.delta)
    for c in rep.checks:
        row[f"{c.id}_margin"] = _f(c.margin)
        row[f"{c.id}_applicable"] = c.applicable
    return row
