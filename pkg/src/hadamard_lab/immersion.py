"""Closed polygonal curves and closed triangle meshes on the hyperboloid."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .kernel import AmbientSpace, DomainError, check_delta

log = logging.getLogger(__name__)

FORMAT = "hadamard-lab/immersion@1"
# hyperboloid-constraint tolerances on load: renormalize below, reject above
LOAD_TOL = 1e-8
# below this the file is taken verbatim so that save/load round trips exactly
RENORM_TOL = 1e-12
MIN_EDGE = 1e-10
MIN_CURVE_VERTICES = 8


class ValidationError(ValueError):
    """Immersion data violates the structural or geometric invariants."""


@dataclass(frozen=True, eq=False)
class Immersion:
    """A closed curve (``dim_n == 1``) or closed triangle mesh (``dim_n == 2``).

    Curves store their vertices in cyclic order and have ``triangles is None``.
    """

    space: AmbientSpace
    vertices: np.ndarray
    triangles: np.ndarray | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.triangles is not None:
            t = np.array(self.triangles, dtype=np.int64)
            t.setflags(write=False)
            object.__setattr__(self, "triangles", t)
        validate(self)

    @property
    def dim_n(self) -> int:
        return 1 if self.triangles is None else 2

    @property
    def is_curve(self) -> bool:
        return self.triangles is None

    @property
    def delta(self) -> float:
        return self.space.delta

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        """Unique undirected edges ``(i, j)``; for curves edge i joins i and i+1."""
        if "edges" not in self._cache:
            if self.is_curve:
                i = np.arange(self.num_vertices)
                e = np.stack([i, np.roll(i, -1)], axis=1)
            else:
                e = _undirected_edges(self.triangles)
            self._cache["edges"] = e
        return self._cache["edges"]

    def euler_characteristic(self) -> int:
        if self.is_curve:
            return 0
        return self.num_vertices - len(self.edges()) + len(self.triangles)

    def with_vertices(self, vertices, name: str | None = None) -> "Immersion":
        return Immersion(self.space, vertices, self.triangles, self.name if name is None else name)


def _undirected_edges(tris):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0)


def validate(imm: Immersion) -> None:
    v = imm.vertices
    m = imm.space.dim
    if v.ndim != 2 or v.shape[1] != m + 1:
        raise ValidationError(f"vertices must have shape (V, {m + 1}), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValidationError("vertex coordinates must be finite")
    err = imm.space.constraint_error(v)
    if np.any(err > LOAD_TOL) or np.any(v[:, 0] <= 0):
        bad = int(np.argmax(err))
        raise ValidationError(f"vertex {bad} is off the hyperboloid (relative error {err[bad]:.3g})")
    if imm.is_curve:
        if len(v) < MIN_CURVE_VERTICES:
            raise ValidationError(f"a curve needs at least {MIN_CURVE_VERTICES} vertices")
        ell = imm.space.distance(v, np.roll(v, -1, axis=0))
        if np.any(ell <= MIN_EDGE):
            i = int(np.argmin(ell))
            raise ValidationError(f"degenerate edge ({i}, {(i + 1) % len(v)}): consecutive vertices coincide")
        return
    _validate_mesh(imm.triangles, len(v))


def _validate_mesh(tris, nv):
    if tris.ndim != 2 or tris.shape[1] != 3:
        raise ValidationError("triangles must have shape (T, 3)")
    if tris.min() < 0 or tris.max() >= nv:
        raise ValidationError("triangle index out of range")
    if np.any((tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 2] == tris[:, 0])):
        raise ValidationError("triangle with repeated vertex")
    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    uniq, counts = np.unique(und, axis=0, return_counts=True)
    if np.any(counts != 2):
        i = int(np.argmax(counts != 2))
        a, b = uniq[i]
        kind = "boundary" if counts[i] == 1 else "non-manifold"
        raise ValidationError(f"{kind} edge ({a}, {b}) is used by {counts[i]} triangle(s); mesh must be closed")
    d_uniq, d_counts = np.unique(directed, axis=0, return_counts=True)
    if np.any(d_counts != 1):
        a, b = d_uniq[int(np.argmax(d_counts != 1))]
        raise ValidationError(f"inconsistent orientation at edge ({a}, {b})")
    used = np.zeros(nv, dtype=bool)
    used[tris.ravel()] = True
    if not used.all():
        raise ValidationError(f"vertex {int(np.argmin(used))} belongs to no triangle")
    adj = coo_matrix((np.ones(len(directed)), (directed[:, 0], directed[:, 1])), shape=(nv, nv))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise ValidationError(f"mesh has {ncomp} connected components; expected 1")


def edge_lengths(imm: Immersion) -> np.ndarray:
    """Hyperbolic length of every edge of :meth:`Immersion.edges`."""
    if "edge_lengths" not in imm._cache:
        e = imm.edges()
        ell = imm.space.distance(imm.vertices[e[:, 0]], imm.vertices[e[:, 1]])
        if np.any(ell <= MIN_EDGE):
            raise ValidationError(f"degenerate edge {tuple(e[int(np.argmin(ell))])}")
        imm._cache["edge_lengths"] = ell
    return imm._cache["edge_lengths"]


def _side_lengths(space, a, b, c):
    return space.distance(b, c), space.distance(c, a), space.distance(a, b)


def area_from_sides(la, lb, lc, delta):
    """Area of a hyperbolic triangle with the given side lengths.

    The angle defect ``pi - alpha - beta - gamma`` is evaluated with the
    hyperbolic L'Huilier formula, which avoids the cancellation of the
    law-of-cosines angles for small triangles.
    """
    k = np.sqrt(-check_delta(delta))
    a, b, c = (k * np.asarray(x, dtype=float) for x in (la, lb, lc))
    s = 0.5 * (a + b + c)
    sa, sb, sc = s - a, s - b, s - c
    if np.any(np.minimum(np.minimum(sa, sb), sc) <= 0):
        raise DomainError("degenerate triangle: side lengths violate the strict triangle inequality")
    prod = np.tanh(0.5 * s) * np.tanh(0.5 * sa) * np.tanh(0.5 * sb) * np.tanh(0.5 * sc)
    defect = 4.0 * np.arctan(np.sqrt(prod))
    return defect / (k * k)


def triangle_area(space: AmbientSpace, a, b, c):
    return area_from_sides(*_side_lengths(space, a, b, c), space.delta)


def triangle_areas(imm: Immersion) -> np.ndarray:
    if "tri_areas" not in imm._cache:
        v, t = imm.vertices, imm.triangles
        imm._cache["tri_areas"] = triangle_area(imm.space, v[t[:, 0]], v[t[:, 1]], v[t[:, 2]])
    return imm._cache["tri_areas"]


@dataclass(frozen=True)
class MeasureWeights:
    w: np.ndarray
    total: float


def measures(imm: Immersion) -> MeasureWeights:
    """Lumped per-vertex measure: half the adjacent edges, or a third of the adjacent triangles."""
    if "measures" not in imm._cache:
        if imm.is_curve:
            ell = edge_lengths(imm)
            w = 0.5 * (ell + np.roll(ell, 1))
            total = float(ell.sum())
        else:
            A = triangle_areas(imm)
            w = np.bincount(imm.triangles.ravel(), weights=np.repeat(A, 3), minlength=imm.num_vertices) / 3.0
            total = float(A.sum())
        imm._cache["measures"] = MeasureWeights(w, total)
    return imm._cache["measures"]


# ---------------------------------------------------------------- interchange

def to_dict(imm: Immersion) -> dict:
    topo = {"curve": True} if imm.is_curve else {"triangles": imm.triangles.tolist()}
    return {
        "format": FORMAT,
        "delta": imm.delta,
        "ambient_dim": imm.space.dim,
        "intrinsic_dim": imm.dim_n,
        "vertices": imm.vertices.tolist(),
        "topology": topo,
        "name": imm.name,
    }


def from_dict(doc: dict) -> Immersion:
    def need(key, kind):
        if key not in doc:
            raise ValidationError(f"missing field '{key}'")
        if not isinstance(doc[key], kind) or isinstance(doc[key], bool):
            raise ValidationError(f"field '{key}' has wrong type {type(doc[key]).__name__}")
        return doc[key]

    if not isinstance(doc, dict):
        raise ValidationError("document root must be an object")
    if doc.get("format") != FORMAT:
        raise ValidationError(f"field 'format' must be '{FORMAT}', got {doc.get('format')!r}")
    delta = need("delta", (int, float))
    if delta >= 0:
        raise ValidationError(f"field 'delta' must be negative, got {delta}")
    m = need("ambient_dim", int)
    n = need("intrinsic_dim", int)
    if n not in (1, 2):
        raise ValidationError(f"field 'intrinsic_dim' must be 1 or 2, got {n}")
    if m < max(2, n + 1):
        raise ValidationError(f"field 'ambient_dim' too small for intrinsic_dim {n}: {m}")
    verts = need("vertices", list)
    for i, row in enumerate(verts):
        if not isinstance(row, list) or len(row) != m + 1:
            raise ValidationError(f"vertices[{i}] must be a list of {m + 1} numbers")
    topo = need("topology", dict)
    name = doc.get("name", "")
    if not isinstance(name, str):
        raise ValidationError("field 'name' must be a string")
    space = AmbientSpace(float(delta), m)
    v = np.array(verts, dtype=float).reshape(-1, m + 1)

    err = space.constraint_error(v) if len(v) else np.zeros(0)
    if len(v) and np.any(err > 0):
        worst = int(np.argmax(err))
        if err[worst] > LOAD_TOL:
            raise ValidationError(f"vertices[{worst}] violates the hyperboloid constraint (relative error {err[worst]:.3g})")
        if err[worst] > RENORM_TOL:
            log.warning("renormalizing vertices onto the hyperboloid (max relative error %.3g)", err[worst])
            v = space.project_point(v)

    if n == 1:
        if topo != {"curve": True}:
            raise ValidationError("intrinsic_dim 1 requires topology {\"curve\": true}")
        tris = None
    else:
        if set(topo) != {"triangles"} or not isinstance(topo["triangles"], list):
            raise ValidationError("intrinsic_dim 2 requires topology {\"triangles\": [...]}")
        for i, t in enumerate(topo["triangles"]):
            if not isinstance(t, list) or len(t) != 3 or not all(isinstance(x, int) for x in t):
                raise ValidationError(f"topology.triangles[{i}] must be three integer indices")
        tris = np.array(topo["triangles"], dtype=np.int64).reshape(-1, 3)
    return Immersion(space, v, tris, name)


def save(imm: Immersion, path) -> None:
    # json emits floats via repr(), the shortest round-tripping representation
    Path(path).write_text(json.dumps(to_dict(imm)))


def load(path) -> Immersion:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_dict(doc)
