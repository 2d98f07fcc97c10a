"""Discrete differential operators on an :class:`~hadamard_lab.immersion.Immersion`."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .immersion import Immersion, ValidationError, edge_lengths, measures, triangle_areas
from .kernel import minkowski


@dataclass(frozen=True)
class LaplacianPair:
    """Stiffness ``S`` (symmetric PSD, sparse CSR) and lumped mass (diagonal entries)."""

    stiffness: sp.csr_matrix
    mass: np.ndarray

    @property
    def mass_matrix(self) -> sp.dia_matrix:
        return sp.diags(self.mass)


@dataclass(frozen=True)
class MeanCurvatureField:
    H: np.ndarray  # (V, m + 1) ambient tangent vectors
    norms: np.ndarray  # |H_i|
    willmore: float  # sum |H_i|^2 w_i
    residual: float  # max non-tangential part removed by projection, relative to max |H|


@dataclass(frozen=True)
class TangentSplit:
    tangential: np.ndarray
    normal: np.ndarray
    norm_field: float
    norm_tangential: float
    norm_normal: float


def _cyclic_stiffness(ell):
    n = len(ell)
    i = np.arange(n)
    inv = 1.0 / ell
    # edge i joins i and i+1
    rows = np.concatenate([i, (i + 1) % n, i, (i + 1) % n])
    cols = np.concatenate([(i + 1) % n, i, i, (i + 1) % n])
    vals = np.concatenate([-inv, -inv, inv, inv])
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def cotan_weights(imm: Immersion) -> np.ndarray:
    """Per-triangle cotangents ``(T, 3)``; column j is the angle at corner j.

    Each triangle is laid out in the plane with its three hyperbolic side
    lengths (Euclidean comparison triangle).
    """
    v, t = imm.vertices, imm.triangles
    space = imm.space
    a = space.distance(v[t[:, 1]], v[t[:, 2]])
    b = space.distance(v[t[:, 2]], v[t[:, 0]])
    c = space.distance(v[t[:, 0]], v[t[:, 1]])
    s = 0.5 * (a + b + c)
    heron = s * (s - a) * (s - b) * (s - c)
    if np.any(heron <= 0):
        bad = int(np.argmin(heron))
        raise ValidationError(f"triangle {bad} {tuple(t[bad])} violates the triangle inequality")
    area4 = 4.0 * np.sqrt(heron)
    a2, b2, c2 = a * a, b * b, c * c
    return np.stack([(b2 + c2 - a2) / area4, (c2 + a2 - b2) / area4, (a2 + b2 - c2) / area4], axis=1)


def mixed_areas(imm: Immersion) -> np.ndarray:
    """Per-vertex mixed Voronoi areas (circumcentric cells, halved/quartered on obtuse triangles).

    Each triangle's cells are rescaled to sum to its hyperbolic area.  Used
    only to normalise the position Laplacian in :func:`mean_curvature`.
    """
    v, t = imm.vertices, imm.triangles
    space = imm.space
    sides = np.stack([space.distance(v[t[:, 1]], v[t[:, 2]]),
                      space.distance(v[t[:, 2]], v[t[:, 0]]),
                      space.distance(v[t[:, 0]], v[t[:, 1]])], axis=1)
    cot = cotan_weights(imm)
    sq = sides**2
    cells = np.stack([
        sq[:, 1] * cot[:, 1] + sq[:, 2] * cot[:, 2],
        sq[:, 2] * cot[:, 2] + sq[:, 0] * cot[:, 0],
        sq[:, 0] * cot[:, 0] + sq[:, 1] * cot[:, 1],
    ], axis=1) / 8.0
    A = triangle_areas(imm)
    cells *= (A / cells.sum(axis=1))[:, None]
    obtuse = cot < 0
    tri_obtuse = obtuse.any(axis=1)
    cells[tri_obtuse] = np.where(obtuse[tri_obtuse], 0.5, 0.25) * A[tri_obtuse, None]
    return np.bincount(t.ravel(), weights=cells.ravel(), minlength=imm.num_vertices)


def laplacian(imm: Immersion) -> LaplacianPair:
    """Stiffness and lumped mass of the intrinsic Laplace-Beltrami operator.

    Curves use 1-D linear elements on arclength, ``S_ii = 1/l_{i-1} + 1/l_i``;
    meshes use cotangent weights.  Obtuse (negative) weights are kept.
    """
    if "laplacian" in imm._cache:
        return imm._cache["laplacian"]
    w = measures(imm).w
    if imm.is_curve:
        S = _cyclic_stiffness(edge_lengths(imm))
    else:
        t = imm.triangles
        cot = cotan_weights(imm)
        # edge opposite corner j is (j+1, j+2)
        I = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
        J = np.concatenate([t[:, 2], t[:, 0], t[:, 1]])
        W = 0.5 * np.concatenate([cot[:, 0], cot[:, 1], cot[:, 2]])
        off = sp.coo_matrix((-W, (I, J)), shape=(imm.num_vertices,) * 2)
        off = off + off.T
        diag = -np.asarray(off.sum(axis=1)).ravel()
        S = (off + sp.diags(diag)).tocsr()
    S.sum_duplicates()
    lap = LaplacianPair(S, w)
    imm._cache["laplacian"] = lap
    return lap


def _unit(space_vecs):
    n = np.sqrt(np.maximum(minkowski(space_vecs, space_vecs), 0.0))
    return np.divide(space_vecs, n[..., None], out=np.zeros_like(space_vecs), where=n[..., None] > 0), n


def curve_tangents(imm: Immersion):
    """Unit incoming and outgoing edge tangents at every vertex of a curve."""
    if "curve_tangents" not in imm._cache:
        space, V = imm.space, imm.vertices
        t_out, _ = _unit(space.log_map(V, np.roll(V, -1, axis=0)))
        t_in, _ = _unit(-space.log_map(V, np.roll(V, 1, axis=0)))
        imm._cache["curve_tangents"] = (t_in, t_out)
    return imm._cache["curve_tangents"]


def turning_angles(imm: Immersion) -> np.ndarray:
    """Exterior angle at each vertex between incoming and outgoing geodesic edges."""
    t_in, t_out = curve_tangents(imm)
    # atan2 of |cross| and dot is accurate for angles near zero
    c = minkowski(t_in, t_out)
    d = t_out - t_in
    s = 0.5 * np.sqrt(np.maximum(minkowski(d, d), 0.0)) * np.sqrt(np.maximum(minkowski(t_in + t_out, t_in + t_out), 0.0))
    return np.arctan2(s, c)


def mean_curvature(imm: Immersion) -> MeanCurvatureField:
    """Discrete mean curvature vector H at every vertex.

    Curves: ``|H_i| = theta_i / w_i`` along the difference of the unit edge
    tangents.  Meshes: ``H = -P_T (S x)_i / (n a_i)`` where ``x`` are the
    Minkowski coordinates, ``a_i`` the mixed Voronoi area and ``P_T`` projects
    onto the tangent space of the hyperboloid, removing the umbilic
    ``-delta x`` part of ``Delta x``.  The Willmore sum uses the lumped measure.
    """
    if "mean_curvature" in imm._cache:
        return imm._cache["mean_curvature"]
    space, V = imm.space, imm.vertices
    w = measures(imm).w
    if imm.is_curve:
        t_in, t_out = curve_tangents(imm)
        theta = turning_angles(imm)
        direction, _ = _unit(t_out - t_in)
        H = (theta / w)[:, None] * direction
        residual = 0.0
    else:
        lap = laplacian(imm)
        raw = -(lap.stiffness @ V) / (imm.dim_n * mixed_areas(imm)[:, None])
        H = space.project_tangent(V, raw)
        norms = np.sqrt(np.maximum(minkowski(H, H), 0.0))
        # the removed part should be -delta x up to discretisation error
        removed = raw - H
        umbilic = -space.delta * V
        dev = np.sqrt(np.abs(minkowski(removed - umbilic, removed - umbilic)))
        residual = float(dev.max() / max(norms.max(), 1e-300))
    norms = np.sqrt(np.maximum(minkowski(H, H), 0.0))
    mc = MeanCurvatureField(H, norms, float(np.sum(norms**2 * w)), residual)
    imm._cache["mean_curvature"] = mc
    return mc


def _neighbour_groups(imm: Immersion):
    """Vertices grouped by valence: list of (vertex ids, neighbour ids (g, k), weights (g, k))."""
    if "rings" in imm._cache:
        return imm._cache["rings"]
    nv = imm.num_vertices
    if imm.is_curve:
        i = np.arange(nv)
        ell = edge_lengths(imm)
        groups = [(i, np.stack([(i - 1) % nv, (i + 1) % nv], axis=1), np.stack([np.roll(ell, 1), ell], axis=1))]
    else:
        t = imm.triangles
        A = triangle_areas(imm)
        I = np.concatenate([t[:, 0], t[:, 1], t[:, 2]])
        J = np.concatenate([t[:, 1], t[:, 2], t[:, 0]])
        W = sp.coo_matrix((np.tile(A, 3), (I, J)), shape=(nv, nv))
        W = (W + W.T).tocsr()
        W.sort_indices()
        val = np.diff(W.indptr)
        groups = []
        for k in np.unique(val):
            ids = np.flatnonzero(val == k)
            rows = W.indptr[ids][:, None] + np.arange(k)
            groups.append((ids, W.indices[rows], W.data[rows]))
    imm._cache["rings"] = groups
    return groups


def tangent_frames(imm: Immersion) -> np.ndarray:
    """Orthonormal basis of the discrete tangent space at each vertex, shape ``(V, n, m + 1)``.

    Curves: the normalised sum of incoming and outgoing unit tangents.
    Meshes: the two dominant directions of the area-weighted log-mapped one-ring,
    found from the eigendecomposition of its Minkowski Gram matrix.
    """
    if "frames" in imm._cache:
        return imm._cache["frames"]
    space, V = imm.space, imm.vertices
    if imm.is_curve:
        t_in, t_out = curve_tangents(imm)
        T, _ = _unit(t_in + t_out)
        frames = T[:, None, :]
    else:
        frames = np.zeros((imm.num_vertices, 2, space.dim + 1))
        for ids, nbr, wts in _neighbour_groups(imm):
            U = space.log_map(V[ids][:, None, :], V[nbr])  # (g, k, m+1)
            U = U * np.sqrt(wts)[..., None]
            G = minkowski(U[:, :, None, :], U[:, None, :, :])  # (g, k, k)
            evals, evecs = np.linalg.eigh(G)
            top = evecs[:, :, -2:][:, :, ::-1]  # (g, k, 2)
            E = np.einsum("gka,gkd->gad", top, U) / np.sqrt(evals[:, -2:][:, ::-1])[..., None]
            # re-orthonormalise against rounding
            e0, _ = _unit(E[:, 0])
            e1 = E[:, 1] - minkowski(E[:, 1], e0)[:, None] * e0
            e1, _ = _unit(e1)
            frames[ids, 0] = e0
            frames[ids, 1] = e1
    imm._cache["frames"] = frames
    return frames


def renormalized_norm(vectors, w, vol) -> float:
    """``(1/Vol * sum |v_i|^2 w_i)^(1/2)`` for ambient tangent vectors."""
    sq = np.maximum(minkowski(vectors, vectors), 0.0)
    return float(np.sqrt(np.sum(sq * w) / vol))


def tangent_split(imm: Immersion, field) -> TangentSplit:
    """Split an ambient vector field into parts tangent and normal to M."""
    field = np.asarray(field, dtype=float)
    if field.shape != imm.vertices.shape:
        raise ValueError(f"field must have shape {imm.vertices.shape}, got {field.shape}")
    F = tangent_frames(imm)
    coef = minkowski(field[:, None, :], F)  # (V, n)
    tang = np.einsum("va,vad->vd", coef, F)
    normal = field - tang
    mw = measures(imm)
    return TangentSplit(
        tang, normal,
        renormalized_norm(field, mw.w, mw.total),
        renormalized_norm(tang, mw.w, mw.total),
        renormalized_norm(normal, mw.w, mw.total),
    )


def dirichlet_energy(imm: Immersion, f) -> float:
    f = np.asarray(f, dtype=float)
    return float(f @ (laplacian(imm).stiffness @ f))


def discrete_gradient_norms(imm: Immersion, f):
    """Per-vertex ``|grad f|^2`` from a least-squares fit over the one-ring, and ``f^T S f``.

    The per-vertex values are diagnostics; Rayleigh quotients use the stiffness matrix.
    """
    f = np.asarray(f, dtype=float)
    space, V = imm.space, imm.vertices
    F = tangent_frames(imm)
    out = np.zeros(imm.num_vertices)
    for ids, nbr, wts in _neighbour_groups(imm):
        U = space.log_map(V[ids][:, None, :], V[nbr])
        D = minkowski(U[:, :, None, :], F[ids][:, None, :, :])  # (g, k, n)
        df = f[nbr] - f[ids][:, None]
        sw = np.sqrt(wts)
        A = D * sw[..., None]
        b = df * sw
        AtA = np.einsum("gka,gkb->gab", A, A)
        Atb = np.einsum("gka,gk->ga", A, b)
        g = np.linalg.solve(AtA, Atb[..., None])[..., 0]
        out[ids] = np.sum(g * g, axis=1)
    return out, dirichlet_energy(imm, f)


def export_matrix_market(lap: LaplacianPair, prefix) -> tuple[str, str]:
    from scipy.io import mmwrite

    s_path, m_path = f"{prefix}_stiffness.mtx", f"{prefix}_mass.mtx"
    mmwrite(s_path, lap.stiffness)
    mmwrite(m_path, lap.mass_matrix.tocoo())
    return s_path, m_path
