"""Center of mass for the modified distance ``Phi_delta(r)`` and the position vector field."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .immersion import Immersion, measures
from .kernel import Phi_delta, minkowski, tangent_norm, th_delta, th_over_r
from .operators import TangentSplit, tangent_split

MAX_ITER = 10000
ARMIJO = 1e-4
MAX_STEP = 1.0  # longest Newton step, in units of 1/sqrt(-delta)


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class BarycenterResult:
    p0: np.ndarray
    energy: float
    grad_norm: float  # |Y(p0)| / Vol
    iterations: int
    residual_moments: float


@dataclass(frozen=True)
class PositionField:
    X: np.ndarray  # (V, m + 1), X_j = th(r_j) grad r
    radii: np.ndarray
    split: TangentSplit
    frame: np.ndarray  # orthonormal frame of T_{p0}, rows
    test_functions: np.ndarray  # (m, V), th(r)/r * x_i

    @property
    def norm(self) -> float:
        return self.split.norm_field

    @property
    def norm_tangential(self) -> float:
        return self.split.norm_tangential

    @property
    def norm_normal(self) -> float:
        return self.split.norm_normal


def _weights(imm, weights):
    if weights is None:
        return measures(imm).w
    return np.asarray(weights, dtype=float)


def energy(q, imm: Immersion, weights=None) -> float:
    w = _weights(imm, weights)
    r = imm.space.distance(q, imm.vertices)
    return float(np.sum(Phi_delta(r, imm.delta) * w))


def energy_and_gradient(q, imm: Immersion, weights=None):
    """``F(q) = sum Phi(d(q, v_j)) w_j`` and its Riemannian gradient ``-Y(q)``."""
    space = imm.space
    w = _weights(imm, weights)
    U = space.log_map(q, imm.vertices)
    r = tangent_norm(U)
    F = float(np.sum(Phi_delta(r, imm.delta) * w))
    Y = np.sum((th_over_r(r, imm.delta) * w)[:, None] * U, axis=0)
    return F, -space.project_tangent(q, Y)


def hessian(q, imm: Immersion, frame, weights=None) -> np.ndarray:
    """Hessian of F at q in the orthonormal ``frame`` of T_q.

    ``Hess Phi(d(q, x)) = I - (1 - sech^2(k r)) u u^T`` with u the unit vector
    toward x, so ``sech^2(k r_max) Vol I <= Hess F <= Vol I``.
    """
    w = _weights(imm, weights)
    U = imm.space.log_map(q, imm.vertices)
    r = tangent_norm(U)
    u = minkowski(U[:, None, :], frame)  # (V, m)
    u = np.divide(u, r[:, None], out=np.zeros_like(u), where=r[:, None] > 0)
    s = 1.0 - 1.0 / np.cosh(imm.space.k * r) ** 2
    return w.sum() * np.eye(len(frame)) - np.einsum("v,va,vb->ab", w * s, u, u)


def find_center(imm: Immersion, tol: float = 1e-10, start=None, weights=None,
                max_iter: int = MAX_ITER, callback=None) -> BarycenterResult:
    """Minimise F by damped Newton steps with Armijo backtracking.

    Starts from the vertex with the smallest F unless ``start`` is given.
    Stops when ``|Y| / Vol <= tol``.  ``callback(q, F)`` is called after
    every accepted step.
    """
    space = imm.space
    w = _weights(imm, weights)
    vol = float(w.sum())
    if start is None:
        # F at a subsample of vertices is enough to pick a good start
        idx = np.unique(np.linspace(0, imm.num_vertices - 1, min(imm.num_vertices, 64)).astype(int))
        q = imm.vertices[idx[np.argmin([energy(imm.vertices[i], imm, w) for i in idx])]]
    else:
        q = space.project_point(np.asarray(start, dtype=float))
    F, g = energy_and_gradient(q, imm, w)
    it = 0
    while True:
        gn = float(tangent_norm(g))
        if gn / vol <= tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"center of mass did not converge in {max_iter} iterations (|Y|/Vol = {gn / vol:.3g})")
        frame = space.frame(q)
        y = -minkowski(g[None, :], frame)
        z = np.linalg.solve(hessian(q, imm, frame, w), y)
        # far from M the Hessian is nearly singular radially; cap the step length
        zn = float(np.linalg.norm(z)) * space.k
        if zn > MAX_STEP:
            z *= MAX_STEP / zn
        d = z @ frame
        slope = float(y @ z)  # -dF along d
        if slope < 1e-13 * abs(F):
            # decrease below the resolution of F: Armijo cannot judge.  Take
            # the Newton step if it shrinks the gradient, else the step 1/Vol
            # along -g, a descent step because Hess F <= Vol.
            q_new = space.exp_map(q, d)
            F_new, g_new = energy_and_gradient(q_new, imm, w)
            if tangent_norm(g_new) >= gn:
                q_new = space.exp_map(q, -g / vol)
                F_new, g_new = energy_and_gradient(q_new, imm, w)
        else:
            t = 1.0
            while True:
                q_new = space.exp_map(q, t * d)
                F_new, g_new = energy_and_gradient(q_new, imm, w)
                if F_new <= F - ARMIJO * t * slope or t < 1e-12:
                    break
                t *= 0.5
        if callback is not None:
            callback(q_new, F_new)
        q, F, g = q_new, min(F, F_new), g_new
        it += 1
    return BarycenterResult(q, F, float(tangent_norm(g)) / vol, it, moment_residual(imm, q, w))


def moment_residual(imm: Immersion, p0, weights=None) -> float:
    """``max_i |sum_j th(r_j)/r_j x_i(v_j) w_j| / Vol`` in normal coordinates at p0."""
    w = _weights(imm, weights)
    space = imm.space
    frame = space.frame(p0)
    x = space.normal_coordinates(p0, imm.vertices, frame)
    r = np.linalg.norm(x, axis=1)
    f = th_over_r(r, imm.delta)[:, None] * x
    return float(np.max(np.abs(f.T @ w)) / w.sum())


def position_field(imm: Immersion, p0) -> PositionField:
    """X = th(r) grad r about ``p0`` with its tangential/normal split and the test functions."""
    space = imm.space
    p0 = np.asarray(p0, dtype=float)
    frame = space.frame(p0)
    x = space.normal_coordinates(p0, imm.vertices, frame)
    r = np.linalg.norm(x, axis=1)
    U = space.log_map(imm.vertices, np.broadcast_to(p0, imm.vertices.shape))
    rr = tangent_norm(U)
    # grad r at v_j is -log_{v_j}(p0)/r_j; X_j = th(r_j) grad r = -(th(r)/r) log_{v_j}(p0)
    X = -th_over_r(rr, imm.delta)[:, None] * U
    split = tangent_split(imm, X)
    tests = (th_over_r(r, imm.delta)[:, None] * x).T
    return PositionField(X, r, split, frame, tests)


def convexity_probe(imm: Immersion, n_lines: int = 50, seed: int = 0, h: float = 1e-2,
                    spread: float = 1.0):
    """Minimum scaled second difference of F along random geodesics.

    Returns ``min (F(t-h) - 2F(t) + F(t+h)) / h^2`` over ``n_lines`` random
    base points (within ``spread`` of the first vertex) and directions.
    """
    rng = np.random.default_rng(seed)
    space = imm.space
    w = measures(imm).w
    base = imm.vertices[0]
    worst = np.inf
    for _ in range(n_lines):
        v = space.project_tangent(base, np.concatenate([[0.0], rng.normal(size=space.dim)]))
        p = space.exp_map(base, spread * rng.uniform() * v / tangent_norm(v))
        d = space.project_tangent(p, np.concatenate([[0.0], rng.normal(size=space.dim)]))
        d = d / tangent_norm(d)
        Fm, F0, Fp = (energy(space.exp_map(p, s * d), imm, w) for s in (-h, 0.0, h))
        worst = min(worst, (Fm - 2 * F0 + Fp) / h**2)
    return float(worst)


def moment_vector(imm: Immersion, p0) -> np.ndarray:
    """Y(p0) expressed in the frame at p0."""
    _, g = energy_and_gradient(p0, imm)
    return -minkowski(g[None, :], imm.space.frame(p0))
