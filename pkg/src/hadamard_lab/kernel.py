"""Closed-form geometry of constant-curvature hyperbolic space H^m(delta).

Points live on the upper sheet of the hyperboloid ``<p, p> = 1/delta`` in
Minkowski space R^{1,m} with the form ``diag(-1, 1, ..., 1)``.  Every function
here accepts stacked inputs of shape ``(..., m + 1)`` and broadcasts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# below this tangent norm exp/log switch to Taylor branches
SMALL = 1e-8
# arccosh argument may dip this far below 1 (times the coordinate scale) before we complain
ACOSH_SLACK = 1e-12


class DomainError(ValueError):
    """Argument outside the domain of a kernel function."""


def check_delta(delta: float) -> float:
    delta = float(delta)
    if not np.isfinite(delta) or delta >= 0.0:
        raise DomainError(f"curvature bound must be finite and negative, got {delta}")
    return delta


def _sqrt_k(delta):
    return np.sqrt(-check_delta(delta))


def _nonneg(r):
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < 0):
        raise DomainError("argument must be finite and non-negative")
    return r


def sh_delta(r, delta):
    """delta-hyperbolic sine ``sinh(sqrt(-delta) r) / sqrt(-delta)``."""
    k = _sqrt_k(delta)
    return np.sinh(k * _nonneg(r)) / k


def ch_delta(r, delta):
    k = _sqrt_k(delta)
    return np.cosh(k * _nonneg(r))


def th_delta(r, delta):
    k = _sqrt_k(delta)
    return np.tanh(k * _nonneg(r)) / k


def arcsh_delta(s, delta):
    k = _sqrt_k(delta)
    return np.arcsinh(k * _nonneg(s)) / k


def arcth_delta(t, delta):
    """Inverse of :func:`th_delta`; defined on ``[0, 1/sqrt(-delta))``."""
    k = _sqrt_k(delta)
    t = _nonneg(t)
    if np.any(k * t >= 1.0):
        raise DomainError("arcth_delta argument must be below 1/sqrt(-delta)")
    return np.arctanh(k * t) / k


def Phi_delta(r, delta):
    """Antiderivative of ``th_delta`` vanishing at 0: ``ln cosh(sqrt(-delta) r) / (-delta)``."""
    k = _sqrt_k(delta)
    x = k * _nonneg(r)
    # log(cosh x) = x + log1p(exp(-2x)) - log 2, stable for large x
    return (x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)) / (k * k)


def th_over_r(r, delta):
    """``th_delta(r) / r`` with its limit 1 at r = 0."""
    k = _sqrt_k(delta)
    x = k * _nonneg(r)
    small = x < 1e-4
    xs = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 3.0 + 2.0 * x**4 / 15.0, np.tanh(xs) / xs)


def _sh_over_r(r, k):
    x = k * r
    small = x < SMALL
    xs = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(xs) / xs)


def _r_over_sh(r, k):
    x = k * r
    small = x < SMALL
    xs = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, xs / np.sinh(np.where(small, 1.0, xs)))


def minkowski(u, v):
    """Minkowski bilinear form ``-u0 v0 + sum ui vi`` over the last axis."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sum(u[..., 1:] * v[..., 1:], axis=-1) - u[..., 0] * v[..., 0]


def tangent_norm(v):
    return np.sqrt(np.maximum(minkowski(v, v), 0.0))


@dataclass(frozen=True)
class AmbientSpace:
    """H^m(delta) in the hyperboloid model."""

    delta: float
    dim: int

    def __post_init__(self):
        object.__setattr__(self, "delta", check_delta(self.delta))
        if int(self.dim) != self.dim or self.dim < 2:
            raise DomainError(f"ambient dimension must be an integer >= 2, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def k(self) -> float:
        return float(np.sqrt(-self.delta))

    def origin(self) -> np.ndarray:
        p = np.zeros(self.dim + 1)
        p[0] = 1.0 / self.k
        return p

    def basis(self, i: int) -> np.ndarray:
        """Unit vector e_i (1-based) of the tangent space at :meth:`origin`."""
        e = np.zeros(self.dim + 1)
        e[i] = 1.0
        return e

    def constraint_error(self, p) -> np.ndarray:
        """``|<p,p> - 1/delta|`` relative to the scale at which it is computed.

        The scale is ``max(|1/delta|, |p|_E^2)``: far from the origin the form
        is a difference of numbers of size ``|p|_E^2`` and rounding grows with it.
        """
        p = np.asarray(p, dtype=float)
        scale = np.maximum(1.0 / abs(self.delta), np.sum(p * p, axis=-1))
        return np.abs(minkowski(p, p) - 1.0 / self.delta) / scale

    def project_point(self, p):
        """Rescale onto the hyperboloid sheet ``<p,p> = 1/delta, p0 > 0``."""
        p = np.asarray(p, dtype=float)
        q = -minkowski(p, p)
        if np.any(q <= 0) or np.any(p[..., 0] <= 0):
            raise DomainError("point is not timelike future-pointing; cannot project")
        return p / (self.k * np.sqrt(q))[..., None]

    def project_tangent(self, p, v):
        """Remove the component of ``v`` along ``p`` so that ``<p, v> = 0``."""
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        return v - (self.delta * minkowski(p, v))[..., None] * p

    def _cosh_dist(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        c = self.delta * minkowski(p, q)
        # rounding in <p,q> scales with the Euclidean size of the coordinates
        scale = np.maximum(1.0, -self.delta * np.linalg.norm(p, axis=-1) * np.linalg.norm(q, axis=-1))
        if np.any(c < 1.0 - ACOSH_SLACK * scale):
            raise DomainError("arccosh argument below 1: input is off the hyperboloid")
        return np.maximum(c, 1.0)

    def distance(self, p, q):
        # arccosh(delta <p,q>) / k, evaluated through the Minkowski chord
        # |q - p| = 2 sinh(k d / 2) / k which keeps full precision as d -> 0
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        self._cosh_dist(p, q)
        chord = tangent_norm(q - p)
        return 2.0 * np.arcsinh(0.5 * self.k * chord) / self.k

    def exp_map(self, p, v):
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        r = tangent_norm(v)
        x = self.k * r
        out = np.cosh(x)[..., None] * p + _sh_over_r(r, self.k)[..., None] * v
        return self.project_point(out)

    def log_map(self, p, q):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        self._cosh_dist(p, q)
        chord = tangent_norm(q - p)
        r = 2.0 * np.arcsinh(0.5 * self.k * chord) / self.k
        # delta <p,q> - 1 = k^2 |q - p|^2 / 2, without cancellation
        cm1 = 0.5 * self.k**2 * chord**2
        v = _r_over_sh(r, self.k)[..., None] * ((q - p) - cm1[..., None] * p)
        return self.project_tangent(p, v)

    def parallel_transport(self, p, q, v):
        """Transport ``v`` in T_p along the geodesic from p to q."""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        coef = -self.delta * minkowski(q, v) / (1.0 + self.delta * minkowski(p, q))
        return self.project_tangent(q, v + coef[..., None] * (p + q))

    def frame(self, p, tol: float = 1e-8) -> np.ndarray:
        """Orthonormal basis of T_p as rows, shape ``(m, m + 1)``.

        Built by Minkowski Gram-Schmidt on the projected coordinate vectors.
        The frame at :meth:`origin` is the standard basis.
        """
        p = np.asarray(p, dtype=float)
        rows = []
        for i in range(1, self.dim + 1):
            e = self.project_tangent(p, self.basis(i))
            for _ in range(2):  # second pass restores orthogonality far from the origin
                for f in rows:
                    e = e - minkowski(e, f) * f
                e = e - self.delta * minkowski(p, e) * p
                e = e / tangent_norm(e)
            rows.append(e)
        F = np.array(rows)
        check_frame(p, F, self.delta, tol)
        return F

    def normal_coordinates(self, p0, x, frame=None, tol: float = 1e-8):
        """Components of ``log_map(p0, x)`` in an orthonormal frame of T_{p0}."""
        if frame is None:
            frame = self.frame(p0)
        else:
            check_frame(p0, frame, self.delta, tol)
        v = self.log_map(p0, x)
        return minkowski(v[..., None, :], frame)


def check_frame(p, frame, delta, tol=1e-8):
    frame = np.asarray(frame, dtype=float)
    gram = minkowski(frame[:, None, :], frame[None, :, :])
    dev = np.max(np.abs(gram - np.eye(len(frame))))
    tang = np.max(np.abs(minkowski(frame, p))) if len(frame) else 0.0
    # Minkowski products of large coordinates cancel; scale by the Euclidean size
    scale = max(1.0, float(np.max(np.sum(frame**2, axis=-1))) if len(frame) else 1.0)
    if dev > tol * scale or tang > tol * scale * float(np.sqrt(p @ p)):
        raise DomainError(f"frame is not orthonormal in T_p (Gram deviation {dev:.3g})")
