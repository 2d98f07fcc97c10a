"""Benchmark immersions with controlled resolution.

All generators place the shape around a ``center`` (default: the origin of
the hyperboloid) and push tangent-space data through ``exp_map``, so radii
about the center are exact to kernel precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .immersion import Immersion, ValidationError, edge_lengths, measures
from .kernel import AmbientSpace, ch_delta, sh_delta, th_delta, arcth_delta

MAX_LEVEL = 7
KINDS = ("circle", "sphere", "clifford_torus", "racetrack", "fourier_curve", "perturbed_sphere")


def _space_and_center(delta, ambient_dim, center):
    space = AmbientSpace(delta, ambient_dim)
    c = space.origin() if center is None else space.project_point(np.asarray(center, dtype=float))
    return space, c, space.frame(c)


def _check_positive(**kw):
    for k, v in kw.items():
        if not np.isfinite(v) or v <= 0:
            raise ValueError(f"{k} must be positive, got {v}")


def circle(R, N, delta=-1.0, ambient_dim=2, center=None, name=None) -> Immersion:
    """Regular N-gon inscribed in the geodesic circle of radius R."""
    _check_positive(R=R)
    if int(N) != N or N < 8:
        raise ValueError(f"N must be an integer >= 8, got {N}")
    space, c, F = _space_and_center(delta, ambient_dim, center)
    theta = 2.0 * np.pi * np.arange(N) / N
    v = R * (np.cos(theta)[:, None] * F[0] + np.sin(theta)[:, None] * F[1])
    return Immersion(space, space.exp_map(c, v), None, name or f"circle(R={R},N={N})")


def icosphere(level: int):
    """Unit-sphere vertices and outward-oriented triangles of a subdivided icosahedron."""
    t = (1.0 + 5**0.5) / 2.0
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
             (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
             (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    V = [np.array(p, dtype=float) / np.linalg.norm(p) for p in verts]
    F = faces
    for _ in range(level):
        mid = {}

        def midpoint(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                p = V[a] + V[b]
                V.append(p / np.linalg.norm(p))
                mid[key] = len(V) - 1
            return mid[key]

        newF = []
        for a, b, c in F:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            newF += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        F = newF
    return np.array(V), np.array(F, dtype=np.int64)


def _radial_mesh(space, c, frame, dirs, radii, tris, name):
    # dirs are unit vectors in R^d, d <= m, expressed in the frame at c
    tang = dirs @ frame[: dirs.shape[1]]
    return Immersion(space, space.exp_map(c, radii[:, None] * tang), tris, name)


def geodesic_sphere(R, level, delta=-1.0, ambient_dim=3, center=None, name=None) -> Immersion:
    """Icosphere of the given subdivision level pushed onto the metric sphere of radius R."""
    _check_positive(R=R)
    if int(level) != level or not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be an integer in [0, {MAX_LEVEL}], got {level}")
    space, c, F = _space_and_center(delta, ambient_dim, center)
    dirs, tris = icosphere(int(level))
    imm = _radial_mesh(space, c, F, dirs, np.full(len(dirs), float(R)), tris,
                       name or f"sphere(R={R},level={level})")
    assert imm.euler_characteristic() == 2
    return imm


def perturbed_sphere(R, level, delta=-1.0, amplitude=0.1, seed=0, ambient_dim=3, center=None,
                     name=None) -> Immersion:
    """Star-shaped sphere with radius ``R * exp(amplitude * P(dir))``.

    P is a random polynomial of degree <= 3 in the direction, normalised so
    that ``max |P| <= 1`` on the sphere.
    """
    _check_positive(R=R)
    if amplitude < 0:
        raise ValueError("amplitude must be non-negative")
    space, c, F = _space_and_center(delta, ambient_dim, center)
    dirs, tris = icosphere(int(level))
    rng = np.random.default_rng(seed)
    a1 = rng.normal(size=3)
    A2 = rng.normal(size=(3, 3))
    A3 = rng.normal(size=(3, 3, 3))
    P = dirs @ a1 + np.einsum("ij,ni,nj->n", A2, dirs, dirs) \
        + 0.5 * np.einsum("ijk,ni,nj,nk->n", A3, dirs, dirs, dirs)
    P = P / np.max(np.abs(P))
    radii = R * np.exp(amplitude * P)
    return _radial_mesh(space, c, F, dirs, radii, tris,
                        name or f"perturbed_sphere(R={R},amp={amplitude},seed={seed})")


def clifford_torus(R, Ngrid, delta=-1.0, center=None, name=None) -> Immersion:
    """Clifford torus of the metric 3-sphere of radius R in H^4(delta).

    Directions ``(cos u, sin u, cos v, sin v) / sqrt(2)`` on an Ngrid x Ngrid
    lattice, each pushed by ``exp_map(center, R * dir)``.
    """
    _check_positive(R=R)
    if int(Ngrid) != Ngrid or Ngrid < 3:
        raise ValueError(f"Ngrid must be an integer >= 3, got {Ngrid}")
    n = int(Ngrid)
    space, c, F = _space_and_center(delta, 4, center)
    u = 2.0 * np.pi * np.arange(n) / n
    U, V = np.meshgrid(u, u, indexing="ij")
    dirs = np.stack([np.cos(U), np.sin(U), np.cos(V), np.sin(V)], axis=-1).reshape(-1, 4) / np.sqrt(2.0)
    idx = np.arange(n * n).reshape(n, n)
    a = idx
    b = np.roll(idx, -1, axis=0)
    cc = np.roll(np.roll(idx, -1, axis=0), -1, axis=1)
    d = np.roll(idx, -1, axis=1)
    tris = np.concatenate([np.stack([a, b, cc], -1).reshape(-1, 3),
                           np.stack([a, cc, d], -1).reshape(-1, 3)])
    imm = _radial_mesh(space, c, F, dirs, np.full(len(dirs), float(R)), tris,
                       name or f"clifford_torus(R={R},N={n})")
    assert imm.euler_characteristic() == 0
    return imm


def racetrack(d, L, N, delta=-1.0, ambient_dim=2, center=None, name=None) -> Immersion:
    """Two equidistant arcs at distance d from a geodesic segment of length L, closed by half circles.

    Built in Fermi coordinates along the base geodesic; the caps are
    half geodesic circles of radius d about the segment ends, which meet the
    equidistant arcs with matching tangents.  N points are spaced uniformly
    in arclength, starting at the midpoint of the lower arc.
    """
    _check_positive(d=d, L=L)
    if int(N) != N or N < 8:
        raise ValueError(f"N must be an integer >= 8, got {N}")
    space, c, F = _space_and_center(delta, ambient_dim, center)
    e1, e2 = F[0], F[1]
    straight = L * ch_delta(d, delta)
    cap = np.pi * sh_delta(d, delta)
    total = 2 * straight + 2 * cap
    s = total * np.arange(N) / N
    pts = np.empty((N, space.dim + 1))

    def base(t):
        # base geodesic point and its unit tangent at parameter t
        g = space.exp_map(c, t * e1)
        return g, space.parallel_transport(c, g, e1)

    # segment boundaries: lower arc (second half), right cap, upper arc, left cap, lower arc (first half)
    half = straight / 2
    bounds = np.cumsum([half, cap, straight, cap, half])
    for i, si in enumerate(s):
        if si < bounds[0]:
            t, side = si / ch_delta(d, delta), -1.0
            g, _ = base(t)
            pts[i] = space.exp_map(g, side * d * space.parallel_transport(c, g, e2))
        elif si < bounds[1]:
            phi = -np.pi / 2 + (si - bounds[0]) / sh_delta(d, delta)
            g, tg = base(L / 2)
            n2 = space.parallel_transport(c, g, e2)
            pts[i] = space.exp_map(g, d * (np.cos(phi) * tg + np.sin(phi) * n2))
        elif si < bounds[2]:
            t = L / 2 - (si - bounds[1]) / ch_delta(d, delta)
            g, _ = base(t)
            pts[i] = space.exp_map(g, d * space.parallel_transport(c, g, e2))
        elif si < bounds[3]:
            phi = np.pi / 2 + (si - bounds[2]) / sh_delta(d, delta)
            g, tg = base(-L / 2)
            n2 = space.parallel_transport(c, g, e2)
            pts[i] = space.exp_map(g, d * (np.cos(phi) * tg + np.sin(phi) * n2))
        else:
            t = -L / 2 + (si - bounds[3]) / ch_delta(d, delta)
            g, _ = base(t)
            pts[i] = space.exp_map(g, -d * space.parallel_transport(c, g, e2))
    return Immersion(space, pts, None, name or f"racetrack(d={d},L={L},N={N})")


def racetrack_length(d, L, delta=-1.0) -> float:
    """Exact length ``2 L ch(d) + 2 pi sh(d)`` of the smooth racetrack."""
    return float(2 * L * ch_delta(d, delta) + 2 * np.pi * sh_delta(d, delta))


@dataclass
class FourierCoeffs:
    """Radius profile ``a0 + sum_k a_k cos(k t) + b_k sin(k t)`` plus an optional lift.

    ``lift`` holds (c_k, s_k) pairs for a third tangent coordinate, used when the
    ambient dimension is at least 3 to leave the totally geodesic plane.
    """

    a0: float
    a: np.ndarray
    b: np.ndarray
    lift_a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lift_b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def radius(self, t):
        k = np.arange(1, len(self.a) + 1)
        return self.a0 + np.cos(np.outer(t, k)) @ self.a + np.sin(np.outer(t, k)) @ self.b

    def height(self, t):
        if len(self.lift_a) == 0:
            return np.zeros_like(t)
        k = np.arange(1, len(self.lift_a) + 1)
        return np.cos(np.outer(t, k)) @ self.lift_a + np.sin(np.outer(t, k)) @ self.lift_b

    def scaled(self, s):
        return FourierCoeffs(s * self.a0, s * self.a, s * self.b, s * self.lift_a, s * self.lift_b)


def random_coeffs(seed, modes=4, a0=1.0, roughness=0.35, lift=0.0) -> FourierCoeffs:
    """Random coefficients decaying like 1/k^2; the radius stays positive."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, modes + 1)
    amp = roughness * a0 / k**2
    a = rng.uniform(-1, 1, modes) * amp
    b = rng.uniform(-1, 1, modes) * amp
    # sum of |amp| * sqrt(2) < a0 keeps the profile positive
    scale = min(1.0, 0.8 * a0 / (np.sqrt(2) * amp.sum()))
    la = rng.uniform(-1, 1, modes) * lift * a0 / k**2
    lb = rng.uniform(-1, 1, modes) * lift * a0 / k**2
    return FourierCoeffs(a0, a * scale, b * scale, la, lb)


def fourier_curve(coeffs=None, N=256, delta=-1.0, seed=0, ambient_dim=2, center=None,
                  name=None) -> Immersion:
    """Closed curve ``exp_map(center, radius(t) dir(t) + height(t) e3)``.

    With ``coeffs=None`` the coefficients are drawn from ``seed``.
    """
    if coeffs is None:
        coeffs = random_coeffs(seed, lift=0.3 if ambient_dim >= 3 else 0.0)
    if int(N) != N or N < 8:
        raise ValueError(f"N must be an integer >= 8, got {N}")
    space, c, F = _space_and_center(delta, ambient_dim, center)
    t = 2.0 * np.pi * np.arange(N) / N
    rho = coeffs.radius(t)
    if np.any(rho <= 0):
        raise ValidationError("radius profile must be positive everywhere")
    v = rho[:, None] * (np.cos(t)[:, None] * F[0] + np.sin(t)[:, None] * F[1])
    h = coeffs.height(t)
    if np.any(h != 0):
        if ambient_dim < 3:
            raise ValueError("a lifted curve needs ambient_dim >= 3")
        v = v + h[:, None] * F[2]
    return Immersion(space, space.exp_map(c, v), None, name or f"fourier_curve(seed={seed},N={N})")


def fourier_curve_with_length(target_length, N=256, delta=-1.0, seed=0, ambient_dim=2, **kw) -> Immersion:
    """Random Fourier curve rescaled (in the tangent space) so its polygon length equals ``target_length``."""
    _check_positive(target_length=target_length)
    base = random_coeffs(seed, lift=0.3 if ambient_dim >= 3 else 0.0)

    def length(s):
        return measures(fourier_curve(base.scaled(s), N, delta, seed, ambient_dim, **kw)).total

    # length is close to linear in the scale for small curves
    lo = hi = target_length / length(1.0)
    while length(hi) < target_length:
        hi *= 1.5
    while length(lo) > target_length:
        lo /= 1.5
    s = brentq(lambda s: length(s) - target_length, lo, hi, xtol=1e-14, rtol=1e-13)
    return fourier_curve(base.scaled(s), N, delta, seed, ambient_dim, **kw)


def radial_shrink(curve: Immersion, p0, mu) -> Immersion:
    """Move every vertex along its geodesic from p0 so that th(r) scales by mu.

    The position field about p0 of the result is exactly mu times the original.
    """
    if not 0 < mu <= 1:
        raise ValueError(f"mu must lie in (0, 1], got {mu}")
    space = curve.space
    if mu == 1:
        return curve.with_vertices(curve.vertices.copy())
    V = curve.vertices
    u = space.log_map(p0, V)
    r = np.sqrt(np.maximum(np.einsum("ij,ij->i", u[:, 1:], u[:, 1:]) - u[:, 0] ** 2, 0.0))
    rho = arcth_delta(mu * th_delta(r, space.delta), space.delta)
    scale = np.divide(rho, r, out=np.zeros_like(r), where=r > 0)
    return curve.with_vertices(space.exp_map(p0, scale[:, None] * u), name=f"{curve.name}|mu={mu:g}")


def edge_uniformity(imm: Immersion) -> float:
    ell = edge_lengths(imm)
    return float(ell.max() - ell.min())
