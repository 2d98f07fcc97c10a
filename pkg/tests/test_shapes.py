import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hadamard_lab import shapes
from hadamard_lab.immersion import ValidationError, edge_lengths, measures
from hadamard_lab.kernel import AmbientSpace


def test_circle_is_regular_and_centred():
    c = shapes.circle(0.5, 256, -1.0)
    ell = edge_lengths(c)
    assert ell.max() - ell.min() <= 1e-12
    r = c.space.distance(c.space.origin(), c.vertices)
    assert np.allclose(r, 0.5, atol=1e-12)


def test_circle_in_higher_ambient_and_offset_center():
    space = AmbientSpace(-0.5, 3)
    center = space.exp_map(space.origin(), 0.7 * space.basis(3))
    c = shapes.circle(0.4, 64, -0.5, ambient_dim=3, center=center)
    assert np.allclose(space.distance(center, c.vertices), 0.4, atol=1e-12)


@pytest.mark.parametrize("level", [0, 1, 2, 3, 4])
def test_icosphere_counts(level):
    dirs, tris = shapes.icosphere(level)
    assert len(dirs) == 10 * 4**level + 2
    assert len(tris) == 20 * 4**level
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)


def test_geodesic_sphere():
    s = shapes.geodesic_sphere(0.7, 3, -1.0)
    assert s.euler_characteristic() == 2
    assert np.allclose(s.space.distance(s.space.origin(), s.vertices), 0.7, atol=1e-12)


def test_sphere_area_converges():
    R = 0.7
    exact = 4 * math.pi * math.sinh(R) ** 2
    errs = [exact - measures(shapes.geodesic_sphere(R, lv, -1.0)).total for lv in (2, 3, 4)]
    assert errs[0] > errs[1] > errs[2] > 0
    assert 3.5 <= errs[1] / errs[2] <= 4.5


def test_clifford_torus_lattice():
    R, n = 0.8, 64
    t = shapes.clifford_torus(R, n, -1.0)
    assert t.euler_characteristic() == 0
    assert np.allclose(t.space.distance(t.space.origin(), t.vertices), R, atol=1e-12)
    # grid edges approximate the flat lattice of side 2 pi a / sqrt 2 with a = sinh R
    side = 2 * math.pi * math.sinh(R) / math.sqrt(2) / n
    e = t.edges()
    ell = t.space.distance(t.vertices[e[:, 0]], t.vertices[e[:, 1]])
    axis = ell[ell < 1.2 * side]
    assert np.allclose(axis, side, rtol=1e-2)


def test_racetrack_geometry():
    d, L, N = 0.2, 18.0, 4096
    rt = shapes.racetrack(d, L, N, -1.0)
    ell = edge_lengths(rt)
    total = shapes.racetrack_length(d, L, -1.0)
    assert total == pytest.approx(2 * L * math.cosh(d) + 2 * math.pi * math.sinh(d), rel=1e-14)
    assert measures(rt).total == pytest.approx(total, rel=1e-5)
    # closure: the last edge is as long as the others
    assert ell[-1] == pytest.approx(np.median(ell), rel=1e-3)
    assert ell.max() / ell.min() < 1.01


def test_racetrack_is_symmetric():
    rt = shapes.racetrack(0.3, 2.0, 256, -1.0)
    o = rt.space.origin()
    r = rt.space.distance(o, rt.vertices)
    # the segment is centred on the origin, so the radius profile is symmetric under v -> -v
    flipped = rt.vertices.copy()
    flipped[:, 1:] *= -1
    d = rt.space.distance(flipped[:, None, :], rt.vertices[None, :, :]).min(axis=1)
    assert d.max() < 1e-9
    assert r.max() == pytest.approx(1.0 + 0.3, rel=1e-2)


@pytest.mark.parametrize("bad", [dict(d=-0.1, L=1, N=64), dict(d=0.2, L=0, N=64), dict(d=0.2, L=1, N=4)])
def test_racetrack_rejects_bad_params(bad):
    with pytest.raises(ValueError):
        shapes.racetrack(bad["d"], bad["L"], bad["N"], -1.0)


def test_generators_reject_bad_params():
    with pytest.raises(ValueError):
        shapes.circle(-1.0, 64)
    with pytest.raises(ValueError):
        shapes.circle(0.5, 7)
    with pytest.raises(ValueError):
        shapes.geodesic_sphere(0.5, 8)


def test_fourier_seed_reproducible():
    a = shapes.fourier_curve(None, 128, -1.0, seed=7)
    b = shapes.fourier_curve(None, 128, -1.0, seed=7)
    c = shapes.fourier_curve(None, 128, -1.0, seed=8)
    assert np.array_equal(a.vertices, b.vertices)
    assert not np.array_equal(a.vertices, c.vertices)


def test_fourier_constant_profile_is_circle():
    coeffs = shapes.FourierCoeffs(0.6, np.zeros(3), np.zeros(3))
    f = shapes.fourier_curve(coeffs, 64, -1.0)
    c = shapes.circle(0.6, 64, -1.0)
    assert np.allclose(f.vertices, c.vertices, atol=1e-14)


def test_fourier_negative_profile_rejected():
    coeffs = shapes.FourierCoeffs(0.2, np.array([0.5]), np.zeros(1))
    with pytest.raises(ValidationError):
        shapes.fourier_curve(coeffs, 64, -1.0)


@given(seed=st.integers(0, 10_000), target=st.floats(0.5, 2 * math.pi))
def test_fourier_length_rescaling(seed, target):
    c = shapes.fourier_curve_with_length(target, 128, -1.0, seed)
    assert measures(c).total == pytest.approx(target, rel=1e-9)


def test_lifted_fourier_curve_leaves_plane():
    c = shapes.fourier_curve(None, 128, -1.0, seed=3, ambient_dim=3)
    assert np.abs(c.vertices[:, 3]).max() > 1e-3


def test_perturbed_sphere():
    s = shapes.perturbed_sphere(0.7, 3, -1.0, amplitude=0.2, seed=4)
    assert s.euler_characteristic() == 2
    r = s.space.distance(s.space.origin(), s.vertices)
    assert r.min() >= 0.7 * math.exp(-0.2) - 1e-12
    assert r.max() <= 0.7 * math.exp(0.2) + 1e-12
    assert r.max() - r.min() > 0.05


def test_radial_shrink_scales_th():
    c = shapes.fourier_curve(None, 128, -1.0, seed=2)
    o = c.space.origin()
    r = c.space.distance(o, c.vertices)
    for mu in (1.0, 0.7, 0.2):
        s = shapes.radial_shrink(c, o, mu)
        assert np.allclose(np.tanh(c.space.distance(o, s.vertices)), mu * np.tanh(r), rtol=1e-12)
    with pytest.raises(ValueError):
        shapes.radial_shrink(c, o, 1.5)
    with pytest.raises(ValueError):
        shapes.radial_shrink(c, o, 0.0)
