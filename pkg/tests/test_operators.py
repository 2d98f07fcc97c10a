import math

import numpy as np
import pytest
import scipy.io
from hypothesis import given
from hypothesis import strategies as st

from hadamard_lab import shapes
from hadamard_lab.immersion import measures
from hadamard_lab.kernel import minkowski, tangent_norm
from hadamard_lab.operators import (
    cotan_weights, curve_tangents, dirichlet_energy, discrete_gradient_norms, export_matrix_market,
    laplacian, mean_curvature, mixed_areas, tangent_frames, tangent_split, turning_angles,
)


def test_curve_stiffness_structure(circle_05):
    lap = laplacian(circle_05)
    S = lap.stiffness
    assert abs(S - S.T).max() == 0.0
    assert np.abs(S @ np.ones(S.shape[0])).max() <= 1e-10 * abs(S).max()
    off = S - np.diag(S.diagonal())
    assert off.max() <= 0.0
    assert lap.mass.sum() == pytest.approx(measures(circle_05).total, rel=1e-14)


def test_mesh_stiffness_structure(sphere_07_l3):
    lap = laplacian(sphere_07_l3)
    S = lap.stiffness
    assert abs(S - S.T).max() <= 1e-15 * abs(S).max()
    assert np.abs(S @ np.ones(S.shape[0])).max() <= 1e-10 * abs(S).max()
    assert cotan_weights(sphere_07_l3).shape == (len(sphere_07_l3.triangles), 3)


def test_mixed_areas_partition(sphere_07_l3):
    a = mixed_areas(sphere_07_l3)
    assert np.all(a > 0)
    assert a.sum() == pytest.approx(measures(sphere_07_l3).total, rel=1e-12)


@given(seed=st.integers(0, 2**32 - 1))
def test_stiffness_psd(seed, sphere_07_l3):
    rng = np.random.default_rng(seed)
    f = rng.normal(size=sphere_07_l3.num_vertices)
    assert dirichlet_energy(sphere_07_l3, f) >= -1e-10 * (f @ f)


def test_circulant_spectrum_pattern():
    """Uniform polygon: eigenvalues of (S, M) are (2 - 2 cos(2 pi k / N)) / ell^2."""
    N = 40
    c = shapes.circle(0.5, N, -1.0)
    lap = laplacian(c)
    ell = measures(c).total / N
    S = lap.stiffness.toarray()
    ev = np.sort(np.linalg.eigvalsh(S / lap.mass[0]))
    expected = np.sort((2 - 2 * np.cos(2 * np.pi * np.arange(N) / N)) / ell**2)
    assert np.allclose(ev, expected, rtol=1e-10, atol=1e-10)


def test_constant_field_in_kernel(circle_05, sphere_07_l3):
    for imm in (circle_05, sphere_07_l3):
        assert dirichlet_energy(imm, np.full(imm.num_vertices, 3.2)) == pytest.approx(0.0, abs=1e-9)
        g2, e = discrete_gradient_norms(imm, np.full(imm.num_vertices, 3.2))
        assert np.abs(g2).max() <= 1e-16 and abs(e) <= 1e-9


@pytest.mark.parametrize("delta", [-1.0, -0.25])
@pytest.mark.parametrize("R", [0.25, 0.5, 1.0, 2.0])
def test_circle_curvature_and_willmore(delta, R):
    k = math.sqrt(-delta)
    c = shapes.circle(R, 2048, delta)
    mc = mean_curvature(c)
    coth = k / math.tanh(k * R)
    assert np.allclose(mc.norms, coth, rtol=1e-2)
    sh = math.sinh(k * R) / k
    assert mc.willmore == pytest.approx(2 * math.pi * sh * coth**2, rel=1e-2)


def test_circle_curvature_points_inward(circle_05):
    mc = mean_curvature(circle_05)
    space = circle_05.space
    inward = space.log_map(circle_05.vertices, np.broadcast_to(space.origin(), circle_05.vertices.shape))
    assert np.all(minkowski(mc.H, inward) > 0)
    assert np.abs(minkowski(mc.H, circle_05.vertices)).max() <= 1e-10


def test_great_circle_of_sphere_has_sphere_curvature():
    # a geodesic of the metric sphere, as a curve in H^3, has curvature coth R
    R = 0.8
    c = shapes.circle(R, 1024, -1.0, ambient_dim=3)
    assert np.allclose(mean_curvature(c).norms, 1 / math.tanh(R), rtol=1e-2)


def test_sphere_mean_curvature(sphere_07):
    mc = mean_curvature(sphere_07)
    space = sphere_07.space
    assert np.allclose(mc.norms, 1 / math.tanh(0.7), rtol=2e-2)
    inward = space.log_map(sphere_07.vertices, np.broadcast_to(space.origin(), sphere_07.vertices.shape))
    cosang = minkowski(mc.H, inward) / (mc.norms * tangent_norm(inward))
    assert np.degrees(np.arccos(np.clip(cosang, -1, 1))).max() <= 2.0
    assert mc.residual < 0.05


def test_convex_curve_total_turning():
    for seed in range(5):
        c = shapes.fourier_curve(None, 256, -1.0, seed=seed)
        assert turning_angles(c).sum() >= 2 * math.pi


def test_tangent_split_of_tangent_field(circle_05):
    t_in, t_out = curve_tangents(circle_05)
    split = tangent_split(circle_05, t_out)
    assert split.norm_normal <= 1e-2 * split.norm_field
    assert split.norm_field == pytest.approx(1.0, rel=1e-12)


def test_tangent_split_of_radial_field(circle_05):
    space = circle_05.space
    X = -space.log_map(circle_05.vertices, np.broadcast_to(space.origin(), circle_05.vertices.shape))
    split = tangent_split(circle_05, X)
    assert split.norm_tangential <= 1e-10
    assert split.norm_normal == pytest.approx(0.5, rel=1e-10)
    assert split.norm_field**2 == pytest.approx(split.norm_tangential**2 + split.norm_normal**2, rel=1e-10)


def test_tangent_split_zero_and_shape(sphere_07_l3):
    split = tangent_split(sphere_07_l3, np.zeros_like(sphere_07_l3.vertices))
    assert split.norm_field == split.norm_tangential == split.norm_normal == 0.0
    with pytest.raises(ValueError):
        tangent_split(sphere_07_l3, np.zeros((3, 4)))


def _frame_tilt(s):
    F = tangent_frames(s)
    V = s.vertices
    space = s.space
    radial = space.log_map(V, np.broadcast_to(space.origin(), V.shape))
    assert np.abs(minkowski(F[:, 0], F[:, 1])).max() <= 1e-10
    for a in range(2):
        assert np.abs(minkowski(F[:, a], V)).max() <= 1e-10
    return max(np.abs(minkowski(F[:, a], radial) / tangent_norm(radial)).max() for a in range(2))


def test_mesh_frames_converge_to_sphere_tangent(sphere_07_l3, sphere_07):
    # the tilt at irregular (valence-5) vertices is first order in the edge length
    coarse, fine = _frame_tilt(sphere_07_l3), _frame_tilt(sphere_07)
    assert fine <= 2e-2
    assert fine <= 0.6 * coarse


def test_gradient_of_coordinate_on_sphere(sphere_07):
    """Sum over normal coordinates of f^T S f / Vol stays below n / ch(R)^2 + 3%."""
    space = sphere_07.space
    x = space.normal_coordinates(space.origin(), sphere_07.vertices)
    f = (np.tanh(0.7) / 0.7) * x
    vol = measures(sphere_07).total
    total = sum(dirichlet_energy(sphere_07, f[:, i]) for i in range(3)) / vol
    assert total <= 2 / math.cosh(0.7) ** 2 * 1.03
    g2, e = discrete_gradient_norms(sphere_07, f[:, 0])
    assert e == pytest.approx(dirichlet_energy(sphere_07, f[:, 0]))
    assert np.sum(g2 * measures(sphere_07).w) == pytest.approx(e, rel=0.05)


def test_matrix_market_export(tmp_path, circle_05):
    lap = laplacian(circle_05)
    s_path, m_path = export_matrix_market(lap, tmp_path / "circle")
    S = scipy.io.mmread(s_path)
    M = scipy.io.mmread(m_path)
    assert abs(S.tocsr() - lap.stiffness).max() == 0.0
    assert np.array_equal(M.diagonal(), lap.mass)
