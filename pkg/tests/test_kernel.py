import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from hadamard_lab.kernel import (
    AmbientSpace, DomainError, Phi_delta, arcsh_delta, arcth_delta, ch_delta, check_frame,
    minkowski, sh_delta, tangent_norm, th_delta, th_over_r,
)

DELTAS = (-1.0, -0.25, -4.0)
deltas = st.sampled_from(DELTAS + (-0.5,))


def random_tangent(space, p, rng, norm=None):
    v = space.project_tangent(p, np.concatenate([[0.0], rng.normal(size=space.dim)]))
    v = v / tangent_norm(v)
    return v if norm is None else norm * v


def random_point(space, rng, spread=1.5):
    o = space.origin()
    return space.exp_map(o, random_tangent(space, o, rng, spread * rng.uniform()))


# ---------------------------------------------------------------- scalar functions

@pytest.mark.parametrize("delta", DELTAS)
def test_identities_on_grid(delta):
    r = np.linspace(0.0, 5.0, 10_000)
    sh, ch, th = sh_delta(r, delta), ch_delta(r, delta), th_delta(r, delta)
    assert np.max(np.abs(ch**2 + delta * sh**2 - 1) / ch**2) <= 1e-12
    assert np.max(np.abs(1 + delta * th**2 - 1 / ch**2)) <= 1e-12
    h = 1e-6
    # ch is even, so the central difference also works at r = 0
    fd = (ch_delta(r + h, delta) - ch_delta(np.abs(r - h), delta)) / (2 * h)
    assert np.max(np.abs(fd - (-delta) * sh) / np.maximum(1, ch)) <= 1e-6


def test_known_values():
    assert sh_delta(0.0, -1.0) == 0.0
    assert arcsh_delta(1.0, -1.0) == pytest.approx(math.log(1 + math.sqrt(2)), abs=1e-12)
    # threshold radius: sqrt(-delta) R = ln(3 + 2 sqrt 2) / 2
    assert 2 * arcsh_delta(1.0, -1.0) == pytest.approx(math.log(3 + 2 * math.sqrt(2)), abs=1e-12)
    for r in (0.3, 1.7):
        for d in (-1.0, -0.25):
            assert ch_delta(r, d) ** 2 + d * sh_delta(r, d) ** 2 == pytest.approx(1.0, abs=1e-12)


@given(r=st.floats(0.0, 8.0), delta=deltas)
def test_inverse_functions(r, delta):
    assert arcsh_delta(sh_delta(r, delta), delta) == pytest.approx(r, abs=1e-10)
    k = math.sqrt(-delta)
    if k * r < 6:  # arcth amplifies rounding by ~exp(2 k r) beyond this
        assert arcth_delta(th_delta(r, delta), delta) == pytest.approx(r, rel=1e-8, abs=1e-10)


@given(r=st.floats(0.0, 30.0), delta=deltas)
def test_phi_derivative_is_th(r, delta):
    h = 1e-5
    lo = max(r - h, 0.0)
    fd = (Phi_delta(r + h, delta) - Phi_delta(lo, delta)) / (r + h - lo)
    assert fd == pytest.approx(th_delta(r + 0.5 * (lo - r + h), delta), abs=1e-8)


def test_th_over_r_limit():
    assert th_over_r(0.0, -1.0) == 1.0
    r = np.array([1e-12, 1e-9, 1e-6, 1e-3])
    assert np.allclose(th_over_r(r, -2.0), np.tanh(np.sqrt(2) * r) / (np.sqrt(2) * r), rtol=1e-14)


def test_domain_errors():
    with pytest.raises(DomainError):
        sh_delta(-0.1, -1.0)
    with pytest.raises(DomainError):
        ch_delta(0.5, 0.0)
    with pytest.raises(DomainError):
        AmbientSpace(1.0, 3)
    with pytest.raises(DomainError):
        arcth_delta(1.5, -1.0)


# ---------------------------------------------------------------- distance, exp, log

@pytest.mark.parametrize("delta", [-1.0, -0.3])
def test_distance_matches_geodesic_ode(delta, rng):
    """Integrate p'' = -delta |p'|^2 p in Minkowski coordinates and compare arclength."""
    space = AmbientSpace(delta, 3)
    p = random_point(space, rng)
    v = random_tangent(space, p, rng, 1.3)
    J = np.diag([-1.0, 1, 1, 1])

    def rhs(t, y):
        x, u = y[:4], y[4:]
        return np.concatenate([u, -delta * (u @ J @ u) * x])

    sol = solve_ivp(rhs, (0, 1), np.concatenate([p, v]), rtol=1e-12, atol=1e-12, dense_output=True)
    q = sol.y[:4, -1]
    ts = np.linspace(0, 1, 2001)
    speed = np.sqrt(np.maximum(np.einsum("it,ij,jt->t", sol.sol(ts)[4:], J, sol.sol(ts)[4:]), 0))
    arclength = np.trapezoid(speed, ts)
    assert np.allclose(q, space.exp_map(p, v), atol=1e-8)
    assert space.distance(p, space.project_point(q)) == pytest.approx(arclength, abs=1e-8)
    assert arclength == pytest.approx(1.3, abs=1e-8)


@pytest.mark.parametrize("delta", DELTAS)
@pytest.mark.parametrize("r,theta", [(0.4, 0.3), (1.0, 1.9), (2.5, 3.0), (0.01, 0.7)])
def test_law_of_cosines(delta, r, theta):
    space = AmbientSpace(delta, 2)
    o = space.origin()
    v = r * space.basis(1)
    w = r * (math.cos(theta) * space.basis(1) + math.sin(theta) * space.basis(2))
    k = math.sqrt(-delta)
    cosh_c = math.cosh(k * r) ** 2 - math.sinh(k * r) ** 2 * math.cos(theta)
    expected = math.acosh(cosh_c) / k
    assert space.distance(space.exp_map(o, v), space.exp_map(o, w)) == pytest.approx(expected, rel=1e-10)


def test_exp_zero_and_distance_zero(rng):
    space = AmbientSpace(-1.0, 3)
    p = random_point(space, rng)
    assert np.array_equal(space.exp_map(p, np.zeros(4)), p) or np.allclose(space.exp_map(p, np.zeros(4)), p, atol=1e-15)
    assert space.distance(p, p) == 0.0
    o = space.origin()
    assert space.distance(o, space.exp_map(o, 0.9 * space.basis(2))) == pytest.approx(0.9, abs=1e-14)


@pytest.mark.parametrize("norm", [1e-3, 1.0, 5.0])
def test_log_inverts_exp(norm, rng):
    space = AmbientSpace(-0.5, 3)
    p = random_point(space, rng)
    v = random_tangent(space, p, rng, norm)
    u = space.log_map(p, space.exp_map(p, v))
    assert tangent_norm(u - v) <= 1e-10 * max(1.0, norm)


@given(seed=st.integers(0, 2**32 - 1), delta=deltas)
def test_exp_log_roundtrip_property(seed, delta):
    rng = np.random.default_rng(seed)
    space = AmbientSpace(delta, 4)
    p, q = random_point(space, rng), random_point(space, rng)
    v = space.log_map(p, q)
    assert abs(minkowski(p, v)) <= 1e-10 * max(1.0, tangent_norm(v)) * np.linalg.norm(p)
    assert tangent_norm(v) == pytest.approx(space.distance(p, q), rel=1e-10, abs=1e-12)
    q2 = space.exp_map(p, v)
    assert space.distance(q, q2) <= 1e-9
    assert space.constraint_error(q2) <= 1e-12


@given(seed=st.integers(0, 2**32 - 1), delta=deltas)
def test_triangle_inequality(seed, delta):
    rng = np.random.default_rng(seed)
    space = AmbientSpace(delta, 3)
    a, b, c = (random_point(space, rng, 3.0) for _ in range(3))
    assert space.distance(a, c) <= space.distance(a, b) + space.distance(b, c) + 1e-12


@pytest.mark.parametrize("c", [0.5, 2.0, 3.7])
def test_curvature_rescaling(c, rng):
    """H(delta) with coordinates p and H(delta/c^2) with coordinates c p are homothetic by c."""
    s1, s2 = AmbientSpace(-1.0, 3), AmbientSpace(-1.0 / c**2, 3)
    for _ in range(10):
        p, q = random_point(s1, rng, 2.0), random_point(s1, rng, 2.0)
        assert s2.distance(c * p, c * q) == pytest.approx(c * s1.distance(p, q), rel=1e-10)


def test_off_hyperboloid_rejected():
    space = AmbientSpace(-1.0, 2)
    p = space.origin()
    q = np.array([0.5, 0.0, 0.0])
    with pytest.raises(DomainError):
        space.distance(p, q)


def test_far_points_are_accepted():
    space = AmbientSpace(-1.0, 2)
    o = space.origin()
    p = space.exp_map(o, 12.0 * space.basis(1))
    q = space.exp_map(o, 12.0 * space.basis(2))
    assert space.constraint_error(p) <= 1e-12
    assert space.distance(p, q) == pytest.approx(
        math.acosh(math.cosh(12) ** 2 - math.sinh(12) ** 2 * math.cos(math.pi / 2)), rel=1e-9)


# ---------------------------------------------------------------- transport and frames

def test_transport_identity_and_geodesic_tangent(rng):
    space = AmbientSpace(-1.0, 3)
    p = random_point(space, rng)
    v = random_tangent(space, p, rng, 0.7)
    assert np.allclose(space.parallel_transport(p, p, v), v, atol=1e-14)
    q = space.exp_map(p, v)
    # the geodesic tangent at q is -log_q(p), rescaled to |v|
    t_q = -space.log_map(q, p)
    assert tangent_norm(space.parallel_transport(p, q, v) - t_q) <= 1e-10


@given(seed=st.integers(0, 2**32 - 1))
def test_transport_isometry_and_reversibility(seed):
    rng = np.random.default_rng(seed)
    space = AmbientSpace(-0.7, 4)
    p, q = random_point(space, rng), random_point(space, rng)
    u, w = random_tangent(space, p, rng, 1.3), random_tangent(space, p, rng, 0.4)
    Pu, Pw = space.parallel_transport(p, q, u), space.parallel_transport(p, q, w)
    assert minkowski(Pu, Pw) == pytest.approx(minkowski(u, w), abs=1e-10)
    assert abs(minkowski(q, Pu)) <= 1e-10 * np.linalg.norm(q)
    back = space.parallel_transport(q, p, Pu)
    assert tangent_norm(back - u) <= 1e-9


def test_frame_and_normal_coordinates(rng):
    space = AmbientSpace(-1.0, 3)
    p0 = random_point(space, rng)
    F = space.frame(p0)
    check_frame(p0, F, space.delta)
    assert np.allclose(space.normal_coordinates(p0, p0, F), 0.0, atol=1e-14)
    x = space.exp_map(p0, 0.8 * F[0])
    assert np.allclose(space.normal_coordinates(p0, x, F), [0.8, 0, 0], atol=1e-12)
    pts = np.array([random_point(space, rng, 3.0) for _ in range(100)])
    nc = space.normal_coordinates(p0, pts, F)
    assert np.allclose(np.linalg.norm(nc, axis=1), space.distance(p0, pts), rtol=1e-10)
    with pytest.raises(DomainError):
        space.normal_coordinates(p0, x, 2.0 * F)
