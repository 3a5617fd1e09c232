import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvflow.axisym import Trajectory, evolve, latitude_profile, sphere_profile
from curvflow.geometry import (ConvexBodyAxi, GeometryError, boundary_hausdorff,
                               continuous_dependence_check, hausdorff, inclusion_scaling_check,
                               perturbation_ladder, radii_bounds)
from curvflow.speed_algebra import parse_speed

from oracles import brute_center_scan, sphere_radius, support_ellipse

N = 128
TH = np.linspace(0, np.pi / 2, N + 1)


def body_from(values, offset=0.0):
    return ConvexBodyAxi(latitude_profile(values, 2), offset)


def random_body(rng):
    """Ellipsoid of revolution plus a small convex-preserving harmonic, randomly translated."""
    a, b = rng.uniform(0.6, 1.6, 2)
    k = rng.integers(2, 4)
    amp = rng.uniform(-1, 1) * 0.02 * min(a, b) ** 3 / max(a, b) ** 2 / k ** 2
    s = support_ellipse(a, b, TH) + amp * np.cos(2 * k * TH)
    return body_from(s, rng.uniform(-0.3, 0.3))


def full_arrays(body):
    return body.full()


# ---------------------------------------------------------------------------
# bodies


def test_nonconvex_profile_rejected():
    with pytest.raises(GeometryError):
        body_from(1 + 0.5 * np.cos(2 * TH))


def test_cylinder_chart_rejected():
    from curvflow.axisym import cylinder_profile
    with pytest.raises(GeometryError):
        ConvexBodyAxi(cylinder_profile(np.ones(11), 1.0, 2))


# ---------------------------------------------------------------------------
# radii bounds


def test_sphere_bounds():
    r = radii_bounds(ConvexBodyAxi(sphere_profile(1.7, 2, 64)))
    assert r["inradius"] == pytest.approx(1.7, abs=1e-12)
    assert r["circumradius"] == pytest.approx(1.7, abs=1e-12)


def test_oval_bounds_against_center_scan():
    b = body_from(1 + 0.1 * np.cos(2 * TH))
    r = radii_bounds(b)
    lo, hi = brute_center_scan(*full_arrays(b))
    assert r["inradius"] == pytest.approx(lo, abs=1e-6)
    assert r["circumradius"] == pytest.approx(hi, abs=1e-6)
    assert r["inradius"] == pytest.approx(0.9, abs=1e-12)   # equatorial support
    assert r["circumradius"] == pytest.approx(1.1, abs=1e-12)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_random_bounds_against_center_scan(seed):
    b = random_body(np.random.default_rng(seed))
    r = radii_bounds(b)
    lo, hi = brute_center_scan(*full_arrays(b), lo=-2, hi=2, count=40001)
    assert r["inradius"] == pytest.approx(lo, abs=1e-6)
    assert r["circumradius"] == pytest.approx(hi, abs=1e-6)


@given(st.floats(-0.5, 0.5))
def test_bounds_translation_invariant(c):
    b = body_from(support_ellipse(1.2, 0.8, TH))
    r0, r1 = radii_bounds(b), radii_bounds(b.translated(c))
    assert r1["inradius"] == pytest.approx(r0["inradius"], abs=1e-8)
    assert r1["circumradius"] == pytest.approx(r0["circumradius"], abs=1e-8)
    assert r1["in_center"] == pytest.approx(r0["in_center"] - c, abs=1e-6)


def test_ellipse_bounds():
    r = radii_bounds(body_from(support_ellipse(1.3, 0.7, TH)))
    assert r["inradius"] == pytest.approx(0.7, abs=1e-12)
    assert r["circumradius"] == pytest.approx(1.3, abs=1e-12)


@settings(max_examples=20)
@given(st.integers(0, 10_000), st.floats(0.0, 0.2))
def test_inradius_monotone_under_inclusion(seed, grow):
    b = random_body(np.random.default_rng(seed))
    th, s = b.full()
    big = body_from(b.profile.values * (1 + grow) + 0.01, b.center_offset)
    assert radii_bounds(big)["inradius"] >= radii_bounds(b)["inradius"]


# ---------------------------------------------------------------------------
# Hausdorff distance


def test_concentric_spheres():
    assert hausdorff(sphere_profile(1, 2, 32), sphere_profile(2, 2, 32)) == 1.0


def test_identical_bodies():
    b = body_from(support_ellipse(1.2, 0.8, TH))
    assert hausdorff(b, b) == 0.0


@given(st.floats(0.0, 1.0))
def test_dilate_distance(a):
    s = support_ellipse(1.2, 0.8, TH)
    d = hausdorff(latitude_profile(s, 2), latitude_profile((1 + a) * s, 2))
    assert d == pytest.approx(a * s.max(), rel=1e-12, abs=1e-15)


@given(st.floats(-0.5, 0.5))
def test_translation_distance(c):
    b = body_from(support_ellipse(1.2, 0.8, TH))
    assert hausdorff(b, b.translated(c)) == pytest.approx(abs(c), abs=1e-12)


def test_grid_mismatch():
    with pytest.raises(GeometryError):
        hausdorff(sphere_profile(1, 2, 32), sphere_profile(1, 2, 64))


@settings(max_examples=15)
@given(st.integers(0, 10_000))
def test_support_distance_equals_boundary_distance(seed):
    rng = np.random.default_rng(seed)
    grid = np.linspace(0, np.pi / 2, 1025)
    a, b, a2, b2 = rng.uniform(0.6, 1.6, 4)
    p1 = latitude_profile(support_ellipse(a, b, grid), 2)
    p2 = latitude_profile(support_ellipse(a2, b2, grid), 2)
    assert boundary_hausdorff(p1, p2) == pytest.approx(hausdorff(p1, p2), abs=5e-3)


# ---------------------------------------------------------------------------
# scaled inclusions


def test_inclusion_ball_dilate():
    b = ConvexBodyAxi(sphere_profile(1.0, 2, 32))
    d = 0.1
    r = inclusion_scaling_check(b, ConvexBodyAxi(sphere_profile(1 + d, 2, 32)))
    assert r["holds"] and r["K"] == pytest.approx(4.0)
    assert r["outer_margin"] == pytest.approx(3 * d)


def test_inclusion_identity_margins():
    b = body_from(support_ellipse(1.2, 0.8, TH))
    r = inclusion_scaling_check(b, b)
    assert r["hausdorff"] == 0 and r["a"] == 0 and r["L_margin"] == 0
    assert r["holds"]


def test_inclusion_hypotheses():
    b = ConvexBodyAxi(sphere_profile(1.0, 2, 32))
    with pytest.raises(GeometryError):
        inclusion_scaling_check(b, ConvexBodyAxi(sphere_profile(1.5, 2, 32)))  # d = r_-/2
    with pytest.raises(GeometryError):
        inclusion_scaling_check(b, ConvexBodyAxi(sphere_profile(1.1, 2, 32)), d=0.05)


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_inclusion_random_pairs(seed):
    rng = np.random.default_rng(seed)
    b = random_body(rng)
    eps = rng.uniform(0.0, 0.04)
    other = body_from(b.profile.values * (1 + eps * rng.uniform(-1, 1))
                      + eps * 0.2 * np.cos(2 * TH) * rng.uniform(0, 1), b.center_offset)
    r = inclusion_scaling_check(b, other)
    assert r["holds"], r


# ---------------------------------------------------------------------------
# continuous dependence


def test_sphere_pair_distance_exact():
    spec = parse_speed("E(1)", 2, 1.0)
    eps = 0.01
    times = np.linspace(0, 0.3, 7)
    a = evolve(sphere_profile(1.0, 2, 64), spec, 0.3, store_times=times)
    b = evolve(sphere_profile(1 + eps, 2, 64), spec, 0.3, store_times=times)
    r = continuous_dependence_check(a, b, 1.0)
    t = np.array(a.times)
    exact = sphere_radius(1 + eps, 1.0, t) - sphere_radius(1.0, 1.0, t)
    assert r["sup_distance"] == pytest.approx(exact.max(), rel=1e-6)
    assert r["d"] == pytest.approx(eps)


def test_zero_perturbation():
    spec = parse_speed("E(1)", 2, 1.0)
    a = evolve(sphere_profile(1.0, 2, 32), spec, 0.1, n_store=5)
    r = continuous_dependence_check(a, a, 1.0)
    assert r["sup_distance"] == 0 and r["ratio"] == 0


def test_time_grid_mismatch():
    a = Trajectory([0.0, 0.1], [sphere_profile(1, 2, 8)] * 2)
    b = Trajectory([0.0, 0.2], [sphere_profile(1, 2, 8)] * 2)
    with pytest.raises(GeometryError):
        continuous_dependence_check(a, b, 1.0)


def test_sphere_ladder_bounded():
    spec = parse_speed("E(1)", 2, 1.0)
    lad = perturbation_ladder(sphere_profile(1.0, 2, 32), spec, 0.2, n_store=10)
    assert lad["holds"] and lad["max_over_first"] <= 4
    assert [r["j"] for r in lad["rows"]] == list(range(4, 11))
