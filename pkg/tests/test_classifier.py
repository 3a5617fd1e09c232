import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvflow.classifier import (CONDITIONS, ClassifierError, check_conditions, classify,
                                 condition_margin, cylinder_persistence, flat_side_dichotomy,
                                 improper_integral, invert_increasing, regularity_class,
                                 ridge_persistence, sample_rays, singularity_flags)
from curvflow.io import sanitize
from curvflow.speed_algebra import dualize, eval_speed, fhat, parse_speed, restrict_boundary


# ---------------------------------------------------------------------------
# conditions


def test_e2_concave_and_inverse_concave():
    c = check_conditions(parse_speed("E(2)", 3))
    assert c.holds("concave") and c.holds("inverse_concave")
    assert c.holds("increasing") and c.holds("homogeneous") and c.holds("normalized")
    assert c.holds("symmetric")


def test_hminus2_inverse_concavity_fails_with_witness():
    c = check_conditions(parse_speed("pmean(-2)", 2))
    e = c["inverse_concave"]
    assert e.verdict == "fails" and e.margin < -1e-8 and e.witness is not None


def test_example1_boundary_inverse_concavity_fails():
    c = check_conditions(parse_speed("named(example1)", 3))
    assert c.fails("boundary_inverse_concave")


@pytest.mark.parametrize("text,n,name", [("pmean(-2)", 2, "inverse_concave"),
                                         ("named(example1)", 3, "boundary_inverse_concave"),
                                         ("named(example1)", 3, "inverse_concave"),
                                         ("pmean(3)", 3, "concave")])
def test_witness_reproduces_margin(text, n, name):
    spec = parse_speed(text, n)
    e = check_conditions(spec)[name]
    assert e.verdict == "fails"
    assert abs(condition_margin(spec, name, e.witness) - e.margin) <= 1e-8


def test_dual_vanishing_on_boundary():
    # harmonic mean: dual is the arithmetic mean, which does not vanish
    assert check_conditions(parse_speed("quot(2,1)", 2)).fails("dual_vanishes_on_boundary")
    # mean curvature: dual is the harmonic mean, which vanishes
    assert check_conditions(parse_speed("E(1)", 3)).holds("dual_vanishes_on_boundary")


def test_identically_zero_restriction_is_inapplicable():
    c = check_conditions(parse_speed("E(3)", 3))
    assert c["boundary_inverse_concave"].verdict == "inapplicable"


def test_holder_conditions_are_assumed():
    c = check_conditions(parse_speed("E(1)", 2))
    assert c["holder_interior"].verdict == "assumed"
    assert c["holder_boundary"].verdict == "assumed"


def test_report_has_all_conditions():
    c = check_conditions(parse_speed("E(1)", 2), count=50)
    assert set(c.to_dict()) == set(CONDITIONS)


@pytest.mark.parametrize("text,n", [("E(1)", 3), ("E(2)", 3), ("quot(3,2)", 3), ("pmean(-2)", 3),
                                    ("pmean(0.5)", 3)])
def test_concavity_implies_boundary_inverse_concavity(text, n):
    c = check_conditions(parse_speed(text, n))
    assert c.holds("concave")
    assert not c.fails("boundary_inverse_concave")
    assert singularity_flags(parse_speed(text, n), c)["convexity_loss"]["flag"] is False


def test_sample_rays_are_deterministic_and_scale_free():
    a = sample_rays(3, 100, 5)
    np.testing.assert_array_equal(a, sample_rays(3, 100, 5))
    assert np.allclose(a.max(axis=1), 1.0)
    assert a.min() >= 1e-4 * (1 - 1e-12)


# ---------------------------------------------------------------------------
# flat sides


def test_mean_curvature_flat_sides_move():
    assert flat_side_dichotomy(parse_speed("E(1)", 2, 1.0))["verdict"] == "moves"


@pytest.mark.parametrize("n", [2, 3])
def test_harmonic_mean_flat_sides_persist(n):
    assert flat_side_dichotomy(parse_speed(f"quot({n},{n - 1})", n, 1.0))["verdict"] == "persists"


@pytest.mark.parametrize("text", ["E(1)", "quot(2,1)", "named(norm_A)"])
def test_alpha_two_persists_alpha_half_moves(text):
    assert flat_side_dichotomy(parse_speed(text, 2, 2.0))["verdict"] == "persists"
    assert flat_side_dichotomy(parse_speed(text, 2, 0.5))["verdict"] == "moves"


# ---------------------------------------------------------------------------
# cylinders


@pytest.mark.parametrize("n", [2, 3])
def test_gauss_curvature_threshold(n):
    lo = cylinder_persistence(parse_speed(f"E({n})", n, n - 0.25), 1)
    hi = cylinder_persistence(parse_speed(f"E({n})", n, n + 0.25), 1)
    assert lo["verdict"] == "vanishes" and hi["verdict"] == "persists"


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
def test_norm_a_cylinders_persist(alpha):
    assert cylinder_persistence(parse_speed("named(norm_A)", 2, alpha), 1)["verdict"] == "persists"


@pytest.mark.parametrize("m,n,k,alpha,expected", [
    (2, 3, 2, 1.5, "vanishes"), (2, 3, 2, 2.5, "persists"),   # threshold m/(m+k-n) = 2
    (3, 3, 2, 1.25, "vanishes"), (3, 3, 2, 1.75, "persists"),  # threshold 3/2
    (3, 4, 3, 1.25, "vanishes"), (3, 4, 3, 1.75, "persists"),  # threshold 3/2
    (2, 3, 1, 4.0, "vanishes"),                                # m + k = n
    (1, 3, 2, 3.0, "vanishes"),                                # mean curvature
])
def test_elementary_symmetric_k_cylinders(m, n, k, alpha, expected):
    assert cylinder_persistence(parse_speed(f"E({m})", n, alpha), k)["verdict"] == expected


def test_gauss_curvature_integral_value():
    # K^{a/2}, n = 2: g(x) = x^{a/2} so the integral is int_0^1 z^{-2/a} dz = a / (a - 2)
    r = cylinder_persistence(parse_speed("E(2)", 2, 3.0), 1)
    assert r["integral"] == pytest.approx(3.0, rel=1e-6)


def test_norm_a_integral_closed_form():
    # normalized |A| in n = 2, alpha = 1: int_0^1 dz / g^{-1}(z) = arccosh(1 + sqrt 2) / sqrt 2
    r = cylinder_persistence(parse_speed("named(norm_A)", 2, 1.0), 1)
    assert r["integral"] == pytest.approx(np.arccosh(1 + np.sqrt(2)) / np.sqrt(2), rel=1e-8)


def test_flat_dimension_range():
    with pytest.raises(ClassifierError):
        cylinder_persistence(parse_speed("E(1)", 2), 2)


# ---------------------------------------------------------------------------
# ridges


@pytest.mark.parametrize("r,n", [(-2.0, 2), (-3.0, 3), (-1.5, 2)])
def test_power_means_below_minus_one_keep_ridges(r, n):
    assert ridge_persistence(parse_speed(f"pmean({r})", n, 1.0))["verdict"] == "persists"


def test_mean_curvature_ridge_not_applicable():
    assert ridge_persistence(parse_speed("E(1)", 2, 1.0))["verdict"] == "n/a"


def test_ridge_needs_alpha_one():
    assert ridge_persistence(parse_speed("pmean(-2)", 2, 2.0))["verdict"] == "n/a"


def test_hminus2_ridge_integral_by_direct_quadrature():
    # g(x) = 1/f0 - 1/fhat_*(x) with fhat_*(x) = sqrt((x^2 + 1)/2): g ~ x^2 / (2 f0) near 0
    spec = parse_speed("pmean(-2)", 2, 1.0)
    r = ridge_persistence(spec)
    f0 = np.sqrt(0.5)

    def ginv(z):
        # 1/f0 - z = sqrt(2/(x^2+1))
        return np.sqrt(2.0 / (1 / f0 - z) ** 2 - 1.0)
    from scipy import integrate
    ref = integrate.quad(lambda z: 1.0 / ginv(z), 0.0, 1.0, limit=200)[0]
    assert r["integral"] == pytest.approx(ref, rel=1e-7)


# ---------------------------------------------------------------------------
# singularities


def test_harmonic_mean_half_power_loses_smoothness():
    s = singularity_flags(parse_speed("quot(2,1)", 2, 0.5))
    assert s["smoothness_loss"]["flag"] is True
    cert = s["smoothness_loss"]["certificate"]
    # f_*(0, 1) = 1/2, psi = -(1/2)^(-1/2)
    assert cert["psi_flat"] == pytest.approx(-np.sqrt(2), rel=1e-10)


def test_example1_convexity_loss_with_witness():
    spec = parse_speed("named(example1)", 3, 1.0)
    s = singularity_flags(spec)
    conv = s["convexity_loss"]
    assert conv["flag"] is True
    w = conv["certificate"]
    assert w["delta"] > 0 and w["rate"] < 0
    r = restrict_boundary(spec, 2)
    from curvflow.speed_algebra import q_matrix
    a, b = np.array(w["a"]), np.array(w["b"])
    assert b @ q_matrix(r, a) @ b == pytest.approx(-w["delta"], rel=1e-6)


def test_concave_speed_without_flags():
    s = singularity_flags(parse_speed("E(2)", 3, 1.0))
    assert not any(v["flag"] for v in s.values())


# ---------------------------------------------------------------------------
# regularity


def test_elementary_symmetric_fast_diffusion():
    reg = regularity_class(parse_speed("E(2)", 3, 1.0))
    assert reg["smoothing_fast_diffusion"]["applies"] is True


def test_gauss_curvature_surface_integral():
    reg = regularity_class(parse_speed("E(2)", 2, 1.0))
    assert reg["smoothing_surfaces"]["applies"] is True
    # f_*(1, x) = sqrt(x): int_0^1 x^{-1/2} dx = 2
    assert reg["smoothing_surfaces"]["integral"] == pytest.approx(2.0, rel=1e-6)


def test_geometric_mean_family_dual_fast_diffusion():
    spec = parse_speed("geo(0.5:quot(1,0),0.5:quot(3,2))", 3, 1.0)
    reg = regularity_class(spec)
    assert reg["smoothing_fast_diffusion_dual"]["applies"] is True


# ---------------------------------------------------------------------------
# integral helpers


@given(st.floats(0.05, 0.95))
def test_improper_integral_power_law(p):
    r = improper_integral(lambda z: z ** -p)
    assert r["verdict"] == "finite"
    assert r["value"] == pytest.approx(1 / (1 - p), rel=1e-6)


@given(st.floats(1.0, 2.0))
def test_improper_integral_divergent(p):
    assert improper_integral(lambda z: z ** -p)["verdict"] == "infinite"


@given(st.floats(0.01, 50.0))
def test_invert_increasing_roundtrip(z):
    x = invert_increasing(lambda x: x ** 3 + x, np.array([z]))[0]
    assert x ** 3 + x == pytest.approx(z, rel=1e-10)


def test_invert_increasing_edges():
    g = lambda x: np.minimum(x, 1.0) + 0.5  # noqa: E731
    out = invert_increasing(g, np.array([0.2, 2.0]))
    assert out[0] == 0.0 and np.isinf(out[1])


# ---------------------------------------------------------------------------
# full report


def test_classify_report_shape_and_determinism():
    spec = parse_speed("E(3)", 3, 4.0)
    a = classify(spec, count=200, seed=3)
    b = classify(spec, count=200, seed=3)
    assert list(a) == ["spec", "n", "alpha", "seed", "monotone_verified", "conditions",
                       "predictions", "certificates"]
    assert json.dumps(sanitize(a)) == json.dumps(sanitize(b))
    assert a["predictions"]["cylinder"]["1"]["verdict"] == "persists"


def test_classify_cli_examples():
    assert classify(parse_speed("pmean(-2)", 3, 1.0), count=200)["predictions"]["ridge"]["verdict"] == "persists"
    e1 = classify(parse_speed("E(1)", 2, 1.0), count=200)
    assert e1["predictions"]["flat_side"]["verdict"] == "moves"


def test_linear_spec_monotonicity_cleared():
    spec = parse_speed("lin(2:E(1),-1:quot(2,1))", 2, 1.0)
    rep = classify(spec, count=200)
    assert rep["monotone_verified"] is (rep["conditions"]["increasing"]["verdict"] == "holds-on-samples")


@pytest.mark.parametrize("text,n", [("E(1)", 2), ("quot(3,2)", 3), ("pmean(-1)", 3), ("E(2)", 3)])
def test_inverse_concave_families_hold(text, n):
    assert check_conditions(parse_speed(text, n)).holds("inverse_concave")


def test_norm_a_dual_cross_check():
    # |A| normalized: fhat(x) = sqrt((x^2 + 1) / 2), so fhat_*(0) = 1 / fhat(inf)... is 0
    spec = parse_speed("named(norm_A)", 2)
    np.testing.assert_allclose(fhat(spec, [0.0, 1.0]), [np.sqrt(0.5), 1.0], rtol=1e-14)
    assert eval_speed(dualize(spec), [0.0, 1.0]) == pytest.approx(0.0, abs=1e-8)
