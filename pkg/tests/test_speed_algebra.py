import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from curvflow.speed_algebra import (SpeedError, SpeedSyntaxError, cone_point, derivatives, dualize,
                                    eval_speed, fhat, is_psd, parse_speed, q_matrix,
                                    restrict_boundary)

from oracles import dual_brute, esym_brute, fd_gradient, fd_hessian, pmean_brute, quot_brute

FAMILIES = [("E(1)", 3), ("E(2)", 3), ("E(3)", 3), ("E(2)", 4), ("quot(2,1)", 2), ("quot(3,2)", 3),
            ("quot(3,1)", 4), ("pmean(-2)", 2), ("pmean(-1)", 3), ("pmean(0.5)", 3),
            ("pmean(3)", 2), ("named(norm_A)", 3), ("named(example1)", 3),
            ("convex(0.3:E(1),0.7:quot(3,2))", 3), ("geo(0.5:E(1),0.5:E(3))", 3),
            ("lin(2:E(1),-1:quot(2,1))", 2)]

rays = st.lists(st.floats(-4.0, 4.0), min_size=4, max_size=4).map(lambda v: 10.0 ** np.array(v))


# ---------------------------------------------------------------------------
# parsing and normalization


def test_quot_normalized_at_identity():
    f = parse_speed("quot(2,1)", 3)
    assert eval_speed(f, np.ones(3)) == pytest.approx(1.0, abs=1e-15)
    x = np.array([0.3, 1.7, 2.2])
    assert eval_speed(f, x) == pytest.approx(quot_brute(x, 2, 1), rel=1e-13)


def test_pmean2_norm_factor_one():
    f = parse_speed("pmean(2)", 2)
    assert f.norm_factor == pytest.approx(1.0, abs=1e-15)
    assert eval_speed(f, [3.0, 4.0]) == pytest.approx(np.sqrt(12.5), rel=1e-14)


def test_norm_a_norm_factor():
    assert parse_speed("named(norm_A)", 3).norm_factor == pytest.approx(np.sqrt(3), rel=1e-15)


@pytest.mark.parametrize("text,pos", [("E(1", 3), ("pmean(x)", 6), ("foo(1)", 0), ("E(1))", 4)])
def test_syntax_errors_carry_position(text, pos):
    with pytest.raises(SpeedSyntaxError) as exc:
        parse_speed(text, 3)
    assert exc.value.pos == pos


@pytest.mark.parametrize("text", ["E(4)", "quot(2,2)", "quot(4,1)", "convex(0.5:E(1),0.6:E(2))",
                                  "geo(-0.5:E(1),1.5:E(2))"])
def test_invalid_ranges_and_weights(text):
    with pytest.raises(SpeedError):
        parse_speed(text, 3)


def test_whitespace_and_scientific_reals():
    a = parse_speed(" convex( 5e-1 : E(1) , 0.5:pmean( -2.0E0 ) ) ", 3)
    b = parse_speed("convex(0.5:E(1),0.5:pmean(-2))", 3)
    x = np.array([0.2, 1.0, 3.0])
    assert eval_speed(a, x) == eval_speed(b, x)


def test_linear_flags_monotonicity_unverified():
    assert parse_speed("lin(2:E(1),-1:quot(2,1))", 2).monotone_verified is False
    assert parse_speed("E(1)", 2).monotone_verified is True


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_alpha_must_be_positive(bad):
    with pytest.raises(SpeedError):
        parse_speed("E(1)", 2, bad)


# ---------------------------------------------------------------------------
# evaluation


def test_e2_at_ones():
    assert eval_speed(parse_speed("E(2)", 4), np.ones(4)) == pytest.approx(1.0, abs=1e-15)


def test_en_vanishes_on_boundary():
    assert eval_speed(parse_speed("E(3)", 3), [0.0, 1.0, 1.0]) == 0.0


@pytest.mark.parametrize("x", [0.0, 0.5, 3.0, 1e3])
def test_quot21_closed_form(x):
    f = parse_speed("quot(2,1)", 3)
    assert eval_speed(f, [x, 1.0, 1.0]) == pytest.approx((2 * x + 1) / (x + 2), rel=1e-12)


def test_quot21_large_argument_limit():
    f = parse_speed("quot(2,1)", 3)
    assert abs(eval_speed(f, [1e6, 1.0, 1.0]) - 2.0) < 1e-5


def test_boundary_limit_of_indeterminate_form():
    # the harmonic mean dual, E(2)/E(1) in two variables, is 0/0 at the origin face
    f = parse_speed("quot(2,1)", 3)
    v = eval_speed(f, [0.0, 0.0, 1.0], method="limit")
    assert v == pytest.approx(0.0, abs=1e-8)
    h = parse_speed("pmean(-1)", 2)
    assert eval_speed(h, [0.0, 2.0]) == pytest.approx(0.0, abs=1e-8)


def test_exterior_point_rejected():
    with pytest.raises(SpeedError):
        eval_speed(parse_speed("E(1)", 2), [-1.0, 1.0])
    assert cone_point([-1.0, 2.0]).location == "exterior"
    assert cone_point([0.0, 2.0]).location == "boundary"
    assert cone_point([1.0, 2.0]).location == "interior"


@pytest.mark.parametrize("k", [1, 2, 3])
def test_esym_matches_subset_sum(k):
    rng = np.random.default_rng(7)
    f = parse_speed(f"E({k})", 4)
    for _ in range(20):
        x = rng.uniform(0.1, 5, 4)
        assert eval_speed(f, x) == pytest.approx(esym_brute(x, k) ** (1 / k), rel=1e-12)


@pytest.mark.parametrize("r", [-2.0, -1.0, 0.5, 3.0])
def test_pmean_matches_definition(r):
    rng = np.random.default_rng(3)
    f = parse_speed(f"pmean({r})", 3)
    for _ in range(20):
        x = rng.uniform(0.1, 5, 3)
        assert eval_speed(f, x) == pytest.approx(pmean_brute(x, r), rel=1e-12)


def test_fhat_is_first_argument_slice():
    f = parse_speed("E(1)", 3)
    np.testing.assert_allclose(fhat(f, [0.0, 1.0, 4.0]), [2 / 3, 1.0, 2.0], rtol=1e-14)


# ---------------------------------------------------------------------------
# derivatives


def test_e1_gradient_and_hessian():
    d = derivatives(parse_speed("E(1)", 4), [0.3, 1.0, 2.0, 7.0])
    np.testing.assert_allclose(d.gradient, 0.25, rtol=1e-14)
    np.testing.assert_allclose(d.hessian, 0.0, atol=1e-14)


def test_e2_euler_at_ones():
    d = derivatives(parse_speed("E(2)", 3), np.ones(3))
    assert d.gradient @ np.ones(3) == pytest.approx(1.0, abs=1e-14)


def test_hminus2_gradient_vs_finite_differences():
    f = parse_speed("pmean(-2)", 2)
    x = np.array([1.0, 2.0])
    g = derivatives(f, x).gradient
    fd = fd_gradient(lambda y: pmean_brute(y, -2), x)
    np.testing.assert_allclose(g, fd, rtol=1e-6)


@pytest.mark.parametrize("text,n", FAMILIES)
def test_hessian_vs_finite_differences(text, n):
    f = parse_speed(text, n)
    x = np.linspace(0.6, 1.9, n)
    H = derivatives(f, x).hessian
    fd = fd_hessian(lambda y: eval_speed(f, y), x)
    np.testing.assert_allclose(H, fd, atol=1e-5 * max(1, np.abs(fd).max()))
    np.testing.assert_allclose(H, H.T, atol=1e-14)


# ---------------------------------------------------------------------------
# duality


def test_harmonic_mean_dual_is_arithmetic_mean():
    d = dualize(parse_speed("quot(2,1)", 2))
    for x, y in [(1.0, 3.0), (0.2, 0.5), (4.0, 4.0)]:
        assert eval_speed(d, [x, y]) == pytest.approx((x + y) / 2, rel=1e-13)


def test_en_self_dual():
    f = parse_speed("E(3)", 3)
    d = dualize(f)
    x = np.array([0.5, 2.0, 7.0])
    assert eval_speed(d, x) == pytest.approx(eval_speed(f, x), rel=1e-13)


@pytest.mark.parametrize("r", [-3.0, -1.0, 0.5, 2.0])
def test_pmean_dual_is_negated_power(r):
    rng = np.random.default_rng(11)
    d = dualize(parse_speed(f"pmean({r})", 3))
    for _ in range(100):
        x = 10 ** rng.uniform(-2, 2, 3)
        assert eval_speed(d, x) == pytest.approx(pmean_brute(x, -r), rel=1e-10)


@pytest.mark.parametrize("text,n", FAMILIES)
def test_dual_matches_reciprocal_definition(text, n):
    f = parse_speed(text, n)
    d = dualize(f)
    x = np.linspace(0.4, 2.5, n)
    assert eval_speed(d, x) == pytest.approx(dual_brute(lambda y: eval_speed(f, y), x), rel=1e-12)


# ---------------------------------------------------------------------------
# boundary restrictions


def test_quot21_face_restriction():
    r = restrict_boundary(parse_speed("quot(2,1)", 3), 2)
    for a, b in [(1.0, 1.0), (0.3, 2.0), (5.0, 0.7)]:
        assert eval_speed(r, [a, b]) == pytest.approx(a * b / (a + b), rel=1e-12)
    assert eval_speed(r, [1.0, 1.0]) == pytest.approx(0.5, rel=1e-14)


def test_quot21_face_restriction_small_s_sampling():
    f = parse_speed("quot(2,1)", 3)
    r = restrict_boundary(f, 2)
    x = np.array([0.4, 1.3])
    assert eval_speed(f, [0.4, 1.3, 1e-9]) == pytest.approx(eval_speed(r, x), rel=1e-8)


@pytest.mark.parametrize("k", [1, 2])
def test_en_restrictions_vanish(k):
    r = restrict_boundary(parse_speed("E(3)", 3), k)
    assert r.identically_zero


def test_example1_boundary_dual_is_euclidean_norm():
    f = parse_speed("named(example1)", 3)
    r = restrict_boundary(f, 2)
    d = dualize(r)
    ratios = [eval_speed(d, [y, z]) / np.hypot(y, z) for y, z in [(1.0, 1.0), (0.2, 3.0), (5.0, 0.5)]]
    # normalization by f(1,1,1) = 3/sqrt(2) scales the dual by the same factor
    np.testing.assert_allclose(ratios, 3 / np.sqrt(2), rtol=1e-10)


def test_restrict_face_dimension_range():
    with pytest.raises(SpeedError):
        restrict_boundary(parse_speed("E(1)", 3), 3)


# ---------------------------------------------------------------------------
# inverse-concavity matrix


def test_q_matrix_e1():
    q = q_matrix(parse_speed("E(1)", 2), [1.0, 2.0])
    np.testing.assert_allclose(q, np.diag([1.0, 0.5]), atol=1e-14)
    assert is_psd(q)[0]


def test_q_matrix_hminus2_has_negative_direction():
    f = parse_speed("pmean(-2)", 2)
    rng = np.random.default_rng(0)
    x = 10 ** rng.uniform(-4, 4, (1000, 2))
    lam = np.linalg.eigvalsh(q_matrix(f, x))[:, 0]
    assert lam.min() < 0


@pytest.mark.parametrize("k,n", [(1, 2), (2, 3), (3, 4)])
def test_q_matrix_quotients_psd(k, n):
    f = parse_speed(f"quot({k + 1},{k})", n)
    rng = np.random.default_rng(1)
    x = 10 ** rng.uniform(-4, 4, (1000, n))
    ok, _ = is_psd(q_matrix(f, x))
    assert ok


def test_q_matrix_interior_only():
    with pytest.raises(SpeedError):
        q_matrix(parse_speed("E(1)", 2), [0.0, 1.0])


# ---------------------------------------------------------------------------
# properties


@pytest.mark.parametrize("text,n", FAMILIES)
@given(v=rays, lam=st.sampled_from([0.5, 2.0, 10.0]))
def test_homogeneity(text, n, v, lam):
    f = parse_speed(text, n)
    x = v[:n]
    fx = eval_speed(f, x)
    assert abs(eval_speed(f, lam * x) - lam * fx) <= 1e-10 * lam * abs(fx)


@pytest.mark.parametrize("text,n", FAMILIES)
@given(v=rays)
def test_euler_identity(text, n, v):
    f = parse_speed(text, n)
    d = derivatives(f, v[:n])
    assert abs(d.gradient @ v[:n] - d.value) <= 1e-8 * abs(d.value)


@pytest.mark.parametrize("text,n", FAMILIES)
@given(v=rays)
def test_dual_involution(text, n, v):
    f = parse_speed(text, n)
    dd = dualize(dualize(f))
    fx = eval_speed(f, v[:n])
    assert abs(eval_speed(dd, v[:n]) - fx) <= 1e-10 * abs(fx)


CONCAVE = [("E(1)", 3), ("E(2)", 3), ("E(3)", 3), ("quot(3,2)", 3), ("pmean(-2)", 2),
           ("pmean(0.5)", 3), ("quot(2,1)", 2)]
INVERSE_CONCAVE = [("E(1)", 3), ("E(2)", 3), ("E(3)", 3), ("quot(3,2)", 3), ("pmean(-1)", 3),
                   ("pmean(3)", 2), ("quot(2,1)", 2)]


@pytest.mark.parametrize("text,n", CONCAVE)
@given(v=rays)
def test_concave_gradient_monotonicity_and_trace(text, n, v):
    x = v[:n]
    g = derivatives(parse_speed(text, n), x).gradient
    scale = np.abs(x).max() * np.abs(g).max()
    for i in range(n):
        for j in range(n):
            assert (g[i] - g[j]) * (x[i] - x[j]) <= 1e-8 * scale
    assert g.sum() >= 1 - 1e-8


@pytest.mark.parametrize("text,n", INVERSE_CONCAVE)
@given(v=rays)
def test_inverse_concave_inequalities(text, n, v):
    x = v[:n]
    d = derivatives(parse_speed(text, n), x)
    g = d.gradient
    assert g @ x ** 2 >= d.value ** 2 - 1e-8 * d.value ** 2
    scale = np.max(g * x ** 2) * np.abs(x).max()
    for i in range(n):
        for j in range(n):
            assert (g[i] * x[i] ** 2 - g[j] * x[j] ** 2) * (x[i] - x[j]) >= -1e-8 * scale


@pytest.mark.parametrize("text,n", FAMILIES)
@given(v=rays, perm=st.permutations(range(4)))
def test_symmetry(text, n, v, perm):
    f = parse_speed(text, n)
    p = [i for i in perm if i < n]
    x = v[:n]
    fx = eval_speed(f, x)
    assert eval_speed(f, x[p]) == pytest.approx(fx, rel=1e-12)
