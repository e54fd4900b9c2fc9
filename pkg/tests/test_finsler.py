import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from finslercheck import finsler as fs
from finslercheck.errors import DomainError, IdentityFailure

finite = st.floats(min_value=-10, max_value=10, allow_nan=False)
vec2 = st.tuples(finite, finite).filter(lambda v: math.hypot(*v) > 1e-3)


# ---------------------------------------------------------------- polar_eval

def test_polar_euclidean(euclid):
    assert fs.polar_eval(euclid, np.array([3.0, 4.0])) == pytest.approx(5.0, rel=1e-15)


def test_polar_p4(l4):
    assert fs.polar_eval(l4, np.array([1.0, 1.0])) == pytest.approx(2 ** 0.75, rel=1e-14)
    assert fs.polar_eval(l4, np.array([1.0, 1.0])) == pytest.approx(1.68179, abs=1e-5)


def test_polar_ellipse(ellipse):
    assert fs.polar_eval(ellipse, np.array([2.0, 0.0])) == pytest.approx(1.0, rel=1e-15)


def test_polar_custom_ellipse_matches_closed_form():
    custom = fs.make_pair(fs.custom_from(fs.EllipsoidNorm(np.diag([4.0, 1.0]))))
    assert custom.provenance == "numeric"
    assert fs.polar_eval(custom, np.array([1.0, 1.0])) == pytest.approx(math.sqrt(1.25),
                                                                       rel=1e-8)


def test_polar_origin(euclid):
    assert fs.polar_eval(euclid, np.zeros(2)) == 0.0


def test_gradient_rejected_at_origin(euclid):
    with pytest.raises(DomainError):
        euclid.grad_F0(np.zeros(2))


# ------------------------------------------------------------- invariants

@settings(max_examples=200, deadline=None)
@given(vec2, vec2)
def test_cauchy_schwarz(x, xi):
    for pair in _PAIRS:
        x_, xi_ = np.array(x), np.array(xi)
        assert abs(xi_ @ x_) <= pair.F(xi_) * pair.F0(x_) * (1 + 1e-10)


@settings(max_examples=100, deadline=None)
@given(vec2, st.floats(min_value=1e-3, max_value=1e3))
def test_polar_homogeneity(x, t):
    for pair in _PAIRS:
        x_ = np.array(x)
        assert pair.F0(t * x_) == pytest.approx(t * pair.F0(x_), rel=1e-10)


def test_bipolar_recovers_primal():
    rng = np.random.default_rng(3)
    xi = rng.standard_normal((64, 2))
    for pair in _PAIRS:
        bipolar = fs.NumericPolarNorm(pair.polar)
        got = bipolar.value(xi)
        want = pair.F(xi)
        assert np.max(np.abs(got / want - 1)) <= max(pair.duality_residual, 1e-8)


_PAIRS = [fs.make_pair(fs.EuclideanNorm(2)), fs.make_pair(fs.EllipsoidNorm(np.diag([4.0, 1.0]))),
          fs.make_pair(fs.PNorm(4.0, 2)), fs.make_pair(fs.PNorm(4.0 / 3.0, 2))]


def test_pnorm_is_holder_dual():
    assert fs.PNorm(4.0, 2).closed_polar().p == pytest.approx(4.0 / 3.0)
    with pytest.raises(DomainError):
        fs.PNorm(1.0, 2)


def test_strong_convexity_probe():
    for norm in (fs.EuclideanNorm(2), fs.EllipsoidNorm(np.diag([4.0, 1.0])), fs.PNorm(4.0, 2)):
        assert fs.strong_convexity_probe(norm) > 0


# ---------------------------------------------------------- wulff geometry

def test_wulff_volume_examples(euclid, ellipse):
    assert fs.wulff_volume(euclid).value == pytest.approx(math.pi, rel=1e-14)
    assert fs.wulff_volume(ellipse).value == pytest.approx(2 * math.pi, rel=1e-14)


def _mc_area(pair, m=400_000, seed=11):
    # independent oracle: hit-or-miss in a box bounding the Wulff ball
    rng = np.random.default_rng(seed)
    b = max(pair.F(np.eye(2)))
    x = rng.uniform(-b, b, (m, 2))
    hits = pair.F0(x) < 1
    p = hits.mean()
    return 4 * b * b * p, 4 * b * b * math.sqrt(p * (1 - p) / m)


def test_wulff_volume_closed_form_l4_3(l43):
    # F = l^{4/3} has Wulff ball {l^4 < 1}: 4 Gamma(5/4)^2 / Gamma(3/2)
    want = 4 * special.gamma(1.25) ** 2 / special.gamma(1.5)
    assert want == pytest.approx(3.7081, abs=1e-4)
    assert fs.wulff_volume(l43).value == pytest.approx(want, rel=1e-13)
    mc, err = _mc_area(l43)
    assert abs(mc - want) < 4 * err


def test_wulff_volume_numeric_matches_mc():
    pair = fs.make_pair(fs.custom_from(fs.PNorm(4.0, 2)))
    res = fs.wulff_volume(pair)
    want = 4 * special.gamma(1.75) ** 2 / special.gamma(2.5)
    assert res.value == pytest.approx(want, rel=1e-8)
    mc, err = _mc_area(pair, 20_000)
    assert abs(mc - res.value) < 4 * err


def test_wulff_perimeter(euclid, ellipse):
    assert fs.wulff_perimeter(euclid).value == pytest.approx(2 * math.pi, rel=1e-14)
    # ellipse with semi-axes 2, 1: 8 E(3/4)
    assert fs.wulff_perimeter(ellipse).value == pytest.approx(8 * special.ellipe(0.75), rel=1e-12)


# ---------------------------------------------------- equivalence constants

def test_equivalence_euclidean(euclid):
    eq = fs.equivalence_constants(euclid)
    for v in (eq.alpha, eq.beta, eq.alpha_polar, eq.beta_polar, eq.beta_tilde):
        assert v == pytest.approx(1.0, abs=1e-12)


def test_equivalence_ellipse(ellipse):
    eq = fs.equivalence_constants(ellipse)
    assert (eq.alpha, eq.beta, eq.alpha_polar, eq.beta_polar) == pytest.approx(
        (1.0, 2.0, 0.5, 1.0), abs=1e-9)


def test_equivalence_l4_3_stable(l43):
    a = fs.equivalence_constants(l43, samples=10_000)
    b = fs.equivalence_constants(l43, samples=20_000)
    assert a.alpha == pytest.approx(1.0, abs=1e-9)
    assert a.beta == pytest.approx(2 ** 0.25, abs=1e-9)
    for k in ("alpha_polar", "beta_tilde"):
        assert getattr(a, k) == pytest.approx(getattr(b, k), abs=1e-6)


def test_equivalence_three_dimensions():
    pair = fs.make_pair(fs.EllipsoidNorm(np.diag([9.0, 4.0, 1.0])))
    eq = fs.equivalence_constants(pair, samples=4000)
    assert (eq.alpha, eq.beta) == pytest.approx((1.0, 3.0), rel=1e-6)
    assert (eq.alpha_polar, eq.beta_polar) == pytest.approx((1 / 3, 1.0), rel=1e-6)


# --------------------------------------------------------------- identities

def test_identities_euclidean_analytic(euclid):
    res = fs.identity_residuals(euclid, samples=1000)
    assert res.method == "analytic"
    assert res.max_residual() <= 1e-8
    assert res.cauchy_schwarz_slack >= -1e-10


def test_identities_ellipse(ellipse):
    rep = fs.check_identities(ellipse, samples=1000, fd_step=1e-5)
    assert rep.passed and rep.lhs <= 1e-6


def test_identities_custom_euclidean_fd():
    pair = fs.make_pair(fs.custom_from(fs.EuclideanNorm(2)))
    res = fs.identity_residuals(pair, samples=1000, fd_step=1e-5)
    assert res.method == "fd"
    assert res.max_residual() <= 1e-5


def test_identities_fd_second_order():
    pair = fs.make_pair(fs.EuclideanNorm(2))
    a = fs.identity_residuals(pair, samples=200, fd_step=1e-2, method="fd")
    b = fs.identity_residuals(pair, samples=200, fd_step=5e-3, method="fd")
    for name in fs.IDENTITY_NAMES:
        ra, rb = a.residuals[name], b.residuals[name]
        if ra > 1e-9:  # above the rounding floor the error must shrink like h^2
            assert ra / rb == pytest.approx(4.0, rel=0.2), name


def test_invalid_custom_norm_named_failure():
    bad = fs.CustomNorm(lambda x: np.linalg.norm(x, axis=-1) ** 1.1, 2, label="bad")
    pair = fs.make_pair(bad)
    rep = fs.check_identities(pair, samples=100)
    assert rep.passed is False
    with pytest.raises(IdentityFailure) as info:
        fs.check_identities(pair, samples=100, strict=True)
    assert info.value.identity in fs.IDENTITY_NAMES


# ----------------------------------------------------------------- domains

def test_domain_wulff_ball(ellipse):
    d = fs.DomainSpec.wulff_ball(ellipse, 2.0)
    assert d.contains(np.array([[3.9, 0.0], [0.0, 2.1]])).tolist() == [True, False]
    assert d.volume() == pytest.approx(8 * math.pi)
    ex = d.ray_exit(np.zeros(2), np.array([[1.0, 0.0], [0.0, 1.0]]))
    assert ex == pytest.approx([4.0, 2.0], rel=1e-9)


def test_domain_custom_square(euclid):
    d = fs.DomainSpec.custom(euclid, lambda x: np.all(np.abs(x) < 1, axis=-1),
                             ([-1.0, -1.0], [1.0, 1.0]))
    assert d.contains(np.array([[0.5, 0.5]]))[0]
    # R_Omega is the sup of F° over the domain: the corner distance
    assert d.inner_radius == pytest.approx(math.sqrt(2), rel=1e-6)
