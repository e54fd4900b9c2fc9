import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslercheck import finsler as fs
from finslercheck import functionals as fn
from finslercheck import testfunctions as tf
from finslercheck import verifier as vf
from finslercheck.config import parse_config
from finslercheck.errors import DomainError, PreconditionError
from finslercheck.quadrature import integrate_domain
from finslercheck.reports import reports_to_json


@pytest.fixture(scope="module")
def disk(euclid):
    return fs.DomainSpec.wulff_ball(euclid, 1.0)


@pytest.fixture(scope="module")
def euclid_ctx(default_contexts):
    return next(c for c in default_contexts if c.label == "euclidean")


@pytest.fixture(scope="module")
def ellipse_ctx(default_contexts):
    return next(c for c in default_contexts if c.label == "ellipse")


# ----------------------------------------------------------------- lemma

def test_lemma_linear():
    a, b = vf.check_lemma_1d(tf.linear())
    assert a.details["A"] == pytest.approx(0.75, abs=1e-12)
    assert a.passed and b.passed
    assert a.margin > 0 and b.margin > 0
    assert b.rhs == pytest.approx(math.sqrt(0.75))


def test_lemma_zero():
    for r in vf.check_lemma_1d(tf.zero()):
        assert r.passed and r.lhs == 0 and r.rhs == 0 and r.margin == 0


def test_lemma_truncated_log():
    reps = [vf.check_lemma_1d(tf.truncated_log(d)) for d in (1e-3, 1e-6)]
    for a, b in reps:
        assert a.passed and b.passed
    # the unbounded limit log(1/r) has infinite energy: the sup side ratio
    # lhs/rhs decays as the cut-off moves to 0, like (1 + log(1 + L))^{-1/2}
    ratios = [b.lhs / b.rhs for _, b in reps]
    assert ratios[1] < ratios[0]


# ---------------------------------------------------------- Hardy bounds

def test_link_linear_disk(disk, euclid):
    u = tf.make_radial(tf.linear(), euclid, disk)
    r1, r2 = vf.check_link(u, mu="lebesgue", sigma=1.0)
    assert r1.passed and r2.passed
    assert r1.margin >= -r1.tolerance and r2.margin >= -r2.tolerance


def test_link_zero(disk, euclid):
    u = tf.make_radial(tf.zero(), euclid, disk)
    for r in vf.check_link(u, sigma=1.0):
        assert r.lhs == 0 and r.rhs == 0 and r.passed


def test_link_moser_ellipse(ellipse_ctx):
    u = tf.make_radial(tf.moser(log_k=2.0), ellipse_ctx.pair, ellipse_ctx.domain)
    for r in vf.check_link(u, mu="grad_polar", sigma=ellipse_ctx.bundle.sigma_hi):
        assert r.passed


def test_link_measures_consistent_for_radial(ellipse_ctx):
    u = tf.make_radial(tf.cosine(), ellipse_ctx.pair, ellipse_ctx.domain)
    a = vf.check_link(u, mu="lebesgue", sigma=1.0)
    b = vf.check_link(u, mu="grad_polar", sigma=1.0)
    assert [r.passed for r in a] == [r.passed for r in b]


def test_link_unsupported_measure(disk, euclid):
    u = tf.make_radial(tf.linear(), euclid, disk)
    with pytest.raises(PreconditionError):
        vf.check_link(u, mu="weighted", sigma=1.0)


def test_link2_out_of_hypothesis_when_sigma_unbounded(l4):
    u = tf.make_radial(tf.linear(), l4, fs.DomainSpec.wulff_ball(l4, 1.0))
    r1, r2 = vf.check_link(u, sigma=math.inf)
    assert r1.passed and r2.passed is None and not r2.failed


def test_improved_linear_and_zero(disk, euclid):
    assert vf.check_improved(tf.make_radial(tf.linear(), euclid, disk)).margin >= 0
    z = vf.check_improved(tf.make_radial(tf.zero(), euclid, disk))
    assert z.lhs == 0 and z.rhs == 0 and z.passed


def test_improved_modulated_against_monte_carlo(disk, euclid):
    u = tf.make_modulated(tf.linear(), euclid, disk)
    rep = vf.check_improved(u)
    assert rep.passed

    # independent estimate of the left side by singular QMC over the disk
    def g(x):
        t = np.minimum(euclid.F0(x), 1.0)
        s = -np.log(t)
        return np.abs(u.value(x)) ** 2 / t ** 2 / (1 + s) ** 2 / (1 + np.log1p(s)) ** 2

    mc = integrate_domain(g, disk, budget=1 << 18, seed=2, singular=True)
    assert abs(mc.value - rep.lhs) <= 3 * (mc.error_estimate + rep.error_estimate)
    assert mc.value <= rep.rhs + 3 * mc.error_estimate


# ----------------------------------------------------------- L^q and h_r

def test_q_estimate_linear(euclid_ctx):
    u = tf.make_radial(tf.linear(), euclid_ctx.pair, euclid_ctx.domain)
    r4 = vf.check_q_estimate(u, 4.0, euclid_ctx.bundle)
    r8 = vf.check_q_estimate(u, 8.0, euclid_ctx.bundle)
    assert r4.passed and r8.passed and r4.margin >= 0
    assert r4.details["ratio"] > 0 and r8.details["ratio"] > 0


def test_q_estimate_zero(euclid_ctx):
    u = tf.make_radial(tf.zero(), euclid_ctx.pair, euclid_ctx.domain)
    r = vf.check_q_estimate(u, 4.0, euclid_ctx.bundle)
    assert r.lhs == 0 and r.rhs == 0 and r.passed


def test_q_estimate_rejects_q_equal_n(euclid_ctx):
    u = tf.make_radial(tf.linear(), euclid_ctx.pair, euclid_ctx.domain)
    with pytest.raises(PreconditionError, match="q > n"):
        vf.check_q_estimate(u, 2.0, euclid_ctx.bundle)


def test_hr_bound_attained_on_disk(disk):
    r = vf.check_hr_bound(disk, 4.0, samples=16)
    assert r.lhs == pytest.approx((3 * math.pi) ** 0.75, rel=1e-9)
    assert abs(r.lhs - r.rhs) / r.rhs <= 1e-3
    assert r.passed


def test_hr_bound_other_cases(disk, ellipse):
    assert vf.check_hr_bound(disk, 6.0, samples=16).passed
    assert vf.check_hr_bound(fs.DomainSpec.wulff_ball(ellipse, 1.0), 4.0, samples=16).passed


def test_hr_index():
    assert vf.hr_index(2, 4.0) == pytest.approx(4 / 3)
    assert vf.hr_rhs(2, 4.0, math.pi) == pytest.approx((3 * math.pi) ** 0.75)


# ----------------------------------------------------------------- series

def test_series_ratio_examples():
    assert vf.series_ratio_limit(1 / (2 * math.e)) == pytest.approx(0.5, rel=1e-3)
    assert vf.series_ratio_limit(1.0) == pytest.approx(math.e, rel=1e-3)
    assert vf.series_sum(0.0, 2) == (1.0, True)
    with pytest.raises(DomainError):
        vf.series_ratio_limit(1.0, k_max=100)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.01, 5.0))
def test_series_ratio_is_a_e(a):
    assert vf.series_ratio_limit(a) == pytest.approx(a * math.e, rel=0.02)


def test_series_sum_diverges_beyond_radius():
    assert vf.series_sum(1.01 / math.e, 2)[0] == math.inf
    v, ok = vf.series_sum(0.3, 2)
    assert ok and math.isfinite(v)


def test_series_threshold_report():
    r = vf.series_threshold(1.2, 2.0, 2)
    assert r.passed
    d = r.details
    assert d["c_critical_empirical"] == pytest.approx(1 / (math.e * 1.2 ** 2 * 2.0), rel=1e-3)
    assert d["c_theorem_statement"] == pytest.approx(1.2 ** 2 / 2.0)
    assert d["c_proof_statement"] == pytest.approx(1 / (1.2 ** 2 * 2.0))
    assert any("ratio test" in note for note in r.notes)


def test_exp_integrability_linear(euclid_ctx):
    u = tf.make_radial(tf.linear(), euclid_ctx.pair, euclid_ctx.domain)
    r = vf.check_exp_integrability(u, euclid_ctx.bundle)
    assert r.passed and r.details["series_converged"]
    assert r.lhs >= math.pi  # integrand >= 1


# ---------------------------------------------------------- radial theorem

def _by_id(reports):
    return {r.check_id.split(".")[-1]: r for r in reports}


def test_radial_theorem_linear_disk(euclid_ctx):
    u = tf.make_radial(tf.linear(), euclid_ctx.pair, euclid_ctx.domain)
    reps = _by_id(vf.check_radial_theorem(u, euclid_ctx.bundle))
    gb = reps["converge"].constants["gamma_bar"]
    assert gb == pytest.approx(4 * math.pi, rel=1e-8)
    for key in ("profile_bound", "profile_bound_literal", "converge", "diverge", "threshold"):
        assert reps[key].passed, key


def test_radial_theorem_moser_threshold(euclid_ctx):
    u = tf.make_radial(tf.moser(log_k=4.0), euclid_ctx.pair, euclid_ctx.domain)
    r = _by_id(vf.check_radial_theorem(u, euclid_ctx.bundle))["threshold"]
    assert r.lhs <= 0.01 and r.passed


def test_radial_theorem_zero_out_of_hypothesis(euclid_ctx):
    u = tf.make_radial(tf.zero(), euclid_ctx.pair, euclid_ctx.domain)
    reps = vf.check_radial_theorem(u, euclid_ctx.bundle)
    assert reps and all(r.passed is None and not r.failed for r in reps)


def test_radial_theorem_needs_radial(euclid_ctx):
    u = tf.make_modulated(tf.linear(), euclid_ctx.pair, euclid_ctx.domain)
    with pytest.raises(PreconditionError):
        vf.check_radial_theorem(u, euclid_ctx.bundle)


def test_literal_constant_fails_for_ellipse(ellipse_ctx):
    # n kappa J / (4 omega) undercounts the co-area factor when the Wulff
    # perimeter differs from n omega: the literal bound is violated, the
    # co-area bound holds
    u = tf.make_radial(tf.cosine(), ellipse_ctx.pair, ellipse_ctx.domain)
    reps = _by_id(vf.check_radial_theorem(u, ellipse_ctx.bundle))
    assert reps["profile_bound"].passed
    assert reps["profile_bound_literal"].passed is False
    assert reps["profile_bound_literal"].advisory and not reps["profile_bound_literal"].failed


# --------------------------------------------------------------- campaign

def test_empty_campaign():
    cfg = parse_config("[campaign]\nseed = 1\n")
    assert vf.run_campaign(cfg) == []


def test_default_campaign_all_pass(default_reports):
    assert default_reports
    failing = [r.check_id for r in default_reports if r.failed]
    assert failing == []
    for r in default_reports:
        if r.passed is not None and not r.advisory:
            assert r.margin >= -(r.tolerance + 3 * r.error_estimate)


def test_default_campaign_sorted_and_stamped(default_reports):
    keys = [r.sort_key for r in default_reports]
    assert keys == sorted(keys)
    for r in default_reports:
        assert r.inputs["seed"] == 0
        if r.check_id != "lemma_1d.pointwise" and r.check_id != "lemma_1d.sup":
            assert "kappa_n" in r.constants


def test_campaign_parallel_matches_serial(default_contexts):
    cfg = parse_config("""
[norm ellipse]
kind = ellipsoid
matrix = 4 0 0 1
[profile lin]
kind = linear
[profile mos]
kind = moser
log_k = 3
[check improved]
[check q_estimate]
q = 4
[check radial_theorem]
""")
    ctx = [c for c in default_contexts if c.label == "ellipse"]
    a = vf.run_campaign(cfg, jobs=1, contexts=ctx)
    b = vf.run_campaign(cfg, jobs=4, contexts=ctx)
    assert reports_to_json(a) == reports_to_json(b)


def test_threshold_scan(default_contexts):
    cfg = parse_config("[norm euclidean]\nkind = euclidean\n[profile m]\nkind = moser\nlog_k = 8\n")
    reps = vf.threshold_scan(cfg, contexts=default_contexts[:1])
    assert {r.check_id for r in reps} >= {"radial_theorem.converge", "radial_theorem.threshold"}
    assert not any(r.failed for r in reps)
