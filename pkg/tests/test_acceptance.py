"""Acceptance criteria: one pass/fail line per criterion in the pytest summary.

Run directly with ``python3 tests/test_acceptance.py`` to see only these lines.
"""

import contextlib
import math

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from finslercheck import finsler as fs
from finslercheck import functionals as fn
from finslercheck import testfunctions as tf
from finslercheck import verifier as vf
from finslercheck.config import default_config
from finslercheck.quadrature import integrate_domain, integrate_wulff_radial
from finslercheck.reports import reports_to_json


@contextlib.contextmanager
def criterion(number, text):
    status = "FAIL"
    try:
        yield
        status = "PASS"
    finally:
        ACCEPTANCE_LINES[f"{number:02d}"] = f"[{status}] criterion {number:2d}: {text}"


def _ctx(contexts, label):
    return next(c for c in contexts if c.label == label)


def test_criterion_01_gamma_bar(default_contexts):
    with criterion(1, "euclidean gamma_bar = 4 pi and located threshold within 1%"):
        gb = fn.gamma_bar(2, math.pi, 1.0)
        assert abs(gb - 4 * math.pi) <= 1e-12 * 4 * math.pi
        ctx = _ctx(default_contexts, "euclidean")
        for prof in (tf.linear(), tf.cosine(), tf.moser(log_k=2.0)):
            u = tf.make_radial(prof, ctx.pair, ctx.domain)
            thr = next(r for r in vf.check_radial_theorem(u, ctx.bundle)
                       if r.check_id == "radial_theorem.threshold")
            assert abs(thr.details["threshold"] / (4 * math.pi) - 1) <= 0.01, prof.name
            assert thr.passed


def test_criterion_02_identities():
    with criterion(2, "Finsler identities: analytic <= 1e-6, finite differences <= 1e-4"):
        base = [fs.EuclideanNorm(2), fs.EllipsoidNorm(np.diag([4.0, 1.0])), fs.PNorm(4.0, 2)]
        for norm in base:
            res = fs.identity_residuals(fs.make_pair(norm), samples=1000)
            assert res.method == "analytic"
            assert res.max_residual() <= 1e-6, (norm.describe(), res.residuals)
            assert res.cauchy_schwarz_slack >= -1e-10
            res = fs.identity_residuals(fs.make_pair(fs.custom_from(norm)), samples=1000)
            assert res.method == "fd"
            assert res.max_residual() <= 1e-4, (norm.describe(), res.residuals)
            assert res.cauchy_schwarz_slack >= -1e-10


def test_criterion_03_numeric_polar():
    with criterion(3, "numeric polar matches closed forms to 1e-8 on 1000 directions"):
        rng = np.random.default_rng(0)
        dirs = rng.standard_normal((1000, 2))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        for primal in (fs.PNorm(4.0, 2), fs.PNorm(4.0 / 3.0, 2),
                       fs.EllipsoidNorm(np.diag([4.0, 1.0]))):
            got = fs.NumericPolarNorm(primal).value(dirs)
            want = primal.closed_polar().value(dirs)
            assert np.max(np.abs(got / want - 1)) <= 1e-8, primal.describe()


def _random_profiles(count, seed):
    """Smooth radial profiles c0 + c1 t + c2 t^2 + c3 cos(k t) with random coefficients."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c = rng.uniform(-1.0, 1.0, 4)
        c[0] += 2.0
        k = rng.uniform(1.0, 6.0)
        out.append(lambda t, c=c, k=k: c[0] + c[1] * t + c[2] * t ** 2 + c[3] * np.cos(k * t))
    return out


def test_criterion_04_co_area(euclid, ellipse, l4):
    with criterion(4, "co-area formula vs quasi-Monte Carlo, 10 random profiles x 3 norms"):
        profiles = _random_profiles(10, seed=0)
        misses = []
        for pair in (euclid, ellipse, l4):
            dom = fs.DomainSpec.wulff_ball(pair, 1.0)
            for i, g in enumerate(profiles):
                ref = integrate_wulff_radial(pair, 1.0, g)
                mc = integrate_domain(lambda x: g(pair.F0(x)), dom, budget=1 << 16, seed=i)
                bound = 3 * (mc.error_estimate + ref.error_estimate)
                if not abs(mc.value - ref.value) <= bound:
                    misses.append((pair.describe()["kind"], i, abs(mc.value - ref.value) / bound))
        assert misses == []


_LEMMA_PROFILES = (
    [tf.linear(), tf.quadratic(), tf.cosine()]
    + [tf.power(a) for a in (1.5, 2.0, 2.5, 3.0, 4.0)]
    + [tf.one_minus_power(b) for b in (0.25, 0.5, 1.0, 2.0)]
    + [tf.moser(log_k=k) for k in (1.0, 2.0, 4.0, 8.0)]
    + [tf.truncated_log(d) for d in (0.1, 1e-2, 1e-3, 1e-6)]
)


def test_criterion_05_lemma():
    with criterion(5, "one-dimensional lemma on 20 profiles, margins >= -1e-8"):
        assert len(_LEMMA_PROFILES) == 20
        for prof in _LEMMA_PROFILES:
            for rep in vf.check_lemma_1d(prof):
                assert rep.margin >= -1e-8, (prof.name, rep.check_id, rep.margin)


def test_criterion_06_hardy(default_reports):
    with criterion(6, "Hardy-type link, link2 and improved inequalities in the default campaign"):
        seen = set()
        for r in default_reports:
            if r.check_id in ("link", "link2", "improved"):
                if r.passed is None:
                    continue
                seen.add(r.check_id)
                assert r.passed and not r.advisory, (r.check_id, r.inputs)
        assert seen == {"link", "link2", "improved"}


def test_criterion_07_lq(default_reports, default_contexts):
    with criterion(7, "L^q estimate for q in {3,4,6,8} and h_r bound attained at the disk centre"):
        qs = set()
        for r in default_reports:
            if r.check_id == "q_estimate" and r.passed is not None:
                assert r.passed, r.inputs
                qs.add(r.inputs["q"])
        assert qs == {3.0, 4.0, 6.0, 8.0}
        disk = _ctx(default_contexts, "euclidean").domain
        rep = vf.check_hr_bound(disk, 4.0)
        assert rep.passed
        assert abs(rep.lhs - (3 * math.pi) ** 0.75) <= 1e-3 * (3 * math.pi) ** 0.75


def test_criterion_08_series(default_reports):
    with criterion(8, "series ratio limit = a e within 2%, threshold reported with both forms"):
        for a in (0.1, 1 / (2 * math.e), 0.5, 1.0):
            assert abs(vf.series_ratio_limit(a) / (a * math.e) - 1) <= 0.02
        reps = [r for r in default_reports if r.check_id == "exp_integrability"
                and r.passed is not None]
        assert reps
        for r in reps:
            assert r.passed
            for key in ("c_critical_empirical", "c_theorem_statement", "c_proof_statement"):
                assert key in r.details
            assert any("ratio test" in note for note in r.notes)


def test_criterion_09_sharpness(default_contexts):
    with criterion(9, "Moser profiles: integrable at 0.9 gamma_bar, divergent at 1.1 gamma_bar"):
        for ctx in default_contexts:
            for log_k in (2.0, 4.0, 8.0):
                u = tf.make_radial(tf.moser(log_k=log_k), ctx.pair, ctx.domain)
                reps = {r.check_id: r for r in vf.check_radial_theorem(u, ctx.bundle)}
                assert reps["radial_theorem.converge"].passed, (ctx.label, log_k)
                assert reps["radial_theorem.diverge"].passed, (ctx.label, log_k)


def test_criterion_10_determinism(default_reports):
    with criterion(10, "two default campaign runs give byte-identical JSON"):
        again = vf.run_campaign(default_config(), jobs=4)
        assert reports_to_json(again) == reports_to_json(default_reports)


if __name__ == "__main__":
    import sys

    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    sys.exit(code)
