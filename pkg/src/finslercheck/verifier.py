"""Inequality checks and campaigns.

Each ``check_*`` function evaluates both sides of one inequality with
quadrature error estimates and returns :class:`CheckReport` objects.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize, special
from scipy.stats import qmc

from . import functionals as fn
from . import testfunctions as tf
from ._rules import ball_volume
from .errors import DomainError, PreconditionError
from .finsler import DomainSpec, check_identities, equivalence_constants
from .logweights import x2_s
from .quadrature import compute_hr, integrate_half_line
from .reports import CheckReport

S_GRID_POINTS = 10_000


def s_grid(points=S_GRID_POINTS, s_max=1e8):
    """Radii r = e^{-s} for the pointwise checks: s = 0 plus a log-spaced sweep."""
    return np.concatenate([[0.0], np.geomspace(1e-8, s_max, points - 1)])


def _with_labels(inputs, labels):
    if labels:
        inputs = {**inputs, **{k: v for k, v in labels.items() if v is not None}}
    return inputs


def _fn_inputs(u, **extra):
    return {"norm": u.pair.describe(), "domain": u.domain.describe(),
            "function": u.describe(), **extra}


# ---------------------------------------------------------------------------
# one-dimensional lemma


def lemma_energy(profile, tol=1e-10):
    """A = int_0^1 t |g'|^2 X1^{-1} dt = int_0^inf (dg/ds)^2 (1 + s) ds."""
    return integrate_half_line(lambda s: profile.df_s(s) ** 2 * (1.0 + s), tol,
                               breakpoints=profile.breakpoints_s)


def _golden_max(fun, a, b, iters=80):
    g = 0.5 * (math.sqrt(5.0) - 1.0)
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fun(d)
    return max(fc, fd)


def _worst_ratio(lhs, rhs):
    """Index maximising lhs/rhs where rhs > 0 (the smallest relative margin)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0),
                         np.where(lhs > 0, np.inf, -np.inf))
    j = int(np.argmax(ratio))
    return j, float(ratio[j])


def check_lemma_1d(profile, tol=1e-10, points=S_GRID_POINTS, labels=None):
    """Both one-dimensional estimates for g = f.

    (a) |g(r)| <= (-log X1(r))^{1/2} A^{1/2} at every grid radius; the report
        holds the radius with the smallest margin.
    (b) sup_r |g(r)| X2(r)^{1/2} <= A^{1/2}; the sup is taken on the grid and
        polished by golden-section search around the best grid cell.
    """
    A = lemma_energy(profile, tol)
    sqrtA = math.sqrt(max(A.value, 0.0))
    err = 0.5 * A.error_estimate / sqrtA if sqrtA > 0 else math.sqrt(A.error_estimate)
    s = s_grid(points)
    g = np.abs(profile.f_s(s))
    bound = np.sqrt(np.log1p(s)) * sqrtA
    j, ratio = _worst_ratio(g, bound)
    inputs = _with_labels({"profile": profile.describe(), "grid_points": points}, labels)
    notes_a = ("pointwise bound on r = exp(-s), s in {0} U [1e-8, 1e8]",)
    rep_a = CheckReport.inequality(
        "lemma_1d.pointwise", inputs, g[j], bound[j],
        error_estimate=err * math.sqrt(math.log1p(s[j])), notes=notes_a,
        details={"worst_s": float(s[j]), "max_ratio": ratio, "A": A.value,
                 "A_error": A.error_estimate})

    w = g * np.sqrt(x2_s(s))
    k = int(np.argmax(w))
    lo, hi = s[max(k - 1, 0)], s[min(k + 1, len(s) - 1)]
    sup = max(float(w[k]), _golden_max(
        lambda z: float(abs(profile.f_s(np.array([z]))[0]) * math.sqrt(x2_s(z))), lo, hi))
    rep_b = CheckReport.inequality(
        "lemma_1d.sup", inputs, sup, sqrtA, error_estimate=err,
        details={"argmax_s": float(s[k]), "A": A.value})
    return rep_a, rep_b


# ---------------------------------------------------------------------------
# Hardy-difference lower bounds


def check_link(u, pair=None, mu="lebesgue", tol=1e-9, sigma=None, labels=None):
    """Check ids link: LHS <= kappa_n J_{F,mu}[u] and link2: LHS <= 2^{n-1} sigma^n I_{F,mu}[u].

    ``sigma`` is the sigma_F value used (the upper end of the estimated
    bracket in campaigns).
    """
    if pair is not None and pair is not u.pair:
        raise DomainError("test function belongs to a different norm")
    if mu not in ("lebesgue", "grad_polar"):
        raise PreconditionError(f"measure {mu!r} unsupported: only dx and |grad F°| dx")
    n = u.n
    v = tf.v_transform(u)
    k = fn.kappa(n)
    J = fn.hardy_difference(u, mu=mu, kind="J", tol=tol)
    I = fn.hardy_difference(u, mu=mu, kind="I", tol=tol)
    L1 = fn.link_lhs(v, mu, tol)
    L2 = fn.link2_lhs(v, mu, tol)
    if sigma is None:
        sigma = fn.estimate_sigma_f(u.pair).hi
    inputs = _with_labels(_fn_inputs(u, measure=mu), labels)
    consts = {"kappa_n": k, "sigma_f": sigma}
    r1 = CheckReport.inequality(
        "link", inputs, L1.value, k * J.value, L1.error_estimate + k * J.error_estimate,
        constants=consts, details={"J": J.value, "J_error": J.error_estimate})
    if not math.isfinite(sigma):
        return r1, CheckReport.out_of_hypothesis(
            "link2", inputs, "sigma_F flagged as unbounded for this norm", constants=consts)
    c2 = 2.0 ** (n - 1) * sigma**n
    r2 = CheckReport.inequality(
        "link2", inputs, L2.value, c2 * I.value, L2.error_estimate + c2 * I.error_estimate,
        constants=consts, details={"I": I.value, "I_error": I.error_estimate})
    return r1, r2


def check_improved(u, pair=None, tol=1e-9, labels=None):
    """int |u|^n F°^{-n} X1^n X2^2 dx <= n^2 kappa_n I_{F,dx}[u]."""
    n = u.n
    lhs = fn.improved_lhs(u, tol)
    I = fn.hardy_difference(u, mu="lebesgue", kind="I", tol=tol)
    c = n * n * fn.kappa(n)
    return CheckReport.inequality(
        "improved", _with_labels(_fn_inputs(u), labels), lhs.value, c * I.value,
        lhs.error_estimate + c * I.error_estimate, constants={"kappa_n": fn.kappa(n)},
        details={"I": I.value})


# ---------------------------------------------------------------------------
# L^q estimate and the h_r kernel


def q_factor(n, q):
    return (1.0 + q * (n - 1.0) / n) ** (1.0 - 1.0 / n + 1.0 / q)


def check_q_estimate(u, q, bundle, tol=1e-9, labels=None):
    """||u X2^{2/n}||_q <= C_{n,F} [1+q(n-1)/n]^{1-1/n+1/q} |Omega|^{1/q} I^{1/n}."""
    n = u.n
    if not q > n:
        raise PreconditionError(
            f"q_estimate requires q > n (the L^q estimate is stated for q > n); got q={q!r}, n={n}")
    inputs = _with_labels(_fn_inputs(u, q=float(q)), labels)
    if not math.isfinite(bundle.c_nf):
        return CheckReport.out_of_hypothesis(
            "q_estimate", inputs, "C_{n,F} is infinite (sigma_F unbounded)",
            constants=bundle.as_dict())
    lhs, _ = fn.weighted_lq_norm(u, q, tol)
    I = fn.hardy_difference(u, mu="lebesgue", kind="I", tol=tol)
    vol = fn.domain_volume(u)
    coef = bundle.c_nf * q_factor(n, q) * vol ** (1.0 / q)
    Ipos = max(I.value, 0.0)
    rhs = coef * Ipos ** (1.0 / n)
    rhs_err = coef * (Ipos ** (1.0 / n - 1.0) * I.error_estimate / n if Ipos > 0
                      else I.error_estimate ** (1.0 / n))
    notes = () if I.value >= 0 else ("I computed negative; clipped to 0 in the right side",)
    return CheckReport.inequality(
        "q_estimate", inputs, lhs.value, rhs,
        lhs.error_estimate + rhs_err, constants=bundle.as_dict(), notes=notes,
        details={"I": I.value, "ratio": lhs.value / rhs if rhs > 0 else None,
                 "volume": vol})


def hr_index(n, q):
    """r with 1/n + 1/r = 1 + 1/q."""
    return 1.0 / (1.0 + 1.0 / q - 1.0 / n)


def hr_rhs(n, q, volume):
    return ball_volume(n) ** (1.0 - 1.0 / n) * q_factor(n, q) * volume ** (1.0 / q)


def check_hr_bound(domain, q, samples=64, seed=0, labels=None):
    """||h_r||_inf^{1/r} <= omega_n^{1-1/n} (1+q(n-1)/n)^{1-1/n+1/q} |Omega|^{1/q}.

    The sup is searched over the origin and ``samples`` Sobol points in the
    domain, then polished by Nelder-Mead from the three best points.
    """
    n = domain.n
    if not q > n:
        raise PreconditionError(f"hr_bound requires q > n; got q={q!r}, n={n}")
    r = hr_index(n, q)
    lo, hi = (np.asarray(b) for b in domain.bbox)
    pts = lo + qmc.Sobol(d=n, scramble=True, seed=seed).random(
        1 << int(math.ceil(math.log2(max(samples, 2))))) * (hi - lo)
    pts = np.concatenate([np.zeros((1, n)), pts[domain.contains(pts)][:samples]])
    results = [compute_hr(p, domain, r) for p in pts]
    vals = np.array([res.value for res in results])
    order = np.argsort(vals)[::-1][:3]
    best = float(vals[order[0]])
    best_x = pts[order[0]]
    err = max(res.error_estimate for res in results)

    def neg(z):
        if not bool(domain.contains(z[None])[0]):
            return 0.0
        return -compute_hr(z, domain, r).value

    for j in order:
        res = optimize.minimize(neg, pts[j], method="Nelder-Mead",
                                options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 200})
        if -res.fun > best:
            best, best_x = -res.fun, res.x
    vol = domain.volume()
    lhs = best ** (1.0 / r)
    rhs = hr_rhs(n, q, vol)
    inputs = _with_labels({"norm": domain.pair.describe(), "domain": domain.describe(),
                           "q": float(q), "samples": samples, "seed": seed}, labels)
    return CheckReport.inequality(
        "hr_bound", inputs, lhs, rhs, error_estimate=lhs * err / best / r,
        details={"r": r, "argmax": [float(v) for v in best_x], "h_max": best, "volume": vol})


# ---------------------------------------------------------------------------
# series behind the general exponential bound


def series_ratio_limit(a, k_max=400):
    """Limit of t_{k+1}/t_k for t_k = a^k (1+k)^{1+k}/k!.

    The ratios behave like a e (1 + 1/(2(k+1)) + O(k^-2)); Richardson
    extrapolation in 1/(k+1) between k_max/2 and k_max removes the first
    correction.
    """
    if k_max < 200:
        raise DomainError("k_max must be at least 200")
    if a == 0:
        return 0.0
    k = np.arange(k_max + 2, dtype=float)
    lt = fn.log_series_terms(a, k)
    ratio = np.exp(np.diff(lt))
    k1, k2 = k_max // 2, k_max
    m1, m2 = k1 + 1.0, k2 + 1.0
    return float((m2 * ratio[k2] - m1 * ratio[k1]) / (m2 - m1))


def series_sum(a, n, k_max=400):
    """Bound factor: sum_{k<n} a^k (1+n)^{(1+n)k/n}/k! + sum_{k>=n} a^k (1+k)^{1+k}/k!.

    The head uses Jensen with the q = n^2/(n-1) moment; returns (value,
    converged) where converged means a e < 1 and the truncated tail is below
    1e-16 of the sum.
    """
    k_head = np.arange(n, dtype=float)
    la = math.log(a) if a > 0 else -math.inf
    with np.errstate(invalid="ignore"):
        powers = np.where(k_head == 0, 0.0, k_head * la)
    head_logs = powers + (1.0 + n) * k_head / n * math.log1p(n) - special.gammaln(k_head + 1.0)
    if a * math.e >= 1.0:
        return math.inf, False
    k = np.arange(n, max(k_max, n + 1) + 1, dtype=float)
    lt = fn.log_series_terms(a, k)
    total = special.logsumexp(np.concatenate([head_logs, lt]))
    # the ratios a (1 + 1/(k+1))^{k+2} decrease towards a e, so the last one bounds the rest
    r = math.exp(lt[-1] - lt[-2]) if a > 0 else 0.0
    rem = lt[-1] + math.log(r / (1.0 - r)) if 0 < r < 1 else -math.inf
    value = math.exp(total) + (math.exp(rem) if math.isfinite(rem) else 0.0)
    return value, bool(rem - total < math.log(1e-16)) if math.isfinite(rem) else True


def series_threshold(C, I, n, k_max=400, labels=None):
    """Empirical radius of the series sum_k (c C^{n/(n-1)} I^{1/(n-1)})^k (1+k)^{1+k}/k!.

    The ratio limit at unit coefficient estimates e; the implied critical c is
    1/(e C^{n/(n-1)} I^{1/(n-1)}).  The report compares the empirical limit
    against e (lhs: relative deviation, rhs: 2%).
    """
    e_emp = series_ratio_limit(1.0, k_max)
    unit = C ** (n / (n - 1.0)) * I ** (1.0 / (n - 1.0)) if I > 0 else 0.0
    c_emp = 1.0 / (e_emp * unit) if unit > 0 else math.inf
    stated = C**n * I ** (-1.0 / (n - 1.0)) if I > 0 else math.inf
    proof = (C**n * I) ** (-1.0 / (n - 1.0)) if I > 0 else math.inf
    notes = (
        "the admissible range for c is stated as gamma < C^n I^(-1/(n-1)) in the theorem and "
        "as c < (C^n I)^(-1/(n-1)) in its proof; the ratio test on (1+k)^(1+k)/k! gives "
        "limit a*e, i.e. convergence iff c < 1/(e C^(n/(n-1)) I^(1/(n-1))). Neither reading "
        "is asserted; all three values are recorded",
    )
    inputs = _with_labels({"C": C, "I": I, "n": n, "k_max": k_max}, labels)
    return CheckReport.inequality(
        "series_threshold", inputs, abs(e_emp / math.e - 1.0), 0.02, tolerance=0.0,
        notes=notes,
        details={"ratio_limit_unit": e_emp, "c_critical_empirical": c_emp,
                 "c_theorem_statement": stated, "c_proof_statement": proof,
                 "coefficient_unit": unit})


def check_exp_integrability(u, bundle, gamma_fraction=0.5, tol=1e-9, k_max=400,
                            labels=None):
    """Numeric int exp(gamma (|u| X2^{2/n})^{n/(n-1)}) dx against the series bound.

    gamma = gamma_fraction / (e C^{n/(n-1)} I^{1/(n-1)}), inside the ratio-test
    radius; the bound is |Omega| times :func:`series_sum` at a = gamma
    C^{n/(n-1)} I^{1/(n-1)}.
    """
    n = u.n
    inputs = _with_labels(_fn_inputs(u, gamma_fraction=float(gamma_fraction)), labels)
    if not math.isfinite(bundle.c_nf):
        return CheckReport.out_of_hypothesis(
            "exp_integrability", inputs, "C_{n,F} is infinite (sigma_F unbounded)",
            constants=bundle.as_dict())
    I = fn.hardy_difference(u, mu="lebesgue", kind="I", tol=tol)
    C = bundle.c_nf
    vol = fn.domain_volume(u)
    unit = C ** (n / (n - 1.0)) * max(I.value, 0.0) ** (1.0 / (n - 1.0))
    gamma = gamma_fraction / (math.e * unit) if unit > 0 else 1.0
    a = gamma * unit
    bound, conv = series_sum(a, n, k_max)
    val = fn.exp_integral(u, gamma, x2_power=2.0 / n, tol=tol)
    series = series_threshold(C, max(I.value, 0.0), n, k_max)
    return CheckReport.inequality(
        "exp_integrability", inputs, val.result.value, vol * bound,
        val.result.error_estimate, constants=bundle.as_dict(),
        notes=series.notes,
        details={"gamma": gamma, "a": a, "I": I.value, "series_converged": conv,
                 "volume": vol, **series.details})


# ---------------------------------------------------------------------------
# sharp radial exponent


@dataclass(frozen=True)
class RadialSetup:
    u: object
    J: float
    J_error: float
    gamma_bar: float
    c_literal: float
    c_coarea: float


def normalize_radial(u, tol=1e-10):
    """Rescale radial u so that J_F[u] (measure |grad F°| dx) equals one."""
    J0 = fn.hardy_difference(u, mu="grad_polar", kind="J", tol=tol)
    if not J0.value > 1e3 * max(J0.error_estimate, 1e-300):
        return None, J0
    un = tf.scale_function(u, J0.value ** (-1.0 / u.n))
    return un, fn.hardy_difference(un, mu="grad_polar", kind="J", tol=tol)


def radial_setup(u, bundle, tol=1e-10):
    un, J = normalize_radial(u, tol)
    if un is None:
        return None
    n = u.n
    k = fn.kappa(n)
    return RadialSetup(
        un, J.value, J.error_estimate, fn.gamma_bar(n, bundle.omega_nf, J.value),
        n * k * J.value / (4.0 * bundle.omega_nf),
        n * n * k * J.value / (4.0 * bundle.perimeter))


def _profile_bound_report(check_id, v_prof, c, n, inputs, advisory, notes, s):
    v = np.abs(v_prof.f_s(s))
    bound = (c * np.log1p(s)) ** (1.0 / n)
    j, ratio = _worst_ratio(v, bound)
    return CheckReport.inequality(
        check_id, inputs, v[j], bound[j], error_estimate=0.0, advisory=advisory, notes=notes,
        details={"worst_s": float(s[j]), "c": c, "max_ratio": ratio})


def check_radial_theorem(u, bundle, tol=1e-10, factors=(0.9, 1.1), points=S_GRID_POINTS,
                         labels=None):
    """Sharp-exponent checks for an F°-radial u on a Wulff ball.

    After rescaling to J_F[u] = 1: (i) the pointwise bound on v = X1^{1-1/n}u,
    once with the co-area constant n^2 kappa J/(4 H^{n-1}(Wulff sphere)) and
    once with n kappa J/(4 omega_{n,F}) (advisory; the two agree for the
    Euclidean norm); (ii) tail convergence at factors[0] * gamma_bar; (iii)
    tail divergence at factors[1] * gamma_bar (advisory); (iv) the located
    threshold relative to gamma_bar.
    """
    if not u.is_radial:
        raise PreconditionError("radial theorem checks need an F°-radial test function")
    n = u.n
    base = _with_labels(_fn_inputs(u, measure="grad_polar"), labels)
    setup = radial_setup(u, bundle, tol)
    ids = ("radial_theorem.profile_bound", "radial_theorem.profile_bound_literal",
           "radial_theorem.converge", "radial_theorem.diverge", "radial_theorem.threshold")
    if setup is None:
        reason = "J_F[u] = 0: gamma_bar undefined, outside the theorem's hypothesis"
        return tuple(CheckReport.out_of_hypothesis(i, base, reason) for i in ids)
    consts = {**bundle.as_dict(), "gamma_bar": setup.gamma_bar, "J": setup.J}
    v_prof = tf.weighted_profile(setup.u.radial_profile, 1.0 - 1.0 / n)
    s = s_grid(points)
    reports = [
        _profile_bound_report(ids[0], v_prof, setup.c_coarea, n, base, False,
                              ("constant from the co-area factor H^{n-1}(Wulff sphere)",), s),
        _profile_bound_report(ids[1], v_prof, setup.c_literal, n, base, True,
                              ("constant n kappa J/(4 omega_{n,F}); equals the co-area constant "
                               "only when H^{n-1}(Wulff sphere) = n omega_{n,F}",), s),
    ]
    lo_f, hi_f = factors
    conv = fn.exp_integral(setup.u, lo_f * setup.gamma_bar, x2_power=1.0 / n, tol=1e-8,
                           profile_constant=setup.c_literal)
    reports.append(CheckReport.inequality(
        ids[2], {**base, "gamma_factor": lo_f}, conv.tail.slope, 0.0, tolerance=0.0,
        constants=consts,
        notes=("lhs is the asymptotic tail slope E(s)/s; convergence iff <= 0",),
        details={"exp_integral": conv.result.value, "exp_error": conv.result.error_estimate,
                 "finite": conv.finite, "a": conv.tail.a}))
    div = fn.tail_diagnosis(hi_f * setup.gamma_bar, setup.c_literal, n)
    reports.append(CheckReport.inequality(
        ids[3], {**base, "gamma_factor": hi_f}, 0.0, div.slope, tolerance=0.0, advisory=True,
        constants=consts,
        notes=("rhs is the asymptotic tail slope; divergence iff > 0 (sharpness probe of the "
               "reduced one-dimensional integral)",),
        details={"a": div.a}))
    lo, hi = fn.locate_threshold(setup.c_literal, n)
    thr = 0.5 * (lo + hi)
    coarea = n * setup.c_coarea ** (-1.0 / (n - 1))
    reports.append(CheckReport.inequality(
        ids[4], base, abs(thr / setup.gamma_bar - 1.0), 0.01, tolerance=0.0, constants=consts,
        notes=("lhs is |threshold / gamma_bar - 1|",),
        details={"threshold": thr, "bracket": [lo, hi], "gamma_bar": setup.gamma_bar,
                 "threshold_coarea_constant": coarea}))
    return tuple(reports)


# ---------------------------------------------------------------------------
# campaigns


@dataclass
class NormContext:
    label: str
    pair: object
    domain: object
    equivalence: object
    sigma: object
    bundle: object


def build_context(label, pair, radius=1.0, sigma_budget=fn.MIN_SIGMA_PAIRS, seed=0,
                  equivalence_samples=10_000):
    eq = equivalence_constants(pair, equivalence_samples, seed=seed)
    sig = fn.estimate_sigma_f(pair, budget=sigma_budget, seed=seed)
    bundle = fn.constants_bundle(pair, eq, sig)
    return NormContext(label, pair, DomainSpec.wulff_ball(pair, radius), eq, sig, bundle)


def build_contexts(config):
    """One context per configured norm (pairs, constants and domain built once)."""
    return [build_context(label, pair, config.radius, config.budgets["sigma_pairs"],
                          config.seed, config.budgets["equivalence_samples"])
            for label, pair in config.build_pairs().items()]


def _functions(ctx, profile, variants):
    out = []
    if "radial" in variants:
        out.append(("radial", tf.make_radial(profile, ctx.pair, ctx.domain)))
    if "modulated" in variants:
        out.append(("modulated", tf.make_modulated(profile, ctx.pair, ctx.domain)))
    return out


def _stamped(task, seed, ctx=None):
    """Wrap a task so each report carries the campaign seed and the norm's constants."""

    def run():
        out = []
        for r in task():
            consts = r.constants if ctx is None else {**ctx.bundle.as_dict(), **r.constants}
            out.append(replace(r, inputs={**r.inputs, "seed": seed}, constants=consts))
        return tuple(out)

    return run


def campaign_tasks(config, contexts):
    """List of zero-argument callables, each returning a tuple of reports."""
    raw = _raw_tasks(config, contexts)
    return [_stamped(task, config.seed, ctx) for task, ctx in raw]


def _raw_tasks(config, contexts):
    tasks = []
    tol = config.tolerances
    seed = config.seed
    for check in config.checks:
        cid = check.kind
        if cid == "lemma_1d":
            for plabel, profile in config.profiles.items():
                tasks.append((lambda p=profile, pl=plabel: check_lemma_1d(
                    p, tol["lemma"], labels={"profile_label": pl}), None))
            continue
        if cid == "series_threshold":
            for ctx in contexts:
                tasks.append((lambda c=ctx, k=check.params.get("k_max", 400): (series_threshold(
                    c.bundle.c_nf, 1.0, c.pair.n, k,
                    labels={"norm_label": c.label}),), ctx))
            continue
        for ctx in contexts:
            labels = {"norm_label": ctx.label}
            if cid == "identities":
                tasks.append((lambda c=ctx: (check_identities(
                    c.pair, config.budgets["identity_samples"], seed=seed, label=c.label),), ctx))
                continue
            if cid == "hr_bound":
                for q in check.params.get("q", (4.0,)):
                    tasks.append((lambda c=ctx, q=q, lb=labels: (check_hr_bound(
                        c.domain, q, config.budgets["hr_samples"], seed, labels=lb),), ctx))
                continue
            for plabel, profile in config.profiles.items():
                lb = {**labels, "profile_label": plabel}
                for variant, u in _functions(ctx, profile, check.params.get("variants", ("radial",))):
                    lbv = {**lb, "variant": variant}
                    tasks.extend((t, ctx) for t in _function_tasks(cid, check, ctx, u, lbv, tol))
    return tasks


def _function_tasks(cid, check, ctx, u, labels, tol):
    t = tol["quadrature"]
    if cid == "link":
        return [lambda m=m: check_link(u, mu=m, tol=t, sigma=ctx.bundle.sigma_hi, labels=labels)
                for m in check.params.get("measures", ("lebesgue", "grad_polar"))]
    if cid == "improved":
        return [lambda: (check_improved(u, tol=t, labels=labels),)]
    if cid == "q_estimate":
        return [lambda q=q: (check_q_estimate(u, q, ctx.bundle, t, labels=labels),)
                for q in check.params.get("q", (3.0, 4.0, 6.0, 8.0))]
    if cid == "exp_integrability":
        return [lambda: (check_exp_integrability(
            u, ctx.bundle, check.params.get("gamma_fraction", 0.5), t, labels=labels),)]
    if cid == "radial_theorem":
        if not u.is_radial:
            return []
        f = check.params.get("gamma_factors", (0.9, 1.1))
        return [lambda: check_radial_theorem(u, ctx.bundle, tol["radial"], tuple(f),
                                             labels=labels)]
    raise DomainError(f"unknown check {cid!r}")


def run_campaign(config, jobs=1, contexts=None):
    """Run every configured check; reports come back sorted by check id."""
    if contexts is None:
        contexts = build_contexts(config)
    tasks = campaign_tasks(config, contexts)
    if jobs > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            chunks = list(pool.map(lambda f: f(), tasks))
    else:
        chunks = [f() for f in tasks]
    reports = [r for chunk in chunks for r in chunk]
    return sorted(reports, key=lambda r: r.sort_key)


def threshold_scan(config, contexts=None):
    """Radial sharpness reports only (the ``threshold`` subcommand)."""
    if contexts is None:
        contexts = build_contexts(config)
    reports = []
    for ctx in contexts:
        for plabel, profile in config.profiles.items():
            u = tf.make_radial(profile, ctx.pair, ctx.domain)
            task = _stamped(lambda u=u, c=ctx, pl=plabel: check_radial_theorem(
                u, c.bundle, config.tolerances["radial"],
                labels={"norm_label": c.label, "profile_label": pl}), config.seed, ctx)
            reports.extend(task())
    return sorted(reports, key=lambda r: r.sort_key)
