"""Hardy differences, weighted norms, exponential integrals and constants.

All integrals over the Wulff ball {F° < R} are computed in polar form: the
integrand is multiplied by F°(x)^n and written in terms of the test
function's polar data (u, F° grad u) at x = R e^{-s} theta.  For F°-radial
functions the angular integral is done exactly by co-area, giving the factor
n*omega_{n,F} (dx) or H^{n-1}(Wulff sphere) (|grad F°| dx).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import _rules
from .errors import DomainError, PreconditionError
from .finsler import wulff_perimeter, wulff_volume
from .logweights import x1_s, x2_s
from .quadrature import (MEASURES, QuadResult, integrate_half_line, integrate_polar,
                         measure_factor, power_of)

SIGMA_CAP = 1e3
MIN_SIGMA_PAIRS = 10_000


# ---------------------------------------------------------------------------
# closed-form constants


def kappa(n):
    """kappa_n = (2/n) (n/(n-1))^(n-2)."""
    if int(n) != n or n < 2:
        raise DomainError("kappa_n needs an integer n >= 2")
    return (2.0 / n) * (n / (n - 1.0)) ** (n - 2)


def gamma_bar(n, omega_nf, J):
    """Sharp radial exponent n (4 omega_{n,F} / (n kappa_n J))^(1/(n-1))."""
    if not J > 0:
        raise DomainError("gamma_bar needs J > 0")
    if not omega_nf > 0:
        raise DomainError("gamma_bar needs omega_nf > 0")
    return n * (4.0 * omega_nf / (n * kappa(n) * J)) ** (1.0 / (n - 1))


def c_nf(n, alpha, beta_tilde, sigma_f):
    """The L^q constant C_{n,F} assembled from alpha, beta_tilde, sigma_F, kappa_n."""
    if not (alpha > 0 and beta_tilde > 0):
        raise DomainError("alpha and beta_tilde must be positive")
    if not sigma_f >= 1:
        raise DomainError("sigma_F must be >= 1")
    omega_n = _rules.ball_volume(n)
    bracket = (2.0 ** ((n - 1.0) / n) * sigma_f / alpha
               + beta_tilde * ((n + 1.0) / n) * n ** (2.0 / n) * kappa(n) ** (1.0 / n))
    return omega_n ** (-1.0 / n) * bracket / n


def hardy_coefficient(n):
    return ((n - 1.0) / n) ** n


# ---------------------------------------------------------------------------
# generic polar integration of a test function


def _theta0(pair):
    e = np.zeros((1, pair.n))
    e[0, 0] = 1.0
    return e / pair.F0(e)[:, None]


def integrate_function(u, G, measure="lebesgue", tol=1e-9, radial=None):
    """Integrate G(u_polar, scaled_grad, s, theta) * F°^{-n} over the Wulff ball.

    ``G`` receives arrays of shape (M, K), (M, K, n), (K,), (M, n) and returns
    (M, K): the integrand times F°(x)^n.  For F°-radial u (or ``radial=True``)
    the angular integral is replaced by its co-area factor.
    """
    if measure not in MEASURES:
        raise DomainError(f"unknown measure {measure!r}")
    pair = u.pair
    bps = tuple(u.breakpoints_s())

    def Gs(s, theta):
        v, sg = u.polar(s, theta)
        return G(v, sg, s, theta)

    if radial is None:
        radial = u.is_radial
    if radial:
        factor, ferr = measure_factor(pair, measure)
        th = _theta0(pair)
        res = integrate_half_line(lambda s: Gs(s, th)[0], tol / factor, breakpoints=bps)
        return QuadResult(factor * res.value, factor * res.error_estimate + abs(res.value) * ferr,
                          res.evaluations, res.converged)
    return integrate_polar(Gs, pair, tol, measure, breakpoints=bps)


def _dual(pair, sg):
    """F evaluated on the last axis of sg (zeros allowed)."""
    flat = sg.reshape(-1, pair.n)
    out = pair.F(flat) if len(flat) else np.zeros(0)
    return np.asarray(out).reshape(sg.shape[:-1])


def energy(u, measure="lebesgue", kind="I", tol=1e-9):
    """int F(grad u)^n dmu (kind I) or int |grad u . x/F°|^n dmu (kind J)."""
    n = u.n
    pair = u.pair
    if kind == "I":
        G = lambda v, sg, s, th: _dual(pair, sg) ** n  # noqa: E731
    elif kind == "J":
        G = lambda v, sg, s, th: np.abs(np.einsum("mkn,mn->mk", sg, th)) ** n  # noqa: E731
    else:
        raise DomainError(f"kind must be 'I' or 'J', got {kind!r}")
    return integrate_function(u, G, measure, tol)


def hardy_term(u, measure="lebesgue", tol=1e-9):
    """((n-1)/n)^n int |u|^n X1^n(F°/R) / F°^n dmu."""
    n = u.n
    c = hardy_coefficient(n)
    return integrate_function(
        u, lambda v, sg, s, th: c * np.abs(v) ** n * x1_s(s)[None, :] ** n, measure, tol)


@dataclass(frozen=True)
class HardyDifference:
    value: float
    error_estimate: float
    energy: QuadResult
    hardy: QuadResult
    kind: str
    measure: str

    @property
    def converged(self):
        return self.energy.converged and self.hardy.converged

    def as_quad(self):
        return QuadResult(self.value, self.error_estimate,
                          self.energy.evaluations + self.hardy.evaluations, self.converged)


def hardy_difference(u, pair=None, mu="lebesgue", kind="I", tol=1e-9):
    """I_{F,mu}[u] or J_{F,mu}[u]; negative values are returned as computed."""
    if pair is not None and pair is not u.pair:
        raise DomainError("test function belongs to a different norm")
    e = energy(u, mu, kind, tol)
    h = hardy_term(u, mu, tol)
    return HardyDifference(e.value - h.value, e.error_estimate + h.error_estimate, e, h, kind, mu)


def improved_lhs(u, tol=1e-9):
    """int |u|^n / F°^n X1^n X2^2 dx."""
    n = u.n
    return integrate_function(
        u, lambda v, sg, s, th: np.abs(v) ** n * (x1_s(s) ** n * x2_s(s) ** 2)[None, :],
        "lebesgue", tol)


def link_lhs(v, measure="lebesgue", tol=1e-9):
    """int F°^{2-n} |v|^{n-2} |grad v . x/F°|^2 X1^{-1} dmu for v = X1^{1-1/n} u."""
    n = v.n

    def G(w, sg, s, th):
        radial = np.einsum("mkn,mn->mk", sg, th)
        with np.errstate(divide="ignore", invalid="ignore"):
            wp = np.where(w == 0.0, 0.0 if n > 2 else 1.0, np.abs(w) ** (n - 2))
        return wp * radial**2 / x1_s(s)[None, :]

    return integrate_function(v, G, measure, tol)


def link2_lhs(v, measure="lebesgue", tol=1e-9):
    """int F(grad v)^n X1^{1-n} dmu."""
    n = v.n
    pair = v.pair
    return integrate_function(
        v, lambda w, sg, s, th: _dual(pair, sg) ** n * x1_s(s)[None, :] ** (1.0 - n),
        measure, tol)


def weighted_lq_norm(u, q, tol=1e-9, x2_power=None):
    """||u X2^{p}(F°/R)||_{L^q}, p = 2/n by default; requires q > n."""
    n = u.n
    if not q > n:
        raise PreconditionError(f"weighted_lq_norm requires q > n (got q={q!r}, n={n})")
    p = 2.0 / n if x2_power is None else float(x2_power)
    R = u.R

    def G(v, sg, s, th):
        return (R * np.exp(-s))[None, :] ** n * np.abs(v) ** q * x2_s(s)[None, :] ** (p * q)

    power = integrate_function(u, G, "lebesgue", tol)
    return power_of(power, 1.0 / q), power


def domain_volume(u):
    return wulff_volume(u.pair).value * u.R**u.n


# ---------------------------------------------------------------------------
# exponential integrals


@dataclass(frozen=True)
class TailDiagnosis:
    """Sign of the asymptotic tail exponent E(s) = a (l/(1+l))^{1/(n-1)} s - n s.

    ``a = gamma c^{1/(n-1)}`` with c the constant of the radial profile bound
    |v|^n <= c log(1/X1); ``slope`` is E(s)/s at log s = ``log_s``.
    """

    converges: bool
    slope: float
    a: float
    log_s: float
    c: float


TAIL_LOG_S = 1e12


def tail_diagnosis(gamma, c, n, log_s=TAIL_LOG_S):
    """Classify the reduced 1-D integral int_1^inf exp(E(s)) ds.

    E(s)/s tends to a - n as s -> inf; it is evaluated at log s = 1e12
    (s = e^{1e12}) directly in the log coordinate, far beyond any floating
    point s, so the sub-leading factor (l/(1+l))^{1/(n-1)} differs from one
    by 1e-12 only.  The integral converges iff the slope is negative or zero.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    a = gamma * c ** (1.0 / (n - 1))
    slope = a * (log_s / (1.0 + log_s)) ** (1.0 / (n - 1)) - n
    return TailDiagnosis(bool(slope <= 0.0), float(slope), float(a), float(log_s), float(c))


def tail_exponent(gamma, c, n, s):
    """E(s) = gamma c^{1/(n-1)} (log s/(1+log s))^{1/(n-1)} s - n s for s >= 1."""
    s = np.asarray(s, dtype=float)
    ls = np.log(s)
    return gamma * c ** (1.0 / (n - 1)) * (ls / (1.0 + ls)) ** (1.0 / (n - 1)) * s - n * s


def locate_threshold(c, n, rel=1e-3, log_s=TAIL_LOG_S):
    """Bisect gamma on the sign of the tail slope; returns (lo, hi) bracket."""
    lo, hi = 0.0, 1.0
    while tail_diagnosis(hi, c, n, log_s).converges:
        lo, hi = hi, 2.0 * hi
    while hi - lo > rel * 1e-3 * hi:
        mid = 0.5 * (lo + hi)
        if tail_diagnosis(mid, c, n, log_s).converges:
            lo = mid
        else:
            hi = mid
    return lo, hi


@dataclass(frozen=True)
class ExpIntegral:
    result: QuadResult
    overflow_at: float = None
    tail: TailDiagnosis = None
    notes: tuple = field(default_factory=tuple)

    @property
    def finite(self):
        return self.overflow_at is None and math.isfinite(self.result.value)


def exp_integral(u, gamma, x2_power=None, tol=1e-9, cutoff=700.0, profile_constant=None):
    """int exp(gamma (|u| X2^p(F°/R))^{n/(n-1)}) dx over the Wulff ball.

    ``x2_power`` p is 2/n (general bound) or 1/n (radial bound).  An exponent
    above ``cutoff`` is reported as divergence evidence at that abscissa
    instead of overflowing.  For radial u, ``profile_constant`` c (from the
    bound |v|^n <= c log(1/X1)) enables the tail diagnosis.
    """
    if not gamma > 0:
        raise DomainError("gamma must be positive")
    n = u.n
    p = 2.0 / n if x2_power is None else float(x2_power)
    R = u.R
    q = n / (n - 1.0)
    worst = {"arg": -math.inf, "s": None}

    def G(v, sg, s, th):
        arg = gamma * (np.abs(v) * x2_s(s)[None, :] ** p) ** q
        m = float(arg.max()) if arg.size else -math.inf
        if m > worst["arg"]:
            worst["arg"] = m
            worst["s"] = float(s[np.unravel_index(np.argmax(arg), arg.shape)[1]])
        ex = np.minimum(arg, cutoff)
        return np.exp(n * math.log(R) - n * s[None, :] + ex)

    res = integrate_function(u, G, "lebesgue", tol * domain_volume(u))
    overflow = worst["s"] if worst["arg"] > cutoff else None
    tail = None
    if profile_constant is not None and u.is_radial:
        tail = tail_diagnosis(gamma, profile_constant, n)
    return ExpIntegral(res, overflow, tail)


# ---------------------------------------------------------------------------
# sigma_F


@dataclass(frozen=True)
class SigmaEstimate:
    """Empirical bracket for sigma_F.

    ``lo`` is the largest per-pair requirement over the sampled pairs, ``hi``
    the value after local refinement around the worst pairs; both are
    certified on the pairs they were computed from.  ``flagged`` marks norms
    for which no sigma below the cap works.
    """

    lo: float
    hi: float
    samples: int
    flagged: bool
    worst_pair: tuple
    skipped: int

    def as_dict(self):
        return {"sigma_lo": self.lo, "sigma_hi": self.hi, "samples": self.samples,
                "flagged": self.flagged}


def sigma_requirement(pair, xi1, xi2, n=None):
    """Smallest sigma making the vectorial inequality hold on each pair.

    F^n(xi2 - xi1) - F^n(xi1) >= 2^{1-n} sigma^{-n} F^n(xi2) - n F^{n-1}(xi1) F_xi(xi1).xi2
    rearranges to sigma >= (2^{1-n} F^n(xi2) / Delta)^{1/n} with Delta the
    convexity gap of F^n; pairs with xi2 = 0 impose nothing.  Returns
    (requirement, delta, roundoff_scale).
    """
    n = pair.n if n is None else n
    F1 = pair.F(xi1)
    F2 = pair.F(xi2)
    Fd = pair.F(xi2 - xi1)
    # F^{n-1} grad F vanishes at xi1 = 0; evaluate the gradient elsewhere only
    nz = (F1 > 0)[:, None]
    g1 = np.where(nz, pair.grad_F(np.where(nz, xi1, 1.0)), 0.0)
    lin = n * F1 ** (n - 1) * np.einsum("mi,mi->m", g1, xi2)
    delta = Fd**n - F1**n + lin
    scale = 1e-13 * (Fd**n + F1**n + np.abs(lin))
    with np.errstate(divide="ignore", invalid="ignore"):
        req = np.where(F2 > 0, (2.0 ** (1 - n) * F2**n / delta) ** (1.0 / n), 0.0)
    req = np.where((delta <= 0) & (F2 > 0), np.inf, req)
    return req, delta, scale


def _sigma_pairs(n, m, rng):
    scales = 10.0 ** np.arange(-3, 4)
    d1 = rng.standard_normal((m, n))
    d2 = rng.standard_normal((m, n))
    d1 /= np.linalg.norm(d1, axis=1, keepdims=True)
    d2 /= np.linalg.norm(d2, axis=1, keepdims=True)
    r1 = scales[rng.integers(0, len(scales), m)]
    r2 = scales[rng.integers(0, len(scales), m)]
    return d1 * r1[:, None], d2 * r2[:, None]


def estimate_sigma_f(pair, n=None, budget=MIN_SIGMA_PAIRS, seed=0, refine=3):
    """Bracket for sigma_F from sampled pairs (xi1, xi2) at mixed scales."""
    n = pair.n if n is None else n
    if n != pair.n:
        raise DomainError("dimension mismatch")
    if budget < MIN_SIGMA_PAIRS:
        raise PreconditionError(f"estimate_sigma_f needs at least {MIN_SIGMA_PAIRS} pairs")
    rng = np.random.default_rng(seed)
    xi1, xi2 = _sigma_pairs(n, int(budget), rng)
    req, delta, scale = sigma_requirement(pair, xi1, xi2)
    undecided = (np.abs(delta) <= scale) & (pair.F(xi2) > 0)
    req = np.where(undecided, 0.0, req)
    lo = max(1.0, float(req.max()))
    worst = np.argsort(req)[-refine:]
    hi = lo
    best_pair = (xi1[worst[-1]].tolist(), xi2[worst[-1]].tolist())

    def neg_req(z):
        a, b = z[:n][None], z[n:][None]
        r, d, sc = sigma_requirement(pair, a, b)
        if abs(d[0]) <= sc[0]:
            return 0.0
        return -min(float(r[0]), 10 * SIGMA_CAP)

    if math.isfinite(lo) and lo < SIGMA_CAP:
        for j in worst:
            z0 = np.concatenate([xi1[j] / np.linalg.norm(xi1[j]), xi2[j] / np.linalg.norm(xi1[j])])
            res = optimize.minimize(neg_req, z0, method="Nelder-Mead",
                                    options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
            if -res.fun > hi:
                hi = -res.fun
                best_pair = (res.x[:n].tolist(), res.x[n:].tolist())
    flagged = not (hi < SIGMA_CAP)
    if flagged:
        hi = math.inf
    return SigmaEstimate(lo, hi, int(budget), flagged, best_pair, int(undecided.sum()))


# ---------------------------------------------------------------------------
# constants bundle


@dataclass(frozen=True)
class ConstantsBundle:
    n: int
    kappa_n: float
    sigma_lo: float
    sigma_hi: float
    sigma_flagged: bool
    alpha: float
    beta_tilde: float
    omega_n: float
    omega_nf: float
    perimeter: float
    c_nf: float
    gamma_bar: float = None

    def as_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    def with_gamma_bar(self, J):
        from dataclasses import replace
        return replace(self, gamma_bar=gamma_bar(self.n, self.omega_nf, J))


def constants_bundle(pair, equivalence, sigma):
    n = pair.n
    s_hi = sigma.hi
    cn = c_nf(n, equivalence.alpha, equivalence.beta_tilde, s_hi) if math.isfinite(s_hi) else math.inf
    return ConstantsBundle(
        n=n, kappa_n=kappa(n), sigma_lo=sigma.lo, sigma_hi=s_hi, sigma_flagged=sigma.flagged,
        alpha=equivalence.alpha, beta_tilde=equivalence.beta_tilde,
        omega_n=_rules.ball_volume(n), omega_nf=wulff_volume(pair).value,
        perimeter=wulff_perimeter(pair).value, c_nf=cn)


def log_series_terms(a, k):
    """log of a^k (1+k)^{1+k} / k! (log-Gamma, no overflow)."""
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore"):
        la = np.log(a) if a > 0 else -np.inf
    ak = np.where(k == 0, 0.0, k * la)
    return ak + (1.0 + k) * np.log1p(k) - special.gammaln(k + 1.0)
