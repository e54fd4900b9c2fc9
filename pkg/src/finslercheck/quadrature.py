"""Quadrature for singular radial weights, Wulff balls and general domains.

Radial integrands with origin singularities are integrated in the log
coordinate s = -log t over geometrically growing panels; each panel is handled
by adaptive Gauss-Kronrod (7/15) bisection.  Multi-dimensional integrals over
Wulff balls use the polar map x = R e^{-s} theta with theta on the Wulff
sphere; general domains use scrambled Sobol sampling.
"""

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc, t as student_t

from . import _rules
from .errors import BudgetExhausted, DomainError
from .finsler import wulff_perimeter, wulff_volume

SINGULARITIES = ("none", "log_origin", "power_origin")
MEASURES = ("lebesgue", "grad_polar")
S_MAX_LOG2 = 60
# exp(-s) stays a normal double below this
_S_UNDERFLOW = 700.0
# two-sided normal coverage of a 3-sigma interval
_THREE_SIGMA = 0.99865


def replicate_error(ests):
    """Standard error over independent replicates, widened so 3x is a t-interval.

    With few replicates the studentised error has heavy tails; scaling by
    t_{m-1}(0.99865) / 3 keeps 3 * error an honest 99.73% bound.
    """
    m = len(ests)
    se = float(np.std(ests, ddof=1) / math.sqrt(m))
    return se * float(student_t.ppf(_THREE_SIGMA, m - 1)) / 3.0


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool

    def scaled(self, c):
        return replace(self, value=c * self.value, error_estimate=abs(c) * self.error_estimate)

    def __add__(self, other):
        return QuadResult(self.value + other.value,
                          self.error_estimate + other.error_estimate,
                          self.evaluations + other.evaluations,
                          self.converged and other.converged)

    def __sub__(self, other):
        return self + other.scaled(-1.0)


def power_of(res, p):
    """|value|^p with first-order error propagation."""
    v = abs(res.value)
    val = v**p
    err = abs(p) * v ** (p - 1.0) * res.error_estimate if v > 0 else res.error_estimate**p
    return QuadResult(val, err, res.evaluations, res.converged)


@dataclass(frozen=True)
class RadialIntegrand:
    """Integrand g on (0, 1] with a hint about its behaviour at t = 0.

    ``g_s`` optionally gives the integrand already transformed to the log
    coordinate, g(e^{-s}) e^{-s}; supplying it keeps evaluations exact for
    radii that underflow in double precision.  ``exponent`` is the power a in
    g ~ t^a for ``power_origin``.  ``breakpoints`` lists t-values where g is
    not smooth.
    """

    g: object
    singularity: str = "none"
    exponent: float = None
    g_s: object = None
    breakpoints: tuple = ()

    def __post_init__(self):
        if self.singularity not in SINGULARITIES:
            raise DomainError(f"unknown singularity hint {self.singularity!r}")
        if self.singularity == "power_origin":
            if self.exponent is None or not self.exponent > -1.0:
                raise DomainError("power_origin needs an integrable exponent > -1")

    def in_log_coordinate(self):
        if self.g_s is not None:
            return self.g_s
        g = self.g

        def h(s):
            deep = s > _S_UNDERFLOW
            if deep.any():
                raise DomainError(
                    f"abscissa s={s[deep][0]!r} (t=exp(-s)) is below double precision; "
                    "supply the integrand in the log coordinate (g_s)")
            t = np.exp(-s)
            return np.asarray(g(t), dtype=float) * t

        return h


def _checked(f, x):
    with np.errstate(all="ignore"):
        y = np.asarray(f(x), dtype=float)
    y = np.broadcast_to(y, x.shape)
    bad = ~np.isfinite(y)
    if bad.any():
        raise DomainError(f"non-finite integrand value at abscissa {x[bad][0]!r}")
    return y


def _gk_batch(f, a, b):
    """Apply G7K15 to intervals [a_i, b_i]; returns (kronrod, |K - G|)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[:, None] + half[:, None] * _rules.KRONROD_NODES[None, :]
    y = _checked(f, x.ravel()).reshape(x.shape)
    k = half * (y @ _rules.KRONROD_WEIGHTS)
    g = half * (y @ _rules.GAUSS_WEIGHTS)
    return k, np.abs(k - g)


def adaptive_gk(f, a, b, tol, max_evals=200_000, breakpoints=()):
    """Adaptive Gauss-Kronrod on [a, b] with an absolute tolerance.

    Intervals are bisected worst-first, in vectorised batches holding the
    intervals responsible for the larger half of the current error mass.
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    edges = np.unique(np.concatenate([[a, b], [p for p in breakpoints if a < p < b]]))
    lo, hi = edges[:-1], edges[1:]
    vals, errs = _gk_batch(f, lo, hi)
    evals = 15 * len(lo)
    heap = [(-e, l, h, v) for e, l, h, v in zip(errs, lo, hi, vals)]
    heapq.heapify(heap)
    total_err = float(errs.sum())
    while total_err > tol and evals < max_evals:
        batch = []
        mass = 0.0
        while heap and mass < 0.5 * total_err and len(batch) < 256:
            item = heapq.heappop(heap)
            batch.append(item)
            mass += -item[0]
        l = np.array([it[1] for it in batch])
        h = np.array([it[2] for it in batch])
        m = 0.5 * (l + h)
        if np.any((m <= l) | (m >= h)):
            for it in batch:
                heapq.heappush(heap, it)
            break
        kv, ke = _gk_batch(f, np.concatenate([l, m]), np.concatenate([m, h]))
        evals += 15 * len(kv)
        for i in range(len(kv)):
            lo_i = l[i] if i < len(l) else m[i - len(l)]
            hi_i = m[i] if i < len(l) else h[i - len(l)]
            heapq.heappush(heap, (-ke[i], lo_i, hi_i, kv[i]))
        total_err = math.fsum(-it[0] for it in heap)
    value = math.fsum(it[3] for it in heap)
    return QuadResult(value, total_err, evals, total_err <= tol)


def integrate_half_line(h, tol=1e-9, max_evals=400_000, breakpoints=()):
    """Integrate h(s) over [0, inf) for integrands decaying as s grows.

    Panels [0,1], [1,2], [2,4], ... are integrated adaptively (panel k gets a
    share 3/(pi^2 (k+1)^2) of tol/2).  The remainder after panel k is
    estimated geometrically from the last two panel contributions; the sweep
    stops once that estimate falls below tol/10 or s exceeds 2^60.
    """
    total = QuadResult(0.0, 0.0, 0, True)
    prev = None
    zeros = 0
    bps = sorted(float(b) for b in breakpoints if b > 0)
    lo, hi = 0.0, 1.0
    k = 0
    tail = math.inf
    while True:
        share = 0.5 * tol * 3.0 / (math.pi**2 * (k + 1) ** 2)
        budget = max(15 * 64, max_evals - total.evaluations)
        panel = adaptive_gk(h, lo, hi, share, budget, [p for p in bps if lo < p < hi])
        total = total + panel
        c = abs(panel.value)
        zeros = zeros + 1 if c == 0.0 else 0
        past_breaks = not bps or hi >= bps[-1]
        if zeros >= 2 and past_breaks:
            tail = 0.0
            break
        if prev is not None and prev > 0 and past_breaks and k >= 3:
            r = c / prev
            if r < 1.0:
                tail = c * r / (1.0 - r)
                if tail < 0.1 * tol:
                    break
        if total.evaluations >= max_evals or k >= S_MAX_LOG2:
            break
        prev = c
        lo, hi = hi, 2.0 * hi
        k += 1
    err = total.error_estimate + (tail if math.isfinite(tail) else abs(total.value))
    return QuadResult(total.value, err, total.evaluations,
                      total.converged and math.isfinite(tail) and err <= tol)


def integrate_radial(f, tol=1e-9, max_evals=400_000):
    """Integral of a :class:`RadialIntegrand` over (0, 1]."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    if f.singularity == "none":
        return adaptive_gk(f.g, 0.0, 1.0, tol, max_evals, f.breakpoints)
    bps = [-math.log(t) for t in f.breakpoints if 0 < t < 1]
    return integrate_half_line(f.in_log_coordinate(), tol, max_evals, bps)


def measure_factor(pair, measure):
    """Co-area factor: n*omega_{n,F} for dx, H^{n-1}(Wulff sphere) for |grad F°| dx."""
    if measure == "lebesgue":
        vol = wulff_volume(pair)
        return pair.n * vol.value, pair.n * vol.error_estimate
    if measure == "grad_polar":
        per = wulff_perimeter(pair)
        return per.value, per.error_estimate
    raise DomainError(f"unknown measure {measure!r}")


def integrate_wulff_radial(pair, R, profile, tol=1e-9, measure="lebesgue",
                           profile_s=None, singularity="none", breakpoints=()):
    """Integral over {F° < R} of phi(F°(x)/R), by co-area reduction.

    ``profile_s`` optionally evaluates phi at t = e^{-s}; with it (or with a
    singular hint) the 1-D integral runs in the log coordinate.
    """
    if not R > 0:
        raise DomainError("radius must be positive")
    n = pair.n
    factor, ferr = measure_factor(pair, measure)
    if profile_s is not None:
        g_s = lambda s: np.exp(-n * s) * profile_s(s)  # noqa: E731
        sing = "log_origin" if singularity == "none" else singularity
    else:
        g_s = None
        sing = singularity
    f = RadialIntegrand(lambda t: t ** (n - 1) * profile(t), sing,
                        exponent=(n - 1.0) if sing == "power_origin" else None,
                        g_s=g_s, breakpoints=tuple(breakpoints))
    inner = integrate_radial(f, tol / max(factor * R**n, 1e-300))
    scale = factor * R**n
    return QuadResult(scale * inner.value,
                      scale * inner.error_estimate + abs(inner.value) * R**n * ferr,
                      inner.evaluations, inner.converged)


# ---------------------------------------------------------------------------
# polar integration over Wulff balls


def _unit(phi):
    return np.stack([np.cos(phi), np.sin(phi)], axis=1)


def angular_rule(pair, level, measure="lebesgue", seed=0):
    """Nodes theta on the Wulff sphere and weights w with sum(w) = n*omega_{n,F}
    (``lebesgue``) or H^{n-1}(Wulff sphere) (``grad_polar``).

    n = 2: composite Gauss-Legendre in the Euclidean angle, 8 panels of
    ``2 + 2**level`` nodes.  n >= 3: scrambled Sobol points on the sphere,
    2^(8 + level) of them, with weights |S^{n-1}| F°^{-n} / m.
    """
    n = pair.n
    if n == 2:
        phi, w = _rules.circle_rule(2 + 2**level)
        omega = _unit(phi)
    else:
        m = 1 << (8 + level)
        omega = _rules.sphere_points(n, m, seed=seed)
        w = np.full(m, _rules.sphere_area(n) / m)
    f0 = pair.F0(omega)
    theta = omega / f0[:, None]
    w = w * f0 ** (-n)
    if measure == "grad_polar":
        w = w * np.linalg.norm(pair.grad_F0(omega), axis=1)
    elif measure != "lebesgue":
        raise DomainError(f"unknown measure {measure!r}")
    return theta, w


def integrate_polar(G, pair, tol=1e-9, measure="lebesgue", breakpoints=(),
                    max_level=6, seed=0, max_evals=2_000_000):
    """Integral over a Wulff ball of a function given in polar form.

    ``G(s, theta)`` must return an array of shape ``(len(theta), len(s))``
    holding (R e^{-s})^n times the integrand at x = R e^{-s} theta, i.e. the
    integrand multiplied by F°(x)^n.  The angular rule is refined until two
    successive levels agree to ``tol`` (n = 2); for n >= 3 the error is the
    spread over scrambled replicates.
    """
    n = pair.n

    def radial(level, rep_seed=0):
        theta, w = angular_rule(pair, level, measure, seed=rep_seed)
        h = lambda s: w @ G(s, theta)  # noqa: E731
        return integrate_half_line(h, 0.5 * tol, max_evals, breakpoints)

    if n == 2:
        prev = radial(1)
        evals = prev.evaluations
        for level in range(2, max_level + 1):
            cur = radial(level)
            evals += cur.evaluations
            ang = abs(cur.value - prev.value)
            if ang <= 0.5 * tol:
                break
            prev = cur
        err = cur.error_estimate + ang
        return QuadResult(cur.value, err, evals, cur.converged and err <= tol)
    reps = [radial(2, seed + r) for r in range(8)]
    vals = np.array([r.value for r in reps])
    err = float(vals.std(ddof=1) / math.sqrt(len(vals))) + max(r.error_estimate for r in reps)
    return QuadResult(float(vals.mean()), err, sum(r.evaluations for r in reps),
                      all(r.converged for r in reps))


# ---------------------------------------------------------------------------
# Monte-Carlo oracle over general domains


def integrate_domain(g, domain, budget=1 << 20, seed=0, singular=False, replicates=16):
    """Quasi-Monte-Carlo integral of a point evaluator over a domain.

    Scrambled Sobol points fill the bounding box; points outside the domain
    are rejected.  With ``singular=True`` the Wulff ball {F° < r_in/2} around
    the origin (r_in = largest Wulff radius inside the domain) is integrated
    separately on log-spaced radial shells with QMC directions, which copes
    with integrands behaving like X1^k / F°^n.  The error estimate is the
    standard error over ``replicates`` independent scramblings, widened
    by :func:`replicate_error`.
    """
    n = domain.n
    lo, hi = (np.asarray(b, dtype=float) for b in domain.bbox)
    box = float(np.prod(hi - lo))
    pair = domain.pair
    r_cut = 0.5 * _wulff_inradius(domain) if singular else 0.0
    per = max(256, budget // replicates)
    m = 1 << int(math.ceil(math.log2(per)))
    ests = []
    accepted = 0
    for r in range(replicates):
        u = qmc.Sobol(d=n, scramble=True, seed=seed * 1000 + r).random(m)
        x = lo + u * (hi - lo)
        keep = domain.contains(x)
        if singular:
            keep &= pair.F0(x) >= r_cut
        accepted += int(keep.sum())
        vals = np.zeros(m)
        if keep.any():
            vals[keep] = _eval_points(g, x[keep])
        ests.append(box * math.fsum(vals) / m)
    if accepted == 0 and not singular:
        raise DomainError("no sample landed inside the domain")
    ests = np.array(ests)
    value = float(ests.mean())
    err = replicate_error(ests)
    evals = m * replicates
    if singular:
        inner = _shell_integral(g, pair, r_cut, budget // 4, seed, replicates)
        value += inner.value
        err += inner.error_estimate
        evals += inner.evaluations
    return QuadResult(value, err, evals, True)


def _eval_points(g, x):
    y = np.asarray(g(x), dtype=float)
    bad = ~np.isfinite(y)
    if bad.any():
        raise DomainError(f"non-finite integrand value at {x[bad][0]!r}")
    return y


def _wulff_inradius(domain):
    if domain.kind == "wulff_ball":
        return domain.radius
    n = domain.n
    dirs = _unit(np.linspace(0, 2 * math.pi, 2048, endpoint=False)) if n == 2 else \
        _rules.sphere_points(n, 4096, seed=0)
    rho = domain.ray_exit(np.zeros(n), dirs)
    return float((rho * domain.pair.F0(dirs)).min())


def _shell_integral(g, pair, r_cut, budget, seed, replicates, s_max=200.0, shells=64):
    """Integral over {F° < r_cut} in log-spaced shells s = log(r_cut/F°).

    Beyond ``s_max`` the shell densities are extrapolated by a power law in
    1 + s fitted to the last eight shells (the log weights make every
    singular integrand here decay like a power of 1 + s); half the
    extrapolated tail is added to the error estimate.
    """
    n = pair.n
    edges = np.concatenate([[0.0], np.geomspace(0.05, s_max, shells)])
    per_shell = max(16, budget // (replicates * shells))
    m = 1 << int(math.ceil(math.log2(per_shell)))
    area = _rules.sphere_area(n)
    ests = []
    dens = np.zeros(shells)
    for r in range(replicates):
        sob = qmc.Sobol(d=2 if n == 2 else n + 1, scramble=True, seed=seed * 7919 + r)
        pts = sob.random(m * shells)
        total = 0.0
        for k in range(shells):
            a, b = edges[k], edges[k + 1]
            chunk = pts[k * m:(k + 1) * m]
            s = a + (b - a) * chunk[:, 0]
            z = _rules_normal(chunk[:, 1:], n)
            f0 = pair.F0(z)
            theta = z / f0[:, None]
            # dx = r_cut^n e^{-ns} F°(z)^{-n} ds dz over sphere directions z
            t = np.exp(-s)
            x = (r_cut * t)[:, None] * theta
            vals = _eval_points(g, x) * (r_cut * t) ** n * f0 ** (-n)
            mean = area * math.fsum(vals) / m
            dens[k] += mean / replicates
            total += (b - a) * mean
        ests.append(total)
    ests = np.array(ests)
    mids = 0.5 * (edges[1:] + edges[:-1])
    tail = 0.0
    last = dens[-8:]
    if np.all(last > 0) or np.all(last < 0):
        slope, icpt = np.polyfit(np.log1p(mids[-8:]), np.log(np.abs(last)), 1)
        p = -slope
        if p > 1.0:
            tail = math.copysign(math.exp(icpt) * (1.0 + s_max) ** (1.0 - p) / (p - 1.0), last[-1])
        else:
            tail = math.inf
    err = replicate_error(ests) + 0.5 * abs(tail)
    return QuadResult(float(ests.mean()) + tail, err, m * shells * replicates,
                      math.isfinite(tail))


def _rules_normal(u, n):
    """Map uniforms to directions on S^{n-1} (one column for n = 2, n otherwise)."""
    if n == 2:
        return _unit(2.0 * math.pi * u[:, 0])
    z = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# the h_r kernel integral


def hr_exponent(n, r):
    return n - (n - 1) * r


def compute_hr(x, domain, r, budget=1 << 14, tol=1e-10, seed=0):
    """h_r(x) = integral over the domain of |x - y|^{-(n-1) r} dy.

    Integrated exactly along rays from x: each direction w contributes
    rho(w)^beta / beta with beta = n - (n-1) r and rho the distance to the
    boundary.  n = 2 uses Gauss-Legendre in the angle with doubling; n >= 3
    averages scrambled Sobol directions over replicates.
    """
    n = domain.n
    beta = hr_exponent(n, r)
    if not beta > 0:
        raise DomainError(f"|x-y|^-(n-1)r is not integrable for r={r!r}, n={n}")
    x = np.asarray(x, dtype=float).reshape(n)
    if not bool(np.all(domain.contains(x[None]))):
        raise DomainError("h_r is evaluated at points of the domain only")

    def ray_integral(w):
        rho = domain.ray_exit(x, w)
        return rho**beta / beta

    if n == 2:
        prev = None
        m = 4
        evals = 0
        while True:
            phi, w = _rules.circle_rule(m)
            val = float(np.dot(w, ray_integral(_unit(phi))))
            evals += len(phi)
            if prev is not None and (abs(val - prev) <= tol * val or evals >= budget):
                return QuadResult(val, abs(val - prev), evals, abs(val - prev) <= tol * val)
            prev = val
            m *= 2
    per = max(256, budget // 8)
    vals = np.array([float(np.mean(ray_integral(_rules.sphere_points(n, per, seed=seed + k))))
                     for k in range(8)])
    area = _rules.sphere_area(n)
    return QuadResult(area * float(vals.mean()), area * float(vals.std(ddof=1)) / math.sqrt(8),
                      8 * per, True)


def require_converged(res, what):
    if not res.converged:
        raise BudgetExhausted(f"{what}: error estimate {res.error_estimate:.3e} above target")
    return res
