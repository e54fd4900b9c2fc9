"""Finsler norms, their polars, Wulff geometry and norm-equivalence constants.

All evaluators are vectorised over leading axes: an input of shape ``(..., n)``
gives values of shape ``(...)``, gradients of shape ``(..., n)`` and Hessians
of shape ``(..., n, n)``.

Conventions
-----------
``EllipsoidNorm(A)`` is F(xi) = sqrt(xi . A xi) with polar sqrt(x . A^{-1} x);
its Wulff ball {x . A^{-1} x < 1} has volume omega_n sqrt(det A).
``PNorm(p)`` is F = l^p, whose polar is l^{p'} with p' = p/(p-1); its Wulff
ball is therefore the unit ball of l^{p'}.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from . import _rules
from .errors import DomainError, IdentityFailure, PolarConvergenceError

DEFAULT_FD_STEP = 1e-5
# Hessians by second differences use a coarser step: rounding error grows
# like eps/h^2 there.
HESS_STEP_FACTOR = 10.0
GRAD_EPS = 1e-12


def _as_points(x, n):
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1:] != (n,):
        raise DomainError(f"expected trailing dimension {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("non-finite input")
    return arr


def _flat(fun):
    """Apply a (m, n) -> (m, ...) kernel to arbitrary leading shape."""

    def wrapped(self, x):
        arr = _as_points(x, self.n)
        lead = arr.shape[:-1]
        out = fun(self, arr.reshape(-1, self.n))
        out = out.reshape(lead + out.shape[1:])
        return float(out) if out.ndim == 0 else out

    wrapped.__name__ = fun.__name__
    wrapped.__doc__ = fun.__doc__
    return wrapped


def _steps(x, h):
    r = np.linalg.norm(x, axis=1)
    return h * np.where(r > 0, r, 1.0)


def fd_gradient(fun, x, h):
    """Central-difference gradient of a scalar field on rows of ``x``."""
    m, n = x.shape
    step = _steps(x, h)
    g = np.empty((m, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        d = step[:, None] * e
        g[:, i] = (fun(x + d) - fun(x - d)) / (2.0 * step)
    return g


def fd_hessian(fun, x, h):
    """Second-difference Hessian of a scalar field on rows of ``x``."""
    m, n = x.shape
    step = _steps(x, h)
    f0 = fun(x)
    H = np.empty((m, n, n))
    eye = np.eye(n)
    for i in range(n):
        di = step[:, None] * eye[i]
        H[:, i, i] = (fun(x + di) - 2.0 * f0 + fun(x - di)) / step**2
        for j in range(i + 1, n):
            dj = step[:, None] * eye[j]
            v = (fun(x + di + dj) - fun(x + di - dj) - fun(x - di + dj)
                 + fun(x - di - dj)) / (4.0 * step**2)
            H[:, i, j] = H[:, j, i] = v
    return H


def fd_divergence(field_fun, x, h):
    """Central-difference divergence of a vector field on rows of ``x``."""
    m, n = x.shape
    step = _steps(x, h)
    div = np.zeros(m)
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        d = step[:, None] * e
        div += (field_fun(x + d)[:, i] - field_fun(x - d)[:, i]) / (2.0 * step)
    return div


class Norm:
    """Base class: even, 1-homogeneous norm on R^n.

    Subclasses implement ``_value`` and, when available in closed form,
    ``_grad`` and ``_hess``; otherwise central finite differences with step
    ``fd_step * |x|`` (gradients) and ``HESS_STEP_FACTOR * fd_step * |x|``
    (Hessians) are used.
    """

    kind = "abstract"
    analytic = False

    def __init__(self, n, fd_step=DEFAULT_FD_STEP):
        if int(n) != n or n < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {n!r}")
        self.n = int(n)
        self.fd_step = float(fd_step)

    def params(self):
        return {}

    def describe(self):
        return {"kind": self.kind, "n": self.n, **self.params()}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.describe().items())
        return f"{type(self).__name__}({args})"

    def __call__(self, x):
        return self.value(x)

    @_flat
    def value(self, x):
        return self._value(x)

    @_flat
    def grad(self, x):
        return self._grad(x)

    @_flat
    def hess(self, x):
        return self._hess(x)

    @_flat
    def grad_half_sq(self, x):
        """Gradient of F^2/2, i.e. F grad F."""
        return self._value(x)[:, None] * self._grad(x)

    @_flat
    def hess_half_sq(self, x):
        """Hessian of F^2/2, i.e. F hess F + grad F grad F^T."""
        g = self._grad(x)
        return self._value(x)[:, None, None] * self._hess(x) + g[:, :, None] * g[:, None, :]

    def _value(self, x):
        raise NotImplementedError

    def _grad(self, x):
        return fd_gradient(self._value, x, self.fd_step)

    def _hess(self, x):
        if type(self)._grad is not Norm._grad:
            return _fd_jacobian_sym(self._grad, x, self.fd_step)
        return fd_hessian(self._value, x, HESS_STEP_FACTOR * self.fd_step)

    def closed_polar(self):
        """The polar norm in closed form, or None."""
        return None

    def unit_ball_volume(self):
        """Volume of {F <= 1} (closed form where available, else None)."""
        return None


def _fd_jacobian_sym(grad_fun, x, h):
    m, n = x.shape
    step = _steps(x, h)
    J = np.empty((m, n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        d = step[:, None] * e
        J[:, :, j] = (grad_fun(x + d) - grad_fun(x - d)) / (2.0 * step[:, None])
    return 0.5 * (J + np.swapaxes(J, 1, 2))


class EuclideanNorm(Norm):
    kind = "euclidean"
    analytic = True

    def _value(self, x):
        return np.linalg.norm(x, axis=1)

    def _grad(self, x):
        r = self._value(x)
        return x / np.where(r > 0, r, 1.0)[:, None]

    def _hess(self, x):
        r = np.where(self._value(x) > 0, self._value(x), 1.0)
        u = x / r[:, None]
        eye = np.eye(self.n)[None]
        return (eye - u[:, :, None] * u[:, None, :]) / r[:, None, None]

    def closed_polar(self):
        return EuclideanNorm(self.n, self.fd_step)

    def unit_ball_volume(self):
        return _rules.ball_volume(self.n)


class EllipsoidNorm(Norm):
    """F(xi) = sqrt(xi . A xi) for symmetric positive-definite A."""

    kind = "ellipsoid"
    analytic = True

    def __init__(self, A, fd_step=DEFAULT_FD_STEP):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError("ellipsoid matrix must be square")
        super().__init__(A.shape[0], fd_step)
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * np.abs(A).max()):
            raise DomainError("ellipsoid matrix must be symmetric")
        if np.linalg.eigvalsh(A).min() <= 0:
            raise DomainError("ellipsoid matrix must be positive definite")
        self.A = 0.5 * (A + A.T)
        self.A.flags.writeable = False

    def params(self):
        return {"matrix": [float(v) for v in self.A.ravel()]}

    def _value(self, x):
        q = np.einsum("mi,ij,mj->m", x, self.A, x)
        return np.sqrt(np.maximum(q, 0.0))

    def _grad(self, x):
        f = self._value(x)
        return (x @ self.A) / np.where(f > 0, f, 1.0)[:, None]

    def _hess(self, x):
        f = np.where(self._value(x) > 0, self._value(x), 1.0)
        g = self._grad(x)
        return (self.A[None] - g[:, :, None] * g[:, None, :]) / f[:, None, None]

    def closed_polar(self):
        return EllipsoidNorm(np.linalg.inv(self.A), self.fd_step)

    def unit_ball_volume(self):
        return _rules.ball_volume(self.n) / math.sqrt(np.linalg.det(self.A))


class PNorm(Norm):
    """F = l^p norm, p > 1."""

    kind = "p_norm"
    analytic = True

    def __init__(self, p, n, fd_step=DEFAULT_FD_STEP):
        super().__init__(n, fd_step)
        p = float(p)
        if not p > 1.0 or not math.isfinite(p):
            raise DomainError(f"p_norm requires finite p > 1, got {p!r}")
        self.p = p

    def params(self):
        return {"p": self.p}

    def _value(self, x):
        a = np.abs(x)
        scale = a.max(axis=1)
        safe = np.where(scale > 0, scale, 1.0)
        return scale * np.sum((a / safe[:, None]) ** self.p, axis=1) ** (1.0 / self.p)

    def _grad(self, x):
        f = self._value(x)
        safe = np.where(f > 0, f, 1.0)[:, None]
        return np.sign(x) * (np.abs(x) / safe) ** (self.p - 1.0)

    def _hess(self, x):
        p = self.p
        f = self._value(x)
        safe = np.where(f > 0, f, 1.0)
        g = self._grad(x)
        with np.errstate(divide="ignore"):
            d = (np.abs(x) / safe[:, None]) ** (p - 2.0)
        H = -g[:, :, None] * g[:, None, :]
        idx = np.arange(self.n)
        H[:, idx, idx] += d
        return (p - 1.0) * H / safe[:, None, None]

    def closed_polar(self):
        return PNorm(self.p / (self.p - 1.0), self.n, self.fd_step)

    def unit_ball_volume(self):
        p, n = self.p, self.n
        return math.exp(n * math.log(2.0) + n * special.gammaln(1.0 + 1.0 / p)
                        - special.gammaln(1.0 + n / p))


class CustomNorm(Norm):
    """User-supplied norm; only F is required.

    ``func`` must map an ``(m, n)`` array to ``(m,)``; ``grad`` (optional)
    maps ``(m, n)`` to ``(m, n)``.
    """

    kind = "custom"

    def __init__(self, func, n, grad=None, fd_step=DEFAULT_FD_STEP, label="custom"):
        super().__init__(n, fd_step)
        self._func = func
        self._user_grad = grad
        self.label = label

    def params(self):
        return {"label": self.label}

    def _value(self, x):
        return np.asarray(self._func(x), dtype=float).reshape(len(x))

    def _grad(self, x):
        if self._user_grad is None:
            return fd_gradient(self._value, x, self.fd_step)
        return np.asarray(self._user_grad(x), dtype=float).reshape(x.shape)

    def _hess(self, x):
        if self._user_grad is None:
            return fd_hessian(self._value, x, HESS_STEP_FACTOR * self.fd_step)
        return _fd_jacobian_sym(self._grad, x, self.fd_step)

    def grad_half_sq(self, x):
        arr = _as_points(x, self.n)
        if self._user_grad is not None:
            return Norm.grad_half_sq(self, arr)
        flat = arr.reshape(-1, self.n)
        out = fd_gradient(lambda y: 0.5 * self._value(y) ** 2, flat, self.fd_step)
        return out.reshape(arr.shape)

    def hess_half_sq(self, x):
        arr = _as_points(x, self.n)
        flat = arr.reshape(-1, self.n)
        out = fd_hessian(lambda y: 0.5 * self._value(y) ** 2, flat,
                         HESS_STEP_FACTOR * self.fd_step)
        return out.reshape(arr.shape + (self.n,))


def support_maximizer(norm, x, starts=None, max_iter=80):
    """Maximise x.xi - F(xi)^2/2 over xi (rows of ``x`` in parallel).

    The maximiser is xi* = F°(x) grad F°(x) and F°(x) = x.xi*/F(xi*); the
    objective is concave, so damped Newton from the best of the multi-start
    directions converges.  Returns ``(xi, polar_value, grad_residual)``.
    """
    x = np.asarray(x, dtype=float).reshape(-1, norm.n)
    m, n = x.shape
    if starts is None:
        starts = _rules.start_directions(n, 8 * n)
    starts = np.concatenate([starts, -starts])
    Fs = norm.value(starts)
    ratios = (x @ starts.T) / Fs[None, :]
    best = np.argmax(ratios, axis=1)
    rbest = ratios[np.arange(m), best]
    zero = ~(rbest > 0)
    xi = (rbest / Fs[best])[:, None] * starts[best]
    xi[zero] = starts[0]

    def objective(z, rows=slice(None)):
        return np.einsum("mi,mi->m", x[rows], z) - 0.5 * norm.value(z) ** 2

    scale = np.linalg.norm(x, axis=1)
    scale = np.where(scale > 0, scale, 1.0)
    eye = np.eye(n)[None]
    obj = objective(xi)
    active = ~zero
    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        xa = xi[idx]
        g = x[idx] - norm.grad_half_sq(xa)
        H = norm.hess_half_sq(xa)
        lam = 1e-12 * np.trace(H, axis1=1, axis2=2)[:, None, None]
        step = np.linalg.solve(H + lam * eye, g[:, :, None])[:, :, 0]
        t = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        new = xa.copy()
        new_obj = obj[idx].copy()
        for _ls in range(40):
            trial = xa + t[:, None] * step
            tobj = objective(trial, idx)
            ok = ~accepted & (tobj >= obj[idx] - 1e-15 * np.abs(obj[idx]))
            new[ok] = trial[ok]
            new_obj[ok] = tobj[ok]
            accepted |= ok
            if accepted.all():
                break
            t = np.where(accepted, t, 0.5 * t)
        xi[idx] = new
        obj[idx] = new_obj
        rel_step = (np.linalg.norm(step, axis=1) * t) / np.maximum(
            np.linalg.norm(xa, axis=1), 1e-300)
        done = (rel_step < 1e-13) | ~accepted
        active[idx[done]] = False
    g = x - norm.grad_half_sq(xi)
    resid = np.linalg.norm(g, axis=1) / scale
    rough = np.flatnonzero((resid > POLISH_THRESHOLD) & ~zero)
    if len(rough):
        xi[rough] = _polish(norm, x[rough], xi[rough])
    val = np.einsum("mi,mi->m", x, xi) / norm.value(xi)
    val[zero] = 0.0
    resid[zero] = 0.0
    return xi, val, resid


POLISH_THRESHOLD = 1e-8
_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


def _polish(norm, x, xi, rounds=3, width=0.05, iters=60):
    """Derivative-free refinement of x.xi/F(xi) along tangent directions.

    Newton on FD derivatives stalls where grad F^2 is not Lipschitz (l^p with
    p < 2 near the axes); the ratio is quasi-concave along any line, so a
    golden-section sweep over an orthonormal tangent frame recovers the value.
    """
    m, n = xi.shape
    xi = xi / norm.value(xi)[:, None]

    def ratio(z):
        return np.einsum("mi,mi->m", x, z) / norm.value(z)

    for _ in range(rounds):
        for j in range(n - 1):
            # frame: QR of [xi, e_1, ..., e_n] gives tangent vectors after xi
            basis = np.concatenate([xi[:, :, None], np.broadcast_to(np.eye(n), (m, n, n))], axis=2)
            q, _ = np.linalg.qr(basis)
            d = q[:, :, j + 1]
            a = np.full(m, -width)
            b = np.full(m, width)
            c1 = b - _GOLD * (b - a)
            c2 = a + _GOLD * (b - a)
            f1 = ratio(xi + c1[:, None] * d)
            f2 = ratio(xi + c2[:, None] * d)
            for _it in range(iters):
                left = f1 >= f2
                b = np.where(left, c2, b)
                a = np.where(left, a, c1)
                nc1 = b - _GOLD * (b - a)
                nc2 = a + _GOLD * (b - a)
                c1, c2 = nc1, nc2
                f1 = ratio(xi + c1[:, None] * d)
                f2 = ratio(xi + c2[:, None] * d)
            t = 0.5 * (a + b)
            cand = xi + t[:, None] * d
            better = ratio(cand) > ratio(xi)
            xi = np.where(better[:, None], cand / norm.value(cand)[:, None], xi)
    return xi


class NumericPolarNorm(Norm):
    """Polar of an arbitrary norm by support-function maximisation."""

    kind = "numeric_polar"
    # The stationarity residual uses FD gradients of F^2/2, which are only
    # first-order accurate where that gradient has a kink (l^p, p < 2, near the
    # axes); the returned value is refined separately, so only gross failures
    # (non-convex or ill-scaled evaluators) trip this bound.
    RESIDUAL_TOL = 1e-2

    def __init__(self, primal, fd_step=DEFAULT_FD_STEP):
        super().__init__(primal.n, fd_step)
        self.primal = primal
        self._starts = _rules.start_directions(primal.n, 8 * primal.n)

    def params(self):
        return {"primal": self.primal.describe()}

    def _value(self, x):
        _, val, resid = support_maximizer(self.primal, x, self._starts)
        bad = resid > self.RESIDUAL_TOL
        if bad.any():
            raise PolarConvergenceError(
                f"polar maximisation stalled at x={x[bad][0]!r} "
                f"(relative stationarity residual {resid[bad].max():.2e})"
            )
        return val


ORIGIN_TOL = 1e-12


@dataclass(frozen=True)
class PolarPair:
    """A norm together with its polar.

    ``provenance`` is ``"closed_form"`` or ``"numeric"``;
    ``duality_residual`` bounds the relative disagreement between the polar
    evaluator and an independent sup over the primal unit ball, measured on
    validation samples.
    """

    primal: Norm
    polar: Norm
    provenance: str
    duality_residual: float

    @property
    def n(self):
        return self.primal.n

    def describe(self):
        return self.primal.describe()

    def F(self, xi):
        return self.primal.value(xi)

    def F0(self, x):
        return self.polar.value(x)

    def _away_from_origin(self, x):
        if np.any(np.asarray(self.F0(x)) < ORIGIN_TOL):
            raise DomainError("grad F° is undefined at the origin (F°(x) < 1e-12)")

    def grad_F0(self, x):
        self._away_from_origin(x)
        return self.polar.grad(x)

    def hess_F0(self, x):
        self._away_from_origin(x)
        return self.polar.hess(x)

    def grad_F(self, xi):
        return self.primal.grad(xi)

    @property
    def analytic(self):
        return self.primal.analytic and self.polar.analytic


def duality_gap(norm, x, xi):
    """Certified relative bracket width for F°(x) given a candidate maximiser.

    Lower bound: x.xi/F(xi).  Upper bound: write x = lam grad F(eta) + r with
    eta = xi/F(xi); F°(grad F(eta)) <= 1 by convexity and F°(r) <= |r|/alpha.
    """
    x = np.asarray(x, dtype=float).reshape(-1, norm.n)
    lower = np.einsum("mi,mi->m", x, xi) / norm.value(xi)
    eta = xi / norm.value(xi)[:, None]
    y = norm.grad(eta)
    lam = np.einsum("mi,mi->m", x, y) / np.einsum("mi,mi->m", y, y)
    r = x - lam[:, None] * y
    alpha = norm_min_on_sphere(norm)
    upper = lam + np.linalg.norm(r, axis=1) / alpha
    return (upper - lower) / np.maximum(lower, 1e-300)


def norm_min_on_sphere(norm, samples=4096):
    dirs = _rules.sphere_points(norm.n, samples, seed=0) if norm.n > 2 else \
        _rules.start_directions(2, samples)
    return float(norm.value(dirs).min())


def make_pair(norm, validation_samples=256, seed=0):
    """Build and validate a :class:`PolarPair` for ``norm``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((validation_samples, norm.n))
    closed = norm.closed_polar()
    xi, sup_val, resid = support_maximizer(norm, x)
    if closed is not None:
        ref = closed.value(x)
        residual = float(np.max(np.abs(sup_val - ref) / ref))
        pair = PolarPair(norm, closed, "closed_form", residual)
    else:
        gap = duality_gap(norm, x, xi)
        residual = float(np.max(np.maximum(gap, 0.0)))
        pair = PolarPair(norm, NumericPolarNorm(norm), "numeric", residual)
    if not np.all(resid < NumericPolarNorm.RESIDUAL_TOL):
        raise PolarConvergenceError("validation maximisation did not converge")
    return pair


def polar_eval(pair, x):
    """F°(x); F°(0) = 0."""
    return pair.F0(x)


def custom_from(norm, label=None):
    """Wrap a built-in norm's F evaluator as a gradient-free custom norm."""
    return CustomNorm(norm._value, norm.n, label=label or f"custom({norm.kind})",
                      fd_step=norm.fd_step)


# ---------------------------------------------------------------------------
# Wulff geometry


@dataclass(frozen=True)
class GeometryResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool
    method: str


def _circle_integral(fun, tol, budget):
    """Integrate a 2*pi-periodic function of the angle by doubling GL panels."""
    m = 8
    prev = None
    evals = 0
    while True:
        phi, w = _rules.circle_rule(m)
        val = float(np.dot(w, fun(phi)))
        evals += len(phi)
        if prev is not None:
            err = abs(val - prev)
            if err <= tol * max(1.0, abs(val)):
                return val, err, evals, True
            if evals + 16 * m > budget:
                return val, err, evals, False
        prev = val
        m *= 2


def _sphere_average(fun, n, budget, seed, replicates=8):
    per = max(64, budget // replicates)
    ests = []
    for r in range(replicates):
        pts = _rules.sphere_points(n, per, seed=seed + r)
        ests.append(float(np.mean(fun(pts))))
    ests = np.array(ests)
    return float(ests.mean()), float(ests.std(ddof=1) / math.sqrt(replicates)), per * replicates


def _unit(phi):
    return np.stack([np.cos(phi), np.sin(phi)], axis=1)


def wulff_volume(pair, budget=1 << 20, tol=1e-12, seed=0):
    """Volume omega_{n,F} of the Wulff ball {F° < 1}."""
    closed = _closed_wulff_volume(pair)
    if closed is not None:
        return GeometryResult(closed, 0.0, 0, True, "closed_form")
    n = pair.n
    if n == 2:
        val, err, ev, ok = _circle_integral(
            lambda phi: 0.5 * pair.F0(_unit(phi)) ** -2, tol, budget)
        return GeometryResult(val, err, ev, ok, "angular_quadrature")
    area = _rules.sphere_area(n)
    mean, err, ev = _sphere_average(lambda u: pair.F0(u) ** -n / n, n, budget, seed)
    return GeometryResult(area * mean, area * err, ev, True, "sphere_qmc")


def _closed_wulff_volume(pair):
    if pair.provenance != "closed_form":
        return None
    return pair.polar.unit_ball_volume()


def wulff_perimeter(pair, budget=1 << 20, tol=1e-12, seed=0):
    """Euclidean surface measure H^{n-1} of the Wulff sphere {F° = 1}.

    Computed as the sphere integral of |grad F°| F°^{-n}; closed form for the
    Euclidean norm and planar ellipses.
    """
    n = pair.n
    p = pair.primal
    if pair.provenance == "closed_form" and isinstance(p, EuclideanNorm):
        return GeometryResult(n * _rules.ball_volume(n), 0.0, 0, True, "closed_form")
    if pair.provenance == "closed_form" and isinstance(p, EllipsoidNorm) and n == 2:
        semi = np.sqrt(np.linalg.eigvalsh(p.A))
        a, b = float(semi.max()), float(semi.min())
        val = 4.0 * a * float(special.ellipe(1.0 - (b / a) ** 2))
        return GeometryResult(val, 0.0, 0, True, "closed_form")

    def integrand(u):
        return np.linalg.norm(pair.grad_F0(u), axis=-1) * pair.F0(u) ** -n

    if n == 2:
        val, err, ev, ok = _circle_integral(lambda phi: integrand(_unit(phi)), tol, budget)
        return GeometryResult(val, err, ev, ok, "angular_quadrature")
    area = _rules.sphere_area(n)
    mean, err, ev = _sphere_average(integrand, n, budget, seed)
    return GeometryResult(area * mean, area * err, ev, True, "sphere_qmc")


# ---------------------------------------------------------------------------
# Norm-equivalence constants


@dataclass(frozen=True)
class EquivalenceConstants:
    """alpha|x| <= F(x) <= beta|x|, alpha'|x| <= F°(x) <= beta'|x|,
    |grad F°| <= beta_tilde."""

    alpha: float
    beta: float
    alpha_polar: float
    beta_polar: float
    beta_tilde: float
    samples: int

    def as_dict(self):
        return {
            "alpha": self.alpha, "beta": self.beta,
            "alpha_polar": self.alpha_polar, "beta_polar": self.beta_polar,
            "beta_tilde": self.beta_tilde,
        }


MIN_EQUIVALENCE_SAMPLES = 10_000


def _extremize_circle(fun, samples):
    """max of fun over the unit circle (fun is pi-periodic by evenness)."""
    ang = np.linspace(0.0, math.pi, samples, endpoint=False)
    vals = fun(_unit(ang))
    j = int(np.argmax(vals))
    h = math.pi / samples
    res = optimize.minimize_scalar(
        lambda a: -float(fun(_unit(np.array([a])))[0]),
        bounds=(ang[j] - h, ang[j] + h), method="bounded",
        options={"xatol": 1e-13},
    )
    return max(float(vals[j]), -float(res.fun))


def _extremize_sphere(fun, n, samples, seed):
    pts = _rules.sphere_points(n, samples, seed=seed)
    vals = fun(pts)
    best = pts[np.argsort(vals)[-3:]]

    def neg(z):
        r = np.linalg.norm(z)
        return -float(fun((z / r)[None])[0]) if r > 0 else 0.0

    out = float(vals.max())
    for z0 in best:
        res = optimize.minimize(neg, z0, method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
        out = max(out, -float(res.fun))
    return out


def equivalence_constants(pair, samples=MIN_EQUIVALENCE_SAMPLES, seed=0):
    """Two-sided Euclidean comparison constants for F and F°, and beta_tilde."""
    if samples < 16:
        raise DomainError("equivalence_constants needs at least 16 samples")
    n = pair.n

    def ext(fun):
        if n == 2:
            return _extremize_circle(fun, samples)
        return _extremize_sphere(fun, n, samples, seed)

    gnorm = lambda u: np.linalg.norm(pair.grad_F0(u), axis=-1)  # noqa: E731
    return EquivalenceConstants(
        alpha=-ext(lambda u: -pair.F(u)),
        beta=ext(pair.F),
        alpha_polar=-ext(lambda u: -pair.F0(u)),
        beta_polar=ext(pair.F0),
        beta_tilde=ext(gnorm),
        samples=samples,
    )


# ---------------------------------------------------------------------------
# Domains


@dataclass(frozen=True)
class DomainSpec:
    """Bounded domain containing the origin.

    Either a Wulff ball ``{F° < radius}`` of ``pair`` or a custom region
    given by a vectorised membership predicate and a Euclidean bounding box.
    Custom regions are assumed star-shaped with respect to the origin.
    """

    kind: str
    pair: PolarPair
    radius: float = None
    membership: object = None
    bbox: tuple = None
    inner_radius: float = field(default=None)

    @classmethod
    def wulff_ball(cls, pair, radius=1.0):
        if not radius > 0:
            raise DomainError("Wulff ball radius must be positive")
        F_axes = pair.F(np.eye(pair.n))
        box = (-radius * F_axes, radius * F_axes)
        return cls("wulff_ball", pair, float(radius), None, box, float(radius))

    @classmethod
    def custom(cls, pair, membership, bbox, samples=4096):
        lo, hi = (np.asarray(b, dtype=float) for b in bbox)
        if not np.all(membership(np.zeros((1, pair.n)))):
            raise DomainError("domain must contain the origin")
        dom = cls("custom", pair, None, membership, (lo, hi), None)
        R = _custom_inner_radius(dom, samples)
        return cls("custom", pair, None, membership, (lo, hi), R)

    @property
    def n(self):
        return self.pair.n

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "wulff_ball":
            return self.pair.F0(x) < self.radius
        return np.asarray(self.membership(x), dtype=bool)

    def ray_exit(self, origin, directions, iters=64):
        """Distance from ``origin`` to the boundary along unit ``directions``."""
        origin = np.broadcast_to(np.asarray(origin, dtype=float), directions.shape)
        diam = float(np.linalg.norm(self.bbox[1] - self.bbox[0]))
        lo = np.zeros(len(directions))
        hi = np.full(len(directions), diam)
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            inside = self.contains(origin + mid[:, None] * directions)
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return 0.5 * (lo + hi)

    def volume(self):
        if self.kind == "wulff_ball":
            w = wulff_volume(self.pair).value
            return w * self.radius ** self.n
        n = self.n
        if n == 2:
            phi, wts = _rules.circle_rule(256)
            rho = self.ray_exit(np.zeros(2), _unit(phi))
            return float(np.dot(wts, 0.5 * rho**2))
        u = _rules.sphere_points(n, 1 << 14, seed=0)
        rho = self.ray_exit(np.zeros(n), u)
        return float(_rules.sphere_area(n) * np.mean(rho**n / n))

    def describe(self):
        if self.kind == "wulff_ball":
            return {"kind": "wulff_ball", "radius": self.radius}
        return {"kind": "custom", "bbox": [list(map(float, b)) for b in self.bbox]}


def _custom_inner_radius(dom, samples):
    n = dom.n
    dirs = _unit(np.linspace(0, 2 * math.pi, samples, endpoint=False)) if n == 2 else \
        _rules.sphere_points(n, samples, seed=0)
    rho = dom.ray_exit(np.zeros(n), dirs)
    vals = rho * dom.pair.F0(dirs)
    return float(vals.max())


# ---------------------------------------------------------------------------
# Pointwise identities


IDENTITY_NAMES = (
    "euler",              # grad F°(x).x - F°(x)
    "hessian_null",       # hess F°(x) x
    "div_x_over_F0",      # div(x/F°) - (n-1)/F°
    "div_x_over_F0n",     # div(x/F°^n)
    "div_weighted",       # div(x |grad F°| / F°^n)
    "dual_gradient",      # F_xi(grad F°(x)) - x/F°(x)
)


@dataclass(frozen=True)
class IdentityResiduals:
    residuals: dict
    cauchy_schwarz_slack: float
    dual_unit_residual: float
    method: str
    samples: int
    fd_step: float

    def max_residual(self):
        return max(self.residuals.values())


def _annulus_samples(n, m, rng, rmin=0.5, rmax=2.0):
    z = rng.standard_normal((m, n))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = rng.uniform(rmin, rmax, m)
    return z * r[:, None]


def identity_residuals(pair, samples=1000, fd_step=DEFAULT_FD_STEP, method="auto", seed=0):
    """Maximum residuals of the six pointwise identities on an annulus.

    ``method="analytic"`` uses closed-form gradients/Hessians and closed-form
    divergence expansions; ``"fd"`` differentiates F and F° numerically with
    central differences of step ``fd_step * |x|``.
    """
    if not fd_step > 0:
        raise DomainError("fd_step must be positive")
    if method == "auto":
        method = "analytic" if pair.analytic else "fd"
    n = pair.n
    rng = np.random.default_rng(seed)
    x = _annulus_samples(n, samples, rng)
    xi = _annulus_samples(n, samples, rng)
    F0 = pair.F0(x)

    if method == "analytic":
        g = pair.grad_F0(x)
        H = pair.hess_F0(x)
        Fxi_of = pair.grad_F
        euler = np.einsum("mi,mi->m", g, x)
        div1 = n / F0 - euler / F0**2
        div2 = n / F0**n - n * euler / F0 ** (n + 1)
        Hx = np.einsum("mij,mj->mi", H, x)
        gn = np.linalg.norm(g, axis=1)
        grad_gn = np.einsum("mij,mj->mi", H, g) / gn[:, None]
        div3 = gn * div2 + np.einsum("mi,mi->m", x, grad_gn) / F0**n
    elif method == "fd":
        F0f = lambda y: pair.polar._value(y)  # noqa: E731
        Ff = lambda y: pair.primal._value(y)  # noqa: E731
        gradf = lambda y: fd_gradient(F0f, y, fd_step)  # noqa: E731
        g = gradf(x)
        # H x is the derivative of grad F° along the ray through x
        step = _steps(x, HESS_STEP_FACTOR * fd_step) / np.linalg.norm(x, axis=1)
        Hx = (gradf(x * (1 + step)[:, None]) - gradf(x * (1 - step)[:, None])) / (
            2.0 * step[:, None])
        Fxi_of = lambda y: fd_gradient(Ff, y, fd_step)  # noqa: E731
        euler = np.einsum("mi,mi->m", g, x)
        div1 = fd_divergence(lambda y: y / F0f(y)[:, None], x, fd_step)
        div2 = fd_divergence(lambda y: y / F0f(y)[:, None] ** n, x, fd_step)
        # the field already holds a difference quotient: differentiate it on
        # the coarser Hessian scale to keep rounding error at eps/h^2
        div3 = fd_divergence(
            lambda y: y * (np.linalg.norm(gradf(y), axis=1) / F0f(y) ** n)[:, None],
            x, HESS_STEP_FACTOR * fd_step)
    else:
        raise DomainError(f"unknown method {method!r}")

    dual = Fxi_of(g) - x / F0[:, None]
    res = {
        "euler": float(np.max(np.abs(euler - F0))),
        "hessian_null": float(np.max(np.linalg.norm(Hx, axis=1))),
        "div_x_over_F0": float(np.max(np.abs(div1 - (n - 1) / F0))),
        "div_x_over_F0n": float(np.max(np.abs(div2))),
        "div_weighted": float(np.max(np.abs(div3))),
        "dual_gradient": float(np.max(np.linalg.norm(dual, axis=1))),
    }
    Fxi = pair.F(xi)
    slack = (Fxi * F0 - np.abs(np.einsum("mi,mi->m", xi, x))) / (Fxi * F0)
    dual_unit = float(np.max(np.abs(pair.F(g) - 1.0)))
    return IdentityResiduals(res, float(slack.min()), dual_unit, method, samples, fd_step)


def assert_identities(residuals, tolerance):
    """Raise :class:`IdentityFailure` for the first identity above tolerance."""
    for name in IDENTITY_NAMES:
        if residuals.residuals[name] > tolerance:
            raise IdentityFailure(name, residuals.residuals[name], tolerance)


def strong_convexity_probe(norm, samples=512, seed=0):
    """Smallest eigenvalue of hess(F^2/2) over sampled unit directions."""
    dirs = _rules.sphere_points(norm.n, samples, seed=seed)
    H = norm.hess_half_sq(dirs)
    return float(np.linalg.eigvalsh(H).min())


ANALYTIC_IDENTITY_TOL = 1e-6
FD_IDENTITY_TOL = 1e-4


def check_identities(pair, samples=1000, fd_step=DEFAULT_FD_STEP, method="auto", seed=0,
                     tolerance=None, strict=False, label=None):
    """Pointwise identity check as a report; lhs is the largest residual.

    The default tolerance is 1e-6 with analytic derivatives and 1e-4 with
    finite differences.  ``strict=True`` raises :class:`IdentityFailure`
    naming the first identity above tolerance.
    """
    from .reports import CheckReport

    res = identity_residuals(pair, samples, fd_step, method, seed)
    tol = tolerance if tolerance is not None else (
        ANALYTIC_IDENTITY_TOL if res.method == "analytic" else FD_IDENTITY_TOL)
    if strict:
        assert_identities(res, tol)
    worst = max(res.residuals, key=res.residuals.get)
    inputs = {"norm": pair.describe(), "provenance": pair.provenance, "samples": samples,
              "fd_step": fd_step, "method": res.method, "seed": seed}
    if label is not None:
        inputs["norm_label"] = label
    # Cauchy-Schwarz holds when the relative slack is >= -1e-10
    cs_ok = res.cauchy_schwarz_slack >= -1e-10
    report = CheckReport(
        "identities", inputs, res.max_residual(), 0.0, float(tol), 0.0,
        bool(res.max_residual() <= tol and cs_ok),
        notes=(f"largest residual: {worst}",),
        details={"residuals": dict(res.residuals),
                 "cauchy_schwarz_slack": res.cauchy_schwarz_slack,
                 "dual_unit_residual": res.dual_unit_residual,
                 "duality_residual": pair.duality_residual},
    )
    return report
