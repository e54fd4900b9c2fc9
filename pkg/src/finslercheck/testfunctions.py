"""Admissible test functions on Wulff balls.

Every function is evaluated in two ways: pointwise (``value``/``grad``) and
in polar form ``polar(s, theta)`` at x = R e^{-s} theta with F°(theta) = 1.
The polar form returns u and the *scaled gradient* F°(x) grad u(x), which
stays finite as x -> 0 for every family here and is what the functionals
integrate.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .logweights import x1_s

ZERO_TOL = 1e-14


def _s_of_t(t):
    with np.errstate(divide="ignore"):
        return -np.log(t)


@dataclass(frozen=True)
class RadialProfile:
    """Profile f on [0, 1] with f(1) = 0, given in both coordinates.

    ``f_s(s) = f(e^{-s})`` and ``df_s(s) = d/ds f(e^{-s}) = -t f'(t)``;
    ``breakpoints`` are t-values where f' jumps.  ``origin`` is
    ``"bounded"`` or ``"log_growth"``.
    """

    name: str
    f_s: object
    df_s: object
    params: dict = field(default_factory=dict)
    breakpoints: tuple = ()
    origin: str = "bounded"

    def __post_init__(self):
        end = float(np.asarray(self.f_s(np.array([0.0])))[0])
        if abs(end) > ZERO_TOL:
            raise DomainError(f"profile {self.name!r} has f(1) = {end!r}, expected 0")

    def f(self, t):
        t = np.asarray(t, dtype=float)
        return self.f_s(_s_of_t(t))

    def df(self, t):
        """f'(t) on (0, 1]."""
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0):
            raise DomainError("f' is evaluated on (0, 1] only")
        return -self.df_s(_s_of_t(t)) / t

    @property
    def breakpoints_s(self):
        return tuple(-math.log(t) for t in self.breakpoints if 0 < t < 1)

    def describe(self):
        return {"name": self.name, **self.params}

    def is_zero(self):
        return self.name == "zero"


def _vec(fun):
    def wrapped(s):
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(np.asarray(fun(s), dtype=float), s.shape).copy()
    return wrapped


def linear():
    """f(t) = 1 - t."""
    return RadialProfile("linear", _vec(lambda s: -np.expm1(-s)), _vec(lambda s: np.exp(-s)))


def quadratic():
    """f(t) = (1 - t)^2."""
    return RadialProfile(
        "quadratic", _vec(lambda s: np.expm1(-s) ** 2),
        _vec(lambda s: -2.0 * np.expm1(-s) * np.exp(-s)))


def power(a):
    """f(t) = (1 - t)^a, a >= 1."""
    a = float(a)
    if a < 1.0:
        raise DomainError("power profile needs a >= 1")
    return RadialProfile(
        "power", _vec(lambda s: (-np.expm1(-s)) ** a),
        _vec(lambda s: a * (-np.expm1(-s)) ** (a - 1.0) * np.exp(-s)), {"a": a})


def one_minus_power(b):
    """f(t) = 1 - t^b, b > 0."""
    b = float(b)
    if not b > 0:
        raise DomainError("one_minus_power needs b > 0")
    return RadialProfile(
        "one_minus_power", _vec(lambda s: -np.expm1(-b * s)),
        _vec(lambda s: b * np.exp(-b * s)), {"b": b})


def cosine():
    """f(t) = cos(pi t / 2)."""
    return RadialProfile(
        "cosine", _vec(lambda s: np.sin(0.5 * math.pi * -np.expm1(-s))),
        _vec(lambda s: 0.5 * math.pi * np.exp(-s) * np.sin(0.5 * math.pi * np.exp(-s))))


def moser(k=None, log_k=None):
    """Truncated logarithm f(t) = min(1, log(1/t) / log k), k > 1.

    ``log_k`` may be given instead of k, which is exact for k = e^m.
    """
    if (k is None) == (log_k is None):
        raise DomainError("give exactly one of k, log_k")
    L = float(log_k) if log_k is not None else math.log(float(k))
    if not L > 0 or not math.isfinite(L):
        raise DomainError("moser profile needs k > 1")
    return RadialProfile(
        "moser", _vec(lambda s: np.minimum(1.0, s / L)),
        _vec(lambda s: np.where(s < L, 1.0 / L, 0.0)),
        {"log_k": L}, breakpoints=(math.exp(-L),))


def truncated_log(delta):
    """f(t) = min(log(1/t), log(1/delta)), i.e. log(1/t) cut off at t = delta."""
    delta = float(delta)
    if not 0 < delta < 1:
        raise DomainError("truncated_log needs 0 < delta < 1")
    L = -math.log(delta)
    return RadialProfile(
        "truncated_log", _vec(lambda s: np.minimum(s, L)),
        _vec(lambda s: np.where(s < L, 1.0, 0.0)),
        {"delta": delta}, breakpoints=(delta,), origin="log_growth")


def zero():
    return RadialProfile("zero", _vec(lambda s: np.zeros_like(s)), _vec(lambda s: np.zeros_like(s)))


def scaled(profile, c):
    """c * f."""
    c = float(c)
    return RadialProfile(
        profile.name, _vec(lambda s: c * profile.f_s(s)), _vec(lambda s: c * profile.df_s(s)),
        {**profile.params, "scale": c * profile.params.get("scale", 1.0)},
        profile.breakpoints, profile.origin)


def weighted_profile(profile, power_):
    """X1(t)^power * f(t); power 1 - 1/n gives the profile of the v-transform."""
    a = float(power_)

    def f_s(s):
        return x1_s(s) ** a * profile.f_s(s)

    def df_s(s):
        w = x1_s(s)
        return w**a * profile.df_s(s) - a * w ** (a + 1.0) * profile.f_s(s)

    return RadialProfile(
        profile.name + "_x1w", _vec(f_s), _vec(df_s),
        {**profile.params, "x1_power": a}, profile.breakpoints, "bounded")


PROFILE_FACTORIES = {
    "linear": linear,
    "quadratic": quadratic,
    "power": power,
    "one_minus_power": one_minus_power,
    "cosine": cosine,
    "moser": moser,
    "truncated_log": truncated_log,
    "zero": zero,
}


# ---------------------------------------------------------------------------
# test functions


class TestFunction:
    """Base class for functions supported in a Wulff ball {F° < R}."""

    __test__ = False  # not a pytest class
    radial_profile = None

    def __init__(self, pair, domain):
        if domain.kind != "wulff_ball":
            raise DomainError("test functions live on Wulff balls {F° < R}")
        self.pair = pair
        self.domain = domain
        self.R = domain.radius
        self.n = pair.n

    @property
    def is_radial(self):
        return self.radial_profile is not None

    def _t_s(self, x):
        x = np.asarray(x, dtype=float)
        t = self.pair.F0(x) / self.R
        return x, np.asarray(t), _s_of_t(t)

    def value(self, x):
        raise NotImplementedError

    def grad(self, x):
        raise NotImplementedError

    def polar(self, s, theta):
        """(u, F°(x) grad u) at x = R e^{-s} theta; shapes (M, K) and (M, K, n)."""
        raise NotImplementedError

    def breakpoints_s(self):
        return ()

    def describe(self):
        raise NotImplementedError

    def _check_grad_point(self, x, t):
        if np.any(t < 1e-12):
            raise DomainError("gradient requested at F°(x) < 1e-12 R")


class RadialFunction(TestFunction):
    """u(x) = f(F°(x) / R)."""

    def __init__(self, profile, pair, domain):
        super().__init__(pair, domain)
        self.profile = profile
        self.radial_profile = profile

    def value(self, x):
        x, t, s = self._t_s(x)
        out = np.where(t < 1.0, self.profile.f_s(np.maximum(s, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out

    def grad(self, x):
        x, t, s = self._t_s(x)
        self._check_grad_point(x, t)
        inside = t < 1.0
        dfs = np.where(inside, self.profile.df_s(np.maximum(s, 0.0)), 0.0)
        # grad u = f'(t) grad F° / R and -t f'(t) = df_s
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(inside, -dfs / (t * self.R), 0.0)
        return coef[..., None] * self.pair.grad_F0(x)

    def polar(self, s, theta):
        s = np.asarray(s, dtype=float)
        u = np.broadcast_to(self.profile.f_s(s), (len(theta), len(s)))
        g = self.pair.grad_F0(theta)
        sg = -self.profile.df_s(s)[None, :, None] * g[:, None, :]
        return u, sg

    def breakpoints_s(self):
        return self.profile.breakpoints_s

    def describe(self):
        return {"type": "radial", "profile": self.profile.describe(), "R": self.R}


class ModulatedFunction(TestFunction):
    """Non-radial u(x) = f(F°(x)/R) (1 + a c(x)), c(x) = x_1 / sqrt(|x|^2 + rho^2).

    c is a smooth surrogate for the cosine of the polar angle; rho = R/2.
    """

    def __init__(self, profile, pair, domain, amplitude=0.5):
        super().__init__(pair, domain)
        if not abs(amplitude) < 1:
            raise DomainError("modulation amplitude must lie in (-1, 1)")
        self.profile = profile
        self.amplitude = float(amplitude)
        self.rho = 0.5 * self.R

    def _c(self, x):
        d = np.sqrt(np.sum(x * x, axis=-1) + self.rho**2)
        c = x[..., 0] / d
        dc = -x[..., 0, None] * x / d[..., None] ** 3
        dc[..., 0] += 1.0 / d
        return c, dc

    def value(self, x):
        x, t, s = self._t_s(x)
        c, _ = self._c(x)
        out = np.where(t < 1.0, self.profile.f_s(np.maximum(s, 0.0)) * (1 + self.amplitude * c), 0.0)
        return float(out) if out.ndim == 0 else out

    def grad(self, x):
        x, t, s = self._t_s(x)
        self._check_grad_point(x, t)
        inside = t < 1.0
        s = np.maximum(s, 0.0)
        c, dc = self._c(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            coef = np.where(inside, -self.profile.df_s(s) / (t * self.R), 0.0)
        f = np.where(inside, self.profile.f_s(s), 0.0)
        return ((coef * (1 + self.amplitude * c))[..., None] * self.pair.grad_F0(x)
                + (self.amplitude * f)[..., None] * dc)

    def polar(self, s, theta):
        s = np.asarray(s, dtype=float)
        r = self.R * np.exp(-s)                            # F°(x)
        x = r[None, :, None] * theta[:, None, :]
        c, dc = self._c(x)
        f = self.profile.f_s(s)[None, :]
        mod = 1 + self.amplitude * c
        g = self.pair.grad_F0(theta)[:, None, :]
        sg = (-self.profile.df_s(s)[None, :, None] * mod[..., None] * g
              + (self.amplitude * f * r[None, :])[..., None] * dc)
        return f * mod, sg

    def breakpoints_s(self):
        return self.profile.breakpoints_s

    def describe(self):
        return {"type": "modulated", "profile": self.profile.describe(), "R": self.R,
                "amplitude": self.amplitude}


class TransformedFunction(TestFunction):
    """w(x) = X1(F°(x)/R)^power u(x)."""

    def __init__(self, base, power_):
        super().__init__(base.pair, base.domain)
        self.base = base
        self.power = float(power_)
        if base.radial_profile is not None:
            self.radial_profile = weighted_profile(base.radial_profile, self.power)

    def value(self, x):
        x, t, s = self._t_s(x)
        u = np.asarray(self.base.value(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(u == 0.0, 0.0, x1_s(np.maximum(s, 0.0)) ** self.power * u)
        return float(w) if w.ndim == 0 else w

    def grad(self, x):
        x, t, s = self._t_s(x)
        self._check_grad_point(x, t)
        s = np.maximum(s, 0.0)
        w = x1_s(s)
        a = self.power
        gu = self.base.grad(x)
        u = np.asarray(self.base.value(x))
        # d/dx X1(t)^a = a X1^(a+1) grad F° / F°(x)
        f0 = self.pair.F0(x)
        extra = (a * w ** (a + 1.0) * u / f0)[..., None] * self.pair.grad_F0(x)
        return (w**a)[..., None] * gu + extra

    def polar(self, s, theta):
        s = np.asarray(s, dtype=float)
        u, sg = self.base.polar(s, theta)
        w = x1_s(s)[None, :]
        a = self.power
        g = self.pair.grad_F0(theta)[:, None, :]
        v = w**a * u
        sgv = (w**a)[..., None] * (sg + (a * w * u)[..., None] * g)
        return v, sgv

    def breakpoints_s(self):
        return self.base.breakpoints_s()

    def describe(self):
        return {"type": "x1_weighted", "power": self.power, "base": self.base.describe()}


def make_radial(profile, pair, domain):
    """u(x) = f(F°(x)/R) on the Wulff ball ``domain``."""
    return RadialFunction(profile, pair, domain)


def make_modulated(profile, pair, domain, amplitude=0.5):
    return ModulatedFunction(profile, pair, domain, amplitude)


def v_transform(u):
    """v = X1^{1-1/n}(F°/R) u."""
    return TransformedFunction(u, 1.0 - 1.0 / u.n)


def inverse_v_transform(v):
    """u = X1^{-(1-1/n)}(F°/R) v."""
    return TransformedFunction(v, -(1.0 - 1.0 / v.n))


def scale_function(u, c):
    """c * u for radial or modulated u."""
    if isinstance(u, RadialFunction):
        return RadialFunction(scaled(u.profile, c), u.pair, u.domain)
    if isinstance(u, ModulatedFunction):
        return ModulatedFunction(scaled(u.profile, c), u.pair, u.domain, u.amplitude)
    if isinstance(u, TransformedFunction):
        return TransformedFunction(scale_function(u.base, c), u.power)
    raise DomainError(f"cannot scale {type(u).__name__}")
