"""Campaign configuration: INI grammar, validation and defaults.

Grammar (``configparser`` syntax, ``#`` or ``;`` comments)::

    [campaign]
    seed = 0                 # required for reproducibility; default 0
    dimension = 2
    radius = 1.0             # Wulff-ball radius R
    jobs = 1
    format = json            # json | csv
    output = reports.json    # optional; stdout when absent

    [tolerances]             # optional overrides
    quadrature = 1e-9
    lemma = 1e-10
    radial = 1e-10

    [budgets]                # optional overrides
    sigma_pairs = 10000
    equivalence_samples = 10000
    identity_samples = 1000
    hr_samples = 64

    [norm <label>]           # one section per norm
    kind = euclidean | ellipsoid | p_norm | custom
    matrix = 4 0 0 1         # ellipsoid, row-major
    p = 4/3                  # p_norm, p > 1
    of = <label>             # custom: the named norm's value, gradients by finite differences

    [profile <label>]
    kind = linear | quadratic | power | one_minus_power | cosine | moser | truncated_log | zero
    a = 2                    # power, a >= 1
    b = 2                    # one_minus_power, b > 0
    k = 7.389 / log_k = 2    # moser
    delta = 0.1              # truncated_log

    [check <id>]             # id is the check kind unless ``kind =`` is given
    q = 3, 4, 6, 8           # q_estimate, hr_bound; every q must exceed the dimension
    measures = lebesgue, grad_polar
    variants = radial, modulated
    gamma_factors = 0.9, 1.1
    gamma_fraction = 0.5
    k_max = 400

Lists are comma separated; numbers accept fractions such as ``4/3``.  All
problems are collected and raised together as one :class:`ConfigError`.
"""

import configparser
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import testfunctions as tf
from .errors import ConfigError
from .finsler import EllipsoidNorm, EuclideanNorm, PNorm, custom_from, make_pair

CHECK_KINDS = ("identities", "lemma_1d", "link", "improved", "q_estimate", "hr_bound",
               "series_threshold", "exp_integrability", "radial_theorem")
NORM_KINDS = ("euclidean", "ellipsoid", "p_norm", "custom")
MEASURES = ("lebesgue", "grad_polar")
VARIANTS = ("radial", "modulated")
FORMATS = ("json", "csv")

DEFAULT_TOLERANCES = {"quadrature": 1e-9, "lemma": 1e-10, "radial": 1e-10}
DEFAULT_BUDGETS = {"sigma_pairs": 10_000, "equivalence_samples": 10_000,
                   "identity_samples": 1000, "hr_samples": 64}

CAMPAIGN_KEYS = {"seed", "dimension", "radius", "jobs", "format", "output"}
NORM_KEYS = {"euclidean": set(), "ellipsoid": {"matrix"}, "p_norm": {"p"}, "custom": {"of"}}
PROFILE_KEYS = {"linear": set(), "quadratic": set(), "power": {"a"},
                "one_minus_power": {"b"}, "cosine": set(), "moser": {"k", "log_k"},
                "truncated_log": {"delta"}, "zero": set()}
CHECK_KEYS = {
    "identities": set(),
    "lemma_1d": set(),
    "link": {"measures", "variants"},
    "improved": {"variants"},
    "q_estimate": {"q", "variants"},
    "hr_bound": {"q"},
    "series_threshold": {"k_max"},
    "exp_integrability": {"variants", "gamma_fraction"},
    "radial_theorem": {"gamma_factors"},
}
CHECK_DEFAULTS = {
    "link": {"measures": MEASURES, "variants": VARIANTS},
    "improved": {"variants": VARIANTS},
    "q_estimate": {"q": (3.0, 4.0, 6.0, 8.0), "variants": VARIANTS},
    "hr_bound": {"q": (4.0,)},
    "series_threshold": {"k_max": 400},
    "exp_integrability": {"variants": VARIANTS, "gamma_fraction": 0.5},
    "radial_theorem": {"gamma_factors": (0.9, 1.1), "variants": ("radial",)},
}


DEFAULT_CONFIG = """\
[campaign]
seed = 0
dimension = 2
radius = 1.0
jobs = 1
format = json

[norm euclidean]
kind = euclidean

[norm ellipse]
kind = ellipsoid
matrix = 4 0 0 1

[norm l4_3]
kind = p_norm
p = 4/3

[profile linear]
kind = linear

[profile quadratic]
kind = quadratic

[profile cosine]
kind = cosine

[profile moser_e2]
kind = moser
log_k = 2

[check identities]
[check lemma_1d]
[check link]
[check improved]
[check q_estimate]
[check hr_bound]
[check series_threshold]
[check exp_integrability]
[check radial_theorem]
"""


def parse_number(text):
    """Float from '1.5', '1e-3' or a fraction such as '4/3'."""
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        return float(Fraction(text))


def parse_list(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


@dataclass(frozen=True)
class NormSpec:
    label: str
    kind: str
    n: int
    params: dict = field(default_factory=dict)

    def build_norm(self, specs=None):
        if self.kind == "euclidean":
            return EuclideanNorm(self.n)
        if self.kind == "ellipsoid":
            return EllipsoidNorm(np.asarray(self.params["matrix"]).reshape(self.n, self.n))
        if self.kind == "p_norm":
            return PNorm(self.params["p"], self.n)
        base = (specs or {})[self.params["of"]].build_norm(specs)
        return custom_from(base)

    def build(self, specs=None):
        return make_pair(self.build_norm(specs))

    def describe(self):
        return {"label": self.label, "kind": self.kind, "n": self.n, **self.params}


@dataclass(frozen=True)
class CheckSpec:
    label: str
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CampaignConfig:
    seed: int = 0
    dimension: int = 2
    radius: float = 1.0
    jobs: int = 1
    format: str = "json"
    output: str = None
    norms: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    checks: tuple = ()
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    budgets: dict = field(default_factory=lambda: dict(DEFAULT_BUDGETS))

    def with_overrides(self, **kw):
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def build_pairs(self):
        return {label: spec.build(self.norms) for label, spec in self.norms.items()}


class _Errors(list):
    def add(self, where, msg):
        self.append(f"[{where}] {msg}")


def _get(section, key, conv, errors, where, default=None):
    if key not in section:
        return default
    raw = section[key]
    try:
        return conv(raw)
    except (ValueError, ZeroDivisionError, TypeError):
        errors.add(where, f"{key} = {raw!r} is not a valid value")
        return default


def _unknown(section, allowed, errors, where):
    for key in section:
        if key not in allowed:
            errors.add(where, f"unknown key {key!r}")


def _parse_norm(label, sec, n, errors, where):
    kind = sec.get("kind")
    if kind not in NORM_KINDS:
        errors.add(where, f"kind must be one of {', '.join(NORM_KINDS)}; got {kind!r}")
        return None
    _unknown(sec, NORM_KEYS[kind] | {"kind"}, errors, where)
    params = {}
    if kind == "ellipsoid":
        m = _get(sec, "matrix", lambda t: [parse_number(v) for v in t.replace(",", " ").split()],
                 errors, where)
        if m is None:
            errors.add(where, "ellipsoid needs matrix = <n*n entries, row-major>")
            return None
        if len(m) != n * n:
            errors.add(where, f"matrix needs {n * n} entries for dimension {n}; got {len(m)}")
            return None
        A = np.asarray(m).reshape(n, n)
        if not np.allclose(A, A.T):
            errors.add(where, "matrix must be symmetric")
            return None
        if np.linalg.eigvalsh(A).min() <= 0:
            errors.add(where, "matrix must be positive definite")
            return None
        params["matrix"] = m
    elif kind == "p_norm":
        p = _get(sec, "p", parse_number, errors, where)
        if p is None:
            errors.add(where, "p_norm needs p")
            return None
        if not (p > 1 and math.isfinite(p)):
            errors.add(where, f"p = {p!r} rejected: strong convexity needs the smooth regime "
                              "1 < p < inf")
            return None
        params["p"] = p
    elif kind == "custom":
        of = sec.get("of")
        if not of:
            errors.add(where, "custom needs of = <norm label>")
            return None
        params["of"] = of.strip()
    return NormSpec(label, kind, n, params)


def _parse_profile(label, sec, errors, where):
    kind = sec.get("kind")
    if kind not in PROFILE_KEYS:
        errors.add(where, f"kind must be one of {', '.join(PROFILE_KEYS)}; got {kind!r}")
        return None
    _unknown(sec, PROFILE_KEYS[kind] | {"kind"}, errors, where)
    kw = {}
    for key in PROFILE_KEYS[kind]:
        val = _get(sec, key, parse_number, errors, where)
        if val is not None:
            kw[key] = val
    if kind in ("power", "one_minus_power", "truncated_log") and not kw:
        errors.add(where, f"{kind} needs {', '.join(sorted(PROFILE_KEYS[kind]))}")
        return None
    if kind == "moser" and len(kw) != 1:
        errors.add(where, "moser needs exactly one of k, log_k")
        return None
    try:
        return tf.PROFILE_FACTORIES[kind](**kw)
    except ValueError as exc:
        errors.add(where, str(exc))
        return None


def _parse_check(label, sec, n, errors, where):
    kind = sec.get("kind", label)
    if kind not in CHECK_KINDS:
        errors.add(where, f"unknown check {kind!r}; known: {', '.join(CHECK_KINDS)}")
        return None
    _unknown(sec, CHECK_KEYS[kind] | {"kind"}, errors, where)
    params = dict(CHECK_DEFAULTS.get(kind, {}))
    if "q" in sec:
        q = _get(sec, "q", lambda t: tuple(parse_number(v) for v in parse_list(t)), errors, where)
        if q is not None:
            bad = [v for v in q if not v > n]
            if bad:
                errors.add(where, f"{kind} requires q > n = {n} (the L^q estimate needs q > n); "
                                  f"got q = {', '.join(f'{v:g}' for v in bad)}")
            params["q"] = q
    for key, allowed in (("measures", MEASURES), ("variants", VARIANTS)):
        if key in sec:
            vals = parse_list(sec[key])
            wrong = [v for v in vals if v not in allowed]
            if wrong:
                errors.add(where, f"{key}: unsupported {', '.join(wrong)} "
                                  f"(supported: {', '.join(allowed)})")
            params[key] = vals
    if "gamma_factors" in sec:
        gf = _get(sec, "gamma_factors", lambda t: tuple(parse_number(v) for v in parse_list(t)),
                  errors, where)
        if gf is not None:
            if len(gf) != 2 or not (0 < gf[0] < 1 < gf[1]):
                errors.add(where, "gamma_factors needs two values lo < 1 < hi")
            params["gamma_factors"] = gf
    if "gamma_fraction" in sec:
        g = _get(sec, "gamma_fraction", parse_number, errors, where)
        if g is not None and not 0 < g < 1:
            errors.add(where, "gamma_fraction must lie in (0, 1)")
        params["gamma_fraction"] = g
    if "k_max" in sec:
        k = _get(sec, "k_max", int, errors, where)
        if k is not None and k < 200:
            errors.add(where, "k_max must be at least 200")
        params["k_max"] = k
    return CheckSpec(label, kind, params)


def parse_config(text):
    """Parse and validate campaign text; raises ConfigError listing every problem."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"),
                                   interpolation=None, allow_no_value=False)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax: {exc}"]) from None
    errors = _Errors()
    camp = cp["campaign"] if cp.has_section("campaign") else {}
    if camp:
        _unknown(camp, CAMPAIGN_KEYS, errors, "campaign")
    seed = _get(camp, "seed", int, errors, "campaign", 0)
    n = _get(camp, "dimension", int, errors, "campaign", 2)
    if n is None or n < 2:
        errors.add("campaign", f"dimension must be an integer >= 2; got {n!r}")
        n = 2
    radius = _get(camp, "radius", parse_number, errors, "campaign", 1.0)
    if not (radius > 0 and math.isfinite(radius)):
        errors.add("campaign", "radius must be positive")
    jobs = _get(camp, "jobs", int, errors, "campaign", 1)
    if jobs is not None and jobs < 1:
        errors.add("campaign", "jobs must be >= 1")
    fmt = camp.get("format", "json")
    if fmt not in FORMATS:
        errors.add("campaign", f"format must be json or csv; got {fmt!r}")
    output = camp.get("output")

    tolerances = dict(DEFAULT_TOLERANCES)
    budgets = dict(DEFAULT_BUDGETS)
    for name, target, conv in (("tolerances", tolerances, parse_number), ("budgets", budgets, int)):
        if cp.has_section(name):
            sec = cp[name]
            _unknown(sec, set(target), errors, name)
            for key in target:
                val = _get(sec, key, conv, errors, name)
                if val is not None:
                    if not val > 0:
                        errors.add(name, f"{key} must be positive")
                    target[key] = val

    norms, profiles, checks = {}, {}, []
    for sname in cp.sections():
        if sname in ("campaign", "tolerances", "budgets"):
            continue
        head, _, label = sname.partition(" ")
        label = label.strip()
        if head not in ("norm", "profile", "check") or not label:
            errors.add(sname, "unknown section (expected campaign, tolerances, budgets, "
                              "'norm <label>', 'profile <label>' or 'check <id>')")
            continue
        sec = cp[sname]
        if head == "norm":
            spec = _parse_norm(label, sec, n, errors, sname)
            if spec is not None:
                norms[label] = spec
        elif head == "profile":
            prof = _parse_profile(label, sec, errors, sname)
            if prof is not None:
                profiles[label] = prof
        else:
            chk = _parse_check(label, sec, n, errors, sname)
            if chk is not None:
                checks.append(chk)

    for label, spec in norms.items():
        if spec.kind == "custom":
            target = norms.get(spec.params["of"])
            if target is None:
                errors.add(f"norm {label}", f"of = {spec.params['of']!r} names no defined norm")
            elif target.kind == "custom":
                errors.add(f"norm {label}", "custom norms must wrap a built-in norm")
    needs_norm = any(c.kind not in ("lemma_1d",) for c in checks)
    needs_profile = any(c.kind not in ("identities", "hr_bound", "series_threshold")
                        for c in checks)
    if checks and needs_norm and not norms:
        errors.add("campaign", "checks need at least one [norm <label>] section")
    if checks and needs_profile and not profiles:
        errors.add("campaign", "checks need at least one [profile <label>] section")
    if errors:
        raise ConfigError(list(errors))
    return CampaignConfig(seed=seed, dimension=n, radius=radius, jobs=jobs, format=fmt,
                          output=output, norms=norms, profiles=profiles, checks=tuple(checks),
                          tolerances=tolerances, budgets=budgets)


def default_config():
    return parse_config(DEFAULT_CONFIG)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def parse_norm_arg(text, n=2):
    """Norm from a command-line token: 'euclidean', 'ellipsoid:4 0 0 1', 'p_norm:4/3'."""
    kind, _, arg = text.partition(":")
    kind = kind.strip()
    sec = {"kind": kind}
    if kind == "ellipsoid":
        sec["matrix"] = arg
    elif kind == "p_norm":
        sec["p"] = arg
    elif arg:
        raise ConfigError([f"norm {kind!r} takes no parameters"])
    errors = _Errors()
    spec = _parse_norm(kind, sec, n, errors, "norm")
    if errors:
        raise ConfigError(list(errors))
    return spec
