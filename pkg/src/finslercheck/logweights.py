"""Logarithmic weights X1(t) = 1/(1 - log t) and X2 = X1(X1(t)).

Both are defined on [0, 1] with X1(0) = X2(0) = 0.  The ``*_s`` variants take
the log coordinate s = -log t >= 0 instead, which keeps the weights exact at
radii far below the double-precision underflow threshold.
"""

import numpy as np

from .errors import DomainError

_TINY = 1e-300


def _as_unit_interval(t, open_left=False):
    arr = np.asarray(t, dtype=float)
    bad = ~np.isfinite(arr) | (arr < 0.0) | (arr > 1.0)
    if open_left:
        bad |= arr <= 0.0
    if np.any(bad):
        lo = "(0, 1]" if open_left else "[0, 1]"
        raise DomainError(f"argument must lie in {lo}, got {arr[bad].ravel()[0]!r}")
    return arr


def _out(arr):
    return float(arr) if arr.ndim == 0 else arr


def x1(t):
    t = _as_unit_interval(t)
    out = np.zeros_like(t)
    pos = t >= _TINY
    out[pos] = 1.0 / (1.0 - np.log(t[pos]))
    return _out(out)


def x2(t):
    t = _as_unit_interval(t)
    out = np.zeros_like(t)
    pos = t >= _TINY
    # X2 = 1/(1 + log(1 - log t)); log1p keeps accuracy near t = 1
    out[pos] = 1.0 / (1.0 + np.log1p(-np.log(t[pos])))
    return _out(out)


def dx1(t):
    """Derivative X1'(t) = X1(t)^2 / t on (0, 1]."""
    t = _as_unit_interval(t, open_left=True)
    w = 1.0 / (1.0 - np.log(t))
    return _out(w * w / t)


def dx2(t):
    """Derivative X2'(t) = X1(t) X2(t)^2 / t on (0, 1]."""
    t = _as_unit_interval(t, open_left=True)
    s = -np.log(t)
    w1 = 1.0 / (1.0 + s)
    w2 = 1.0 / (1.0 + np.log1p(s))
    return _out(w1 * w2 * w2 / t)


def x1_s(s):
    """X1 in the log coordinate: 1/(1 + s)."""
    s = np.asarray(s, dtype=float)
    return _out(1.0 / (1.0 + s))


def x2_s(s):
    """X2 in the log coordinate: 1/(1 + log(1 + s))."""
    s = np.asarray(s, dtype=float)
    return _out(1.0 / (1.0 + np.log1p(s)))


def log_inv_x1_s(s):
    """log(1/X1) = log(1 + s) in the log coordinate."""
    return _out(np.log1p(np.asarray(s, dtype=float)))
