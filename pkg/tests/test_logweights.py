import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from finslercheck.errors import DomainError
from finslercheck.logweights import dx1, dx2, x1, x1_s, x2, x2_s

GRID = np.concatenate([np.geomspace(1e-300, 1e-3, 2000), np.linspace(1e-3, 1.0, 8000)])


def test_values_at_one():
    assert x1(1.0) == 1.0
    assert x2(1.0) == 1.0
    assert dx1(1.0) == pytest.approx(1.0, abs=1e-15)
    assert dx2(1.0) == pytest.approx(1.0, abs=1e-15)


def test_values_at_inverse_e():
    assert x1(math.exp(-1)) == pytest.approx(0.5, rel=1e-15)
    assert x2(math.exp(-1)) == pytest.approx(1 / (1 + math.log(2)), rel=1e-15)
    assert x2(math.exp(-1)) == pytest.approx(0.59061, abs=1e-5)


def test_x1_deep():
    assert x1(math.exp(-9)) == pytest.approx(0.1, rel=1e-14)


def test_zero_by_continuity():
    assert x1(0.0) == 0.0
    assert x2(0.0) == 0.0


@pytest.mark.parametrize("t", [-0.1, 1.5, math.nan])
def test_domain(t):
    with pytest.raises(DomainError):
        x1(t)
    with pytest.raises(DomainError):
        x2(t)


def test_identity_log_prop_one():
    a, b = x1(GRID), x2(GRID)
    lhs = -np.log(a)
    rhs = (1 - b) / b
    mask = lhs > 0
    assert np.max(np.abs(lhs[mask] - rhs[mask]) / lhs[mask]) < 1e-12
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_identity_log_prop_two():
    a, b = x1(GRID), x2(GRID)
    L = np.log(1 / a)
    assert np.max(np.abs(b * L - (1 - b))) < 1e-12
    assert np.max(np.abs((1 - b) - L / (1 + L))) < 1e-12


def test_bounds_and_monotonicity():
    a, b = x1(GRID), x2(GRID)
    assert np.all((a >= 0) & (a <= 1) & (b >= 0) & (b <= 1))
    assert np.all(np.diff(a) >= 0) and np.all(np.diff(b) >= 0)
    assert np.all(b >= a)


def test_derivatives_second_order():
    t = np.linspace(0.05, 0.95, 50)
    errs = []
    for h in (1e-3, 5e-4):
        e1 = np.max(np.abs((x1(t + h) - x1(t - h)) / (2 * h) - dx1(t)))
        e2 = np.max(np.abs((x2(t + h) - x2(t - h)) / (2 * h) - dx2(t)))
        errs.append(max(e1, e2))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


@given(st.floats(min_value=0.0, max_value=690.0))
def test_log_coordinate_matches(s):
    t = math.exp(-s)
    assert x1_s(s) == pytest.approx(x1(t), rel=1e-13)
    assert x2_s(s) == pytest.approx(x2(t), rel=1e-13)


def test_clamp_below_tiny():
    # radii below 1e-300 are clamped to X = 0; the log coordinate stays exact
    assert x1(1e-301) == 0.0
    assert 0 < x1_s(800.0) < 1 / 800
