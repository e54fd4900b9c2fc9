"""Fixed quadrature rules and low-discrepancy point sets."""

import math
from functools import lru_cache

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

# Kronrod 15-point nodes/weights and the embedded 7-point Gauss weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod nodes (1, 3, ..., 13).
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[:3][::-1]


@lru_cache(maxsize=None)
def gauss_legendre(m):
    x, w = np.polynomial.legendre.leggauss(m)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def circle_rule(m, panels=8):
    """Composite Gauss-Legendre rule on [0, 2*pi).

    Panel edges sit on the axes and diagonals, where the built-in norms
    lose smoothness.
    """
    x, w = gauss_legendre(m)
    edges = np.linspace(0.0, 2.0 * math.pi, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    phi = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return phi, wts


def sphere_area(n):
    """Surface measure of the unit sphere S^{n-1}."""
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def ball_volume(n):
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def sphere_points(n, m, seed, scramble=True):
    """Quasi-random points on S^{n-1} (Sobol mapped through the normal ppf)."""
    k = max(1, int(math.ceil(math.log2(max(m, 2)))))
    u = qmc.Sobol(d=n, scramble=scramble, seed=seed).random_base2(k)[:m]
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    z = ndtri(u)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def start_directions(n, count):
    """Deterministic low-discrepancy directions used as multi-start seeds."""
    if n == 2:
        ang = math.pi * (np.arange(count) + 0.5) / count * 2.0
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    u = qmc.Halton(d=n, scramble=True, seed=12345).random(count)
    z = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)
