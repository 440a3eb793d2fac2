# isokernel/special_fn.py
"""
Zonal spherical functions on S^{d-1} = SO(d)/SO(d-1).

p_n^d(s) is the normalized Gegenbauer polynomial G_n^{(d-2)/2}(s) / G_n^{(d-2)/2}(1); d_n is the
dimension of the degree-n spherical harmonics and kappa_n = n(n+d-2) the Casimir eigenvalue.
Integrals over the sphere of zonal functions reduce to integrals against
alpha_d(ds) = c_d (1 - s^2)^{(d-3)/2} ds on [-1, 1].
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gammaln, roots_jacobi

from .errors import DomainError

_EDGE_TOL = 1e-14  # |s| up to 1 + _EDGE_TOL is accepted and clipped


@dataclass(frozen=True)
class SphereGeometry:
    """S^{d-1} embedded in R^d."""
    ambient_dim: int

    def __post_init__(self):
        d = self.ambient_dim
        if isinstance(d, bool) or not isinstance(d, (int, np.integer)) or d < 3:
            raise DomainError(f"ambient dimension must be an integer >= 3, got {d!r}")

    @property
    def manifold_dim(self) -> int:
        return self.ambient_dim - 1

    @property
    def nu(self) -> float:
        """Gegenbauer index (d-2)/2."""
        return (self.ambient_dim - 2) / 2.0

    @property
    def weight_exponent(self) -> float:
        return (self.ambient_dim - 3) / 2.0

    @cached_property
    def weight_const(self) -> float:
        """c_d = Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2))."""
        d = self.ambient_dim
        return float(np.exp(gammaln(d / 2.0) - gammaln((d - 1) / 2.0)) / math.sqrt(math.pi))

    @cached_property
    def volume(self) -> float:
        """Riemannian volume 2 pi^{d/2} / Gamma(d/2)."""
        d = self.ambient_dim
        return float(2.0 * np.exp((d / 2.0) * math.log(math.pi) - gammaln(d / 2.0)))


@dataclass(frozen=True)
class QuadratureRule:
    """
    Nodes/weights on (-1, 1) such that
        sum(weights * f(nodes) * (1 - nodes^2)^{(d-3)/2}) ~ int f(s) (1 - s^2)^{(d-3)/2} ds,
    exact for polynomial f of degree <= 2*order - 1. Consumers fold in c_d and the weight.
    """
    nodes: NDArray[np.float64]
    weights: NDArray[np.float64]
    order: int
    ambient_dim: int


def check_unit_interval(s: ArrayLike) -> NDArray[np.float64]:
    arr = np.asarray(s, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(np.abs(arr) > 1.0 + _EDGE_TOL):
        raise DomainError(f"argument must lie in [-1, 1], got {s!r}")
    return np.clip(arr, -1.0, 1.0)


def scalar_or_array(value: NDArray[np.float64], like: ArrayLike):
    if np.ndim(like) == 0:
        return float(value)
    return value


def gegenbauer(n: int, nu: float, s: ArrayLike):
    """G_n^nu(s) by the upward three-term recurrence
    n G_n = 2 s (n + nu - 1) G_{n-1} - (n + 2 nu - 2) G_{n-2}."""
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    if not nu > 0:
        raise DomainError(f"Gegenbauer index must be > 0, got {nu}")
    x = check_unit_interval(s)
    prev = np.ones_like(x)
    if n == 0:
        return scalar_or_array(prev, s)
    cur = 2.0 * nu * x
    for k in range(2, n + 1):
        prev, cur = cur, (2.0 * x * (k + nu - 1.0) * cur - (k + 2.0 * nu - 2.0) * prev) / k
    return scalar_or_array(cur, s)


def spherical_fn_table(n_max: int, geom: SphereGeometry, s: ArrayLike) -> NDArray[np.float64]:
    """
    Rows p_0 .. p_{n_max} evaluated at every point of s, shape (n_max + 1, len(s)).

    Uses the recurrence normalized at s = 1,
        (n + d - 3) p_n = (2n + d - 4) s p_{n-1} - (n - 1) p_{n-2},
    whose coefficients make p_n(1) = 1 exact in floating point.
    """
    if n_max < 0:
        raise DomainError(f"degree must be >= 0, got {n_max}")
    x = np.atleast_1d(check_unit_interval(s)).ravel()
    d = geom.ambient_dim
    table = np.empty((n_max + 1, x.size))
    table[0] = 1.0
    if n_max >= 1:
        table[1] = x
    for n in range(2, n_max + 1):
        table[n] = ((2 * n + d - 4) * x * table[n - 1] - (n - 1) * table[n - 2]) / (n + d - 3)
    return table


def spherical_fn(n: int, geom: SphereGeometry, s: ArrayLike):
    """p_n^d(s); scalar in, scalar out."""
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    x = check_unit_interval(s)
    d = geom.ambient_dim
    flat = np.atleast_1d(x).ravel()
    prev = np.ones_like(flat)
    cur = flat.copy() if n >= 1 else prev
    for k in range(2, n + 1):
        prev, cur = cur, ((2 * k + d - 4) * flat * cur - (k - 1) * prev) / (k + d - 3)
    return scalar_or_array(cur.reshape(np.shape(x)), s)


def spherical_fn_integral(n: int, geom: SphereGeometry, s: ArrayLike, order: int = 64):
    """
    p_n^d(cos th) = int (cos th + i y sin th)^n alpha_{d-1}(dy), by Gauss-Jacobi in y.
    Independent of the recurrence; used to cross-check it.
    """
    x = check_unit_interval(s)
    d = geom.ambient_dim
    alpha = (d - 4) / 2.0
    y, w = roots_jacobi(order, alpha, alpha)
    # alpha_{d-1} normalization: c_{d-1}
    c = float(np.exp(gammaln((d - 1) / 2.0) - gammaln((d - 2) / 2.0)) / math.sqrt(math.pi))
    flat = np.atleast_1d(x).ravel()
    sin_t = np.sqrt(np.clip(1.0 - flat * flat, 0.0, None))
    z = flat[:, None] + 1j * y[None, :] * sin_t[:, None]
    vals = c * (z**n @ w)
    return scalar_or_array(vals.real.reshape(np.shape(x)), s)


def spherical_fn_derivatives_at_one(n: int, geom: SphereGeometry) -> tuple[float, float]:
    """(p_n'(1), p_n''(1)) from the Gegenbauer ODE at s = 1."""
    d = geom.ambient_dim
    k = casimir(n, geom)
    first = k / (d - 1)
    second = first * (k - (d - 1)) / (d + 1)
    return first, second


def spherical_dim(n: int, geom: SphereGeometry) -> int:
    """d_n = C(d+n-1, d-1) - C(d+n-3, d-1), exact integers."""
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    d = geom.ambient_dim
    return math.comb(d + n - 1, d - 1) - math.comb(d + n - 3, d - 1)


def spherical_dims(n_max: int, geom: SphereGeometry) -> NDArray[np.float64]:
    """d_0 .. d_{n_max} as floats, each converted once from the exact integer."""
    return np.array([float(spherical_dim(n, geom)) for n in range(n_max + 1)])


def casimir(n: int, geom: SphereGeometry) -> float:
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    return float(n * (n + geom.ambient_dim - 2))


def casimirs(n_max: int, geom: SphereGeometry) -> NDArray[np.float64]:
    n = np.arange(n_max + 1, dtype=float)
    return n * (n + geom.ambient_dim - 2)


def weight(geom: SphereGeometry, s: ArrayLike):
    """Density of alpha_d: c_d (1 - s^2)^{(d-3)/2}."""
    x = check_unit_interval(s)
    w = geom.weight_const * np.power(1.0 - x * x, geom.weight_exponent)
    return scalar_or_array(w, s)


def quadrature(geom: SphereGeometry, order: int = 256) -> QuadratureRule:
    """
    Gauss rule for integrals against (1 - s^2)^{(d-3)/2} ds, with the weight divided out of the
    returned weights. d = 3 is plain Gauss-Legendre; other d use Gauss-Jacobi nodes so that the
    rule stays exact when the weight has a square-root edge (even d).
    """
    if order < 2:
        raise DomainError(f"quadrature order must be >= 2, got {order}")
    a = geom.weight_exponent
    if a == 0.0:
        nodes, weights = np.polynomial.legendre.leggauss(order)
    else:
        nodes, jw = roots_jacobi(order, a, a)
        weights = jw / np.power(1.0 - nodes * nodes, a)
    return QuadratureRule(nodes=np.asarray(nodes), weights=np.asarray(weights),
                          order=order, ambient_dim=geom.ambient_dim)


def integrate_alpha(rule: QuadratureRule, geom: SphereGeometry, values: ArrayLike):
    """c_d * sum(w f (1 - s^2)^{(d-3)/2}) for f sampled at rule.nodes (last axis)."""
    if rule.ambient_dim != geom.ambient_dim:
        raise DomainError(f"rule built for d={rule.ambient_dim}, used with d={geom.ambient_dim}")
    folded = rule.weights * np.power(1.0 - rule.nodes**2, geom.weight_exponent)
    return geom.weight_const * np.asarray(values, dtype=float) @ folded


def spherical_gap_moments(n_max: int, geom: SphereGeometry, u: ArrayLike,
                          weights: ArrayLike) -> NDArray[np.float64]:
    """
    sum_i w_i (1 - p_n(1 - u_i)) for n = 0 .. n_max.

    q_n = 1 - p_n obeys
        (n + d - 3) q_n = (2n + d - 4) (u + (1 - u) q_{n-1}) - (n - 1) q_{n-2},
    which stays accurate where p_n is close to 1. Pass u = 2 sin^2(theta / 2)
    rather than 1 - cos(theta).
    """
    if n_max < 0:
        raise DomainError(f"degree must be >= 0, got {n_max}")
    uu = np.asarray(u, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if np.any(uu < 0.0) or np.any(uu > 2.0 + _EDGE_TOL):
        raise DomainError("u = 1 - s must lie in [0, 2]")
    d = geom.ambient_dim
    s = 1.0 - uu
    out = np.zeros(n_max + 1)
    if n_max == 0:
        return out
    prev = np.zeros_like(uu)
    cur = uu.copy()
    out[1] = cur @ w
    for n in range(2, n_max + 1):
        prev, cur = cur, ((2 * n + d - 4) * (uu + s * cur) - (n - 1) * prev) / (n + d - 3)
        out[n] = cur @ w
    return out
