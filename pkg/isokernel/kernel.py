# isokernel/kernel.py
"""
Transition density of an isotropic Levy process on S^{d-1} as a zonal series

    k_t(cos gamma) = sum_n d_n exp(-t chi'_n) p_n(cos gamma),

taken with respect to the normalized invariant measure sigma, plus traces, the Funk-Hecke
transform and Chapman-Kolmogorov checks.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.special import gamma as gamma_fn
from scipy.special import gammaincc

from .errors import DivergenceError, DomainError, NumericalError, UnsupportedError
from .settings import Numerics
from .special_fn import (
    SphereGeometry,
    check_unit_interval,
    integrate_alpha,
    quadrature,
    scalar_or_array,
    spherical_fn_table,
)
from .spectrum import (
    BernsteinFunction,
    LevyModel,
    SpectrumTable,
    bounded_exponent,
    build_table,
    certified_growth,
    density_class,
)

logger = logging.getLogger(__name__)

ADAPTIVE_START = 64


@dataclass(frozen=True)
class KernelSeries:
    table: SpectrumTable
    t: float
    psi: BernsteinFunction | None
    coeffs: NDArray[np.float64]
    n_max: int
    tail_bound: float | None  # None: truncation was adaptive, not certified

    @property
    def geom(self) -> SphereGeometry:
        return self.table.model.geom

    @property
    def certified(self) -> bool:
        return self.tail_bound is not None


@dataclass(frozen=True)
class TraceReport:
    t: float
    trace: float
    trace_K: float
    diagonal: float
    n_max: int
    tail_bound: float | None

    def identity_holds(self) -> bool:
        """trace == k_t(o, o) up to twice the tail bound (rounding slack when uncertified)."""
        slack = 2.0 * self.tail_bound if self.tail_bound is not None else 0.0
        return abs(self.trace - self.diagonal) <= slack + 1e-12 * max(1.0, self.trace)


def _tail_integral(N: NDArray, c: float, p: float, k: int) -> NDArray:
    """int_N^inf 2^k (x^k + 1) exp(-c x^p) dx in closed form (upper incomplete gamma)."""
    out = np.zeros_like(N, dtype=float)
    for power in (k, 0):
        s = (power + 1) / p
        out += gamma_fn(s) * gammaincc(s, c * N**p) / (p * c**s)
    return 2.0 ** k * out


def _certified_level(geom: SphereGeometry, scale: float, power: float, t: float,
                     eps: float, max_degree: int) -> tuple[int, float]:
    """
    Smallest N with sum_{n>N} d_n exp(-t chi'_n) < eps, from chi'_n >= scale * kappa_n^power,
    kappa_n >= n^2 and d_n <= 2 (n+1)^{d-2} <= 2^{d-2} (n^{d-2} + 1).
    """
    k = geom.ambient_dim - 2
    c = t * scale
    p = 2.0 * power
    # the summand bound decreases for x >= x_star
    x_star = (k / (c * p)) ** (1.0 / p)
    first = max(0, math.ceil(x_star) - 1)
    if first > max_degree:
        raise NumericalError(f"certified truncation needs n > {max_degree} (t={t} too small)")
    N = np.arange(first, max_degree + 1, dtype=float)
    nxt = N + 1.0
    bound = 2.0 ** k * (nxt**k + 1.0) * np.exp(-c * nxt**p) + _tail_integral(nxt, c, p, k)
    hits = np.flatnonzero(bound < eps)
    if hits.size == 0:
        raise NumericalError(f"certified tail bound stays above eps={eps:g} up to n={max_degree}")
    return int(N[hits[0]]), float(bound[hits[0]])


def _adaptive_level(model: LevyModel, psi: BernsteinFunction | None, t: float, eps: float,
                    numerics: Numerics) -> int:
    run, max_degree = numerics.adaptive_run, numerics.max_degree
    n_max = ADAPTIVE_START
    while True:
        n_max = min(n_max, max_degree)
        coeffs = build_table(model, n_max).coefficients(t, psi)
        sums = np.cumsum(coeffs)
        small = coeffs < eps * sums
        # first N whose next `run` terms are all small relative to the running sum
        streak = 0
        for n in range(1, n_max + 1):
            streak = streak + 1 if small[n] else 0
            if streak >= run:
                return n - run
        if n_max >= max_degree:
            verdict = density_class(model, psi, t, probe=numerics.stagnation_probe, run=run)
            raise DivergenceError(
                f"series did not settle below eps={eps:g} by n={max_degree}; verdict {verdict}", verdict)
        n_max *= 2


def truncation_level(model: LevyModel, psi: BernsteinFunction | None, t: float,
                     eps: float | None = None,
                     numerics: Numerics | None = None) -> tuple[int, float | None]:
    """(N, certified tail bound) or (N, None) when only the adaptive stopping rule applies."""
    numerics = numerics or Numerics()
    eps = numerics.eps if eps is None else eps
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got t={t}")
    if not eps > 0.0:
        raise DomainError(f"eps must be > 0, got eps={eps}")
    growth = certified_growth(model, psi)
    if growth is not None:
        N, bound = _certified_level(model.geom, growth.scale, growth.power, t, eps,
                                    numerics.max_degree)
        logger.info(f"truncation: N={N}, certified tail < {bound:.3g} (t={t:g})")
        return N, bound
    if bounded_exponent(model, psi) is not None:
        verdict = density_class(model, psi, t, probe=numerics.stagnation_probe,
                                run=numerics.adaptive_run)
        raise DivergenceError(f"kernel series diverges: {verdict}; {verdict.reason}", verdict)
    N = _adaptive_level(model, psi, t, eps, numerics)
    logger.warning(f"truncation: N={N} from the adaptive rule, tail bound not certified (t={t:g})")
    return N, None


def build_series(model: LevyModel, psi: BernsteinFunction | None, t: float,
                 eps: float | None = None, numerics: Numerics | None = None) -> KernelSeries:
    n_max, tail = truncation_level(model, psi, t, eps, numerics)
    table = build_table(model, n_max)
    coeffs = table.coefficients(t, psi)
    coeffs.setflags(write=False)
    return KernelSeries(table=table, t=float(t), psi=psi, coeffs=coeffs, n_max=n_max, tail_bound=tail)


def kernel_eval(series: KernelSeries, cos_gamma: ArrayLike):
    """
    sum_{n <= N} d_n e^{-t chi'_n} p_n(cos gamma), summed upward in n with Kahan compensation;
    the p_n recurrence runs alongside so no (N, points) table is held.
    """
    x = check_unit_interval(cos_gamma)
    flat = np.atleast_1d(x).ravel()
    d = series.geom.ambient_dim
    coeffs = series.coeffs
    total = np.full_like(flat, coeffs[0])
    comp = np.zeros_like(flat)
    prev, cur = np.ones_like(flat), flat.copy()
    for n in range(1, series.n_max + 1):
        if n >= 2:
            prev, cur = cur, ((2 * n + d - 4) * flat * cur - (n - 1) * prev) / (n + d - 3)
        y = coeffs[n] * cur - comp
        acc = total + y
        comp = (acc - total) - y
        total = acc
    return scalar_or_array(total.reshape(np.shape(x)), cos_gamma)


def volume_normalized(values: ArrayLike, geom: SphereGeometry):
    """Density with respect to Riemannian volume instead of sigma."""
    return np.asarray(values, dtype=float) / geom.volume


def colatitude_density(series: KernelSeries, theta: ArrayLike) -> NDArray[np.float64]:
    """Density of the colatitude in d theta: c_d k_t(cos theta) sin^{d-2} theta."""
    th = np.asarray(theta, dtype=float)
    geom = series.geom
    return geom.weight_const * kernel_eval(series, np.cos(th)) * np.sin(th) ** (geom.ambient_dim - 2)


def kernel_cdf(series: KernelSeries, theta_grid: int = 2048) -> tuple[NDArray, NDArray]:
    """(theta, CDF) on a uniform grid over [0, pi]; negative truncation wiggles are clamped."""
    theta = np.linspace(0.0, math.pi, theta_grid)
    dens = colatitude_density(series, theta)
    negative = dens < 0.0
    if np.any(negative):
        lost = -float(trapezoid(np.where(negative, dens, 0.0), theta))
        if lost > 1e-8:
            logger.warning(f"kernel_cdf: clamped {lost:.3g} of negative density mass")
        dens = np.where(negative, 0.0, dens)
    cdf = cumulative_trapezoid(dens, theta, initial=0.0)
    return theta, cdf / cdf[-1]


def trace(model: LevyModel, psi: BernsteinFunction | None, t: float,
          eps: float | None = None, numerics: Numerics | None = None) -> TraceReport:
    """Tr(P_t), Tr_K(P_t) and k_t(o, o) from one truncation."""
    series = build_series(model, psi, t, eps, numerics)
    exps = np.exp(-t * series.table.exponents(psi))
    report = TraceReport(
        t=float(t),
        trace=math.fsum(series.coeffs),
        trace_K=math.fsum(exps),
        diagonal=float(kernel_eval(series, 1.0)),
        n_max=series.n_max,
        tail_bound=series.tail_bound,
    )
    if not report.identity_holds():
        logger.warning(f"trace {report.trace:.15g} differs from diagonal {report.diagonal:.15g}")
    return report


def funk_hecke(kernel_samples: Callable[[NDArray], ArrayLike], n: int, geom: SphereGeometry,
               order: int = 256) -> float:
    """lambda_n = c_d int a(s) p_n(s) (1 - s^2)^{(d-3)/2} ds."""
    return float(funk_hecke_spectrum(kernel_samples, n, geom, order)[n])


def funk_hecke_spectrum(kernel_samples: Callable[[NDArray], ArrayLike], n_max: int,
                        geom: SphereGeometry, order: int = 256) -> NDArray[np.float64]:
    """lambda_0 .. lambda_{n_max} from one set of kernel samples."""
    if n_max < 0:
        raise DomainError(f"degree must be >= 0, got {n_max}")
    rule = quadrature(geom, order)
    values = np.asarray(kernel_samples(rule.nodes), dtype=float)
    if values.shape != rule.nodes.shape:
        raise DomainError(f"kernel samples must have shape {rule.nodes.shape}, got {values.shape}")
    table = spherical_fn_table(n_max, geom, rule.nodes)
    return np.asarray(integrate_alpha(rule, geom, table * values[None, :]))


def _spectral_residual(model: LevyModel, psi: BernsteinFunction | None, s: float, t: float,
                       numerics: Numerics | None) -> float:
    n_max = max(truncation_level(model, psi, u, numerics=numerics)[0] for u in (s, t, s + t))
    table = build_table(model, n_max)
    chi = table.exponents(psi)
    diff = np.abs(np.exp(-s * chi) * np.exp(-t * chi) - np.exp(-(s + t) * chi))
    return math.fsum(table.dims * diff)


def _direct_residual(model: LevyModel, psi: BernsteinFunction | None, s: float, t: float,
                     angles: NDArray, order: int, numerics: Numerics | None) -> float:
    """
    int a_s(x.z) a_t(z.y) sigma(dz) against a_{s+t}(x.y) on S^2, x the north pole and y at angle
    gamma: Gauss in u = cos theta, trapezoid (exact for trigonometric polynomials) in azimuth.
    """
    if model.geom.ambient_dim != 3:
        raise UnsupportedError(
            f"direct Chapman-Kolmogorov quadrature is implemented for d = 3, got d={model.geom.ambient_dim}")
    ks = build_series(model, psi, s, numerics=numerics)
    kt = build_series(model, psi, t, numerics=numerics)
    kst = build_series(model, psi, s + t, numerics=numerics)
    u, wu = np.polynomial.legendre.leggauss(order)
    n_phi = 2 * order
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    sin_u = np.sqrt(1.0 - u * u)
    left = kernel_eval(ks, u)
    worst = 0.0
    for gamma in angles:
        zy = np.clip(math.sin(gamma) * sin_u[:, None] * np.cos(phi)[None, :] + math.cos(gamma) * u[:, None],
                     -1.0, 1.0)
        right = kernel_eval(kt, zy)
        inner = right.mean(axis=1)  # (1/2pi) int d phi
        conv = 0.5 * float(wu @ (left * inner))  # sigma = du dphi / 4pi
        worst = max(worst, abs(conv - float(kernel_eval(kst, math.cos(gamma)))))
    return worst


def ck_residual(model: LevyModel, s: float, t: float, angles: ArrayLike | None = None,
                psi: BernsteinFunction | None = None, path: str = "direct", order: int = 256,
                numerics: Numerics | None = None) -> float:
    """Max residual of a_{s+t} = a_s * a_t; `path` is "direct" (d = 3 only) or "spectral"."""
    if not (s > 0.0 and t > 0.0):
        raise DomainError(f"Chapman-Kolmogorov needs s, t > 0, got s={s}, t={t}")
    if path == "spectral":
        return _spectral_residual(model, psi, s, t, numerics)
    if path != "direct":
        raise DomainError(f"unknown path {path!r}")
    grid = np.linspace(0.0, math.pi, 11) if angles is None else np.atleast_1d(np.asarray(angles, float))
    return _direct_residual(model, psi, s, t, grid, order, numerics)
