# isokernel/simulate.py
"""
Monte-Carlo endpoints of isotropic Levy processes on S^{d-1}, started at the north pole o.

Brownian displacements are drawn exactly from the series density (inverse CDF on a theta grid),
compound-Poisson jumps rotate the current point by a colatitude drawn from nu / |nu| about a
uniform tangent direction, and subordinated processes run the base model for a random time S(t).
Replicas are generated in fixed-size blocks; block i always uses the generator
PCG64(SeedSequence(seed, spawn_key=(stream_id, i))), so results do not depend on worker count.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid
from scipy.stats import kstest

from .errors import DomainError
from .kernel import build_series, kernel_cdf, truncation_level
from .settings import Numerics, Simulation
from .special_fn import SphereGeometry, spherical_fn_table
from .spectrum import BernsteinFunction, LevyModel, bernstein_eval, build_table

logger = logging.getLogger(__name__)

CHUNK = 512  # rows per inverse-CDF batch


# ---------- randomness ----------

@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def block(self, index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, index))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ColatHistogram:
    edges: NDArray[np.float64]
    counts: NDArray[np.int64]

    @classmethod
    def from_angles(cls, angles: NDArray, bins: int) -> "ColatHistogram":
        counts, edges = np.histogram(angles, bins=bins, range=(0.0, math.pi))
        return cls(edges=edges, counts=counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def __add__(self, other: "ColatHistogram") -> "ColatHistogram":
        if not np.array_equal(self.edges, other.edges):
            raise DomainError("cannot merge histograms with different bin edges")
        return ColatHistogram(edges=self.edges, counts=self.counts + other.counts)


# ---------- geometry ----------

def north_pole(geom: SphereGeometry, size: int) -> NDArray[np.float64]:
    x = np.zeros((size, geom.ambient_dim))
    x[:, -1] = 1.0
    return x


def colatitudes(points: NDArray) -> NDArray[np.float64]:
    """Angle from o; arctan2 keeps precision near both poles."""
    return np.arctan2(np.linalg.norm(points[:, :-1], axis=1), points[:, -1])


def rotate(points: NDArray, theta: NDArray, rng: np.random.Generator) -> NDArray[np.float64]:
    """Move each point by geodesic angle theta along a uniformly random tangent direction."""
    g = rng.standard_normal(points.shape)
    g -= np.sum(g * points, axis=1, keepdims=True) * points
    v = g / np.linalg.norm(g, axis=1, keepdims=True)
    th = np.asarray(theta, dtype=float)
    y = np.cos(th)[:, None] * points + np.sin(th)[:, None] * v
    return y / np.linalg.norm(y, axis=1, keepdims=True)


# ---------- colatitude laws ----------

def _invert_rows(theta: NDArray, dens: NDArray, u: NDArray) -> NDArray[np.float64]:
    """Inverse CDF per row of a tabulated density (clamped, cumulative trapezoid, linear)."""
    cdf = cumulative_trapezoid(np.maximum(dens, 0.0), theta, axis=1, initial=0.0)
    cdf /= cdf[:, -1:]
    idx = np.clip((cdf < u[:, None]).sum(axis=1), 1, theta.size - 1)
    rows = np.arange(u.size)
    lo, hi = cdf[rows, idx - 1], cdf[rows, idx]
    frac = np.divide(u - lo, hi - lo, out=np.zeros_like(u), where=hi > lo)
    return theta[idx - 1] + frac * (theta[idx] - theta[idx - 1])


def series_colatitudes(model: LevyModel, times: NDArray, rng: np.random.Generator,
                       numerics: Numerics | None = None) -> NDArray[np.float64]:
    """
    One colatitude per entry of `times`, drawn from the model's series law at that time.
    Times are processed in ascending order so each chunk truncates for its smallest time.
    """
    numerics = numerics or Numerics()
    times = np.asarray(times, dtype=float)
    out = np.zeros(times.size)
    geom = model.geom
    theta = np.linspace(0.0, math.pi, numerics.theta_grid)
    jacobian = geom.weight_const * np.sin(theta) ** (geom.ambient_dim - 2)
    tables: dict[int, NDArray] = {}
    order = np.argsort(times, kind="stable")
    order = order[times[order] > 0.0]
    for start in range(0, order.size, CHUNK):
        idx = order[start:start + CHUNK]
        uniq, inverse = np.unique(times[idx], return_inverse=True)
        n_max, _ = truncation_level(model, None, float(uniq[0]), numerics=numerics)
        if n_max not in tables:
            tables[n_max] = spherical_fn_table(n_max, geom, np.cos(theta))
        spec = build_table(model, n_max)
        coeffs = spec.dims[None, :] * np.exp(-uniq[:, None] * spec.chis[None, :])
        dens = (coeffs @ tables[n_max]) * jacobian
        out[idx] = _invert_rows(theta, dens[inverse], rng.random(idx.size))
    return out


def sample_heat_colatitudes(geom: SphereGeometry, a: float, times: NDArray, rng: np.random.Generator,
                            numerics: Numerics | None = None,
                            simulation: Simulation | None = None) -> NDArray[np.float64]:
    """
    Brownian colatitudes (generator a * Laplacian) after the given elapsed times. Below
    small_time / a the tangent-space law theta = sqrt(2 a s) chi_{d-1} is used.
    """
    simulation = simulation or Simulation()
    times = np.asarray(times, dtype=float)
    out = np.zeros(times.size)
    small = (times > 0.0) & (times < simulation.small_time / a)
    if np.any(small):
        logger.debug(f"tangent-space law for {int(small.sum())} small times")
        radius = np.sqrt(rng.chisquare(geom.manifold_dim, int(small.sum())))
        out[small] = np.minimum(np.sqrt(2.0 * a * times[small]) * radius, math.pi)
    rest = times >= simulation.small_time / a
    if np.any(rest):
        out[rest] = series_colatitudes(LevyModel(geom=geom, a=a), times[rest], rng, numerics)
    return out


def sample_colatitude(model: LevyModel, psi: BernsteinFunction | None, t: float,
                      rng: np.random.Generator, size: int | None = None,
                      numerics: Numerics | None = None):
    """Inverse-CDF draw(s) from the (possibly subordinated) series law at time t."""
    numerics = numerics or Numerics()
    series = build_series(model, psi, t, numerics=numerics)
    theta, cdf = kernel_cdf(series, numerics.theta_grid)
    u = rng.random(size)
    return np.interp(u, cdf, theta)


def _jump_angles(model: LevyModel, size: int, rng: np.random.Generator) -> NDArray[np.float64]:
    nu = model.nu
    angles = [th for th, _ in nu.atoms]
    masses = [m for _, m in nu.atoms]
    if nu.family.kind == "uniform":
        angles.append(math.nan)  # marks the uniform component
        masses.append(nu.family.c * math.pi)
    p = np.asarray(masses) / math.fsum(masses)
    which = rng.choice(len(p), size=size, p=p)
    out = np.asarray(angles)[which]
    spread = np.isnan(out)
    out[spread] = rng.uniform(0.0, math.pi, int(spread.sum()))
    return out


# ---------- subordinators ----------

def sample_subordinator(psi: BernsteinFunction, t: float, rng: np.random.Generator, size: int | None = None):
    """
    Draw(s) of S(t). Stable laws are normalized so E exp(-u S(t)) = exp(-t u^alpha)
    (Kanter's representation; alpha = 1/2 uses t^2 / (2 Z^2)).
    """
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got t={t}")
    n = 1 if size is None else size
    if psi.kind == "identity":
        out = np.full(n, float(t))
    elif psi.kind == "stable":
        alpha = psi.alpha
        if alpha == 0.5:
            z = rng.standard_normal(n)
            out = t * t / (2.0 * z * z)
        else:
            u = rng.uniform(0.0, math.pi, n)
            w = rng.exponential(1.0, n)
            s1 = (np.sin(alpha * u) / np.sin(u) ** (1.0 / alpha)
                  * (np.sin((1.0 - alpha) * u) / w) ** ((1.0 - alpha) / alpha))
            out = t ** (1.0 / alpha) * s1
    else:
        out = np.full(n, psi.b * t)
        for y, mass in psi.tau_atoms:
            out = out + y * rng.poisson(mass * t, n)
    return float(out[0]) if size is None else out


# ---------- endpoints ----------

def _evolve(model: LevyModel, durations: NDArray, rng: np.random.Generator,
            numerics: Numerics | None, simulation: Simulation | None) -> NDArray[np.float64]:
    geom = model.geom
    size = durations.size
    x = north_pole(geom, size)
    if not model.is_finite_activity():
        # infinite activity: draw the endpoint from the zonal law directly
        return rotate(x, series_colatitudes(model, durations, rng, numerics), rng)
    if model.nu.is_zero():
        return rotate(x, sample_heat_colatitudes(geom, model.a, durations, rng, numerics, simulation), rng)

    counts = rng.poisson(model.nu.total_mass() * durations)
    k = int(counts.max()) if size else 0
    raw = rng.random((size, k))
    live = np.arange(k)[None, :] < counts[:, None]
    epochs = np.sort(np.where(live, raw, np.inf), axis=1) * durations[:, None]
    epochs = np.where(live, epochs, durations[:, None])
    marks = np.concatenate([np.zeros((size, 1)), epochs, durations[:, None]], axis=1)
    segments = np.diff(marks, axis=1)
    for j in range(k + 1):
        if model.a > 0.0:
            moving = segments[:, j] > 0.0
            if np.any(moving):
                theta = sample_heat_colatitudes(geom, model.a, segments[moving, j], rng, numerics, simulation)
                x[moving] = rotate(x[moving], theta, rng)
        if j < k:
            jumping = counts > j
            x[jumping] = rotate(x[jumping], _jump_angles(model, int(jumping.sum()), rng), rng)
    return x


def simulate_endpoints(model: LevyModel, psi: BernsteinFunction | None, t: float, size: int,
                       rng: np.random.Generator, numerics: Numerics | None = None,
                       simulation: Simulation | None = None) -> NDArray[np.float64]:
    """(size, d) endpoints at time t; with psi, the base model runs for S(t)."""
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got t={t}")
    if psi is None or psi.kind == "identity":
        durations = np.full(size, float(t))
    else:
        durations = sample_subordinator(psi, t, rng, size)
    return _evolve(model, durations, rng, numerics, simulation)


def simulate_endpoint(model: LevyModel, psi: BernsteinFunction | None, t: float,
                      rng: np.random.Generator, **kwargs) -> NDArray[np.float64]:
    return simulate_endpoints(model, psi, t, 1, rng, **kwargs)[0]


@dataclass(frozen=True)
class BlockJob:
    model: LevyModel
    psi: BernsteinFunction | None
    t: float
    stream: RngStream
    index: int
    size: int
    numerics: Numerics
    simulation: Simulation


def _run_block(job: BlockJob) -> NDArray[np.float64]:
    rng = job.stream.block(job.index)
    return colatitudes(simulate_endpoints(job.model, job.psi, job.t, job.size, rng,
                                          job.numerics, job.simulation))


def simulate_colatitudes(model: LevyModel, psi: BernsteinFunction | None, t: float, samples: int,
                         stream: RngStream, workers: int = 1, numerics: Numerics | None = None,
                         simulation: Simulation | None = None) -> NDArray[np.float64]:
    """Endpoint colatitudes for `samples` replicas, in replica order for any worker count."""
    numerics = numerics or Numerics()
    simulation = simulation or Simulation()
    block = simulation.block_size
    jobs = [BlockJob(model, psi, float(t), stream, i, min(block, samples - start), numerics, simulation)
            for i, start in enumerate(range(0, samples, block))]
    logger.info(f"simulating {samples} replicas in {len(jobs)} blocks on {workers} worker(s)")
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_block, jobs))
    else:
        parts = [_run_block(job) for job in jobs]
    return np.concatenate(parts) if parts else np.zeros(0)


# ---------- statistics ----------

def ks_band(samples: int) -> float:
    return 1.5 * 1.95 / math.sqrt(samples)


@dataclass(frozen=True)
class ReturnDensityEstimate:
    histogram: ColatHistogram
    ks: float
    ks_band: float
    angles: NDArray[np.float64]

    @property
    def passed(self) -> bool:
        return self.ks <= self.ks_band


def estimate_return_density(model: LevyModel, psi: BernsteinFunction | None, t: float, M: int,
                            bins: int, stream: RngStream, workers: int = 1,
                            numerics: Numerics | None = None,
                            simulation: Simulation | None = None) -> ReturnDensityEstimate:
    """Histogram of simulated colatitudes and the KS distance to the series CDF."""
    if M < 1000:
        raise DomainError(f"need at least 1000 samples, got M={M}")
    numerics = numerics or Numerics()
    series = build_series(model, psi, t, numerics=numerics)
    theta, cdf = kernel_cdf(series, numerics.theta_grid)
    angles = simulate_colatitudes(model, psi, t, M, stream, workers, numerics, simulation)
    ks = float(kstest(angles, lambda x: np.interp(x, theta, cdf)).statistic)
    band = ks_band(M)
    if ks > band:
        logger.warning(f"KS distance {ks:.5f} exceeds band {band:.5f}")
    return ReturnDensityEstimate(histogram=ColatHistogram.from_angles(angles, bins), ks=ks,
                                 ks_band=band, angles=angles)


@dataclass(frozen=True)
class MomentCheck:
    n: int
    mean: float
    stderr: float
    expected: float
    z: float
    passed: bool


def moment_checks(angles: NDArray, model: LevyModel, psi: BernsteinFunction | None, t: float,
                  ns: tuple[int, ...] = (1, 2, 3), width: float = 4.0) -> list[MomentCheck]:
    """E p_n(cos Theta) against exp(-t chi'_n), accepted within `width` standard errors."""
    top = max(ns)
    values = spherical_fn_table(top, model.geom, np.cos(angles))
    expected = np.exp(-t * build_table(model, top).exponents(psi))
    out = []
    for n in ns:
        mean = float(values[n].mean())
        stderr = float(values[n].std(ddof=1) / math.sqrt(angles.size))
        gap = abs(mean - expected[n])
        z = gap / stderr if stderr > 0.0 else (0.0 if gap <= 1e-12 else math.inf)
        out.append(MomentCheck(n=n, mean=mean, stderr=stderr, expected=float(expected[n]),
                               z=float(z), passed=bool(z <= width)))
    return out


@dataclass(frozen=True)
class LaplaceCheck:
    u: float
    empirical: float
    expected: float
    passed: bool


def laplace_check(psi: BernsteinFunction, t: float, us: tuple[float, ...], M: int,
                  rng: np.random.Generator, tol: float = 0.005) -> list[LaplaceCheck]:
    """Empirical E exp(-u S(t)) against exp(-t psi(u))."""
    draws = sample_subordinator(psi, t, rng, M)
    out = []
    for u in us:
        empirical = float(np.exp(-u * draws).mean())
        expected = math.exp(-t * bernstein_eval(psi, u))
        out.append(LaplaceCheck(u=float(u), empirical=empirical, expected=expected,
                                passed=bool(abs(empirical - expected) <= tol)))
    return out
