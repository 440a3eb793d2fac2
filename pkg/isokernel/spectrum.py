# isokernel/spectrum.py
"""
Gangolli Levy-Khintchine spectrum on S^{d-1}:

    chi_n = a * n(n + d - 2) + int_{(0, pi]} (1 - p_n(cos theta)) nu(d theta),

Bernstein functions psi for subordination (chi_n -> psi(chi_n)), and the L^2 / continuity
classification of the transition densities.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq

from .errors import DomainError, IntegrabilityError, NotInvertibleError, NumericalError
from .special_fn import (
    SphereGeometry,
    casimirs,
    spherical_dims,
    spherical_fn_derivatives_at_one,
    spherical_gap_moments,
)

logger = logging.getLogger(__name__)

PANEL_ORDER = 24         # Gauss-Legendre nodes per panel
PANEL_WAVES = 6.0        # subpanels per unit of (n+1) * width / PANEL_WAVES
TAIL_SCALE = 0.01        # innermost power-family cutoff h <= TAIL_SCALE / (n_max + 1)


# ---------- Levy measures on colatitude ----------

@dataclass(frozen=True)
class DensityFamily:
    """nu(d theta) = c d theta (uniform) or c theta^{-1-beta} d theta (power) on (0, pi]."""
    kind: str = "none"
    c: float = 0.0
    beta: float | None = None

    @classmethod
    def none(cls) -> "DensityFamily":
        return cls()

    @classmethod
    def uniform(cls, c: float) -> "DensityFamily":
        return cls(kind="uniform", c=float(c))

    @classmethod
    def power(cls, c: float, beta: float) -> "DensityFamily":
        return cls(kind="power", c=float(c), beta=float(beta))


@dataclass(frozen=True)
class LevyMeasureSpec:
    atoms: tuple[tuple[float, float], ...] = ()
    family: DensityFamily = field(default_factory=DensityFamily)

    def is_zero(self) -> bool:
        return not self.atoms and self.family.kind == "none"

    def total_mass(self) -> float:
        mass = sum(m for _, m in self.atoms)
        if self.family.kind == "uniform":
            mass += self.family.c * math.pi
        elif self.family.kind == "power":
            return math.inf
        return mass

    def is_finite(self) -> bool:
        return math.isfinite(self.total_mass())


@dataclass(frozen=True)
class ValidatedLevy:
    spec: LevyMeasureSpec
    moment: float  # int (1 - cos theta) nu(d theta)


def _panel_rule(a: float, b: float, pieces: int) -> tuple[NDArray, NDArray]:
    x, w = np.polynomial.legendre.leggauss(PANEL_ORDER)
    edges = np.linspace(a, b, pieces + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _pieces(width: float, n_max: int) -> int:
    return max(1, math.ceil((n_max + 1) * width / PANEL_WAVES))


def _uniform_nodes(n_max: int) -> tuple[NDArray, NDArray]:
    return _panel_rule(0.0, math.pi, _pieces(math.pi, n_max))


def _power_nodes(n_max: int, beta: float) -> tuple[NDArray, NDArray, float]:
    """Dyadic panels [pi/2^{k+1}, pi/2^k] down to h; the weight theta^{-1-beta} is folded in."""
    levels = max(1, math.ceil(math.log2(math.pi * (n_max + 1) / TAIL_SCALE)))
    nodes, weights = [], []
    for k in range(levels):
        hi = math.pi / 2.0**k
        lo = hi / 2.0
        x, w = _panel_rule(lo, hi, _pieces(hi - lo, n_max))
        nodes.append(x)
        weights.append(w * x ** (-1.0 - beta))
    return np.concatenate(nodes), np.concatenate(weights), math.pi / 2.0**levels


def _power_tail(first: NDArray, second: NDArray, beta: float, h: float) -> NDArray:
    """int_0^h (1 - p_n(cos theta)) theta^{-1-beta} d theta from the fourth-order expansion."""
    return (0.5 * first * h ** (2.0 - beta) / (2.0 - beta)
            - (first / 24.0 + second / 8.0) * h ** (4.0 - beta) / (4.0 - beta))


def validate_levy(spec: LevyMeasureSpec) -> ValidatedLevy:
    """Accept nu iff int_0^pi (1 - cos theta) nu(d theta) is finite."""
    moment = 0.0
    for theta, mass in spec.atoms:
        if not (0.0 < theta <= math.pi):
            raise DomainError(f"atom angle must lie in (0, pi], got theta={theta}")
        if not mass > 0.0:
            raise DomainError(f"atom mass must be positive, got mass={mass}")
        moment += mass * 2.0 * math.sin(0.5 * theta) ** 2
    fam = spec.family
    if fam.kind == "uniform":
        if not fam.c > 0.0:
            raise DomainError(f"uniform family needs c > 0, got c={fam.c}")
        moment += fam.c * math.pi
    elif fam.kind == "power":
        if fam.beta is None or not math.isfinite(fam.beta):
            raise DomainError("power family needs a finite beta")
        if fam.beta >= 2.0:
            raise IntegrabilityError(
                f"power family beta={fam.beta} makes int (1 - cos theta) nu(d theta) diverge; need beta < 2")
        if not (fam.beta > 0.0 and fam.c > 0.0):
            raise DomainError(f"power family needs c > 0 and 0 < beta < 2, got c={fam.c}, beta={fam.beta}")
        theta, w, h = _power_nodes(1, fam.beta)
        inner = 2.0 * np.sin(0.5 * theta) ** 2 @ w
        tail = _power_tail(np.array(1.0), np.array(0.0), fam.beta, h)
        moment += fam.c * float(inner + tail)
    elif fam.kind != "none":
        raise DomainError(f"unknown density family {fam.kind!r}")
    if not math.isfinite(moment):
        raise IntegrabilityError("int (1 - cos theta) nu(d theta) is not finite")
    return ValidatedLevy(spec=spec, moment=moment)


# ---------- Levy model ----------

@dataclass(frozen=True)
class LevyModel:
    geom: SphereGeometry
    a: float = 0.0
    nu: LevyMeasureSpec = field(default_factory=LevyMeasureSpec)

    def __post_init__(self):
        if not (self.a >= 0.0 and math.isfinite(self.a)):
            raise DomainError(f"diffusion coefficient must be >= 0, got a={self.a}")
        validate_levy(self.nu)
        if self.a == 0.0 and self.nu.is_zero():
            raise DomainError("degenerate model: a = 0 and nu = 0")

    @classmethod
    def heat(cls, d: int, a: float = 1.0) -> "LevyModel":
        return cls(geom=SphereGeometry(d), a=a)

    def is_finite_activity(self) -> bool:
        return self.nu.is_finite()

    def is_pure_heat(self) -> bool:
        return self.a > 0.0 and self.nu.is_zero()


@lru_cache(maxsize=64)
def _jump_part(nu: LevyMeasureSpec, geom: SphereGeometry, n_max: int) -> NDArray[np.float64]:
    out = np.zeros(n_max + 1)
    if nu.atoms:
        theta = np.array([t for t, _ in nu.atoms])
        mass = np.array([m for _, m in nu.atoms])
        out += spherical_gap_moments(n_max, geom, 2.0 * np.sin(0.5 * theta) ** 2, mass)
    fam = nu.family
    if fam.kind == "uniform":
        theta, w = _uniform_nodes(n_max)
        out += fam.c * spherical_gap_moments(n_max, geom, 2.0 * np.sin(0.5 * theta) ** 2, w)
    elif fam.kind == "power":
        beta = float(fam.beta)
        theta, w, h = _power_nodes(n_max, beta)
        inner = spherical_gap_moments(n_max, geom, 2.0 * np.sin(0.5 * theta) ** 2, w)
        derivs = np.array([spherical_fn_derivatives_at_one(n, geom) for n in range(n_max + 1)])
        out += fam.c * (inner + _power_tail(derivs[:, 0], derivs[:, 1], beta, h))
    if not np.all(np.isfinite(out)):
        raise NumericalError(f"jump integral is not finite for n <= {n_max}")
    out.setflags(write=False)
    return out


def _chis(model: LevyModel, n_max: int) -> NDArray[np.float64]:
    chis = model.a * casimirs(n_max, model.geom)
    if not model.nu.is_zero():
        chis = chis + _jump_part(model.nu, model.geom, n_max)
    # round-off can leave tiny negatives at n where 1 - p_n vanishes
    return np.maximum(chis, 0.0)


def chi(model: LevyModel, n: int) -> float:
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    return float(_chis(model, n)[n])


# ---------- Bernstein functions ----------

@dataclass(frozen=True)
class BernsteinFunction:
    """psi(u) = b u + int (1 - e^{-yu}) tau(dy); stable(alpha) is u^alpha."""
    kind: str = "identity"
    alpha: float | None = None
    b: float = 0.0
    tau_atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "stable":
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise DomainError(f"stable subordinator needs 0 < alpha < 1, got alpha={self.alpha}")
        elif self.kind == "drift_cp":
            if not self.b >= 0.0:
                raise DomainError(f"drift must be >= 0, got b={self.b}")
            for y, m in self.tau_atoms:
                if not (y > 0.0 and m > 0.0):
                    raise DomainError(f"tau atoms need y > 0 and mass > 0, got (y={y}, mass={m})")
            if self.b == 0.0 and not self.tau_atoms:
                raise DomainError("drift_cp with b = 0 and no atoms is the zero subordinator")
        elif self.kind != "identity":
            raise DomainError(f"unknown subordinator type {self.kind!r}")

    @classmethod
    def identity(cls) -> "BernsteinFunction":
        return cls()

    @classmethod
    def stable(cls, alpha: float) -> "BernsteinFunction":
        return cls(kind="stable", alpha=float(alpha))

    @classmethod
    def drift_cp(cls, b: float = 0.0, tau_atoms=()) -> "BernsteinFunction":
        atoms = tuple((float(y), float(m)) for y, m in tau_atoms)
        return cls(kind="drift_cp", b=float(b), tau_atoms=atoms)

    @property
    def index(self) -> float | None:
        """Regular-variation index r at infinity (stored, not inferred)."""
        if self.kind == "identity":
            return 1.0
        if self.kind == "stable":
            return self.alpha
        return 1.0 if self.b > 0.0 else None

    @property
    def drift(self) -> float:
        if self.kind == "identity":
            return 1.0
        return self.b if self.kind == "drift_cp" else 0.0

    def tau_mass(self) -> float:
        return sum(m for _, m in self.tau_atoms)

    def is_bounded(self) -> bool:
        return self.kind == "drift_cp" and self.b == 0.0

    def sup(self) -> float:
        return self.tau_mass() if self.is_bounded() else math.inf


def bernstein_eval(psi: BernsteinFunction, u: ArrayLike):
    x = np.asarray(u, dtype=float)
    if np.any(x < 0.0):
        raise DomainError(f"Bernstein functions are evaluated at u >= 0, got {u!r}")
    if psi.kind == "identity":
        out = x.copy()
    elif psi.kind == "stable":
        out = np.power(x, psi.alpha)
    else:
        out = psi.b * x
        for y, m in psi.tau_atoms:
            out = out - m * np.expm1(-y * x)
    return float(out) if np.ndim(u) == 0 else out


def bernstein_inverse(psi: BernsteinFunction, v: float) -> float:
    """Increasing inverse of psi; bracket grows geometrically, then a bracketing root solve."""
    if not v > 0.0:
        raise DomainError(f"inverse needs v > 0, got v={v}")
    if psi.kind == "identity":
        return float(v)
    if psi.kind == "stable":
        return float(v ** (1.0 / psi.alpha))
    if v >= psi.sup():
        raise NotInvertibleError(
            f"psi is bounded by {psi.sup():.6g} (compound-Poisson subordinator); cannot invert v={v}")
    hi = 1.0
    while bernstein_eval(psi, hi) < v:
        hi *= 2.0
        if hi > 1e300:
            raise NotInvertibleError(f"could not bracket psi^-1({v})")
    lo = 0.0 if hi == 1.0 else hi / 2.0
    tol = 1e-10 * max(1.0, v)
    root = brentq(lambda x: bernstein_eval(psi, x) - v, lo, hi,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    if abs(bernstein_eval(psi, root) - v) > tol:
        raise NumericalError(f"psi^-1({v}) did not converge: residual {bernstein_eval(psi, root) - v:.3g}")
    return float(root)


def subordinated_spectrum(model: LevyModel, psi: BernsteinFunction, n: int) -> float:
    return float(bernstein_eval(psi, chi(model, n)))


# ---------- spectrum table ----------

@dataclass(frozen=True)
class SpectrumTable:
    model: LevyModel
    n_max: int
    dims: NDArray[np.float64]
    kappas: NDArray[np.float64]
    chis: NDArray[np.float64]

    @property
    def entries(self) -> list[tuple[int, int, float, float]]:
        return [(n, int(self.dims[n]), float(self.kappas[n]), float(self.chis[n]))
                for n in range(self.n_max + 1)]

    def exponents(self, psi: BernsteinFunction | None = None) -> NDArray[np.float64]:
        """chi'_n: chi_n, or psi(chi_n) when subordinated."""
        if psi is None:
            return self.chis
        return np.asarray(bernstein_eval(psi, self.chis))

    def coefficients(self, t: float, psi: BernsteinFunction | None = None) -> NDArray[np.float64]:
        return self.dims * np.exp(-t * self.exponents(psi))


def build_table(model: LevyModel, n_max: int) -> SpectrumTable:
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    dims = spherical_dims(n_max, model.geom)
    kappas = casimirs(n_max, model.geom)
    chis = _chis(model, n_max).copy()
    chis[0] = 0.0
    for arr in (dims, kappas, chis):
        arr.setflags(write=False)
    return SpectrumTable(model=model, n_max=n_max, dims=dims, kappas=kappas, chis=chis)


# ---------- density classification ----------

class DensityClass(str, enum.Enum):
    CONTINUOUS = "Continuous"
    NO_SQUARE_INTEGRABLE_DENSITY = "NoSquareIntegrableDensity"
    NUMERICALLY_CONVERGENT = "NumericallyConvergent"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class DensityVerdict:
    kind: DensityClass
    reason: str
    total: float | None = None
    partial_sums: tuple[float, ...] = ()

    @property
    def has_density(self) -> bool:
        return self.kind in (DensityClass.CONTINUOUS, DensityClass.NUMERICALLY_CONVERGENT)

    def __str__(self) -> str:
        if self.kind == DensityClass.NUMERICALLY_CONVERGENT:
            return f"{self.kind.value}({self.total:.12g})"
        if self.kind == DensityClass.UNDETERMINED:
            return f"{self.kind.value}({', '.join(f'{s:.6g}' for s in self.partial_sums)})"
        return self.kind.value


@dataclass(frozen=True)
class GrowthBound:
    """chi'_n >= scale * kappa_n^power for every n."""
    scale: float
    power: float


def certified_growth(model: LevyModel, psi: BernsteinFunction | None) -> GrowthBound | None:
    """A provable lower bound on the (subordinated) exponent, when one is available."""
    if model.a <= 0.0:
        return None
    if psi is None or psi.kind == "identity":
        return GrowthBound(scale=model.a, power=1.0)
    if psi.kind == "stable":
        return GrowthBound(scale=model.a ** psi.alpha, power=float(psi.alpha))
    if psi.b > 0.0:
        return GrowthBound(scale=psi.b * model.a, power=1.0)
    return None


def bounded_exponent(model: LevyModel, psi: BernsteinFunction | None) -> float | None:
    """Upper bound on chi'_n valid for all n, if the exponent is bounded."""
    if psi is not None and psi.is_bounded():
        return psi.sup()
    if model.a == 0.0 and model.nu.is_finite():
        bound = 2.0 * model.nu.total_mass()
        return bound if psi is None else float(bernstein_eval(psi, bound))
    return None


def density_class(model: LevyModel, psi: BernsteinFunction | None, t: float,
                  probe: int = 4000, run: int = 50) -> DensityVerdict:
    """
    Classify sum_n d_n e^{-2 t chi'_n} (finite iff the time-t law has an L^2, equivalently
    continuous, density).
    """
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got t={t}")
    growth = certified_growth(model, psi)
    if growth is not None:
        return DensityVerdict(
            DensityClass.CONTINUOUS,
            f"chi'_n >= {growth.scale:.6g} kappa_n^{growth.power:g}, so the series converges")
    bound = bounded_exponent(model, psi)
    if bound is not None:
        return DensityVerdict(
            DensityClass.NO_SQUARE_INTEGRABLE_DENSITY,
            f"chi'_n <= {bound:.6g} for all n, so d_n e^{{-2t chi'_n}} does not tend to 0")

    n_max = 64
    checkpoints: list[float] = []
    while True:
        table = build_table(model, n_max)
        terms = table.dims * np.exp(-2.0 * t * table.exponents(psi))
        sums = np.cumsum(terms)
        total = float(math.fsum(terms))
        checkpoints.append(total)
        tail = terms[-run:]
        if total > 0 and np.all(tail < 1e-15 * total) and np.all(np.diff(tail) <= 0.0):
            logger.info(f"density_class: partial sums stagnate at {total:.12g} (n <= {n_max})")
            return DensityVerdict(DensityClass.NUMERICALLY_CONVERGENT,
                                  "partial sums stagnate", total=total,
                                  partial_sums=tuple(checkpoints))
        if n_max >= probe:
            logger.warning(f"density_class: no stagnation up to n = {n_max}; last sum {sums[-1]:.6g}")
            return DensityVerdict(DensityClass.UNDETERMINED, "no stagnation within the probe",
                                  partial_sums=tuple(checkpoints))
        n_max = min(2 * n_max, probe)
