# isokernel/asymptotics.py
"""
Leading short-time behaviour of the diagonal k_t(o, o) on X = S^{d-1}, m = dim X = d - 1:

    heat:          Vol(X) / (4 pi a t)^{m/2}
    subordinated:  Vol(X) Gamma(m/2r + 1) / ((4 pi)^{m/2} Gamma(m/2 + 1)) * (psi^{-1}(1/t) / a)^{m/2}

with r the regular-variation index of psi at infinity.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

from scipy.special import gamma as gamma_fn

from .errors import DomainError
from .kernel import trace
from .settings import Numerics
from .special_fn import SphereGeometry
from .spectrum import BernsteinFunction, LevyModel, bernstein_inverse

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AsymptoticSpec:
    geom: SphereGeometry
    psi: BernsteinFunction | None = None
    mode: str = "heat"

    def __post_init__(self):
        if self.mode not in ("heat", "subordinated"):
            raise DomainError(f"mode must be 'heat' or 'subordinated', got {self.mode!r}")
        if self.mode == "subordinated":
            if self.psi is None or self.psi.index is None:
                raise DomainError("subordinated asymptotics need a Bernstein function with index r")
            if self.psi.is_bounded():
                raise DomainError("subordinated asymptotics need an invertible (unbounded) psi")

    @classmethod
    def for_subordinator(cls, geom: SphereGeometry, psi: BernsteinFunction | None) -> "AsymptoticSpec":
        if psi is None or psi.kind == "identity":
            return cls(geom=geom)
        return cls(geom=geom, psi=psi, mode="subordinated")

    def predict(self, t: float, a: float = 1.0) -> float:
        if self.mode == "heat":
            return heat_asym(self.geom, t, a)
        return subordinated_asym(self.geom, self.psi, t, a)


def _check_time(t: float, a: float):
    if not t > 0.0:
        raise DomainError(f"t must be > 0, got t={t}")
    if not a > 0.0:
        raise DomainError(f"diffusion coefficient must be > 0, got a={a}")


def heat_asym(geom: SphereGeometry, t: float, a: float = 1.0) -> float:
    _check_time(t, a)
    m = geom.manifold_dim
    return geom.volume / (4.0 * math.pi * a * t) ** (m / 2.0)


def subordinated_asym(geom: SphereGeometry, psi: BernsteinFunction, t: float, a: float = 1.0) -> float:
    _check_time(t, a)
    r = psi.index
    if r is None:
        raise DomainError(f"{psi.kind} subordinator has no regular-variation index")
    m = geom.manifold_dim
    const = geom.volume * gamma_fn(m / (2.0 * r) + 1.0) / (
        (4.0 * math.pi) ** (m / 2.0) * gamma_fn(m / 2.0 + 1.0))
    return float(const * (bernstein_inverse(psi, 1.0 / t) / a) ** (m / 2.0))


@dataclass(frozen=True)
class AsymptoticRow:
    t: float
    exact: float
    prediction: float
    ratio: float


def asym_ratio_curve(model: LevyModel, psi: BernsteinFunction | None, t_grid: Iterable[float],
                     numerics: Numerics | None = None) -> list[AsymptoticRow]:
    """Exact diagonal over the leading-term prediction, one row per t."""
    if not model.is_pure_heat():
        raise DomainError("asymptotic ratios are defined for Brownian models (a > 0, nu = 0)")
    spec = AsymptoticSpec.for_subordinator(model.geom, psi)
    rows = []
    for t in t_grid:
        exact = trace(model, psi, t, numerics=numerics).diagonal
        prediction = spec.predict(t, model.a)
        rows.append(AsymptoticRow(t=float(t), exact=exact, prediction=prediction, ratio=exact / prediction))
    if approaches_one(rows):
        logger.info("asymptotic ratios approach 1 monotonically as t decreases")
    else:
        logger.info("asymptotic ratios do not approach 1 monotonically on this grid")
    return rows


def approaches_one(rows: list[AsymptoticRow]) -> bool:
    """|ratio - 1| nonincreasing as t decreases."""
    ordered = sorted(rows, key=lambda r: -r.t)
    gaps = [abs(r.ratio - 1.0) for r in ordered]
    return all(b <= a for a, b in zip(gaps, gaps[1:]))
