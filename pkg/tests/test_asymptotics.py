import math

import numpy as np
import pytest

from isokernel.asymptotics import (
    AsymptoticRow,
    AsymptoticSpec,
    approaches_one,
    asym_ratio_curve,
    heat_asym,
    subordinated_asym,
)
from isokernel.errors import DomainError
from isokernel.kernel import trace
from isokernel.special_fn import SphereGeometry
from isokernel.spectrum import BernsteinFunction, LevyModel


def test_heat_asym_s2(s2):
    assert heat_asym(s2, 0.01) == pytest.approx(100.0, rel=1e-14)


def test_heat_asym_s3():
    t = 0.02
    assert heat_asym(SphereGeometry(4), t) == pytest.approx(math.sqrt(math.pi) / 4 * t**-1.5, rel=1e-13)


@pytest.mark.parametrize("d", [3, 4, 6])
def test_heat_asym_power_law(d):
    geom = SphereGeometry(d)
    scaled = [heat_asym(geom, t) * t ** (geom.manifold_dim / 2) for t in (1e-4, 1e-2, 0.3, 2.0)]
    assert np.ptp(scaled) <= 1e-12 * scaled[0]


def test_heat_asym_with_diffusion(s2):
    assert heat_asym(s2, 0.01, a=2.0) == pytest.approx(heat_asym(s2, 0.02))


def test_subordinated_stable_s2(s2, stable_half):
    for t in (0.01, 0.1, 1.0):
        assert subordinated_asym(s2, stable_half, t) == pytest.approx(2.0 / t**2, rel=1e-12)


def test_subordinated_power_law():
    geom, psi = SphereGeometry(5), BernsteinFunction.stable(0.7)
    scaled = [subordinated_asym(geom, psi, t) * t ** (geom.manifold_dim / (2 * 0.7)) for t in (1e-3, 0.1, 1.0)]
    assert np.ptp(scaled) <= 1e-12 * scaled[0]


def test_identity_reduces_to_heat(s2):
    for t in (0.003, 0.5):
        assert subordinated_asym(s2, BernsteinFunction.identity(), t) == pytest.approx(heat_asym(s2, t), rel=1e-13)


def test_subordinated_needs_index(s2):
    with pytest.raises(DomainError):
        subordinated_asym(s2, BernsteinFunction.drift_cp(0.0, [(1.0, 1.0)]), 0.1)


def test_spec_validation(s2):
    with pytest.raises(DomainError):
        AsymptoticSpec(geom=s2, mode="subordinated")
    with pytest.raises(DomainError):
        AsymptoticSpec(geom=s2, psi=BernsteinFunction.drift_cp(0.0, [(1.0, 1.0)]), mode="subordinated")
    with pytest.raises(DomainError):
        AsymptoticSpec(geom=s2, mode="weyl")
    assert AsymptoticSpec.for_subordinator(s2, None).mode == "heat"
    assert AsymptoticSpec.for_subordinator(s2, BernsteinFunction.identity()).mode == "heat"


def test_bad_time(s2):
    with pytest.raises(DomainError):
        heat_asym(s2, 0.0)
    with pytest.raises(DomainError):
        heat_asym(s2, 0.1, a=0.0)


def test_exact_heat_series_at_small_time(heat3):
    report = trace(heat3, None, 0.01)
    assert report.diagonal == pytest.approx(100.33, abs=0.01)
    assert report.diagonal / heat_asym(heat3.geom, 0.01) == pytest.approx(1.0033, abs=2e-4)


@pytest.mark.parametrize("t, lo, hi", [(0.01, 0.999, 1.005), (0.001, 0.999, 1.0005)])
def test_heat_trace_asymptotic(heat3, t, lo, hi):
    assert lo <= t * trace(heat3, None, t).trace <= hi


def test_ratio_curve_heat(heat3):
    rows = asym_ratio_curve(heat3, None, [0.1, 0.05, 0.01, 0.005])
    ratios = [r.ratio for r in rows]
    assert all(a > b for a, b in zip(ratios, ratios[1:]))
    assert abs(ratios[-1] - 1.0) < 0.01
    assert approaches_one(rows)


def test_ratio_at_tiny_time(heat3):
    (row,) = asym_ratio_curve(heat3, None, [1e-3])
    assert 0.999 <= row.ratio <= 1.002
    assert row.prediction == pytest.approx(heat_asym(heat3.geom, 1e-3))


def test_ratio_curve_stable(heat3, stable_half):
    (row,) = asym_ratio_curve(heat3, stable_half, [0.01])
    assert 0.98 <= row.ratio <= 1.02
    assert row.prediction == pytest.approx(2.0 / 0.01**2)


def test_ratio_curve_requires_brownian_base(mixed_model):
    with pytest.raises(DomainError):
        asym_ratio_curve(mixed_model, None, [0.1])


def test_approaches_one_detects_oscillation():
    rows = [AsymptoticRow(t=t, exact=0.0, prediction=1.0, ratio=r)
            for t, r in ((0.1, 1.05), (0.05, 0.97), (0.01, 1.04))]
    assert not approaches_one(rows)


def test_pure_drift_is_time_change(s2):
    psi = BernsteinFunction.drift_cp(2.0)
    assert subordinated_asym(s2, psi, 0.01) == pytest.approx(heat_asym(s2, 0.02), rel=1e-12)
    drift_cp = BernsteinFunction.drift_cp(0.5, [(0.2, 1.0)])
    assert subordinated_asym(s2, drift_cp, 0.01) > 0.0
