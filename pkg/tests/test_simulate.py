import json
import math
from dataclasses import asdict

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from isokernel.errors import DomainError
from isokernel.settings import Simulation
from isokernel.simulate import (
    ColatHistogram,
    RngStream,
    colatitudes,
    estimate_return_density,
    ks_band,
    laplace_check,
    moment_checks,
    north_pole,
    rotate,
    sample_colatitude,
    sample_heat_colatitudes,
    sample_subordinator,
    simulate_colatitudes,
    simulate_endpoint,
    simulate_endpoints,
)
from isokernel.spectrum import BernsteinFunction


def test_rng_stream_is_reproducible():
    a = RngStream(7, 1).block(3).random(5)
    b = RngStream(7, 1).block(3).random(5)
    c = RngStream(7, 1).block(4).random(5)
    assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_histogram():
    h = ColatHistogram.from_angles(np.array([0.1, 0.2, 3.0, math.pi]), 4)
    assert h.total == 4
    assert_array_equal((h + h).counts, 2 * h.counts)
    with pytest.raises(DomainError):
        h + ColatHistogram.from_angles(np.array([0.1]), 5)


def test_rotation_geometry(s2, rng):
    x = north_pole(s2, 1000)
    theta = rng.uniform(0.0, math.pi, 1000)
    y = rotate(x, theta, rng)
    assert np.max(np.abs(np.linalg.norm(y, axis=1) - 1.0)) <= 1e-12
    assert_allclose(colatitudes(y), theta, atol=1e-12)


def test_forced_jump_lands_on_equator(s2, rng):
    y = rotate(north_pole(s2, 3), np.full(3, math.pi / 2), rng)
    assert_allclose(colatitudes(y), math.pi / 2, atol=1e-12)


def test_zero_time_stays_at_pole(s2, rng):
    theta = sample_heat_colatitudes(s2, 1.0, np.zeros(4), rng)
    assert_array_equal(theta, 0.0)


def test_drift_only_subordinator(rng):
    psi = BernsteinFunction.drift_cp(2.0)
    assert sample_subordinator(psi, 3.0, rng) == 6.0
    assert_array_equal(sample_subordinator(psi, 3.0, rng, 10), 6.0)


def test_compound_poisson_subordinator(rng):
    draws = sample_subordinator(BernsteinFunction.drift_cp(0.0, [(1.0, 2.0)]), 1.0, rng, 100_000)
    assert draws.mean() == pytest.approx(2.0, abs=0.02)
    assert_array_equal(draws, np.round(draws))


@pytest.mark.parametrize("psi", [BernsteinFunction.stable(0.5), BernsteinFunction.stable(0.7),
                                 BernsteinFunction.drift_cp(0.5, [(0.2, 1.0)])])
def test_laplace_property(psi, rng):
    checks = laplace_check(psi, 1.0, (0.5, 1.0, 2.0), 100_000, rng)
    assert all(c.passed for c in checks), checks


def test_subordinator_rejects_bad_time(stable_half, rng):
    with pytest.raises(DomainError):
        sample_subordinator(stable_half, 0.0, rng)


def test_series_sampler_moments(heat3, rng):
    angles = sample_colatitude(heat3, None, 0.5, rng, size=100_000)
    mean = np.cos(angles).mean()
    assert mean == pytest.approx(math.exp(-1.0), abs=0.01)
    p2 = (3 * np.cos(angles) ** 2 - 1) / 2
    assert p2.mean() == pytest.approx(math.exp(-3.0), abs=0.01)


def test_equidistribution_at_large_time(heat3, rng):
    angles = sample_colatitude(heat3, None, 20.0, rng, size=100_000)
    assert np.cos(angles).mean() == pytest.approx(0.0, abs=0.01)


def test_endpoints_are_unit_vectors(mixed_model, rng):
    x = simulate_endpoints(mixed_model, None, 0.5, 2000, rng)
    assert x.shape == (2000, 3)
    assert np.max(np.abs(np.linalg.norm(x, axis=1) - 1.0)) <= 1e-12
    assert simulate_endpoint(mixed_model, None, 0.5, rng).shape == (3,)


@pytest.mark.parametrize("name, psi", [("heat3", None), ("atom_model", None), ("mixed_model", None),
                                       ("power_model", None),
                                       ("heat3", BernsteinFunction.stable(0.5)),
                                       ("heat3", BernsteinFunction.drift_cp(0.5, [(0.2, 1.0)]))])
def test_moment_identity(name, psi, request):
    model = request.getfixturevalue(name)
    angles = simulate_colatitudes(model, psi, 0.5, 20_000, RngStream(2024))
    checks = moment_checks(angles, model, psi, 0.5)
    assert [c.n for c in checks] == [1, 2, 3]
    assert all(c.passed for c in checks), checks


def test_subordinated_first_moment(heat3, stable_half):
    angles = simulate_colatitudes(heat3, stable_half, 0.5, 50_000, RngStream(99))
    assert np.cos(angles).mean() == pytest.approx(math.exp(-0.5 * math.sqrt(2.0)), abs=0.01)


def test_small_time_tangent_law(s2, rng):
    times = np.full(50_000, 1e-4)
    theta = sample_heat_colatitudes(s2, 1.0, times, rng)
    # E theta^2 = 2 m a s in the flat limit
    assert np.mean(theta**2) == pytest.approx(4e-4, rel=0.03)


def test_block_layout_is_deterministic(heat3):
    sim = Simulation(block_size=1000)
    a = simulate_colatitudes(heat3, None, 0.5, 3500, RngStream(5), simulation=sim)
    b = simulate_colatitudes(heat3, None, 0.5, 3500, RngStream(5), simulation=sim)
    assert a.shape == (3500,)
    assert_array_equal(a, b)


def test_worker_count_does_not_change_results(heat3):
    sim = Simulation(block_size=1000)
    serial = simulate_colatitudes(heat3, None, 0.5, 3000, RngStream(11), workers=1, simulation=sim)
    parallel = simulate_colatitudes(heat3, None, 0.5, 3000, RngStream(11), workers=2, simulation=sim)
    assert_array_equal(serial, parallel)


def test_estimate_needs_enough_samples(heat3):
    with pytest.raises(DomainError):
        estimate_return_density(heat3, None, 0.5, 999, 32, RngStream(0))


def test_estimate_small_run(heat3):
    est = estimate_return_density(heat3, None, 0.5, 5000, 32, RngStream(3))
    assert est.histogram.total == 5000
    assert est.ks_band == pytest.approx(ks_band(5000))
    assert est.passed


@pytest.mark.slow
@pytest.mark.parametrize("psi", [None, BernsteinFunction.stable(0.5)])
def test_return_density_acceptance(heat3, psi):
    est = estimate_return_density(heat3, psi, 0.5, 100_000, 64, RngStream(20240601))
    assert est.ks <= 0.012
    assert est.passed
    assert all(c.passed for c in moment_checks(est.angles, heat3, psi, 0.5))


@pytest.mark.slow
def test_uniform_limit_acceptance(heat3):
    est = estimate_return_density(heat3, None, 20.0, 100_000, 64, RngStream(8))
    theta = np.sort(est.angles)
    empirical = np.arange(1, theta.size + 1) / theta.size
    assert np.max(np.abs(empirical - (1 - np.cos(theta)) / 2)) <= ks_band(100_000)


def test_power_model_endpoint_law(power_model):
    angles = simulate_colatitudes(power_model, None, 1.0, 5000, RngStream(1))
    assert np.all((angles >= 0.0) & (angles <= math.pi))


def test_checks_serialize_to_json(heat3, stable_half, rng):
    angles = simulate_colatitudes(heat3, None, 0.5, 2000, RngStream(4))
    moments = moment_checks(angles, heat3, None, 0.5)
    laplace = laplace_check(stable_half, 1.0, (1.0,), 1000, rng)
    text = json.dumps([asdict(c) for c in moments + laplace])
    assert all(type(c.passed) is bool for c in moments + laplace)
    assert all(type(c.z) is float for c in moments)
    assert json.loads(text)[0]["n"] == 1
