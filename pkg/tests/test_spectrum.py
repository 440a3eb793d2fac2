import math

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.integrate import quad
from scipy.special import eval_legendre

from isokernel.errors import DomainError, IntegrabilityError, NotInvertibleError
from isokernel.special_fn import SphereGeometry, casimirs
from isokernel.spectrum import (
    BernsteinFunction,
    DensityClass,
    DensityFamily,
    LevyMeasureSpec,
    LevyModel,
    bernstein_eval,
    bernstein_inverse,
    build_table,
    chi,
    density_class,
    subordinated_spectrum,
    validate_levy,
)


def test_validate_atom():
    v = validate_levy(LevyMeasureSpec(atoms=((math.pi / 2, 1.0),)))
    assert v.moment == pytest.approx(1.0, abs=1e-15)


def test_validate_power_moment():
    v = validate_levy(LevyMeasureSpec(family=DensityFamily.power(1.0, 1.5)))
    expected, _ = quad(lambda x: (1 - math.cos(x)) * x**-2.5, 0.0, math.pi, limit=200)
    assert v.moment == pytest.approx(expected, rel=1e-6)


@pytest.mark.parametrize("beta", [2.0, 2.5])
def test_power_family_not_integrable(beta):
    with pytest.raises(IntegrabilityError, match="beta"):
        validate_levy(LevyMeasureSpec(family=DensityFamily.power(1.0, beta)))


@pytest.mark.parametrize("atoms", [((0.0, 1.0),), ((3.5, 1.0),), ((1.0, -2.0),)])
def test_bad_atoms(atoms):
    with pytest.raises(DomainError):
        validate_levy(LevyMeasureSpec(atoms=atoms))


def test_degenerate_model_rejected(s2):
    with pytest.raises(DomainError):
        LevyModel(geom=s2)
    with pytest.raises(DomainError):
        LevyModel(geom=s2, a=-1.0)


def test_heat_chi(heat3):
    table = build_table(heat3, 3)
    assert_allclose(table.chis, [0, 2, 6, 12])
    assert chi(heat3, 2) == 6.0


def test_atom_chi(atom_model):
    assert_allclose(build_table(atom_model, 2).chis, [0.0, 1.0, 1.5], atol=1e-15)


def test_single_entry_table(mixed_model):
    table = build_table(mixed_model, 0)
    assert table.entries == [(0, 1, 0.0, 0.0)]
    assert table.coefficients(1.0)[0] == 1.0


def test_table_is_read_only(heat3):
    table = build_table(heat3, 4)
    with pytest.raises(ValueError):
        table.chis[1] = 0.0


def test_uniform_family_against_quad(s2):
    model = LevyModel(geom=s2, nu=LevyMeasureSpec(family=DensityFamily.uniform(0.7)))
    chis = build_table(model, 10).chis
    for n in range(11):
        expected, _ = quad(lambda x: 0.7 * (1 - eval_legendre(n, math.cos(x))), 0.0, math.pi, limit=200)
        assert chis[n] == pytest.approx(expected, abs=1e-10)


@pytest.mark.parametrize("n", [1, 5, 20])
def test_power_family_against_quad(power_model, n):
    def integrand(x):
        return (1 - eval_legendre(n, math.cos(x))) * x**-2.5

    expected = sum(quad(integrand, lo, hi, limit=400)[0] for lo, hi in ((0.0, 0.05), (0.05, math.pi)))
    assert chi(power_model, n) == pytest.approx(expected, rel=1e-6)


def test_chi_is_linear_in_diffusion(s2):
    nu = LevyMeasureSpec(atoms=((1.0, 2.0), (2.5, 0.3)), family=DensityFamily.uniform(0.5))
    jumps = build_table(LevyModel(geom=s2, nu=nu), 40).chis
    both = build_table(LevyModel(geom=s2, a=0.7, nu=nu), 40).chis
    assert_allclose(both, 0.7 * casimirs(40, s2) + jumps, rtol=1e-10)


def test_chi_nonnegative(mixed_model, power_model, atom_model):
    for model in (mixed_model, power_model, atom_model):
        chis = build_table(model, 200).chis
        assert chis[0] == 0.0
        assert np.all(chis >= 0.0)


def test_exponentials_monotone_in_t(mixed_model):
    table = build_table(mixed_model, 10)
    grid = np.linspace(0.05, 2.0, 40)
    values = np.exp(-grid[:, None] * table.chis[None, :])
    assert np.all(np.diff(values, axis=0) <= 0.0)


def test_bernstein_families():
    u = np.array([0.0, 0.5, 4.0])
    assert_allclose(bernstein_eval(BernsteinFunction.identity(), u), u)
    assert bernstein_eval(BernsteinFunction.stable(0.5), 4.0) == pytest.approx(2.0)
    psi = BernsteinFunction.drift_cp(0.5, [(0.2, 1.0)])
    assert bernstein_eval(psi, 3.0) == pytest.approx(1.5 + (1 - math.exp(-0.6)))
    assert bernstein_eval(psi, 0.0) == 0.0


@pytest.mark.parametrize("kwargs", [dict(kind="stable", alpha=1.0), dict(kind="stable"),
                                    dict(kind="drift_cp"), dict(kind="drift_cp", b=-1.0),
                                    dict(kind="gamma")])
def test_bernstein_validation(kwargs):
    with pytest.raises(DomainError):
        BernsteinFunction(**kwargs)


def test_regular_variation_index():
    assert BernsteinFunction.identity().index == 1.0
    assert BernsteinFunction.stable(0.3).index == 0.3
    assert BernsteinFunction.drift_cp(1.0).index == 1.0
    assert BernsteinFunction.drift_cp(0.0, [(1.0, 2.0)]).index is None


@pytest.mark.parametrize("psi", [BernsteinFunction.identity(), BernsteinFunction.stable(0.5),
                                 BernsteinFunction.stable(0.8),
                                 BernsteinFunction.drift_cp(0.5, [(0.2, 1.0), (3.0, 0.5)]),
                                 BernsteinFunction.drift_cp(0.0, [(1.0, 2.0)])])
def test_bernstein_concave_increasing(psi):
    u = np.logspace(-3, 1.5, 60)
    v = bernstein_eval(psi, u)
    slopes = np.diff(v) / np.diff(u)
    assert np.all(slopes > 0.0)
    assert np.all(np.diff(slopes) <= 1e-12 * np.abs(slopes[:-1]))


def test_bernstein_inverse():
    assert bernstein_inverse(BernsteinFunction.stable(0.5), 3.0) == pytest.approx(9.0)
    assert bernstein_inverse(BernsteinFunction.drift_cp(2.0), 6.0) == pytest.approx(3.0, rel=1e-12)
    psi = BernsteinFunction.drift_cp(0.5, [(0.2, 1.0)])
    for v in (0.01, 1.0, 250.0):
        assert bernstein_eval(psi, bernstein_inverse(psi, v)) == pytest.approx(v, rel=1e-10)


def test_bounded_bernstein_not_invertible():
    psi = BernsteinFunction.drift_cp(0.0, [(1.0, 2.0)])
    assert psi.is_bounded() and psi.sup() == 2.0
    assert bernstein_eval(psi, bernstein_inverse(psi, 1.0)) == pytest.approx(1.0)
    with pytest.raises(NotInvertibleError):
        bernstein_inverse(psi, 2.0)


def test_subordinated_spectrum(heat3, stable_half):
    assert subordinated_spectrum(heat3, stable_half, 2) == pytest.approx(math.sqrt(6.0), abs=1e-6)
    for n in range(6):
        assert subordinated_spectrum(heat3, BernsteinFunction.identity(), n) == chi(heat3, n)


def test_stable_with_diffusion(s2):
    model = LevyModel.heat(3, a=2.0)
    table = build_table(model, 5)
    assert_allclose(table.exponents(BernsteinFunction.stable(0.5)), np.sqrt(2.0 * casimirs(5, s2)))


def test_density_class_heat(heat3):
    assert density_class(heat3, None, 0.5).kind == DensityClass.CONTINUOUS


def test_density_class_compound_poisson(atom_model):
    verdict = density_class(atom_model, None, 0.3)
    assert verdict.kind == DensityClass.NO_SQUARE_INTEGRABLE_DENSITY
    assert not verdict.has_density
    assert str(verdict) == "NoSquareIntegrableDensity"


def test_density_class_bounded_subordinator(heat3):
    psi = BernsteinFunction.drift_cp(0.0, [(1.0, 2.0)])
    assert density_class(heat3, psi, 1.0).kind == DensityClass.NO_SQUARE_INTEGRABLE_DENSITY


def test_density_class_power(power_model):
    verdict = density_class(power_model, None, 1.0)
    assert verdict.kind in (DensityClass.CONTINUOUS, DensityClass.NUMERICALLY_CONVERGENT)
    assert verdict.has_density
    assert str(verdict).startswith("NumericallyConvergent(")


def test_density_class_rejects_bad_time(heat3):
    with pytest.raises(DomainError):
        density_class(heat3, None, 0.0)


def test_dimension_other_than_three():
    model = LevyModel(geom=SphereGeometry(5), a=1.0, nu=LevyMeasureSpec(atoms=((math.pi, 1.0),)))
    # 1 - p_n(-1) = 1 - (-1)^n
    assert_allclose(build_table(model, 4).chis, casimirs(4, model.geom) + [0, 2, 0, 2, 0], atol=1e-13)
