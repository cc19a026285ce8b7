import pickle

import numpy as np
import pytest

from groundstates.exceptions import WeightError
from groundstates.spectral import Field, make_grid
from groundstates.weights import (
    AnnularGaussianWeight, BumpWeight, ConstantWeight, InverseExponentialWeight, TabulatedWeight,
    eval_annular_gaussian, eval_bump, eval_inverse_exponential, make_weight, radial_hypothesis_sign, validate_13,
    validate_H1,
)


@pytest.fixture
def wide_grid():
    return make_grid(64, 64, 20.0, 20.0)


def test_closed_forms():
    assert eval_bump(0.0, 0.0) == pytest.approx(np.exp(-1.0))
    assert eval_bump(1.0, 0.0) == 0.0
    assert eval_bump(0.0, 2.0) == 0.0
    assert eval_inverse_exponential(0.0, 0.0) == pytest.approx(np.e)
    assert eval_inverse_exponential(1.0, 1.0) == pytest.approx(np.exp(1.0 / 3.0))
    assert eval_annular_gaussian(0.0, 0.0) == 0.0
    assert eval_annular_gaussian(1.0, 0.0, a=2.0) == pytest.approx(np.exp(-2.0))


@pytest.mark.parametrize('weight', [BumpWeight(), InverseExponentialWeight(), AnnularGaussianWeight(a=0.7),
                                    AnnularGaussianWeight(a=1.3, x0=0.5, y0=-0.25)])
def test_gradient_matches_finite_differences(weight):
    x = np.array([0.1, -0.4, 0.3, 1.7])
    y = np.array([0.2, 0.5, -0.6, -0.3])
    step = 1e-6
    hx, hy = weight.gradient(x, y)
    assert np.allclose(hx, (weight(x + step, y) - weight(x - step, y)) / (2 * step), atol=1e-8)
    assert np.allclose(hy, (weight(x, y + step) - weight(x, y - step)) / (2 * step), atol=1e-8)


def test_center_shifts_weight():
    shifted = AnnularGaussianWeight(a=1.0, x0=2.0, y0=1.0)
    assert shifted(2.0, 1.0) == 0.0
    assert shifted(3.0, 1.0) == pytest.approx(eval_annular_gaussian(1.0, 0.0))
    assert not shifted.is_radial
    assert AnnularGaussianWeight().is_radial


@pytest.mark.parametrize('weight', [AnnularGaussianWeight(a=0.75), BumpWeight()])
def test_radial_weights_are_rotation_invariant(weight, wide_grid):
    values = weight.sample(wide_grid).values
    assert np.allclose(values, values.T, rtol=0.0, atol=1e-14)
    assert np.allclose(values[1:, :], values[:0:-1, :], rtol=0.0, atol=1e-14)
    angles = np.linspace(0.0, 2.0 * np.pi, 37)
    for radius in (0.3, 0.8, 2.0):
        ring = weight(radius * np.cos(angles), radius * np.sin(angles))
        assert np.ptp(ring) < 1e-12


def test_params_are_frozen():
    weight = AnnularGaussianWeight(a=2.0)
    assert weight.params['a'] == 2.0
    with pytest.raises(TypeError):
        weight.params['a'] = 3.0


@pytest.mark.parametrize('kind, params', [('constant', {'c': -1.0}), ('annular-gaussian', {'a': 0.0}),
                                          ('compact-bump', {'radius': 2.0}), ('sinc', {})])
def test_make_weight_rejects(kind, params):
    with pytest.raises(WeightError):
        make_weight(kind, **params)


def test_make_weight_kinds():
    assert isinstance(make_weight('constant', c=2.0), ConstantWeight)
    assert isinstance(make_weight('inverse-exponential'), InverseExponentialWeight)
    assert make_weight('annular-gaussian', a='0.5').params['a'] == 0.5


def test_samples_are_memoized_and_dropped_on_pickle(grid):
    weight = BumpWeight()
    first = weight.sample(grid)
    assert weight.sample(grid) is first
    clone = pickle.loads(pickle.dumps(weight))
    assert clone._samples == {}
    assert np.array_equal(clone.sample(grid).values, first.values)


@pytest.mark.parametrize('weight', [ConstantWeight(), BumpWeight(), InverseExponentialWeight(),
                                    AnnularGaussianWeight()])
def test_validate_13_passes(weight, wide_grid):
    check = validate_13(weight, wide_grid)
    assert check.passed
    assert check.clause is None


def test_validate_13_zero_weight(wide_grid):
    check = validate_13(ConstantWeight(c=0.0), wide_grid)
    assert not check.passed
    assert check.clause == 'h is not zero'


def test_validate_H1(wide_grid):
    assert validate_H1(AnnularGaussianWeight(), wide_grid).passed
    constant = validate_H1(ConstantWeight(), wide_grid)
    assert not constant.passed
    assert constant.clause == 'h(0,0) = 0'
    inverse = validate_H1(InverseExponentialWeight(), wide_grid)
    assert inverse.clause == 'h(0,0) = 0'
    assert validate_H1(BumpWeight(), wide_grid).clause == 'h(0,0) = 0'


def test_validate_H1_needs_decay_at_infinity(wide_grid):
    shifted = AnnularGaussianWeight(a=0.05)
    check = validate_H1(shifted, wide_grid)
    assert not check.passed
    assert check.clause == 'h -> 0 at infinity'


@pytest.mark.parametrize('weight', [ConstantWeight(), BumpWeight(), InverseExponentialWeight()])
def test_sign_hypothesis_holds(weight, wide_grid):
    check = radial_hypothesis_sign(weight, wide_grid, kappa=2.0)
    assert check.holds
    assert check.violations == []
    assert check.min_x_term >= -1e-12


def test_sign_hypothesis_fails_for_annular_weight(wide_grid):
    check = radial_hypothesis_sign(AnnularGaussianWeight(), wide_grid, kappa=2.0)
    assert not check.holds
    assert 0 < len(check.violations) <= 20
    x, y = check.violations[0]
    assert x ** 2 + y ** 2 < 1.0


def test_sign_hypothesis_flips_with_kappa(wide_grid):
    assert not radial_hypothesis_sign(BumpWeight(), wide_grid, kappa=-1.0).holds
    assert radial_hypothesis_sign(AnnularGaussianWeight(), wide_grid, kappa=0.0).holds


def test_tabulated_weight_interpolates_nodes(wide_grid):
    table = AnnularGaussianWeight().sample(wide_grid)
    weight = TabulatedWeight(table)
    xx, yy = wide_grid.mesh
    assert np.allclose(weight(xx, yy), table.values, atol=1e-10)
    assert weight(100.0, 0.0) == pytest.approx(table.values[-1, wide_grid.ny // 2], abs=1e-10)
    hx, hy = weight.gradient(0.5, 0.0)
    assert hx == pytest.approx(AnnularGaussianWeight().gradient(0.5, 0.0)[0], rel=5e-2)


def test_tabulated_weight_rejects_negative_samples(grid):
    with pytest.raises(WeightError):
        TabulatedWeight(Field(grid, -np.ones(grid.shape)))
    with pytest.raises(WeightError):
        TabulatedWeight(np.ones(grid.shape))
