"""Invariant battery for the spectral operators; every check reports its measured value and tolerance."""

import logging
from dataclasses import dataclass

import numpy as np

from .solver import start_rng
from .spectral import (
    Field, apply_dxx, apply_fractional_laplacian_y, forward_transform, fractional_seminorm_sq,
    gagliardo_seminorm_sq, integrate, inverse_transform, make_grid, normalizing_constant_C,
    normalizing_constant_closed_form,
)

log = logging.getLogger(__name__)

ORDERS = (0.25, 0.5, 0.75)
EIGEN_MODES = 20


@dataclass
class OperatorCheck:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.value <= self.tolerance)


def _relative(a, b):
    scale = max(float(np.max(np.abs(b))), 1e-300)
    return float(np.max(np.abs(a - b))) / scale


def _smooth_random(grid, rng, count=3):
    xx, yy = grid.mesh
    values = np.zeros(grid.shape)
    for _ in range(count):
        x0, y0 = rng.uniform(-grid.lx / 8.0, grid.lx / 8.0, size=2)
        width = rng.uniform(0.05, 0.1) * min(grid.lx, grid.ly)
        values += rng.normal() * np.exp(-((xx - x0) ** 2 + (yy - y0) ** 2) / width ** 2)
    return Field(grid, values)


def eigenfunction_check(grid):
    worst = 0.0
    modes = min(EIGEN_MODES, grid.ny // 2 - 1)
    for s in ORDERS:
        for mode in range(1, modes + 1):
            wavenumber = 2.0 * np.pi * mode / grid.ly
            f = Field.from_function(grid, lambda x, y: np.cos(wavenumber * y) + 0.0 * x)
            worst = max(worst, _relative(apply_fractional_laplacian_y(f, s).values, wavenumber ** (2.0 * s) * f.values))
    return OperatorCheck(f'eigenfunction |k2|^2s ({modes} modes x {len(ORDERS)} orders)', worst, 1e-10)


def dxx_check(grid):
    wavenumber = 2.0 * np.pi / grid.lx
    f = Field.from_function(grid, lambda x, y: np.cos(wavenumber * x) + 0.0 * y)
    return OperatorCheck('-d_xx on cos(2 pi x / lx)', _relative(apply_dxx(f).values, wavenumber ** 2 * f.values), 1e-10)


def round_trip_check(grid, rng):
    f = Field(grid, rng.normal(size=grid.shape))
    return OperatorCheck('transform round trip', _relative(inverse_transform(forward_transform(f)).values, f.values),
                         1e-12)


def parseval_check(grid, rng):
    f = Field(grid, rng.normal(size=grid.shape))
    direct = integrate(Field(grid, f.values ** 2))
    spectral = grid.lx * grid.ly * float(np.sum(np.abs(forward_transform(f).coeffs) ** 2))
    return OperatorCheck('Parseval', abs(direct - spectral) / direct, 1e-10)


def symmetry_check(grid, rng):
    f, g = _smooth_random(grid, rng), _smooth_random(grid, rng)
    worst = 0.0
    for s in ORDERS:
        left = integrate(Field(grid, apply_fractional_laplacian_y(f, s).values * g.values))
        right = integrate(Field(grid, f.values * apply_fractional_laplacian_y(g, s).values))
        worst = max(worst, abs(left - right) / max(abs(left), abs(right), 1e-300))
    return OperatorCheck('symmetry of (-Delta)_y^s', worst, 1e-10)


def semigroup_check(grid):
    worst = 0.0
    for mode in range(1, min(EIGEN_MODES, grid.ny // 2 - 1) + 1):
        wavenumber = 2.0 * np.pi * mode / grid.ly
        f = Field.from_function(grid, lambda x, y: np.cos(wavenumber * y) + 0.0 * x)
        twice = apply_fractional_laplacian_y(apply_fractional_laplacian_y(f, 0.25), 0.5)
        worst = max(worst, _relative(twice.values, apply_fractional_laplacian_y(f, 0.75).values))
    return OperatorCheck('semigroup 0.25 + 0.5 = 0.75 on single modes', worst, 1e-10)


def constant_check():
    worst = max(abs(normalizing_constant_C(s) - normalizing_constant_closed_form(s)) / normalizing_constant_closed_form(s)
                for s in ORDERS)
    return OperatorCheck('C(s) quadrature against the Gamma closed form', worst, 1e-8)


def gaussian_integral_check():
    grid = make_grid(256, 256, 40.0, 40.0)
    value = integrate(Field.from_function(grid, lambda x, y: np.exp(-(x ** 2 + y ** 2))))
    return OperatorCheck('integral of exp(-r^2) on 256^2, 40 x 40', abs(value - np.pi) / np.pi, 1e-8)


def bump(radius):
    def evaluate(x, y):
        r2 = (x ** 2 + y ** 2) / radius ** 2
        inside = r2 < 1.0
        return np.where(inside, np.exp(-1.0 / np.where(inside, 1.0 - r2, 1.0)), 0.0)
    return evaluate


def gagliardo_check(s=0.5):
    grid = make_grid(64, 64, 30.0, 30.0)
    f = Field.from_function(grid, bump(8.0))
    oracle = gagliardo_seminorm_sq(f, s)
    spectral = fractional_seminorm_sq(f, s)
    return OperatorCheck(f'Gagliardo oracle against spectral seminorm (s={s}, 64^2)', abs(oracle - spectral) / spectral,
                         0.05)


def run_operator_checks(grid=None, seed=0):
    grid = grid or make_grid(64, 64, 30.0, 30.0)
    rng = start_rng(seed, 'verify-operators')
    checks = [
        eigenfunction_check(grid),
        dxx_check(grid),
        round_trip_check(grid, rng),
        parseval_check(grid, rng),
        symmetry_check(grid, rng),
        semigroup_check(grid),
        constant_check(),
        gaussian_integral_check(),
        gagliardo_check(),
    ]
    for check in checks:
        log.log(logging.INFO if check.passed else logging.WARNING, '%s: %.3e (tolerance %.0e) %s',
                check.name, check.value, check.tolerance, 'pass' if check.passed else 'FAIL')
    return checks
