"""Energy functional, its L2 gradient, the Nehari functional and the fiber projection.

A pair (u, v) is also handled as a stacked array of shape (2, nx, ny); the
``FunctionalEvaluator`` works on that array form so the descent loops avoid
building Field objects on every step.
"""

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .exceptions import EnergyError, FieldError, ModelError, NoProjection, NotOnManifold
from .spectral import Field, check_order, symbol_form

log = logging.getLogger(__name__)

REGIME_TOLERANCE = 1e-12
MANIFOLD_TOLERANCE = 1e-8


def critical_exponent(s):
    return 2.0 * (1.0 + s) / (1.0 - s)


def sgnpow(values, power):
    """sign(u) |u|^power, continuous at 0 for power > 0."""
    return np.sign(values) * np.abs(values) ** power


@dataclass(frozen=True)
class ModelParams:
    s1: float
    s2: float
    alpha: float
    beta: float
    kappa: float = 0.0

    def __post_init__(self):
        for name in ('s1', 's2'):
            try:
                check_order(getattr(self, name))
            except FieldError as error:
                raise ModelError(f'{name}: {error}') from None
        if not (self.alpha > 1.0 and self.beta > 1.0):
            raise ModelError(f'exponent rule violated: need alpha, beta > 1, got alpha={self.alpha}, beta={self.beta}')
        limit = min(self.crit1, self.crit2)
        if self.alpha + self.beta > limit * (1.0 + REGIME_TOLERANCE):
            raise ModelError(f'exponent rule violated: alpha + beta = {self.alpha + self.beta} exceeds '
                             f'min(2_s1, 2_s2) = {limit}')
        if not (math.isfinite(self.kappa) and self.kappa >= 0.0):
            raise ModelError(f'coupling kappa must be >= 0, got {self.kappa}')

    @property
    def crit1(self):
        return critical_exponent(self.s1)

    @property
    def crit2(self):
        return critical_exponent(self.s2)

    @property
    def q(self):
        return self.alpha + self.beta

    @property
    def orders(self):
        return self.s1, self.s2

    @property
    def regime(self):
        limit = min(self.crit1, self.crit2)
        if abs(self.q - limit) > REGIME_TOLERANCE * limit:
            return 'subcritical'
        if abs(self.s1 - self.s2) <= REGIME_TOLERANCE:
            return 'critical'
        return 'sum-critical'

    def with_kappa(self, kappa):
        return replace(self, kappa=float(kappa))


@dataclass(frozen=True, eq=False)
class Pair:
    u: Field
    v: Field

    def __post_init__(self):
        if self.u.grid != self.v.grid:
            raise FieldError('pair components live on different grids')

    @property
    def grid(self):
        return self.u.grid

    @property
    def stack(self):
        return np.stack([self.u.values, self.v.values])

    @classmethod
    def from_stack(cls, grid, stack):
        return cls(Field(grid, stack[0]), Field(grid, stack[1]))

    @classmethod
    def zeros(cls, grid):
        return cls(Field.zeros(grid), Field.zeros(grid))

    def scaled(self, factor):
        return Pair(self.u.scaled(factor), self.v.scaled(factor))

    def is_zero(self):
        return not (np.any(self.u.values) or np.any(self.v.values))


@dataclass(frozen=True)
class EnergyBreakdown:
    quad_u: float
    quad_v: float
    crit_u: float
    crit_v: float
    coupling: float
    total: float


@dataclass(frozen=True)
class FiberCoefficients:
    A1: float
    A2: float
    A3: float
    A4: float

    def __post_init__(self):
        for name in ('A1', 'A2', 'A3', 'A4'):
            if getattr(self, name) < 0.0:
                raise EnergyError(f'fiber coefficient {name} is negative')

    def scaled(self, factor, model):
        """Coefficients of factor * p."""
        return FiberCoefficients(self.A1 * factor ** 2, self.A2 * factor ** model.crit1,
                                 self.A3 * factor ** model.crit2, self.A4 * factor ** model.q)


class FunctionalEvaluator:
    """J, its gradient and the Nehari functional on stacked (2, nx, ny) arrays."""

    def __init__(self, grid, model, weight):
        self.grid = grid
        self.model = model
        self.weight = weight
        self.h = weight.sample(grid).values
        self.symbols = np.stack([grid.mixed_symbol(model.s1), grid.mixed_symbol(model.s2)])

    def _integral(self, values):
        return self.grid.cell * float(np.sum(values))

    def terms(self, stack):
        """(quad_u, quad_v, crit_u, crit_v, coupling) for a stacked pair."""
        m = self.model
        u, v = np.abs(stack[0]), np.abs(stack[1])
        return (symbol_form(self.grid, stack[0], self.symbols[0]),
                symbol_form(self.grid, stack[1], self.symbols[1]),
                self._integral(u ** m.crit1),
                self._integral(v ** m.crit2),
                self._integral(self.h * u ** m.alpha * v ** m.beta))

    def fiber(self, stack):
        quad_u, quad_v, crit_u, crit_v, coupling = self.terms(stack)
        return FiberCoefficients(quad_u + quad_v, crit_u, crit_v, coupling)

    def value(self, stack):
        m = self.model
        quad_u, quad_v, crit_u, crit_v, coupling = self.terms(stack)
        return 0.5 * (quad_u + quad_v) - crit_u / m.crit1 - crit_v / m.crit2 - m.kappa * coupling

    def nehari(self, stack):
        c = self.fiber(stack)
        return c.A1 - c.A2 - c.A3 - self.model.kappa * self.model.q * c.A4

    def gradient(self, stack):
        m = self.model
        u, v = stack
        linear = self.linear(stack)
        abs_u, abs_v = np.abs(u), np.abs(v)
        coupled = m.kappa * self.h
        return np.stack([
            linear[0] - sgnpow(u, m.crit1 - 1.0) - coupled * m.alpha * sgnpow(u, m.alpha - 1.0) * abs_v ** m.beta,
            linear[1] - sgnpow(v, m.crit2 - 1.0) - coupled * m.beta * abs_u ** m.alpha * sgnpow(v, m.beta - 1.0),
        ])

    def linear(self, stack):
        return np.fft.ifft2(np.fft.fft2(stack) * self.symbols).real

    def project(self, stack):
        """Scale a stacked pair onto the Nehari manifold; returns (eta, scaled stack)."""
        eta = nehari_root(self.fiber(stack), self.model)
        return eta, eta * stack


def _check_finite(breakdown):
    for name, value in vars(breakdown).items():
        if not math.isfinite(value):
            raise EnergyError(f'energy term {name} is not finite')
    return breakdown


def energy(p, m, h):
    evaluator = FunctionalEvaluator(p.grid, m, h)
    quad_u, quad_v, crit_u, crit_v, coupling = evaluator.terms(p.stack)
    total = 0.5 * (quad_u + quad_v) - crit_u / m.crit1 - crit_v / m.crit2 - m.kappa * coupling
    return _check_finite(EnergyBreakdown(quad_u, quad_v, crit_u, crit_v, coupling, total))


def gradient(p, m, h):
    g = FunctionalEvaluator(p.grid, m, h).gradient(p.stack)
    if not np.all(np.isfinite(g)):
        raise EnergyError('gradient is not finite')
    return Pair.from_stack(p.grid, g)


def nehari_value(p, m, h):
    return FunctionalEvaluator(p.grid, m, h).nehari(p.stack)


def fiber_coefficients(p, m, h):
    return FunctionalEvaluator(p.grid, m, h).fiber(p.stack)


def fiber_map(t, c, m):
    """psi(t) = J(t p) and its first three derivatives, from the fiber coefficients."""
    if not t > 0.0:
        raise EnergyError(f'fiber map needs t > 0, got {t}')
    p1, p2, q, k = m.crit1, m.crit2, m.q, m.kappa
    psi = t ** 2 * c.A1 / 2.0 - t ** p1 * c.A2 / p1 - t ** p2 * c.A3 / p2 - k * c.A4 * t ** q
    d1 = t * c.A1 - t ** (p1 - 1.0) * c.A2 - t ** (p2 - 1.0) * c.A3 - k * q * c.A4 * t ** (q - 1.0)
    d2 = (c.A1 - (p1 - 1.0) * t ** (p1 - 2.0) * c.A2 - (p2 - 1.0) * t ** (p2 - 2.0) * c.A3
          - k * q * (q - 1.0) * c.A4 * t ** (q - 2.0))
    d3 = (-(p1 - 1.0) * (p1 - 2.0) * t ** (p1 - 3.0) * c.A2 - (p2 - 1.0) * (p2 - 2.0) * t ** (p2 - 3.0) * c.A3
          - k * q * (q - 1.0) * (q - 2.0) * c.A4 * t ** (q - 3.0))
    return psi, d1, d2, d3


def nehari_root(c, m):
    """Unique positive root of psi'(t) / t, bracketed from t = 1 and refined by Brent's method."""
    if c.A1 <= 0.0 or c.A2 + c.A3 + m.kappa * c.A4 <= 0.0:
        raise NoProjection('fiber is purely quadratic, no Nehari scaling exists')

    def reduced(t):
        return (c.A1 - c.A2 * t ** (m.crit1 - 2.0) - c.A3 * t ** (m.crit2 - 2.0)
                - m.kappa * m.q * c.A4 * t ** (m.q - 2.0)) / c.A1

    at_one = reduced(1.0)
    if at_one == 0.0:
        return 1.0
    low, high = 1.0, 1.0
    if at_one > 0.0:
        while reduced(high) > 0.0:
            high *= 2.0
            if high > 1e150:
                raise NoProjection('could not bracket the Nehari scaling')
    else:
        while reduced(low) < 0.0:
            low *= 0.5
            if low < 1e-150:
                raise NoProjection('could not bracket the Nehari scaling')
    return optimize.brentq(reduced, low, high, xtol=1e-300, rtol=4.0 * np.finfo(float).eps, maxiter=200)


def project_to_nehari(p, m, h):
    eta, stack = FunctionalEvaluator(p.grid, m, h).project(p.stack)
    return eta, Pair.from_stack(p.grid, stack)


def nehari_norm(p, m):
    """||p||_D, the radius witness of the manifold."""
    return math.sqrt(symbol_form(p.grid, p.u.values, p.grid.mixed_symbol(m.s1))
                     + symbol_form(p.grid, p.v.values, p.grid.mixed_symbol(m.s2)))


def energy_on_nehari_forms(p, m, h):
    """J on the manifold three ways: the crit/coupling form, the D-norm form and the direct sum."""
    evaluator = FunctionalEvaluator(p.grid, m, h)
    c = evaluator.fiber(p.stack)
    phi = c.A1 - c.A2 - c.A3 - m.kappa * m.q * c.A4
    if abs(phi) >= MANIFOLD_TOLERANCE * c.A1:
        raise NotOnManifold(f'Nehari residual {phi:.3e} exceeds {MANIFOLD_TOLERANCE:.0e} * ||p||_D^2')
    coupling_form = (m.s1 / (1.0 + m.s1) * c.A2 + m.s2 / (1.0 + m.s2) * c.A3
              + m.kappa * (m.q - 2.0) / 2.0 * c.A4)
    norm_form = ((0.5 - 1.0 / m.q) * c.A1 + (1.0 / m.q - 1.0 / m.crit1) * c.A2
              + (1.0 / m.q - 1.0 / m.crit2) * c.A3)
    return coupling_form, norm_form, evaluator.value(p.stack)
