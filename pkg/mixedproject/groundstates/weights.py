"""Coefficient functions h(x, y) of the coupling term and their hypothesis checks.

Every kind evaluates h and its partial derivatives on arbitrary coordinate arrays. The
closed-form kinds have analytic derivatives; the tabulated kind interpolates a sampled
field with a bicubic spline and differentiates it by centred differences.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from frozendict import frozendict
from scipy.interpolate import RectBivariateSpline

from .exceptions import WeightError
from .spectral import Field, boundary_ring, integrate

log = logging.getLogger(__name__)

SIGN_TOLERANCE = 1e-12


class WeightFunction:
    """A nonnegative coefficient h with partial derivatives h_x, h_y.

    Subclasses set ``kind`` (the name used in run configs) and implement ``_value`` and
    ``_gradient`` in coordinates already shifted to the weight's centre.
    """

    kind = None
    radial = False
    defaults = frozendict()

    def __init__(self, **params):
        unknown = set(params) - set(self.defaults) - {'x0', 'y0'}
        if unknown:
            raise WeightError(f'{self.kind}: unknown parameters {sorted(unknown)}')
        merged = dict(self.defaults, x0=0.0, y0=0.0)
        merged.update({key: float(value) for key, value in params.items()})
        self.params = frozendict(merged)
        self._samples = {}
        self.validate()

    def validate(self):
        pass

    @property
    def center(self):
        return self.params['x0'], self.params['y0']

    @property
    def is_radial(self):
        return self.radial and self.center == (0.0, 0.0)

    def __call__(self, x, y):
        x0, y0 = self.center
        return self._value(np.asarray(x, dtype=float) - x0, np.asarray(y, dtype=float) - y0)

    def gradient(self, x, y):
        x0, y0 = self.center
        return self._gradient(np.asarray(x, dtype=float) - x0, np.asarray(y, dtype=float) - y0)

    def sample(self, grid):
        """h on the grid nodes, memoized per grid."""
        if grid not in self._samples:
            xx, yy = grid.mesh
            hx, hy = self.gradient(xx, yy)
            self._samples[grid] = (Field(grid, np.broadcast_to(self(xx, yy), grid.shape)),
                                   Field(grid, np.broadcast_to(hx, grid.shape)),
                                   Field(grid, np.broadcast_to(hy, grid.shape)))
        return self._samples[grid][0]

    def sample_gradient(self, grid):
        self.sample(grid)
        return self._samples[grid][1:]

    def __getstate__(self):
        state = self.__dict__.copy()
        state['_samples'] = {}
        return state

    def __repr__(self):
        shown = ', '.join(f'{key}={value!r}' for key, value in self.params.items())
        return f'{type(self).__name__}({shown})'


class ConstantWeight(WeightFunction):
    kind = 'constant'
    radial = True
    defaults = frozendict(c=1.0)

    def validate(self):
        if self.params['c'] < 0.0:
            raise WeightError(f'constant weight must be >= 0, got c={self.params["c"]}')

    def _value(self, x, y):
        return np.full(np.broadcast(x, y).shape, self.params['c'])

    def _gradient(self, x, y):
        zeros = np.zeros(np.broadcast(x, y).shape)
        return zeros, zeros.copy()


class BumpWeight(WeightFunction):
    """exp(-1/(1 - r^2)) inside the unit disk, 0 outside: smooth and compactly supported."""

    kind = 'compact-bump'
    radial = True

    @staticmethod
    def _inside(x, y):
        r2 = x ** 2 + y ** 2
        inside = r2 < 1.0
        return inside, np.where(inside, 1.0 - r2, 1.0)

    def _value(self, x, y):
        inside, gap = self._inside(x, y)
        return np.where(inside, np.exp(-1.0 / gap), 0.0)

    def _gradient(self, x, y):
        inside, gap = self._inside(x, y)
        common = np.where(inside, -2.0 * np.exp(-1.0 / gap) / gap ** 2, 0.0)
        return common * x, common * y


class InverseExponentialWeight(WeightFunction):
    """exp(1/(1 + r^2)): positive, bounded by e, tending to 1 at infinity."""

    kind = 'inverse-exponential'
    radial = True

    def _value(self, x, y):
        return np.exp(1.0 / (1.0 + x ** 2 + y ** 2))

    def _gradient(self, x, y):
        denominator = 1.0 + x ** 2 + y ** 2
        common = -2.0 * np.exp(1.0 / denominator) / denominator ** 2
        return common * x, common * y


class AnnularGaussianWeight(WeightFunction):
    """r^2 exp(-a r^2): vanishes at the origin and at infinity, peak e^-1/a at r = a^-1/2."""

    kind = 'annular-gaussian'
    radial = True
    defaults = frozendict(a=1.0)

    def validate(self):
        if self.params['a'] <= 0.0:
            raise WeightError(f'annular-gaussian needs a > 0, got a={self.params["a"]}')

    def _value(self, x, y):
        r2 = x ** 2 + y ** 2
        return r2 * np.exp(-self.params['a'] * r2)

    def _gradient(self, x, y):
        a = self.params['a']
        r2 = x ** 2 + y ** 2
        common = 2.0 * np.exp(-a * r2) * (1.0 - a * r2)
        return common * x, common * y


class TabulatedWeight(WeightFunction):
    """Weight given by samples on a grid, typically read from an MGF1 file."""

    kind = 'tabulated'

    def __init__(self, table, **params):
        if not isinstance(table, Field):
            raise WeightError('tabulated weight needs a Field table')
        if np.min(table.values) < 0.0:
            raise WeightError('tabulated weight has negative samples')
        self.table = table
        grid = table.grid
        self._spline = RectBivariateSpline(grid.x, grid.y, table.values, kx=3, ky=3)
        self._step = 1e-5 * min(grid.dx, grid.dy)
        super().__init__(**params)

    def _clipped(self, x, y):
        grid = self.table.grid
        return np.clip(x, grid.x[0], grid.x[-1]), np.clip(y, grid.y[0], grid.y[-1])

    def _value(self, x, y):
        x, y = self._clipped(*np.broadcast_arrays(x, y))
        return np.maximum(self._spline.ev(x, y), 0.0)

    def _gradient(self, x, y):
        x, y = np.broadcast_arrays(x, y)
        step = self._step
        hx = (self._value(x + step, y) - self._value(x - step, y)) / (2.0 * step)
        hy = (self._value(x, y + step) - self._value(x, y - step)) / (2.0 * step)
        return hx, hy


WEIGHT_KINDS = {cls.kind: cls for cls in (ConstantWeight, BumpWeight, InverseExponentialWeight,
                                          AnnularGaussianWeight, TabulatedWeight)}


def make_weight(kind, **params):
    try:
        weight_class = WEIGHT_KINDS[kind]
    except KeyError:
        raise WeightError(f'unknown weight kind {kind!r}; expected one of {sorted(WEIGHT_KINDS)}') from None
    return weight_class(**params)


def eval_bump(x, y):
    return BumpWeight()(x, y)


def eval_inverse_exponential(x, y):
    return InverseExponentialWeight()(x, y)


def eval_annular_gaussian(x, y, a=1.0):
    return AnnularGaussianWeight(a=a)(x, y)


@dataclass
class WeightCheck:
    """Outcome of a hypothesis check; ``clause`` names the first failing condition."""

    condition: str
    passed: bool
    clause: str = None
    details: dict = field(default_factory=dict)


def validate_13(h, grid):
    """Nonnegative, bounded, integrable and not identically zero on the grid."""
    values = h.sample(grid).values
    details = {'min': float(np.min(values)), 'max': float(np.max(values)),
               'integral': integrate(h.sample(grid))}
    if details['min'] < 0.0:
        return WeightCheck('admissible', False, 'h >= 0', details)
    if not np.isfinite(details['max']):
        return WeightCheck('admissible', False, 'h is bounded', details)
    if not np.isfinite(details['integral']):
        return WeightCheck('admissible', False, 'h is integrable', details)
    if details['integral'] <= 0.0:
        return WeightCheck('admissible', False, 'h is not zero', details)
    return WeightCheck('admissible', True, None, details)


def validate_H1(h, grid, tolerance=1e-6):
    """Admissibility plus smallness of h at the origin and on the boundary ring.

    ``tolerance`` is relative to max h on the grid. Continuity near 0 and infinity is
    taken from the closed forms, not tested.
    """
    base = validate_13(h, grid)
    if not base.passed:
        return WeightCheck('vanishing', False, base.clause, base.details)
    details = dict(base.details)
    floor = tolerance * details['max']
    details['origin'] = float(h(0.0, 0.0))
    details['ring_max'] = float(np.max(h.sample(grid).values[boundary_ring(grid)]))
    if details['origin'] > floor:
        return WeightCheck('vanishing', False, 'h(0,0) = 0', details)
    if details['ring_max'] > floor:
        return WeightCheck('vanishing', False, 'h -> 0 at infinity', details)
    return WeightCheck('vanishing', True, None, details)


@dataclass
class HypothesisCheck:
    kappa: float
    holds: bool
    min_x_term: float
    min_y_term: float
    violations: list = field(default_factory=list)


def radial_hypothesis_sign(h, grid, kappa, max_violations=20):
    """Check kappa x h_x <= 0 and kappa y h_y <= 0 at every node.

    Any real kappa is accepted here, including negative values.
    """
    xx, yy = grid.mesh
    hx, hy = h.sample_gradient(grid)
    x_term = -kappa * xx * hx.values
    y_term = -kappa * yy * hy.values
    bad = (x_term < -SIGN_TOLERANCE) | (y_term < -SIGN_TOLERANCE)
    violations = [(float(x), float(y)) for x, y in zip(xx[bad][:max_violations], yy[bad][:max_violations])]
    holds = not bad.any()
    if not holds:
        log.info('sign hypothesis fails at %d nodes for kappa=%s', int(bad.sum()), kappa)
    return HypothesisCheck(float(kappa), holds, float(x_term.min()), float(y_term.min()), violations)
