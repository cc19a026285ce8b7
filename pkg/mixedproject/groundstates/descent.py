"""Preconditioned descent on a retracted constraint set.

Shared by the Nehari-manifold solver and the Sobolev-quotient minimizer. The state is a
stacked array (ncomp, nx, ny); each component carries its own mixed-operator symbol, whose
inverse is the preconditioner. Every trial point is retracted back onto the constraint set
(Nehari scaling or normalization) before it is compared.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import Diverged, NoProjection, OptionsError
from .spectral import apply_symbol

log = logging.getLogger(__name__)

STEP_RULES = ('fixed', 'bb')
ARMIJO = 1e-4
ROUNDOFF_SLACK = 1e-13
MAX_BACKTRACKS = 40
STEP_BOUNDS = (1e-12, 1e6)


class MixedMetric:
    """D inner product and its inverse on stacked components.

    ``projector`` (optional) is a projection applied after the inverse symbol, with its
    ``adjoint`` (the projector itself when absent) applied before it, so descent directions
    stay in its range and remain descent directions.
    """

    def __init__(self, grid, orders, projector=None):
        self.grid = grid
        self.symbols = np.stack([grid.mixed_symbol(s) for s in orders])
        self.inverse = 1.0 / self.symbols
        self.projector = projector

    def inner(self, a, b):
        return self.grid.cell * float(np.sum(a * b))

    def norm_sq(self, stack):
        coeffs = np.fft.fft2(stack) / self.grid.size
        return self.grid.lx * self.grid.ly * float(np.sum(self.symbols * np.abs(coeffs) ** 2))

    def restrict(self, stack):
        return stack if self.projector is None else self.projector(stack)

    def restrict_dual(self, gradient):
        if self.projector is None:
            return gradient
        return getattr(self.projector, 'adjoint', self.projector)(gradient)

    def precondition(self, gradient):
        return self.restrict(apply_symbol(self.grid, self.restrict_dual(gradient), self.inverse))


@dataclass
class DescentOptions:
    max_iters: int = 5000
    grad_tol: float = 1e-8
    step_rule: str = 'bb'
    step_size: float = 0.5

    def __post_init__(self):
        if self.step_rule not in STEP_RULES:
            raise OptionsError(f'step rule must be one of {STEP_RULES}, got {self.step_rule!r}')
        if self.max_iters < 1:
            raise OptionsError(f'max_iters must be >= 1, got {self.max_iters}')
        if not (self.grad_tol > 0.0 and self.step_size > 0.0):
            raise OptionsError('grad_tol and step_size must be positive')


@dataclass
class DescentResult:
    state: np.ndarray
    value: float
    gradient: np.ndarray
    grad_norm: float
    iterations: int
    stop_reason: str
    history: list = field(default_factory=list)


def descend(state, objective, retract, metric, options, monitor=None, stop_rule=None):
    """Minimize ``objective`` over the retracted set starting from ``state``.

    ``objective(x)`` returns (value, L2 gradient); ``retract(x)`` maps onto the constraint
    set. ``monitor(x)`` adds one float per history row and ``stop_rule(value, grad_norm,
    history)`` may end the run early by returning a reason.
    """
    x = retract(metric.restrict(state))
    value, grad = objective(x)
    direction = metric.precondition(grad)
    tau = options.step_size
    history = []
    reason = 'max_iters'
    iteration = 0
    grad_norm = math.inf
    for iteration in range(options.max_iters + 1):
        if not math.isfinite(value):
            raise Diverged(f'objective became {value} at iteration {iteration}')
        dual = max(metric.inner(grad, direction), 0.0)
        grad_norm = math.sqrt(dual / metric.norm_sq(x))
        history.append((iteration, value, grad_norm, monitor(x) if monitor else 0.0))
        if grad_norm < options.grad_tol:
            reason = 'grad_tol'
            break
        if stop_rule is not None:
            early = stop_rule(value, grad_norm, history)
            if early:
                reason = early
                break
        if iteration == options.max_iters:
            break

        accepted = None
        for _ in range(MAX_BACKTRACKS):
            try:
                trial = retract(x - tau * direction)
            except NoProjection:
                tau *= 0.5
                continue
            trial_value, trial_grad = objective(trial)
            if trial_value <= value - ARMIJO * tau * dual + ROUNDOFF_SLACK * abs(value):
                accepted = trial, trial_value, trial_grad
                break
            tau *= 0.5
        if accepted is None:
            reason = 'line_search'
            break

        trial, trial_value, trial_grad = accepted
        step = trial - x
        change = trial_grad - grad
        x, value, grad = trial, trial_value, trial_grad
        direction = metric.precondition(grad)
        if options.step_rule == 'bb':
            curvature = metric.inner(step, change)
            tau = metric.norm_sq(step) / curvature if curvature > 0.0 else 2.0 * tau
            tau = min(max(tau, STEP_BOUNDS[0]), STEP_BOUNDS[1])
        else:
            tau = options.step_size
        log.debug('iteration %d value %.12g grad %.3e step %.3e', iteration, value, grad_norm, tau)

    return DescentResult(x, value, grad, grad_norm, iteration, reason, history)
