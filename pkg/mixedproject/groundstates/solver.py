"""Ground states: minimization of J over the Nehari manifold, multistart and the radial subspace."""

import functools
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .descent import DescentOptions, MixedMetric, descend
from .energy import FunctionalEvaluator, Pair, energy, nehari_norm
from .exceptions import AllStartsFailed, Diverged, MixedSchrodingerError, NoProjection, OptionsError
from .spectral import Field, boundary_decay

log = logging.getLogger(__name__)

SEMI_TRIVIAL_RATIO = 1e-8
NONNEGATIVE_UNDERSHOOT = 1e-10
NEHARI_TOLERANCE = 1e-8
EL_TOLERANCE = 1e-5
CONCENTRATION_BAND = 1e-6
STALL_WINDOW = 50
SCATTER_BAND = 1e-3


def start_rng(seed, stream, index=0):
    """Independent generator for one named component of a seeded run."""
    key = (zlib.crc32(stream.encode()), int(index))
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass
class SolveOptions:
    max_iters: int = 5000
    grad_tol: float = 1e-8
    step_rule: str = 'bb'
    step_size: float = 0.5
    n_starts: int = 8
    seed: int = 0
    radial: bool = False
    symmetrize: bool = True
    threshold: float = None

    def __post_init__(self):
        if self.n_starts < 1:
            raise OptionsError(f'n_starts must be >= 1, got {self.n_starts}')
        self.descent = DescentOptions(self.max_iters, self.grad_tol, self.step_rule, self.step_size)


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    energy: float
    nehari_residual: float
    el_residual: float
    pair: Pair
    semi_trivial: bool
    boundary_decay: float
    start_index: int = 0
    seed: int = 0
    stop_reason: str = ''
    grad_norm: float = math.nan
    el_residual_full: float = math.nan
    manifold_norm: float = math.nan
    min_value: float = 0.0
    nonnegative: bool = True
    concentration_suspected: bool = False
    symmetrization: dict = field(default_factory=dict)
    history: list = field(default_factory=list)

    @property
    def nehari_relative(self):
        return self.nehari_residual / self.manifold_norm ** 2 if self.manifold_norm else 0.0


class RadialProjector:
    """Angular average: nodes are grouped by r = sqrt(x^2 + y^2), averaged per group, broadcast back.

    On square cells the groups are the lattice shells x^2 + y^2 = const, so sampled radial
    fields are fixed to round-off and the map is an orthogonal projection. Otherwise nodes
    are binned with width min(dx, dy) and the bin profile is re-broadcast by linear
    interpolation in r between bin mean radii; the profile is corrected by (average @
    broadcast)^-1 so that the map stays idempotent.
    """

    def __init__(self, grid):
        self.grid = grid
        xx, yy = grid.mesh
        radius = np.hypot(xx, yy).ravel()
        nodes = np.arange(radius.size)
        self.shells = math.isclose(grid.dx, grid.dy, rel_tol=1e-12)
        if self.shells:
            keys = np.rint((xx ** 2 + yy ** 2).ravel() / grid.dx ** 2).astype(np.int64)
        else:
            keys = np.floor(radius / min(grid.dx, grid.dy)).astype(np.int64)
        _, group = np.unique(keys, return_inverse=True)
        count = np.bincount(group)
        self._average = sparse.csr_matrix((1.0 / count[group], (group, nodes)), shape=(count.size, radius.size))
        if self.shells:
            self._broadcast = sparse.csr_matrix((np.ones(radius.size), (nodes, group)),
                                                shape=(radius.size, count.size))
            self._correction = None
            return
        centres = self._average @ radius
        upper = np.clip(np.searchsorted(centres, radius, side='right'), 1, centres.size - 1)
        lower = upper - 1
        weight = np.clip((radius - centres[lower]) / (centres[upper] - centres[lower]), 0.0, 1.0)
        self._broadcast = sparse.csr_matrix(
            (np.concatenate([1.0 - weight, weight]), (np.concatenate([nodes, nodes]), np.concatenate([lower, upper]))),
            shape=(radius.size, count.size))
        self._correction = np.linalg.inv((self._average @ self._broadcast).toarray())

    def __call__(self, values):
        profile = self._average @ values.reshape(-1, self.grid.size).T
        if self._correction is not None:
            profile = self._correction @ profile
        return np.asarray(self._broadcast @ profile).T.reshape(values.shape)

    def adjoint(self, values):
        """Transpose of the map in the plain l2 pairing; the map itself on square cells."""
        if self._correction is None:
            return self(values)
        profile = self._broadcast.T @ values.reshape(-1, self.grid.size).T
        profile = self._correction.T @ profile
        return np.asarray(self._average.T @ profile).T.reshape(values.shape)


@functools.lru_cache(maxsize=8)
def radial_projector(grid):
    return RadialProjector(grid)


def radial_project(f):
    return Field(f.grid, radial_projector(f.grid)(f.values))


def symmetrize(p):
    return Pair(Field(p.grid, np.abs(p.u.values)), Field(p.grid, np.abs(p.v.values)))


def euler_lagrange_residual(p, m, h):
    """||J'(p)||_2 / ||L p||_2 over both equations; 0 at the zero pair."""
    evaluator = FunctionalEvaluator(p.grid, m, h)
    stack = p.stack
    scale = float(np.linalg.norm(evaluator.linear(stack)))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(evaluator.gradient(stack))) / scale


def gaussian_start(grid, rng, radial=False):
    """Two independent Gaussian bumps with w in [1, 4], amplitude in [0.5, 2], centred in the inner half-box."""
    xx, yy = grid.mesh
    components = []
    for _ in range(2):
        width = rng.uniform(1.0, 4.0)
        amplitude = rng.uniform(0.5, 2.0)
        x0 = 0.0 if radial else rng.uniform(-grid.lx / 4.0, grid.lx / 4.0)
        y0 = 0.0 if radial else rng.uniform(-grid.ly / 4.0, grid.ly / 4.0)
        components.append(amplitude * np.exp(-((xx - x0) ** 2 + (yy - y0) ** 2) / width ** 2))
    return Pair.from_stack(grid, np.stack(components))


class GroundStateSolver:
    """Projected preconditioned descent of J on the Nehari manifold for one start."""

    def __init__(self, grid, model, weight, options):
        self.grid = grid
        self.model = model
        self.weight = weight
        self.options = options
        self.evaluator = FunctionalEvaluator(grid, model, weight)
        self.projector = radial_projector(grid) if options.radial else None
        self.metric = MixedMetric(grid, model.orders, self.projector)

    def objective(self, stack):
        return self.evaluator.value(stack), self.evaluator.gradient(stack)

    def retract(self, stack):
        return self.evaluator.project(stack)[1]

    def stop_rule(self, value, grad_norm, history):
        threshold = self.options.threshold
        if threshold is None or self.model.regime != 'critical' or len(history) <= STALL_WINDOW:
            return None
        if abs(value - threshold) >= CONCENTRATION_BAND * threshold:
            return None
        if grad_norm > 0.99 * history[-STALL_WINDOW][2]:
            return 'concentration'
        return None

    def run(self, stack, max_iters):
        options = self.options.descent
        if max_iters != options.max_iters:
            options = DescentOptions(max_iters, options.grad_tol, options.step_rule, options.step_size)
        return descend(stack, self.objective, self.retract, self.metric, options,
                       monitor=self.evaluator.nehari, stop_rule=self.stop_rule)

    def solve(self, init, start_index=0, seed=0):
        if init.grid != self.grid:
            raise OptionsError('initial pair lives on a different grid')
        if init.is_zero():
            raise NoProjection('initial pair is zero')
        result = self.run(init.stack, self.options.max_iters)
        iterations = result.iterations
        history = list(result.history)
        advisory = {}
        if self.options.symmetrize:
            result, iterations, history, advisory = self._symmetrized(result, iterations, history)
        return self.report(result, iterations, history, advisory, start_index, seed)

    def _symmetrized(self, result, iterations, history):
        absolute = np.abs(result.state)
        if np.array_equal(absolute, result.state):
            return result, iterations, history, {'changed': False}
        eta, projected = self.evaluator.project(self.metric.restrict(absolute))
        before = result.value
        after = self.evaluator.value(projected)
        advisory = {'changed': True, 't2': eta, 'energy_before': before, 'energy_after': after,
                    'energy_change': after - before}
        if after > before + 1e-10 * abs(before):
            log.warning('symmetrization raised the energy by %.3e (t2 = %.6f); discrete quadratic forms '
                        'need not decrease under |.|', after - before, eta)
        else:
            log.info('symmetrization changed the energy by %.3e (t2 = %.6f)', after - before, eta)
        remaining = max(self.options.max_iters - iterations, 1)
        continued = self.run(projected, remaining)
        offset = iterations + 1
        history.extend((offset + row[0],) + tuple(row[1:]) for row in continued.history)
        return continued, offset + continued.iterations, history, advisory

    def report(self, result, iterations, history, advisory, start_index, seed):
        grid = self.grid
        stack = result.state
        pair = Pair.from_stack(grid, stack)
        breakdown = energy(pair, self.model, self.weight)
        linear_norm = float(np.linalg.norm(self.evaluator.linear(stack)))
        full = float(np.linalg.norm(result.gradient)) / linear_norm
        active = float(np.linalg.norm(self.metric.restrict_dual(result.gradient))) / linear_norm
        manifold = nehari_norm(pair, self.model)
        phi = abs(self.evaluator.nehari(stack))
        norms = np.linalg.norm(stack.reshape(2, -1), axis=1)
        semi_trivial = bool(min(norms) < SEMI_TRIVIAL_RATIO * max(norms))
        peak = float(np.max(np.abs(stack)))
        min_value = float(np.min(stack))
        converged = (result.stop_reason == 'grad_tol' and phi < NEHARI_TOLERANCE * manifold ** 2
                     and active < EL_TOLERANCE)
        return SolveReport(
            converged=converged,
            iterations=iterations,
            energy=breakdown.total,
            nehari_residual=phi,
            el_residual=active,
            pair=pair,
            semi_trivial=semi_trivial,
            boundary_decay=max(boundary_decay(pair.u), boundary_decay(pair.v)),
            start_index=start_index,
            seed=seed,
            stop_reason=result.stop_reason,
            grad_norm=result.grad_norm,
            el_residual_full=full,
            manifold_norm=manifold,
            min_value=min_value,
            nonnegative=min_value >= -NONNEGATIVE_UNDERSHOOT * peak,
            concentration_suspected=result.stop_reason == 'concentration',
            symmetrization=advisory,
            history=history,
        )


def minimize_ground_state(init, m, h, opts, start_index=0, seed=0):
    return GroundStateSolver(init.grid, m, h, opts).solve(init, start_index, seed)


@dataclass
class MultistartResult:
    best: SolveReport
    reports: list
    failures: list
    energy_scatter: float
    min_manifold_norm: float

    @property
    def n_success(self):
        return sum(report.converged for report in self.reports)


def _run_start(grid, m, h, opts, index, init):
    if init is None:
        init = gaussian_start(grid, start_rng(opts.seed, 'multistart', index), opts.radial)
    try:
        report = minimize_ground_state(init, m, h, opts, start_index=index, seed=opts.seed)
    except (NoProjection, Diverged) as error:
        return index, None, f'{type(error).__name__}: {error}'
    return index, report, None


def multistart(grid, m, h, opts, jobs=1, extra_starts=()):
    """Run ``opts.n_starts`` seeded starts (plus ``extra_starts``) and keep the lowest converged energy."""
    inits = [None] * opts.n_starts + list(extra_starts)
    if jobs > 1 and len(inits) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_start, *zip(*[(grid, m, h, opts, index, init)
                                                         for index, init in enumerate(inits)])))
    else:
        outcomes = [_run_start(grid, m, h, opts, index, init) for index, init in enumerate(inits)]

    reports = [report for _, report, _ in outcomes if report is not None]
    failures = [(index, message) for index, _, message in outcomes if message is not None]
    for index, message in failures:
        log.warning('start %d failed: %s', index, message)
    for report in reports:
        log.info('start %d: energy %.10g converged=%s stop=%s semi_trivial=%s', report.start_index,
                 report.energy, report.converged, report.stop_reason, report.semi_trivial)
        if report.semi_trivial:
            log.warning('start %d collapsed to a semi-trivial pair', report.start_index)

    converged = sorted((r for r in reports if r.converged), key=lambda r: (r.energy, r.start_index))
    if not converged:
        raise AllStartsFailed(f'none of {len(inits)} starts converged', reports)
    best = converged[0]
    band = [r.energy for r in converged if r.energy - best.energy <= SCATTER_BAND * abs(best.energy)]
    return MultistartResult(
        best=best,
        reports=sorted(reports, key=lambda r: (r.energy, r.start_index)),
        failures=failures,
        energy_scatter=max(band) - min(band),
        min_manifold_norm=min(r.manifold_norm for r in converged),
    )


def solve_or_none(grid, m, h, opts, jobs=1, extra_starts=()):
    """multistart, or None when no start converges; used by scans that must not abort."""
    try:
        return multistart(grid, m, h, opts, jobs, extra_starts)
    except MixedSchrodingerError as error:
        log.warning('kappa=%s: %s', m.kappa, error)
        return None
