"""Sobolev-type constants, threshold levels, the anisotropic Gagliardo-Nirenberg ratio and kappa scans."""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize

from .descent import DescentOptions, MixedMetric, descend
from .energy import critical_exponent, fiber_coefficients, fiber_map, nehari_root, sgnpow
from .exceptions import FieldError, LambdaNotConverged, NoProjection, NotBracketed, ScanError
from .solver import radial_projector, solve_or_none, start_rng
from .spectral import Field, check_order, symbol_form

log = logging.getLogger(__name__)

MONOTONE_TOLERANCE = 1e-4
BAND_FLOOR = 1e-3


def sobolev_level(s, value):
    """(s / (1 + s)) * value^((1 + s) / (2 s))."""
    return s / (1.0 + s) * value ** ((1.0 + s) / (2.0 * s))


@dataclass
class LambdaOptions:
    n_starts: int = 4
    corpus_size: int = 200
    max_iters: int = 3000
    grad_tol: float = 1e-8
    step_rule: str = 'bb'
    step_size: float = 0.5
    strict: bool = True

    @property
    def descent(self):
        return DescentOptions(self.max_iters, self.grad_tol, self.step_rule, self.step_size)

    def digest(self):
        return f'{self.n_starts}-{self.corpus_size}-{self.max_iters}-{self.grad_tol!r}-{self.step_rule}'


@dataclass
class SobolevEstimate:
    s: float
    radial: bool
    lambda_: float
    minimizer: Field
    threshold: float
    converged: bool = True
    descended_min: float = math.inf
    corpus_min: float = math.inf
    corpus_size: int = 0
    seed: int = 0
    corpus_violations: int = 0


class QuotientEvaluator:
    """||u||_{H^{1,s}}^2 / ||u||_p^2 with p = 2_s, on stacks of shape (1, nx, ny)."""

    def __init__(self, grid, s):
        self.grid = grid
        self.s = check_order(s)
        self.p = critical_exponent(s)
        self.symbol = grid.mixed_symbol(s)

    def power_integral(self, stack):
        return self.grid.cell * float(np.sum(np.abs(stack) ** self.p))

    def value(self, stack):
        return symbol_form(self.grid, stack, self.symbol) / self.power_integral(stack) ** (2.0 / self.p)

    def gradient(self, stack):
        integral = self.power_integral(stack)
        scale = integral ** (2.0 / self.p)
        quotient = symbol_form(self.grid, stack, self.symbol) / scale
        linear = np.fft.ifft2(np.fft.fft2(stack) * self.symbol).real
        return 2.0 / scale * (linear - quotient * integral ** (2.0 / self.p - 1.0) * sgnpow(stack, self.p - 1.0))

    def objective(self, stack):
        return self.value(stack), self.gradient(stack)

    def normalize(self, stack):
        integral = self.power_integral(stack)
        if integral == 0.0:
            raise NoProjection('cannot normalize the zero field')
        return stack / integral ** (1.0 / self.p)


def sobolev_quotient(u, s):
    evaluator = QuotientEvaluator(u.grid, s)
    if not np.any(u.values):
        raise FieldError('Sobolev quotient of the zero field is undefined')
    return evaluator.value(u.values)


def random_smooth_corpus(grid, n, rng, radial=False):
    """``n`` sums of one to three Gaussians with random signs, widths and centres in the inner half-box."""
    xx, yy = grid.mesh
    corpus = []
    for _ in range(n):
        values = np.zeros(grid.shape)
        for _ in range(int(rng.integers(1, 4))):
            amplitude = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)
            if radial:
                width = rng.uniform(0.75, 2.5)
                values += amplitude * np.exp(-(xx ** 2 + yy ** 2) / width ** 2)
            else:
                wx, wy = rng.uniform(0.75, 2.5, size=2)
                x0 = rng.uniform(-grid.lx / 4.0, grid.lx / 4.0)
                y0 = rng.uniform(-grid.ly / 4.0, grid.ly / 4.0)
                values += amplitude * np.exp(-((xx - x0) / wx) ** 2 - ((yy - y0) / wy) ** 2)
        if not np.any(values):
            values[grid.nx // 2, grid.ny // 2] = 1.0
        corpus.append(Field(grid, values))
    return corpus


def estimate_lambda(s, radial, grid, opts=None, seed=0, seeds=()):
    """Minimize the Sobolev quotient over D (or its radial part) on the grid.

    The estimate is the smaller of the best descended start and the best corpus quotient,
    so it never exceeds the quotient of any corpus field. ``seeds`` are extra starting
    fields, e.g. the radial minimizer when estimating the unrestricted constant.
    """
    opts = opts or LambdaOptions()
    evaluator = QuotientEvaluator(grid, s)
    projector = radial_projector(grid) if radial else None
    metric = MixedMetric(grid, (s,), projector)

    corpus = random_smooth_corpus(grid, opts.corpus_size, start_rng(seed, 'lambda-corpus'), radial)
    corpus_values = np.array([evaluator.value(f.values[None]) for f in corpus]) if corpus else np.array([])
    starts = [f.values for f in random_smooth_corpus(grid, opts.n_starts, start_rng(seed, 'lambda-starts'), radial)]
    if corpus:
        starts.append(corpus[int(np.argmin(corpus_values))].values)
    starts.extend(f.values for f in seeds)

    best = None
    converged = False
    for index, start in enumerate(starts):
        result = descend(start[None], evaluator.objective, evaluator.normalize, metric, opts.descent)
        log.info('lambda start %d (s=%s radial=%s): %.12g after %d iterations (%s)', index, s, radial,
                 result.value, result.iterations, result.stop_reason)
        converged = converged or result.stop_reason == 'grad_tol'
        if best is None or result.value < best.value:
            best = result

    descended_min = best.value
    corpus_min = float(corpus_values.min()) if corpus else math.inf
    if corpus_min < descended_min:
        value = corpus_min
        minimizer = evaluator.normalize(corpus[int(np.argmin(corpus_values))].values)
    else:
        value = descended_min
        minimizer = best.state[0]

    estimate = SobolevEstimate(
        s=float(s), radial=bool(radial), lambda_=float(value), minimizer=Field(grid, minimizer),
        threshold=sobolev_level(s, value), converged=converged, descended_min=float(descended_min),
        corpus_min=corpus_min, corpus_size=len(corpus), seed=seed,
        corpus_violations=int(np.sum(corpus_values < value * (1.0 - 1e-12))) if corpus else 0,
    )
    if not converged:
        message = f'no start reached grad_tol={opts.grad_tol} within {opts.max_iters} iterations'
        if opts.strict:
            raise LambdaNotConverged(message, best=estimate)
        log.warning('%s; keeping best value %.12g', message, value)
    return estimate


def regime_threshold(m, estimates, radial=False):
    """Energy level below which compactness holds.

    ``estimates`` maps (s, radial) to a SobolevEstimate or a bare lambda value. Critical
    radial runs use the radial level; every other case takes the smaller single-field level.
    """
    use_radial = bool(radial) and m.regime == 'critical'
    levels = []
    for s in sorted({m.s1, m.s2}):
        try:
            estimate = estimates[(s, use_radial)]
        except KeyError:
            raise ScanError(f'no {"radial " if use_radial else ""}Sobolev estimate for s={s}') from None
        levels.append(estimate.threshold if isinstance(estimate, SobolevEstimate) else sobolev_level(s, estimate))
    return min(levels)


def required_estimates(m, grid, opts, seed=0, radial=False, source=None):
    """The estimates ``regime_threshold`` needs, taken from ``source(s, radial)`` when given."""
    use_radial = bool(radial) and m.regime == 'critical'
    estimates = {}
    for s in sorted({m.s1, m.s2}):
        if source is not None:
            estimates[(s, use_radial)] = source(s, use_radial)
        else:
            estimates[(s, use_radial)] = estimate_lambda(s, use_radial, grid, opts, seed)
    return estimates


def gn_exponents(q, s):
    return q / 2.0 - (q - 2.0) * (s + 1.0) / (4.0 * s), (q - 2.0) / 4.0, (q - 2.0) / (4.0 * s)


def gn_check(u, q, s):
    """int |u|^q over the anisotropic Gagliardo-Nirenberg product with unit constant.

    The ratio is invariant under u -> c u and under u(x, y) -> u(lx x, ly y) for any
    positive lx, ly.
    """
    s = check_order(s)
    limit = critical_exponent(s)
    if not 2.0 < q <= limit * (1.0 + 1e-12):
        raise FieldError(f'exponent q must lie in (2, {limit}], got {q}')
    grid = u.grid
    values = u.values
    mass = grid.cell * float(np.sum(values ** 2))
    dx_term = symbol_form(grid, values, grid.dxx_symbol)
    dy_term = symbol_form(grid, values, grid.fractional_symbol(s))
    if mass == 0.0 or dx_term == 0.0 or dy_term == 0.0:
        raise FieldError('Gagliardo-Nirenberg ratio needs a field with nonzero mass and derivatives')
    a, b, c = gn_exponents(q, s)
    return grid.cell * float(np.sum(np.abs(values) ** q)) / (mass ** a * dx_term ** b * dy_term ** c)


def empirical_gn_constant(fields, q, s):
    return max(gn_check(f, q, s) for f in fields)


@dataclass
class KappaScan:
    kappas: list
    energies: list
    threshold: float
    converged: list = field(default_factory=list)
    n_success: list = field(default_factory=list)
    scatter: list = field(default_factory=list)
    monotonicity_violations: list = field(default_factory=list)
    continuity_constant: float = 0.0
    kappa_star_estimate: object = 'not bracketed'
    kappa_star_bracket: tuple = None
    results: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if len(self.kappas) != len(self.energies):
            raise ScanError('kappas and energies differ in length')
        if any(b <= a for a, b in zip(self.kappas, self.kappas[1:])):
            raise ScanError('kappas must be strictly ascending')


def check_kappas(kappas):
    kappas = [float(k) for k in kappas]
    if len(kappas) < 2:
        raise ScanError('a kappa scan needs >= 2 entries')
    if any(b <= a for a, b in zip(kappas, kappas[1:])):
        raise ScanError('kappas must be strictly ascending')
    if kappas[0] < 0.0:
        raise ScanError('kappas must be >= 0')
    return kappas


def scan_kappa(kappas, m, h, grid, opts, threshold, jobs=1, warm_start=False):
    """Best multistart energy per kappa; failed entries are recorded as NaN and the scan goes on."""
    kappas = check_kappas(kappas)
    opts = replace(opts, threshold=threshold)
    energies, converged, n_success, scatter, results = [], [], [], [], []
    previous = None
    for kappa in kappas:
        extra = (previous.best.pair,) if warm_start and previous is not None else ()
        result = solve_or_none(grid, m.with_kappa(kappa), h, opts, jobs, extra)
        results.append(result)
        if result is None:
            energies.append(math.nan)
            converged.append(False)
            n_success.append(0)
            scatter.append(math.nan)
            continue
        previous = result
        energies.append(result.best.energy)
        converged.append(True)
        n_success.append(result.n_success)
        scatter.append(result.energy_scatter)
        log.info('kappa=%s: energy %.10g (threshold %.10g)', kappa, result.best.energy, threshold)

    violations = []
    continuity = 0.0
    for i in range(len(kappas) - 1):
        low, high = energies[i], energies[i + 1]
        if math.isnan(low) or math.isnan(high):
            continue
        if high - low > MONOTONE_TOLERANCE * abs(low):
            violations.append((kappas[i], kappas[i + 1]))
            log.warning('energy increases between kappa=%s and kappa=%s: %.10g -> %.10g',
                        kappas[i], kappas[i + 1], low, high)
        continuity = max(continuity, abs(high - low) / (kappas[i + 1] - kappas[i]))
    return KappaScan(kappas, energies, threshold, converged, n_success, scatter, violations, continuity,
                     results=results)


@dataclass
class KappaStar:
    estimate: float
    bracket: tuple
    width: float
    evaluations: list = field(default_factory=list)


def tolerance_band(threshold, scatter):
    scatter = 0.0 if scatter is None or math.isnan(scatter) else scatter
    return max(BAND_FLOOR * threshold, 2.0 * scatter)


def _below(energy, threshold, scatter):
    return energy < threshold - tolerance_band(threshold, scatter)


def estimate_kappa_star(scan, refine_iters=0, energy_at=None):
    """Bisect the crossing after which the energy stays below the threshold.

    The bracket starts at the last scanned kappa whose energy is not below the
    threshold band and the entry that follows it. ``energy_at(kappa)`` returns
    (energy, scatter) or None; it is required when ``refine_iters`` > 0.
    """
    entries = [(k, e, sc) for k, e, sc in zip(scan.kappas, scan.energies, scan.scatter or [0.0] * len(scan.kappas))
               if not math.isnan(e)]
    if not entries:
        raise NotBracketed('no scanned energy is available')
    below = [_below(e, scan.threshold, sc) for k, e, sc in entries]
    if all(below):
        raise NotBracketed(f'every scanned energy is below the threshold; kappa* <= {entries[0][0]}',
                           kappa=entries[0][0])
    last_above = max(i for i, flag in enumerate(below) if not flag)
    if last_above == len(entries) - 1:
        raise NotBracketed(f'no scanned energy stays below the threshold; kappa* >= {entries[-1][0]}',
                           kappa=entries[-1][0])
    if any(below[:last_above]):
        log.warning('scan crosses the threshold more than once; bracketing the last crossing')
    low, high = entries[last_above][0], entries[last_above + 1][0]
    evaluations = []
    for _ in range(refine_iters):
        middle = 0.5 * (low + high)
        outcome = energy_at(middle)
        if outcome is None:
            log.warning('refinement solve failed at kappa=%s; stopping bisection', middle)
            break
        energy, scatter = outcome
        evaluations.append((middle, energy))
        if _below(energy, scan.threshold, scatter):
            high = middle
        else:
            low = middle
    star = KappaStar(0.5 * (low + high), (low, high), high - low, evaluations)
    scan.kappa_star_estimate = star.estimate
    scan.kappa_star_bracket = star.bracket
    return star


def multistart_energy(grid, m, h, opts, jobs, kappa):
    result = solve_or_none(grid, m.with_kappa(kappa), h, opts, jobs)
    if result is None:
        return None
    return result.best.energy, result.energy_scatter


def fiber_kappa_bound(p, m, h, threshold):
    """Smallest kappa at which the fiber maximum of ``p`` falls to ``threshold``; bounds kappa* above."""
    c = fiber_coefficients(p, m, h)

    def excess(kappa):
        model = m.with_kappa(kappa)
        return fiber_map(nehari_root(c, model), c, model)[0] - threshold

    # without the pure power terms the kappa = 0 fiber is unbounded
    bounded_at_zero = c.A2 + c.A3 > 0.0
    if bounded_at_zero and excess(0.0) <= 0.0:
        return 0.0
    if c.A4 == 0.0:
        return math.inf
    high = 1.0
    while excess(high) > 0.0:
        high *= 2.0
        if high > 1e12:
            return math.inf
    if high > 1.0:
        low = high / 2.0
    elif bounded_at_zero:
        low = 0.0
    else:
        low = high / 2.0
        while excess(low) <= 0.0:
            high, low = low, low / 2.0
            if low < 1e-300:
                return 0.0
    return optimize.brentq(excess, low, high, xtol=1e-12, rtol=1e-12)

