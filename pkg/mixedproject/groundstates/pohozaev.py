"""Pohozaev-type necessary conditions at critical exponents and the non-existence probe built on them.

For a decaying solution with alpha + beta = 2_s and s1 = s2 = s:

    s (Dx + Dy)       = s C + kappa s 2_s B - kappa M
    Dx + Dy + L2      = C + kappa 2_s B
    L2                = (kappa / s) M

with Dx, Dy the d_x and fractional Dirichlet energies of both components, L2 their
squared L2 norms, C = int |u|^2_s + |v|^2_s, B = int h |u|^alpha |v|^beta and
M = int (y h_y + s x h_x) |u|^alpha |v|^beta. The last line is the first divided by s
and subtracted from the second.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .energy import Pair
from .exceptions import AllStartsFailed, MixedSchrodingerError, RegimeError
from .solver import minimize_ground_state, multistart
from .spectral import Field, boundary_ring, make_grid, symbol_form
from .weights import ConstantWeight, radial_hypothesis_sign

log = logging.getLogger(__name__)

RESIDUAL_FLOOR = 1e-30
RING_MASS_TOLERANCE = 1e-6
PADDING_FACTOR = 1.5


def relative_residual(lhs, rhs):
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), RESIDUAL_FLOOR)


@dataclass
class PohozaevReport:
    r61: float
    r62: float
    r622: float
    lhs622: float
    rhs622: float
    moment_check: dict
    lhs61: float = 0.0
    rhs61: float = 0.0
    lhs62: float = 0.0
    rhs62: float = 0.0

    @property
    def gap(self):
        return self.lhs622 - self.rhs622


def require_critical(m):
    if m.regime != 'critical':
        raise RegimeError(f'Pohozaev identities need s1 = s2 and alpha + beta = 2_s; model is {m.regime}')


def pohozaev_residuals(p, m, h, center=(0.0, 0.0)):
    """Residuals of the three identities; moments x, y are measured from ``center``."""
    require_critical(m)
    grid = p.grid
    s = m.s1
    u, v = p.u.values, p.v.values
    xx, yy = grid.mesh
    xx = xx - center[0]
    yy = yy - center[1]
    hx, hy = (f.values for f in h.sample_gradient(grid))
    weight = h.sample(grid).values
    coupling = np.abs(u) ** m.alpha * np.abs(v) ** m.beta

    dx_energy = symbol_form(grid, u, grid.dxx_symbol) + symbol_form(grid, v, grid.dxx_symbol)
    dy_energy = symbol_form(grid, u, grid.fractional_symbol(s)) + symbol_form(grid, v, grid.fractional_symbol(s))
    mass = grid.cell * float(np.sum(u ** 2 + v ** 2))
    critical = grid.cell * float(np.sum(np.abs(u) ** m.crit1 + np.abs(v) ** m.crit2))
    bulk = grid.cell * float(np.sum(weight * coupling))
    moment = grid.cell * float(np.sum((yy * hy + s * xx * hx) * coupling))

    lhs61 = s * (dx_energy + dy_energy)
    rhs61 = s * critical + m.kappa * s * m.crit1 * bulk - m.kappa * moment
    lhs62 = dx_energy + dy_energy + mass
    rhs62 = critical + m.kappa * m.crit1 * bulk
    lhs622 = mass
    rhs622 = m.kappa / s * moment

    ring = boundary_ring(grid)
    ring_mass = grid.cell * float(np.sum((u ** 2 + v ** 2)[ring]))
    moment_check = {
        'x_u': float(np.sqrt(grid.cell * np.sum((xx * u) ** 2))),
        'y_v': float(np.sqrt(grid.cell * np.sum((yy * v) ** 2))),
        'ring_mass_fraction': ring_mass / mass if mass > 0.0 else 0.0,
    }
    moment_check['decayed'] = moment_check['ring_mass_fraction'] < RING_MASS_TOLERANCE
    return PohozaevReport(
        r61=relative_residual(lhs61, rhs61),
        r62=relative_residual(lhs62, rhs62),
        r622=relative_residual(lhs622, rhs622),
        lhs622=lhs622,
        rhs622=rhs622,
        moment_check=moment_check,
        lhs61=lhs61, rhs61=rhs61, lhs62=lhs62, rhs62=rhs62,
    )


def pad_pair(p, factor=PADDING_FACTOR):
    """Zero-pad a pair into a box ``factor`` times larger at equal spacing, keeping the origin node."""
    grid = p.grid
    nx = 2 * int(round(factor * grid.nx / 2))
    ny = 2 * int(round(factor * grid.ny / 2))
    larger = make_grid(nx, ny, nx * grid.dx, ny * grid.dy)
    ox, oy = nx // 2 - grid.nx // 2, ny // 2 - grid.ny // 2
    padded = []
    for component in (p.u, p.v):
        values = np.zeros(larger.shape)
        values[ox:ox + grid.nx, oy:oy + grid.ny] = component.values
        padded.append(Field(larger, values))
    return Pair(*padded)


@dataclass
class CandidateWitness:
    start_index: int
    energy: float
    converged: bool
    lhs622: float
    rhs622: float
    gap: float
    inconsistent: bool
    residuals: PohozaevReport


@dataclass
class NonexistenceReport:
    kappa: float
    hypothesis: str
    concluded: bool
    violations: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    box_sensitivity: dict = None


def box_sensitivity(report, m, h, opts):
    """Re-solve the candidate in a padded box; relative drift of energy and L2 mass."""
    padded = pad_pair(report.pair)
    try:
        again = minimize_ground_state(padded, m, h, opts, start_index=report.start_index, seed=report.seed)
    except MixedSchrodingerError as error:
        log.warning('padded re-solve failed: %s', error)
        return {'padded_shape': list(padded.grid.shape), 'failed': str(error)}
    mass = report.pair.grid.cell * float(np.sum(report.pair.stack ** 2))
    mass_again = padded.grid.cell * float(np.sum(again.pair.stack ** 2))
    return {
        'padded_shape': list(padded.grid.shape),
        'energy': again.energy,
        'energy_drift': abs(again.energy - report.energy) / abs(report.energy),
        'mass_drift': abs(mass_again - mass) / mass,
        'converged': again.converged,
    }


def nonexistence_probe(grid, m, h, opts, jobs=1, padding=True):
    """Look for solutions where none may exist on the plane and measure how they fail.

    Runs only when h is constant or kappa x h_x <= 0, kappa y h_y <= 0 on the grid; the
    probe otherwise declines and returns the violating nodes.
    """
    require_critical(m)
    if isinstance(h, ConstantWeight):
        hypothesis = 'constant'
    else:
        check = radial_hypothesis_sign(h, grid, m.kappa)
        if not check.holds:
            log.info('sign hypothesis fails for %r at kappa=%s; probe declines', h, m.kappa)
            return NonexistenceReport(m.kappa, 'violated', False, violations=check.violations)
        hypothesis = 'sign'

    try:
        outcome = multistart(grid, m, h, opts, jobs)
        reports = outcome.reports
    except AllStartsFailed as error:
        reports = error.reports
    candidates = []
    for report in reports:
        if report.pair.is_zero():
            continue
        residuals = pohozaev_residuals(report.pair, m, h)
        gap = residuals.gap
        candidates.append(CandidateWitness(report.start_index, report.energy, report.converged,
                                           residuals.lhs622, residuals.rhs622, gap, gap > 0.0, residuals))
        if gap > 0.0:
            log.info('start %d: gap %.6e > 0, inconsistent with a solution on the plane', report.start_index, gap)

    sensitivity = None
    if padding and reports:
        best = min(reports, key=lambda r: (not r.converged, r.energy, r.start_index))
        sensitivity = box_sensitivity(best, m, h, opts)
    return NonexistenceReport(m.kappa, hypothesis, True, candidates=candidates, box_sensitivity=sensitivity)
