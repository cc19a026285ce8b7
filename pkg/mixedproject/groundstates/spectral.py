"""Periodic-box discretization of the plane and the mixed operators acting on it.

The plane is replaced by a periodic box [-lx/2, lx/2) x [-ly/2, ly/2) sampled on an
nx x ny grid. Every operator is diagonal in Fourier space:

    -d_xx            -> k1**2
    (-Delta)_y^s     -> |k2|**(2s)
    mixed operator   -> 1 + k1**2 + |k2|**(2s)

so the fractional Laplacian is *defined* on the box by its periodic symbol. The Gagliardo
double integral is kept as an independent, direct-quadrature oracle for that choice.

Fields are stored x-major: ``values[i, j]`` is the sample at ``(x[i], y[j])``.
"""

import functools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as scipy_integrate, special

from .exceptions import DecayError, FieldError, GridError, QuadratureError

log = logging.getLogger(__name__)

MIN_NODES = 8
DECAY_RING = 0.1
DECAY_TOLERANCE = 1e-6


def check_order(s):
    """Reject fractional orders outside the open interval (0, 1)."""
    if not 0.0 < s < 1.0:
        raise FieldError(f'fractional order s must lie in (0, 1), got {s}')
    return float(s)


def _frozen(array):
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class Grid2D:
    """Immutable periodic grid with DFT wavenumber tables."""

    nx: int
    ny: int
    lx: float
    ly: float

    def __post_init__(self):
        for name in ('nx', 'ny'):
            count = getattr(self, name)
            if count < MIN_NODES or count % 2:
                raise GridError(f'{name} must be an even integer >= {MIN_NODES}, got {count}')
        for name in ('lx', 'ly'):
            length = getattr(self, name)
            if not (math.isfinite(length) and length > 0.0):
                raise GridError(f'{name} must be a positive length, got {length}')

    @property
    def shape(self):
        return self.nx, self.ny

    @property
    def size(self):
        return self.nx * self.ny

    @property
    def dx(self):
        return self.lx / self.nx

    @property
    def dy(self):
        return self.ly / self.ny

    @property
    def cell(self):
        """Quadrature weight of one node."""
        return self.dx * self.dy

    @functools.cached_property
    def k1(self):
        return _frozen(2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.dx))

    @functools.cached_property
    def k2(self):
        return _frozen(2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.dy))

    @functools.cached_property
    def x(self):
        return _frozen((np.arange(self.nx) - self.nx // 2) * self.dx)

    @functools.cached_property
    def y(self):
        return _frozen((np.arange(self.ny) - self.ny // 2) * self.dy)

    @functools.cached_property
    def mesh(self):
        xx, yy = np.meshgrid(self.x, self.y, indexing='ij')
        return _frozen(xx), _frozen(yy)

    @functools.cached_property
    def dxx_symbol(self):
        return _frozen(np.broadcast_to(self.k1[:, None] ** 2, self.shape).copy())

    @functools.lru_cache(maxsize=16)
    def fractional_symbol(self, s):
        return _frozen(np.broadcast_to(np.abs(self.k2)[None, :] ** (2.0 * s), self.shape).copy())

    @functools.lru_cache(maxsize=16)
    def mixed_symbol(self, s):
        return _frozen(1.0 + self.dxx_symbol + self.fractional_symbol(s))


def make_grid(nx, ny, lx, ly):
    for name, count in (('nx', nx), ('ny', ny)):
        if float(count) != int(count):
            raise GridError(f'{name} must be an integer, got {count}')
    return Grid2D(int(nx), int(ny), float(lx), float(ly))


@dataclass(frozen=True, eq=False)
class Field:
    """Real samples of one function on a grid; read-only once built."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.size == self.grid.size and values.shape != self.grid.shape:
            values = values.reshape(self.grid.shape)
        if values.shape != self.grid.shape:
            raise FieldError(f'field shape {values.shape} does not match grid {self.grid.shape}')
        if not np.all(np.isfinite(values)):
            raise FieldError('field values must be finite')
        object.__setattr__(self, 'values', _frozen(values))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid, function):
        xx, yy = grid.mesh
        return cls(grid, np.broadcast_to(function(xx, yy), grid.shape))

    def scaled(self, factor):
        return Field(self.grid, factor * self.values)

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field, normalized so that f = 1 has zero mode 1."""

    grid: Grid2D
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise FieldError(f'coefficient shape {coeffs.shape} does not match grid {self.grid.shape}')
        mirrored = np.conj(np.roll(coeffs[::-1, ::-1], 1, axis=(0, 1)))
        scale = max(float(np.max(np.abs(coeffs))), 1.0)
        if not np.allclose(coeffs, mirrored, rtol=0.0, atol=1e-12 * scale):
            raise FieldError('spectral coefficients are not Hermitian-symmetric')
        object.__setattr__(self, 'coeffs', _frozen(coeffs))


def apply_symbol(grid, values, symbol):
    """Multiply by a real even symbol in Fourier space; works on stacks (..., nx, ny)."""
    return np.fft.ifft2(np.fft.fft2(values) * symbol).real


def symbol_form(grid, values, symbol):
    """Parseval evaluation of the quadratic form  integral of f * (symbol applied to f)."""
    coeffs = np.fft.fft2(values) / grid.size
    return grid.lx * grid.ly * float(np.sum(symbol * np.abs(coeffs) ** 2))


def forward_transform(f):
    return SpectralField(f.grid, np.fft.fft2(f.values) / f.grid.size)


def inverse_transform(spectral):
    return Field(spectral.grid, np.fft.ifft2(spectral.coeffs * spectral.grid.size).real)


def integrate(f):
    return f.grid.cell * float(np.sum(f.values))


def apply_fractional_laplacian_y(f, s):
    s = check_order(s)
    return Field(f.grid, apply_symbol(f.grid, f.values, f.grid.fractional_symbol(s)))


def apply_dxx(f):
    """-d_xx f; the minus sign makes the symbol k1**2 nonnegative."""
    return Field(f.grid, apply_symbol(f.grid, f.values, f.grid.dxx_symbol))


def apply_mixed_operator(f, s):
    s = check_order(s)
    return Field(f.grid, apply_symbol(f.grid, f.values, f.grid.mixed_symbol(s)))


def sobolev_norm_sq(f, s):
    """||f||_2^2 + ||d_x f||_2^2 + ||(-Delta)_y^{s/2} f||_2^2."""
    s = check_order(s)
    return symbol_form(f.grid, f.values, f.grid.mixed_symbol(s))


def fractional_seminorm_sq(f, s):
    s = check_order(s)
    return symbol_form(f.grid, f.values, f.grid.fractional_symbol(s))


def boundary_ring(grid, fraction=DECAY_RING):
    """Mask of the nodes lying in the outer ``fraction`` of the box on either axis."""
    xx, yy = grid.mesh
    return (np.abs(xx) >= (0.5 - fraction) * grid.lx) | (np.abs(yy) >= (0.5 - fraction) * grid.ly)


def boundary_decay(f, fraction=DECAY_RING):
    """max |f| over the boundary ring relative to max |f| (0 for the zero field)."""
    peak = f.max_abs
    if peak == 0.0:
        return 0.0
    return float(np.max(np.abs(f.values[boundary_ring(f.grid, fraction)]))) / peak


def validate_decay(f, tolerance=DECAY_TOLERANCE):
    decay = boundary_decay(f)
    if decay > tolerance:
        raise DecayError(f'field does not decay near the boundary: ring/peak ratio {decay:.3e} > {tolerance:.0e}')
    return decay


@functools.lru_cache(maxsize=None)
def normalizing_constant_C(s):
    """C(s) = (integral over R of (1 - cos z) / |z|^(1+2s) dz)^(-1).

    On [0, 1] the integrand is expanded termwise (1 - cos z = sum (-1)^k z^(2k+2) / (2k+2)!),
    which integrates exactly against z^(-1-2s). On [1, inf) the non-oscillating part is
    1/(2s) in closed form and the cosine part is a Fourier integral handled by QUADPACK.
    """
    s = check_order(s)
    near = 0.0
    for k in range(40):
        term = (-1) ** k / (math.factorial(2 * k + 2) * (2 * k + 2 - 2 * s))
        near += term
        if abs(term) < 1e-18:
            break
    oscillating, error = scipy_integrate.quad(lambda z: z ** (-1.0 - 2.0 * s), 1.0, np.inf,
                                        weight='cos', wvar=1.0, epsabs=1e-14, limlst=100)
    total = 2.0 * (near + 0.5 / s - oscillating)
    error = 2.0 * error
    if not math.isfinite(total) or error > 1e-10 * abs(total):
        raise QuadratureError(f'C({s}) quadrature did not reach 1e-10 relative accuracy (error {error:.2e})')
    log.debug('C(%s) = %r (quadrature error %.1e)', s, 1.0 / total, error)
    return 1.0 / total


def normalizing_constant_closed_form(s):
    """Closed form s 2^(2s) Gamma(1/2 + s) / (sqrt(pi) Gamma(1 - s)); the oracle for the quadrature."""
    s = check_order(s)
    return float(s * 4.0 ** s * special.gamma(0.5 + s) / (math.sqrt(math.pi) * special.gamma(1.0 - s)))


def gagliardo_seminorm_sq(f, s):
    """(C(s)/2) * triple integral of |f(x,y) - f(x,z)|^2 / |y - z|^(1+2s), by direct quadrature.

    The z-sum runs over the box with the diagonal cell y = z skipped. Since f vanishes
    outside the box (checked through the boundary ring), the region where exactly one of
    y, z leaves the box contributes f(x,y)^2 times the exact kernel integral over the
    exterior, which is added in closed form. Cost is O(nx * ny^2).
    """
    s = check_order(s)
    validate_decay(f)
    grid = f.grid
    values = f.values
    gaps = np.abs(grid.y[:, None] - grid.y[None, :])
    kernel = np.zeros_like(gaps)
    off_diagonal = gaps > 0.0
    kernel[off_diagonal] = gaps[off_diagonal] ** (-1.0 - 2.0 * s)
    interior = 2.0 * (np.sum(values ** 2 * kernel.sum(axis=1)) - np.sum(values * (values @ kernel)))
    lower = grid.y[0] - 0.5 * grid.dy
    upper = grid.y[-1] + 0.5 * grid.dy
    exterior_kernel = ((grid.y - lower) ** (-2.0 * s) + (upper - grid.y) ** (-2.0 * s)) / (2.0 * s)
    exterior = 2.0 * np.sum(values ** 2 * exterior_kernel[None, :])
    quadrature = interior * grid.cell * grid.dy + exterior * grid.cell
    return 0.5 * normalizing_constant_C(s) * float(quadrature)
