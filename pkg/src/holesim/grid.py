"""Uniform periodic grids, complex wavefunctions on them, and the L2 inner
product every observable in the package is built from.

Units are dimensionless simulation units with hbar = 1 and G = 1. Grids are
periodic in every axis with coordinates centered on the origin, x_j in
[-L/2, L/2), and a plain cell-volume-weighted sum as quadrature (exact
trapezoid rule on a periodic grid).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, NumericalBlowup, ResolutionError, ZeroNormError

__all__ = [
    "Grid",
    "WaveFunction",
    "inner_product",
    "norm",
    "normalize",
    "gaussian_packet",
    "spectral_sample",
]

# Tail mass threshold realizing "finite support" on a periodic domain:
# amplitudes must fall below this fraction of the peak at the boundary.
BOUNDARY_TAIL = 1e-12


def _as_tuple(value, n=None, cast=float):
    """Coerce a scalar or sequence to a tuple, broadcasting scalars to n."""
    if np.isscalar(value):
        return (cast(value),) * (n or 1)
    out = tuple(cast(v) for v in value)
    if n is not None and len(out) != n:
        raise ValueError(f"expected {n} components, got {len(out)}")
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid: ``shape`` points per axis spanning ``extent``.

    Points per axis must be powers of two (unambiguous FFT frequency
    layout); dimension is 1, 2 or 3.
    """

    shape: tuple[int, ...]
    extent: tuple[float, ...]

    def __post_init__(self):
        shape = _as_tuple(self.shape, cast=int)
        extent = _as_tuple(self.extent, n=len(shape), cast=float)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "extent", extent)
        if not 1 <= len(shape) <= 3:
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(shape)}")
        for n in shape:
            if n < 2 or (n & (n - 1)) != 0:
                raise ValueError(f"points per axis must be a power of two >= 2, got {n}")
        for L in extent:
            if not (L > 0 and np.isfinite(L)):
                raise ValueError(f"extent must be positive and finite, got {L}")

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extent, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    def axes(self) -> tuple[np.ndarray, ...]:
        """Per-axis coordinate arrays, x_j = -L/2 + j*dx."""
        return _axes(self)

    def coordinate_mesh(self) -> tuple[np.ndarray, ...]:
        """Meshgrid ('ij' indexing) coordinate arrays, one per axis."""
        return _coordinate_mesh(self)

    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Per-axis angular wavenumbers matching numpy's FFT layout."""
        return _wavenumbers(self)

    def minimal_image(self, delta: np.ndarray, axis: int) -> np.ndarray:
        """Wrap a coordinate difference into [-L/2, L/2) on one axis."""
        L = self.extent[axis]
        return (delta + 0.5 * L) % L - 0.5 * L


@functools.lru_cache(maxsize=64)
def _axes(grid: Grid) -> tuple[np.ndarray, ...]:
    out = []
    for n, L in zip(grid.shape, grid.extent):
        ax = -0.5 * L + (L / n) * np.arange(n)
        ax.flags.writeable = False
        out.append(ax)
    return tuple(out)


@functools.lru_cache(maxsize=64)
def _coordinate_mesh(grid: Grid) -> tuple[np.ndarray, ...]:
    mesh = np.meshgrid(*_axes(grid), indexing="ij")
    for m in mesh:
        m.flags.writeable = False
    return tuple(mesh)


@functools.lru_cache(maxsize=64)
def _wavenumbers(grid: Grid) -> tuple[np.ndarray, ...]:
    out = []
    for n, dx in zip(grid.shape, grid.spacing):
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
        k.flags.writeable = False
        out.append(k)
    return tuple(out)


class WaveFunction:
    """Complex amplitude field on a grid, immutable after construction.

    Amplitudes carry units length^(-dim/2); no normalization is implied by
    the type itself (see :func:`normalize`).
    """

    __slots__ = ("grid", "amplitudes", "label")

    def __init__(self, grid: Grid, amplitudes: np.ndarray, label: str = ""):
        amps = np.array(amplitudes, dtype=np.complex128, copy=True, order="C")
        if amps.shape != grid.shape:
            raise GridMismatch(
                f"amplitude shape {amps.shape} does not match grid shape {grid.shape}"
            )
        if not np.isfinite(amps.view(np.float64)).all():
            raise NumericalBlowup(f"non-finite amplitudes in wavefunction {label!r}")
        amps.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "label", str(label))

    def __setattr__(self, name, value):
        raise AttributeError("WaveFunction is immutable")

    def __repr__(self):
        return f"WaveFunction(grid={self.grid.shape}, label={self.label!r})"

    def with_label(self, label: str) -> "WaveFunction":
        return WaveFunction(self.grid, self.amplitudes, label)

    def probability_density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _require_same_grid(a: WaveFunction, b: WaveFunction) -> None:
    if a.grid != b.grid:
        raise GridMismatch(f"grids differ: {a.grid} vs {b.grid}")


def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """L2 inner product Sum conj(a)*b * cell_volume, antilinear in ``a``."""
    _require_same_grid(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes) * a.grid.cell_volume)


def norm(psi: WaveFunction) -> float:
    """L2 norm of a wavefunction."""
    value = np.vdot(psi.amplitudes, psi.amplitudes).real * psi.grid.cell_volume
    return float(np.sqrt(max(value, 0.0)))


def normalize(psi: WaveFunction) -> WaveFunction:
    """Rescale to unit L2 norm. Raises ZeroNormError on a zero field."""
    n = norm(psi)
    if n == 0.0:
        raise ZeroNormError(f"cannot normalize zero field {psi.label!r}")
    return WaveFunction(psi.grid, psi.amplitudes / n, psi.label)


def gaussian_packet(
    grid: Grid,
    center,
    width: float,
    momentum=None,
    label: str = "",
) -> WaveFunction:
    """Normalized Gaussian packet exp(-|x-c|^2/(4 w^2) + i p.x).

    The envelope uses minimal-image displacements, so shifting the center
    by a full extent reproduces the packet exactly. Preconditions: the
    width resolves the grid (w >= 3*max spacing) and the envelope tail at
    half the extent of every axis is below BOUNDARY_TAIL of the peak.
    """
    center = _as_tuple(center, n=grid.dim)
    momentum = (0.0,) * grid.dim if momentum is None else _as_tuple(momentum, n=grid.dim)
    width = float(width)
    if width <= 0:
        raise ResolutionError(f"width must be positive, got {width}")
    if width < 3.0 * max(grid.spacing):
        raise ResolutionError(
            f"width {width} under-resolved: need >= 3*spacing = {3.0 * max(grid.spacing)}"
        )
    half_min = 0.5 * min(grid.extent)
    tail = np.exp(-(half_min**2) / (4.0 * width**2))
    if tail > BOUNDARY_TAIL:
        raise ResolutionError(
            f"envelope tail {tail:.3e} at the domain boundary exceeds {BOUNDARY_TAIL:.0e}"
        )

    mesh = grid.coordinate_mesh()
    r2 = np.zeros(grid.shape)
    phase = np.zeros(grid.shape)
    for axis in range(grid.dim):
        d = grid.minimal_image(mesh[axis] - center[axis], axis)
        r2 = r2 + d * d
        phase = phase + momentum[axis] * mesh[axis]
    amps = np.exp(-r2 / (4.0 * width**2) + 1j * phase)
    return normalize(WaveFunction(grid, amps, label))


def spectral_sample(grid: Grid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of a gridded field off-grid.

    ``points`` has shape (P, dim); the result is complex of shape (P,).
    The interpolant is the band-limited function whose FFT coefficients
    match the samples, evaluated exactly; it is periodic, so points need
    not be wrapped into the domain.
    """
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise GridMismatch(f"field shape {values.shape} does not match grid {grid.shape}")
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[1] != grid.dim:
        raise GridMismatch(f"points have {points.shape[1]} components, grid dim is {grid.dim}")
    coeffs = np.fft.fftn(values) / values.size
    ks = grid.wavenumbers()
    # Per-axis plane-wave factors exp(i k (x - origin)), shape (P, N_axis).
    factors = []
    for axis in range(grid.dim):
        origin = -0.5 * grid.extent[axis]
        factors.append(np.exp(1j * np.outer(points[:, axis] - origin, ks[axis])))
    if grid.dim == 1:
        return factors[0] @ coeffs
    if grid.dim == 2:
        partial = np.tensordot(coeffs, factors[1], axes=([1], [1]))  # (N0, P)
        return np.einsum("ap,pa->p", partial, factors[0])
    partial = np.tensordot(coeffs, factors[2], axes=([2], [1]))  # (N0, N1, P)
    partial = np.einsum("abp,pb->ap", partial, factors[1])
    return np.einsum("ap,pa->p", partial, factors[0])
