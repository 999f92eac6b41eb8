"""Computational grids and discrete fields.

Rectangular, uniformly spaced grids with three boundary tags:

``dirichlet``
    Hard-wall square.  Sample points sit on the vertex lattice
    ``x0 + i*hx`` so the left/bottom walls are stored grid lines (kept
    exactly zero for wavefunctions); the right/top walls at
    ``x0 + nx*hx`` are implicit zeros one spacing past the last stored
    point.  Derivatives act on the odd (sine) extension.
``neumann``
    Natural-boundary square.  Cell-centered points ``x0 + (i+1/2)*hx``;
    derivatives act on the even (cosine) extension.
``plane``
    Free-space box for trapped problems.  Cell-centered, periodic
    transforms; fields are assumed negligible near the box edge
    (checked by a boundary-mass warning).

All field values are stored row-major with index ``iy*nx + ix`` (C
order of a ``(ny, nx)`` array), which the binary dump format relies on.
Arrays inside field objects are frozen (non-writeable) so instances can
be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Literal, Union

import numpy as np
from numpy.typing import NDArray

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

BcTag = Literal["dirichlet", "neumann", "plane"]
DIRICHLET: BcTag = "dirichlet"
NEUMANN: BcTag = "neumann"
PLANE: BcTag = "plane"

# fraction of total mass allowed on the outermost ring of a plane-bc
# density before a decay warning is attached
BOUNDARY_MASS_WARN = 1e-8


class GridError(ValueError):
    """Invalid grid geometry or boundary tag."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform rectangular grid with physical geometry and a bc tag.

    Attributes
    ----------
    nx, ny : int
        Point counts per axis; at least 8 and even (transform-based
        operators require it).
    x0, y0 : float
        Physical lower-left corner of the covered box.
    hx, hy : float
        Grid spacings; the physical extent is ``nx*hx`` by ``ny*hy``.
    bc : str
        One of ``dirichlet``, ``neumann``, ``plane``.
    """

    nx: int
    ny: int
    x0: float
    y0: float
    hx: float
    hy: float
    bc: BcTag

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise GridError(f"grid too small: {self.nx}x{self.ny} (need >= 8)")
        if self.nx % 2 or self.ny % 2:
            raise GridError(f"point counts must be even, got {self.nx}x{self.ny}")
        if not (self.hx > 0 and self.hy > 0):
            raise GridError(f"spacings must be positive, got {self.hx}, {self.hy}")
        if self.bc not in (DIRICHLET, NEUMANN, PLANE):
            raise GridError(f"unknown boundary tag {self.bc!r}")

    @property
    def Lx(self) -> float:
        return self.nx * self.hx

    @property
    def Ly(self) -> float:
        return self.ny * self.hy

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (ny, nx) of fields on this grid."""
        return (self.ny, self.nx)

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    @property
    def offset(self) -> float:
        """Sample offset in units of h: 0 on the vertex lattice, 1/2 cell-centered."""
        return 0.0 if self.bc == DIRICHLET else 0.5

    def xs(self) -> FloatArray:
        return self.x0 + (np.arange(self.nx) + self.offset) * self.hx

    def ys(self) -> FloatArray:
        return self.y0 + (np.arange(self.ny) + self.offset) * self.hy

    def meshgrid(self) -> tuple[FloatArray, FloatArray]:
        """(X, Y) coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.xs(), self.ys(), indexing="xy")

    def dilated(self, mu: float) -> "GridSpec":
        """Geometrically scaled grid with the same point counts."""
        if mu <= 0:
            raise GridError("dilation factor must be positive")
        return GridSpec(self.nx, self.ny, mu * self.x0, mu * self.y0,
                        mu * self.hx, mu * self.hy, self.bc)


def make_square(L: float, n: int, bc: BcTag) -> GridSpec:
    """Square domain [0, L]^2 with n points per axis.

    Rejects bc='plane'; use :func:`make_plane_box` for trapped problems.
    """
    if L <= 0:
        raise GridError(f"side length must be positive, got {L}")
    if bc == PLANE:
        raise GridError("make_square builds wall domains; use make_plane_box for plane bc")
    if bc not in (DIRICHLET, NEUMANN):
        raise GridError(f"unknown boundary tag {bc!r}")
    if n < 8 or n % 2:
        raise GridError(f"need even n >= 8, got {n}")
    h = L / n
    return GridSpec(n, n, 0.0, 0.0, h, h, bc)


def make_plane_box(extent: float, n: int) -> GridSpec:
    """Free-space box [-extent/2, extent/2]^2 with n cell-centered points per axis."""
    if extent <= 0:
        raise GridError(f"extent must be positive, got {extent}")
    if n < 8 or n % 2:
        raise GridError(f"need even n >= 8, got {n}")
    h = extent / n
    return GridSpec(n, n, -extent / 2, -extent / 2, h, h, PLANE)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def _check_finite(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(np.atleast_2d(values)))[0]
        raise ValueError(f"{what} contains non-finite values (first at {tuple(bad)})")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real field (density, potential, ...) sampled on a grid."""

    grid: GridSpec
    values: FloatArray
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.grid.shape:
            v = v.reshape(self.grid.shape)
        _check_finite(v, "ScalarField")
        object.__setattr__(self, "values", _freeze(v))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex wavefunction sampled on a grid.

    For dirichlet grids the stored wall ring (ix = 0 or iy = 0) of a
    state must be exactly zero; the opposite walls are implicit zeros
    off the array.  Derived fields (e.g. derivative components, which
    carry the nonzero normal derivative on the ring) are built with
    ``is_state=False``.
    """

    grid: GridSpec
    values: ComplexArray
    warnings: tuple[str, ...] = ()
    is_state: bool = dc_field(default=True, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != self.grid.shape:
            v = v.reshape(self.grid.shape)
        _check_finite(v, "ComplexField")
        if self.is_state and self.grid.bc == DIRICHLET:
            if np.any(v[0, :] != 0) or np.any(v[:, 0] != 0):
                raise ValueError("dirichlet ComplexField must vanish on the stored wall ring")
        object.__setattr__(self, "values", _freeze(v))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Real 2-vector field (currents, vector potentials) on a grid.

    Fields produced by the free-space convolution carry their generating
    density (``source_density`` with ``source_kind`` 'grad_w0' or
    'perp_grad_w0'), which lets differential operators act on the exact
    transform-domain representation instead of the cropped samples.
    """

    grid: GridSpec
    vx: FloatArray
    vy: FloatArray
    warnings: tuple[str, ...] = ()
    source_density: "ScalarField | None" = dc_field(default=None, compare=False, repr=False)
    source_kind: str | None = dc_field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("vx", "vy"):
            v = np.asarray(getattr(self, name), dtype=np.float64)
            if v.shape != self.grid.shape:
                v = v.reshape(self.grid.shape)
            _check_finite(v, f"VectorField.{name}")
            object.__setattr__(self, name, _freeze(v))


Field = Union[ScalarField, ComplexField, VectorField]


def apply_dirichlet_mask(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Zero the stored wall ring when the grid is dirichlet; no-op otherwise."""
    if grid.bc != DIRICHLET:
        return values
    out = values.copy()
    out[0, :] = 0
    out[:, 0] = 0
    return out


def integrate(grid: GridSpec, values: np.ndarray) -> float:
    """Quadrature of a sampled integrand.

    Midpoint rule on cell-centered grids; on dirichlet vertex grids the
    plain sum is the trapezoid rule because all four walls carry zeros
    (stored or implicit) for the integrands that arise here.
    """
    return float(grid.cell_area * np.sum(values))


def mass(u: ComplexField | ScalarField) -> float:
    """Integral of |u|^2 (ComplexField) or of the values (nonnegative ScalarField)."""
    if isinstance(u, ComplexField):
        return integrate(u.grid, np.abs(u.values) ** 2)
    return integrate(u.grid, u.values)


def sample(f: Callable, g: GridSpec, kind: str = "scalar") -> ScalarField | VectorField:
    """Pointwise evaluation of an analytic function at the grid's sample points.

    Parameters
    ----------
    f : callable
        ``f(X, Y)`` returning an array (kind='scalar') or a pair of
        arrays (kind='vector').
    g : GridSpec
    kind : {'scalar', 'vector'}

    Raises
    ------
    ValueError
        If any sampled value is non-finite; the message names the first
        offending grid point.
    """
    X, Y = g.meshgrid()
    if kind == "scalar":
        vals = np.asarray(f(X, Y), dtype=np.float64)
        _report_bad_sample(vals, X, Y)
        return ScalarField(g, vals)
    if kind == "vector":
        fx, fy = f(X, Y)
        fx = np.asarray(fx, dtype=np.float64)
        fy = np.asarray(fy, dtype=np.float64)
        _report_bad_sample(fx, X, Y)
        _report_bad_sample(fy, X, Y)
        return VectorField(g, fx, fy)
    raise ValueError(f"unknown sample kind {kind!r}")


def _report_bad_sample(vals: np.ndarray, X: FloatArray, Y: FloatArray) -> None:
    bad = ~np.isfinite(vals)
    if np.any(bad):
        iy, ix = np.argwhere(bad)[0]
        raise ValueError(
            f"non-finite sample at grid point (ix={ix}, iy={iy}), "
            f"x={X[iy, ix]:.6g}, y={Y[iy, ix]:.6g}"
        )


def boundary_mass_fraction(rho: ScalarField) -> float:
    """Mass fraction on the outermost ring; decay diagnostic for plane grids."""
    v = rho.values
    total = float(np.sum(v))
    if total <= 0:
        return 0.0
    ring = float(np.sum(v[0, :]) + np.sum(v[-1, :]) + np.sum(v[1:-1, 0]) + np.sum(v[1:-1, -1]))
    return ring / total
