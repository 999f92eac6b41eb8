"""Transform-based derivative operators and free-space log-kernel convolution.

Derivatives are computed in the basis selected by the grid's boundary
tag: odd (sine) extension for dirichlet, even (cosine) extension for
cell-centered neumann, plain periodic FFT for plane boxes.  First
derivative multipliers have the Nyquist mode zeroed so every operator
is a real matrix and the discrete integration-by-parts identities used
by the energy gradient hold to machine precision:

    sum_box f * (D g) = - sum_box (D' f) * g

with D' the same-axis derivative on the opposite-parity extension,
valid whenever f and g vanish on the walls.

Free-space convolution with w0 = log|x| and its gradient uses the
Fourier transform of the kernel truncated at radius R (an entire
function of k, so there is no singularity to sample):

    FT[grad w0 |_{|x|<=R}](k) = -2*pi*i * k (1 - J0(|k|R)) / |k|^2
    FT[w0 |_{|x|<=R}](k)      =  2*pi * [ R log R * J1(|k|R)/|k|
                                          - (1 - J0(|k|R))/|k|^2 ]

On a box padded to 3x extent with R between sqrt(2)*L and T - L the
circular convolution reproduces the aperiodic one exactly for sources
and targets inside the original box, with spectral accuracy in the
density's resolution.

Curl of general vector fields uses 8th-order centered finite
differences (one-sided near edges): the fields it is applied to
(vector potentials) have long-range tails, so no transform basis
matches them; the accuracy targets are interior-point statements.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray
from scipy.fft import fft2, ifft2, irfft2, rfft2
from scipy.special import j0, j1

from .grid import (
    BOUNDARY_MASS_WARN,
    DIRICHLET,
    NEUMANN,
    PLANE,
    ComplexField,
    GridSpec,
    ScalarField,
    VectorField,
    boundary_mass_fraction,
)

FloatArray = NDArray[np.float64]
ComplexArray = NDArray[np.complex128]

PAD_FACTOR = 3


def _extend_vertex(u: np.ndarray, par_y: int, par_x: int) -> np.ndarray:
    """Parity extension of vertex-layout data (walls at index 0 and n)."""
    ny, nx = u.shape
    v = np.zeros((2 * ny, 2 * nx), dtype=u.dtype)
    v[:ny, :nx] = u
    v[:ny, nx + 1:] = par_x * u[:, :0:-1]
    if par_x > 0:
        v[:ny, nx] = 0.0  # fields extended evenly here vanish at the far wall
    v[ny + 1:, :] = par_y * v[ny - 1:0:-1, :]
    return v


def _extend_cell(u: np.ndarray, par_y: int, par_x: int) -> np.ndarray:
    """Parity extension of cell-centered data (walls between samples)."""
    ny, nx = u.shape
    v = np.empty((2 * ny, 2 * nx), dtype=u.dtype)
    v[:ny, :nx] = u
    v[:ny, nx:] = par_x * u[:, ::-1]
    v[ny:, :] = par_y * v[ny - 1::-1, :]
    return v


class SpectralOps:
    """Derivative operators for one grid; construct via :func:`ops_for`.

    All methods take and return plain (ny, nx) arrays.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.bc = grid.bc
        if self.bc == PLANE:
            Ny, Nx = grid.ny, grid.nx
        else:
            Ny, Nx = 2 * grid.ny, 2 * grid.nx
        kx = 2 * np.pi * np.fft.fftfreq(Nx, d=grid.hx)
        ky = 2 * np.pi * np.fft.fftfreq(Ny, d=grid.hy)
        kxd = kx.copy()
        kyd = ky.copy()
        kxd[Nx // 2] = 0.0
        kyd[Ny // 2] = 0.0
        self._KXD = kxd[None, :]
        self._KYD = kyd[:, None]
        # Laplacian is the square of the (Nyquist-truncated) derivative
        # operators, so kinetic energy, gradient and Laplacian share one
        # spectrum and the Parseval identities are exact for any field.
        self._K2 = self._KXD**2 + self._KYD**2
        self._ext_shape = (Ny, Nx)

    # -- extension plumbing -------------------------------------------------

    def _ext(self, u: np.ndarray, par: int, par_x: int | None = None) -> np.ndarray:
        if self.bc == PLANE:
            return u
        px = par if par_x is None else par_x
        if self.bc == DIRICHLET:
            return _extend_vertex(u, par, px)
        return _extend_cell(u, par, px)

    def _crop(self, v: np.ndarray) -> np.ndarray:
        if self.bc == PLANE:
            return v
        return v[: self.grid.ny, : self.grid.nx]

    @property
    def _field_parity(self) -> int:
        # natural extension parity of wavefunctions on this grid
        return -1 if self.bc == DIRICHLET else +1

    # -- derivatives --------------------------------------------------------

    def grad(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Spectral (d/dx u, d/dy u) in the grid's natural basis."""
        U = fft2(self._ext(u, self._field_parity))
        return (self._crop(ifft2(1j * self._KXD * U)),
                self._crop(ifft2(1j * self._KYD * U)))

    def grad_ext(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Derivatives on the full extension lattice (uncropped)."""
        U = fft2(self._ext(u, self._field_parity))
        return ifft2(1j * self._KXD * U), ifft2(1j * self._KYD * U)

    def laplacian(self, u: np.ndarray) -> np.ndarray:
        return self._crop(ifft2(-self._K2 * fft2(self._ext(u, self._field_parity))))

    def kinetic_energy(self, u: np.ndarray) -> float:
        """Quadrature of |grad u|^2; the exact discrete Dirichlet/Neumann form."""
        U = fft2(self._ext(u, self._field_parity))
        Ny, Nx = self._ext_shape
        val = float(np.sum(self._K2 * (U.real**2 + U.imag**2)))
        scale = self.grid.cell_area / (Nx * Ny)
        if self.bc != PLANE:
            scale *= 0.25
        return scale * val

    def adjoint_div(self, fx: np.ndarray, fy: np.ndarray) -> np.ndarray:
        """Divergence whose negative is the exact adjoint of :meth:`grad`.

        Valid for fields vanishing on the walls (they always carry a
        factor of the wavefunction here).
        """
        par = -self._field_parity
        FX = fft2(self._ext(fx, par))
        FY = fft2(self._ext(fy, par))
        return self._crop(ifft2(1j * self._KXD * FX + 1j * self._KYD * FY))

    def solve_shifted_laplacian(self, f: np.ndarray, shift: float) -> np.ndarray:
        """(shift - Lap)^-1 f in the natural basis; descent preconditioner."""
        F = fft2(self._ext(f, self._field_parity))
        return self._crop(ifft2(F / (shift + self._K2)))


@lru_cache(maxsize=32)
def ops_for(grid: GridSpec) -> SpectralOps:
    return SpectralOps(grid)


# -- free-space convolution ----------------------------------------------


class ConvolutionKernel:
    """Truncated log-kernel transforms on the 3x-padded box.

    Holds the multiplier tables for grad w0 (both components) and w0.
    The real-space table of grad w0 implied by the multipliers is odd
    under point reflection with a zero origin cell, which pins the
    antisymmetry used by the adjoint identities.  The w0 table is for
    diagnostics only and never enters the energy.
    """

    def __init__(self, grid: GridSpec, pad: int = PAD_FACTOR):
        nx, ny = grid.nx, grid.ny
        Nx, Ny = pad * nx, pad * ny
        Lx, Ly = grid.Lx, grid.Ly
        Tx, Ty = Nx * grid.hx, Ny * grid.hy
        L_diag = float(np.hypot(Lx, Ly))
        R_max = min(Tx - Lx, Ty - Ly)
        if R_max <= L_diag:
            raise ValueError("padding too small for exact free-space convolution")
        R = 0.5 * (L_diag + R_max)

        kx = 2 * np.pi * np.fft.rfftfreq(Nx, d=grid.hx)
        ky = 2 * np.pi * np.fft.fftfreq(Ny, d=grid.hy)
        kx[-1] = 0.0
        ky[Ny // 2] = 0.0
        KX = kx[None, :]
        KY = ky[:, None]
        K2 = KX**2 + KY**2
        K = np.sqrt(K2)
        with np.errstate(divide="ignore", invalid="ignore"):
            base = np.where(K2 > 0, (1.0 - j0(K * R)) / np.where(K2 > 0, K2, 1.0), 0.0)
            w0_hat = np.where(
                K2 > 0,
                2 * np.pi * (R * np.log(R) * j1(K * R) / np.where(K > 0, K, 1.0) - base),
                np.pi * R * R * (2 * np.log(R) - 1) / 2,
            )
        self.grad_x_hat: ComplexArray = -2j * np.pi * KX * base
        self.grad_y_hat: ComplexArray = -2j * np.pi * KY * base
        self.w0_hat: FloatArray = w0_hat
        self.grid = grid
        self.pad_shape = (Ny, Nx)
        self.radius = R

    def _padded_rfft(self, f: np.ndarray) -> ComplexArray:
        Ny, Nx = self.pad_shape
        fp = np.zeros((Ny, Nx))
        fp[: self.grid.ny, : self.grid.nx] = f
        return rfft2(fp)

    def _crop(self, v: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(v[: self.grid.ny, : self.grid.nx])

    def conv_grad_w0(self, f: np.ndarray) -> tuple[FloatArray, FloatArray]:
        """(d/dx w0 * f, d/dy w0 * f) on the original grid."""
        fh = self._padded_rfft(f)
        s = self.pad_shape
        return (self._crop(irfft2(self.grad_x_hat * fh, s=s)),
                self._crop(irfft2(self.grad_y_hat * fh, s=s)))

    def vector_potential(self, rho: np.ndarray) -> tuple[FloatArray, FloatArray]:
        """A[rho] = perp-grad w0 * rho, oriented so that curl A = +2*pi*rho."""
        wx, wy = self.conv_grad_w0(rho)
        return -wy, wx

    def conv_dot_perp(self, fx: np.ndarray, fy: np.ndarray) -> FloatArray:
        """perp-grad w0 dot-convolved with F: int perp-grad w0(x-y).F(y) dy."""
        s = -self.grad_y_hat * self._padded_rfft(fx) + self.grad_x_hat * self._padded_rfft(fy)
        return self._crop(irfft2(s, s=self.pad_shape))

    def conv_w0(self, f: np.ndarray) -> FloatArray:
        return self._crop(irfft2(self.w0_hat * self._padded_rfft(f), s=self.pad_shape))

    def realspace_grad_table(self) -> tuple[FloatArray, FloatArray]:
        """Effective real-space kernel tables (fft-ordered offsets); for tests."""
        s = self.pad_shape
        area = self.grid.cell_area
        return (irfft2(self.grad_x_hat, s=s) / area, irfft2(self.grad_y_hat, s=s) / area)


@lru_cache(maxsize=16)
def kernel_for(grid: GridSpec) -> ConvolutionKernel:
    # the kernel only depends on geometry, not the bc tag
    return ConvolutionKernel(grid)


def free_space_convolve(rho: ScalarField, which: str) -> ScalarField | VectorField:
    """Free-space convolution of a density with w0 = log|x| or grad w0.

    A warning is attached to the result when the density support
    touches the box edge beyond tolerance (the convolution itself is
    still the exact free-space one for the in-box data).
    """
    kern = kernel_for(rho.grid)
    warns = rho.warnings
    if rho.grid.bc == PLANE and boundary_mass_fraction(rho) > BOUNDARY_MASS_WARN:
        warns = warns + ("density support touches the box edge",)
    if which == "w0":
        return ScalarField(rho.grid, kern.conv_w0(rho.values), warnings=warns)
    if which == "grad_w0":
        wx, wy = kern.conv_grad_w0(rho.values)
        return VectorField(rho.grid, wx, wy, warnings=warns,
                           source_density=rho, source_kind="grad_w0")
    raise ValueError(f"unknown kernel {which!r} (expected 'w0' or 'grad_w0')")


def grad(u: ComplexField) -> tuple[ComplexField, ComplexField]:
    """Spectral gradient of a wavefunction as a pair of ComplexFields.

    On dirichlet grids the components carry the nonzero normal
    derivative on the stored wall ring, so they are not states.
    """
    gx, gy = ops_for(u.grid).grad(u.values)
    return (ComplexField(u.grid, gx, is_state=False),
            ComplexField(u.grid, gy, is_state=False))


# curl: FD8 interior, shifted lower-order stencils at the edges
_FD8 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])


def _fd_deriv(F: np.ndarray, h: float, axis: int) -> np.ndarray:
    out = np.zeros_like(F)
    for off, c in zip(range(-4, 5), _FD8):
        if c:
            out += c * np.roll(F, -off, axis=axis)
    # edges: 2nd-order one-sided (exact for linear fields)
    g = np.gradient(F, h, axis=axis)
    out /= h
    if axis == 1:
        out[:, :4] = g[:, :4]
        out[:, -4:] = g[:, -4:]
    else:
        out[:4, :] = g[:4, :]
        out[-4:, :] = g[-4:, :]
    return out


def curl(F: VectorField) -> ScalarField:
    """d/dx Fy - d/dy Fx.

    Convolution-generated fields are differentiated exactly in the
    transform domain of their generating density (the derivative of the
    aperiodic convolution, free of stencil error); generic fields use
    8th-order centered finite differences with one-sided stencils near
    the edges, so the accuracy statements are interior ones.
    """
    g = F.grid
    if F.source_density is not None:
        vals = _curl_of_convolution(F)
    else:
        vals = _fd_deriv(F.vy, g.hx, axis=1) - _fd_deriv(F.vx, g.hy, axis=0)
    return ScalarField(g, vals, warnings=F.warnings)


def _curl_of_convolution(F: VectorField) -> FloatArray:
    kern = kernel_for(F.grid)
    Ny, Nx = kern.pad_shape
    kx = 2 * np.pi * np.fft.rfftfreq(Nx, d=F.grid.hx)
    ky = 2 * np.pi * np.fft.fftfreq(Ny, d=F.grid.hy)
    kx[-1] = 0.0
    ky[Ny // 2] = 0.0
    fh = kern._padded_rfft(F.source_density.values)
    if F.source_kind == "perp_grad_w0":
        # curl(-wy, wx) = div(grad w0 * rho) = (Lap w0) * rho
        chat = 1j * kx[None, :] * (kern.grad_x_hat * fh) \
            + 1j * ky[:, None] * (kern.grad_y_hat * fh)
    elif F.source_kind == "grad_w0":
        # curl of a gradient field
        chat = 1j * kx[None, :] * (kern.grad_y_hat * fh) \
            - 1j * ky[:, None] * (kern.grad_x_hat * fh)
    else:
        raise ValueError(f"unknown source kind {F.source_kind!r}")
    return kern._crop(irfft2(chat, s=(Ny, Nx)))
