"""Physics core: density, current, self-consistent vector potential,
the magnetic energy functional, its exact discrete gradient, and the
Lagrange multiplier.

Conventions
-----------
The energy of a state u with coupling beta >= 0 and trap V is

    E[u] = int |(-i grad + beta A[|u|^2]) u|^2 + int V |u|^2,
    A[rho] = perp-grad w0 * rho,   w0 = log|x|,   curl A = 2*pi*rho.

Internally the expanded form

    E = int |grad u|^2 + 2 beta int A.J[u] + beta^2 int |A|^2 |u|^2 + int V|u|^2,
    J[u] = Im(conj(u) grad u),

is used (one A build per evaluation); ``energy(..., check=True)``
re-assembles the defining squared-modulus form and verifies agreement.

``gradient`` returns the exact derivative of the *discrete* energy with
respect to conj(u) under the grid quadrature, i.e. the discrete version
of the variational operator

    [(-i grad + beta A)^2 + V
       - 2 beta perp-grad w0 (dot-conv) (beta A rho + J[u])] u,

assembled from the exact adjoints of every linear map involved
(antisymmetric kernel, parity-extension derivatives).  Finite
differences of the energy match it to roundoff; that test pins all
signs and the correlation-vs-convolution orientation of the nonlocal
term.

On dirichlet grids the stored wall ring carries the boundary condition,
not the variational equation: ``residual`` reports the projection onto
admissible (ring-zero) directions there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    DIRICHLET,
    PLANE,
    ComplexField,
    GridSpec,
    ScalarField,
    VectorField,
    apply_dirichlet_mask,
    integrate,
    mass,
)
from .spectral import ConvolutionKernel, SpectralOps, kernel_for, ops_for

BOUND_TOL = 1e-8


class ModelError(ValueError):
    """Invalid model inputs (NaNs, bc/trap mismatch, mass violation)."""


@dataclass(frozen=True)
class ModelParams:
    """Coupling strength and optional trap.

    beta is the scaled statistics parameter (>= 0 by the conjugation
    symmetry u -> conj(u), beta -> -beta).  V must be present exactly
    for plane-bc problems and absent on wall domains.
    """

    beta: float
    V: ScalarField | None = None

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ModelError(f"beta must be finite and >= 0, got {self.beta}")
        if self.V is not None and np.any(self.V.values < 0):
            raise ModelError("trap potential must be nonnegative")


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy decomposition of one state.

    total = kinetic_magnetic + potential exactly as computed; l4 is
    int |u|^4 and diamagnetic is int |grad |u||^2 (chain-rule form, so
    the diamagnetic inequality holds pointwise in exact arithmetic).
    """

    kinetic_magnetic: float
    potential: float
    total: float
    l4: float
    diamagnetic: float

    def diamagnetic_margin(self) -> float:
        return self.kinetic_magnetic - self.diamagnetic

    def l4_margin(self, beta: float) -> float:
        return self.kinetic_magnetic - 2 * np.pi * beta * self.l4

    def bounds_ok(self, beta: float, dirichlet: bool, tol: float = BOUND_TOL) -> bool:
        slack = tol * (1 + abs(self.total))
        if self.diamagnetic_margin() < -slack:
            return False
        if dirichlet and self.l4_margin(beta) < -slack:
            return False
        return True


class Workspace:
    """Per-grid evaluation context (operators, kernel, scratch-free calls).

    All heavy state is immutable after construction; concurrent use on
    shared instances is safe.
    """

    def __init__(self, grid: GridSpec):
        self.grid = grid
        self.ops: SpectralOps = ops_for(grid)
        self.kern: ConvolutionKernel = kernel_for(grid)
        self.h2 = grid.cell_area

    # -- pointwise pieces ---------------------------------------------------

    def pieces(self, u: np.ndarray) -> dict:
        rho = (u.real * u.real + u.imag * u.imag)
        Ax, Ay = self.kern.vector_potential(rho)
        ux, uy = self.ops.grad(u)
        uc = np.conj(u)
        Jx = np.imag(uc * ux)
        Jy = np.imag(uc * uy)
        return {"rho": rho, "Ax": Ax, "Ay": Ay, "ux": ux, "uy": uy, "Jx": Jx, "Jy": Jy}

    # -- energy -------------------------------------------------------------

    def energy_terms(self, u: np.ndarray, p: ModelParams, pc: dict | None = None) -> dict:
        b, h2 = p.beta, self.h2
        pc = pc or self.pieces(u)
        rho, Ax, Ay = pc["rho"], pc["Ax"], pc["Ay"]
        aj_raw = h2 * float(np.sum(Ax * pc["Jx"] + Ay * pc["Jy"]))
        aa_raw = h2 * float(np.sum((Ax * Ax + Ay * Ay) * rho))
        terms = {
            "kin0": self.ops.kinetic_energy(u),
            "aj_raw": aj_raw,
            "aa_raw": aa_raw,
            "aj": 2 * b * aj_raw,
            "aa": b * b * aa_raw,
            "pot": 0.0 if p.V is None else h2 * float(np.sum(p.V.values * rho)),
            "l4": h2 * float(np.sum(rho * rho)),
        }
        terms["pieces"] = pc
        return terms

    def energy_value(self, u: np.ndarray, p: ModelParams, pc: dict | None = None) -> float:
        t = self.energy_terms(u, p, pc)
        return t["kin0"] + t["aj"] + t["aa"] + t["pot"]

    def breakdown(self, u: np.ndarray, p: ModelParams, pc: dict | None = None,
                  check: bool = False) -> EnergyBreakdown:
        t = self.energy_terms(u, p, pc)
        for name in ("kin0", "aj", "aa", "pot"):
            if not np.isfinite(t[name]):
                raise ModelError(f"non-finite energy term {name!r}")
        kin = t["kin0"] + t["aj"] + t["aa"]
        bd = EnergyBreakdown(
            kinetic_magnetic=kin,
            potential=t["pot"],
            total=kin + t["pot"],
            l4=t["l4"],
            diamagnetic=self._diamagnetic(u, t["pieces"]),
        )
        if check:
            direct = self._direct_kinetic(u, p, t["pieces"])
            rel = abs(direct - kin) / (1 + abs(kin))
            if rel > 1e-8:
                raise ModelError(
                    f"energy cross-check failed: direct={direct!r} expanded={kin!r}")
        return bd

    def _diamagnetic(self, u: np.ndarray, pc: dict) -> float:
        rho = pc["rho"]
        re_x = np.real(np.conj(u) * pc["ux"])
        re_y = np.real(np.conj(u) * pc["uy"])
        safe = np.where(rho > 0, rho, 1.0)
        val = np.where(rho > 0, (re_x * re_x + re_y * re_y) / safe, 0.0)
        return self.h2 * float(np.sum(val))

    def _direct_kinetic(self, u: np.ndarray, p: ModelParams, pc: dict) -> float:
        """Quadrature of |(-i grad + beta A) u|^2 assembled pointwise.

        On wall domains the squared modulus is summed over the parity
        extension lattice (the exact discrete form, wall rows included);
        A*u vanishes on the walls, so its mixed-parity zero-wall
        extension is exact there.
        """
        b = p.beta
        ops = self.ops
        if self.grid.bc == PLANE:
            wx = -1j * pc["ux"] + b * pc["Ax"] * u
            wy = -1j * pc["uy"] + b * pc["Ay"] * u
            return self.h2 * float(np.sum(wx.real**2 + wx.imag**2
                                          + wy.real**2 + wy.imag**2))
        fp = ops._field_parity
        uxE, uyE = ops.grad_ext(u)
        wx = -1j * uxE + b * ops._ext(pc["Ax"] * u, fp, -fp)
        wy = -1j * uyE + b * ops._ext(pc["Ay"] * u, -fp, fp)
        return 0.25 * self.h2 * float(np.sum(wx.real**2 + wx.imag**2
                                             + wy.real**2 + wy.imag**2))

    # -- gradient -----------------------------------------------------------

    def gradient(self, u: np.ndarray, p: ModelParams, pc: dict | None = None) -> np.ndarray:
        """dE/d(conj u): energy change is 2 Re h^2 sum conj(v) G along v."""
        b = p.beta
        pc = pc or self.pieces(u)
        rho, Ax, Ay = pc["rho"], pc["Ax"], pc["Ay"]
        G = -self.ops.laplacian(u)
        if p.V is not None:
            G = G + p.V.values * u
        G = G + (b * b) * (Ax * Ax + Ay * Ay) * u
        W = self.kern.conv_dot_perp(b * Ax * rho + pc["Jx"], b * Ay * rho + pc["Jy"])
        G = G - (2 * b) * W * u
        G = G - 1j * b * (self.ops.adjoint_div(Ax * u, Ay * u)
                          + Ax * pc["ux"] + Ay * pc["uy"])
        return G

    def rayleigh(self, u: np.ndarray, G: np.ndarray) -> float:
        """<u, G> / <u, u>; equals the AF multiplier at unit mass."""
        num = float(np.real(np.sum(np.conj(u) * G)))
        den = float(np.sum(u.real**2 + u.imag**2))
        return num / den


_WORKSPACES: dict[GridSpec, Workspace] = {}


def workspace_for(grid: GridSpec) -> Workspace:
    ws = _WORKSPACES.get(grid)
    if ws is None:
        ws = _WORKSPACES[grid] = Workspace(grid)
    return ws


def _check_compat(u: ComplexField, p: ModelParams) -> None:
    if u.grid.bc == PLANE and p.V is None:
        raise ModelError("plane-bc states require a trap potential")
    if u.grid.bc != PLANE and p.V is not None:
        raise ModelError("wall domains take V = 0 (omit the trap)")
    if p.V is not None and p.V.grid != u.grid:
        raise ModelError("trap potential lives on a different grid")


# -- public operations ------------------------------------------------------


def density(u: ComplexField) -> ScalarField:
    """Pointwise |u|^2."""
    return ScalarField(u.grid, np.abs(u.values) ** 2, warnings=u.warnings)


def current(u: ComplexField) -> VectorField:
    """J[u] = Im(conj(u) grad u) = (i/2)(u grad conj(u) - conj(u) grad u)."""
    ws = workspace_for(u.grid)
    ux, uy = ws.ops.grad(u.values)
    uc = np.conj(u.values)
    return VectorField(u.grid, np.imag(uc * ux), np.imag(uc * uy), warnings=u.warnings)


def vector_potential(rho: ScalarField) -> VectorField:
    """A[rho] = perp-grad w0 * rho, oriented so that curl A = +2*pi*rho."""
    from .spectral import free_space_convolve

    conv = free_space_convolve(rho, "grad_w0")
    return VectorField(rho.grid, -conv.vy, conv.vx, warnings=conv.warnings,
                       source_density=rho, source_kind="perp_grad_w0")


def energy(u: ComplexField, p: ModelParams, check: bool = False) -> EnergyBreakdown:
    """Energy decomposition of a state; raises naming the term on NaN."""
    _check_compat(u, p)
    return workspace_for(u.grid).breakdown(u.values, p, check=check)


def residual(u: ComplexField, p: ModelParams, lam: float) -> ComplexField:
    """Variational-equation residual  [H(u) - lam] u  (ring-projected on dirichlet)."""
    _check_compat(u, p)
    ws = workspace_for(u.grid)
    G = ws.gradient(u.values, p)
    if not np.all(np.isfinite(G)):
        raise ModelError("non-finite residual")
    r = G - lam * u.values
    r = apply_dirichlet_mask(u.grid, r)
    return ComplexField(u.grid, r, warnings=u.warnings)


def multiplier(u: ComplexField, p: ModelParams) -> float:
    """Lagrange multiplier of a unit-mass state.

    lam = int(|grad u|^2 + V|u|^2) + 4 beta int A.J + 3 beta^2 int |A|^2 |u|^2
    (coefficients 1, 2, 3 are the degrees of |u|^2 in each term).
    """
    _check_compat(u, p)
    m = mass(u)
    if abs(m - 1.0) > 1e-8:
        raise ModelError(f"multiplier requires unit mass, got {m!r}")
    ws = workspace_for(u.grid)
    t = ws.energy_terms(u.values, p)
    return (t["kin0"] + t["pot"]
            + 4 * p.beta * t["aj_raw"]
            + 3 * p.beta * p.beta * t["aa_raw"])


def vortex_census(u: ComplexField, threshold: float = 0.05) -> list[tuple[tuple[float, float], int]]:
    """Plaquette phase windings in high-density regions.

    Sums principal-value phase differences around each grid cell; cells
    with integer winding != 0 are reported with the cell-center position
    when they sit inside a region where |u| reaches ``threshold`` of its
    maximum (windings in near-vacuum are numerically meaningless).
    """
    vals = u.values
    theta = np.angle(vals)
    d1 = _wrap(theta[:-1, 1:] - theta[:-1, :-1])
    d2 = _wrap(theta[1:, 1:] - theta[:-1, 1:])
    d3 = _wrap(theta[1:, :-1] - theta[1:, 1:])
    d4 = _wrap(theta[:-1, :-1] - theta[1:, :-1])
    w = np.rint((d1 + d2 + d3 + d4) / (2 * np.pi)).astype(int)

    amp = np.abs(vals)
    peak = amp.max()
    if peak == 0:
        return []
    # high-density neighborhood: dilated amplitude above threshold*max
    m = 3
    local = _box_max(amp, m)[:-1, :-1]
    keep = (w != 0) & (local >= threshold * peak)
    xs, ys = u.grid.xs(), u.grid.ys()
    out = []
    for iy, ix in np.argwhere(keep):
        pos = (float(xs[ix] + u.grid.hx / 2), float(ys[iy] + u.grid.hy / 2))
        out.append((pos, int(w[iy, ix])))
    return out


def _wrap(d: np.ndarray) -> np.ndarray:
    return (d + np.pi) % (2 * np.pi) - np.pi


def _box_max(a: np.ndarray, m: int) -> np.ndarray:
    out = a
    for axis in (0, 1):
        stacked = [np.roll(out, k, axis=axis) for k in range(-m, m + 1)]
        out = np.max(stacked, axis=0)
    return out
