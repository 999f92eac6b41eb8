"""Closed-form Thomas-Fermi model for homogeneous traps.

For a trap V homogeneous of degree s > 1 the minimizer of

    int ( beta * e11 * rho^2 + V rho ),   int rho = 1,  rho >= 0,

is rho = (lam - V)_+ / (2 e11 beta) with lam fixed by unit mass, and the
scalars obey exact scaling in beta:

    E_beta = beta^{s/(s+2)} E_1,
    rho_beta(x) = beta^{-2/(s+2)} rho_1(beta^{-1/(s+2)} x),
    lam_beta = beta^{s/(s+2)} lam_1,
    support radius ~ beta^{1/(s+2)}.

Radial traps V = c|x|^s use a 1D root-find on the radial mass function;
anisotropic quadratic traps c1 x^2 + c2 y^2 use level-set quadrature in
elliptic coordinates.  The chemical-potential identity
lam = E + beta*e11*int rho^2 is verified at solve time.

The density distance to solver output is a declared surrogate for the
dual-Lipschitz norm: a finite dictionary of 1-Lipschitz test functions
plus a mollified-L1 term, reported as "surrogate metric" everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad
from scipy.ndimage import gaussian_filter
from scipy.optimize import brentq

from .grid import GridSpec, ScalarField

TF_IDENTITY_TOL = 1e-10


class TfError(ValueError):
    """Non-integrable or malformed trap specification."""


@dataclass(frozen=True)
class RadialPowerTrap:
    """V(x) = coefficient * |x|^degree, degree > 1."""

    coefficient: float = 1.0
    degree: float = 2.0

    def __post_init__(self):
        if self.coefficient <= 0 or self.degree <= 1:
            raise TfError("radial trap needs coefficient > 0 and degree > 1")

    def __call__(self, X, Y):
        r = np.hypot(X, Y)
        return self.coefficient * r**self.degree

    @property
    def s(self) -> float:
        return self.degree


@dataclass(frozen=True)
class AnisotropicQuadraticTrap:
    """V(x, y) = c1 x^2 + c2 y^2 (homogeneous of degree 2)."""

    c1: float = 1.0
    c2: float = 1.0

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise TfError("anisotropic trap needs positive curvatures")

    def __call__(self, X, Y):
        return self.c1 * X**2 + self.c2 * Y**2

    @property
    def s(self) -> float:
        return 2.0


Trap = RadialPowerTrap | AnisotropicQuadraticTrap


@dataclass(frozen=True)
class TfSolution:
    """Thomas-Fermi minimizer and scalars for one (trap, beta, e11)."""

    trap: Trap
    s: float
    e11: float
    beta: float
    lam: float
    energy: float
    rho_sq_integral: float
    support_radius: float  # radial: exact radius; anisotropic: max semi-axis

    def density(self, X, Y):
        return np.maximum(self.lam - self.trap(X, Y), 0.0) / (2 * self.e11 * self.beta)

    def density_on(self, g: GridSpec) -> ScalarField:
        X, Y = g.meshgrid()
        return ScalarField(g, self.density(X, Y))

    def sup_density(self) -> float:
        return self.lam / (2 * self.e11 * self.beta)


def _radial_mass(lam: float, trap: RadialPowerTrap, beta: float, e11: float) -> float:
    if lam <= 0:
        return 0.0
    R = (lam / trap.coefficient) ** (1.0 / trap.degree)
    val, _ = quad(lambda r: (lam - trap.coefficient * r**trap.degree) * r, 0.0, R,
                  epsabs=1e-13, epsrel=1e-13)
    return 2 * np.pi * val / (2 * e11 * beta)


def _radial_scalars(lam: float, trap: RadialPowerTrap, beta: float, e11: float):
    R = (lam / trap.coefficient) ** (1.0 / trap.degree)
    rho = lambda r: (lam - trap.coefficient * r**trap.degree) / (2 * e11 * beta)
    rho_sq, _ = quad(lambda r: rho(r) ** 2 * 2 * np.pi * r, 0.0, R,
                     epsabs=1e-13, epsrel=1e-13)
    pot, _ = quad(lambda r: trap.coefficient * r**trap.degree * rho(r) * 2 * np.pi * r,
                  0.0, R, epsabs=1e-13, epsrel=1e-13)
    e = beta * e11 * rho_sq + pot
    return e, rho_sq, R


def _elliptic_mass(lam: float, trap: AnisotropicQuadraticTrap, beta: float, e11: float) -> float:
    # x = r cos(t)/sqrt(c1), y = r sin(t)/sqrt(c2): V = r^2, area element
    # r dr dt / sqrt(c1 c2); the level set V = lam is r = sqrt(lam)
    if lam <= 0:
        return 0.0
    val, _ = quad(lambda r: (lam - r * r) * r, 0.0, np.sqrt(lam),
                  epsabs=1e-13, epsrel=1e-13)
    return 2 * np.pi * val / (2 * e11 * beta * np.sqrt(trap.c1 * trap.c2))


def _elliptic_scalars(lam: float, trap: AnisotropicQuadraticTrap, beta: float, e11: float):
    jac = 1.0 / np.sqrt(trap.c1 * trap.c2)
    rho = lambda r: (lam - r * r) / (2 * e11 * beta)
    rho_sq, _ = quad(lambda r: rho(r) ** 2 * 2 * np.pi * r, 0.0, np.sqrt(lam),
                     epsabs=1e-13, epsrel=1e-13)
    pot, _ = quad(lambda r: r * r * rho(r) * 2 * np.pi * r, 0.0, np.sqrt(lam),
                  epsabs=1e-13, epsrel=1e-13)
    rho_sq *= jac
    pot *= jac
    e = beta * e11 * rho_sq + pot
    radius = np.sqrt(lam / min(trap.c1, trap.c2))
    return e, rho_sq, radius


def tf_solve(trap: Trap, beta: float, e11: float) -> TfSolution:
    """Thomas-Fermi minimizer for a homogeneous trap at coupling beta*e11."""
    if beta <= 0 or e11 <= 0:
        raise TfError("beta and e11 must be positive")
    radial = isinstance(trap, RadialPowerTrap)
    mass_fn = _radial_mass if radial else _elliptic_mass
    lam_hi = 1.0
    while mass_fn(lam_hi, trap, beta, e11) < 1.0:
        lam_hi *= 2
        if lam_hi > 1e12:
            raise TfError("mass function does not reach 1; trap not integrable?")
    lam = brentq(lambda t: mass_fn(t, trap, beta, e11) - 1.0, 0.0, lam_hi,
                 xtol=1e-15, rtol=1e-15)
    if radial:
        e, rho_sq, radius = _radial_scalars(lam, trap, beta, e11)
    else:
        e, rho_sq, radius = _elliptic_scalars(lam, trap, beta, e11)
    sol = TfSolution(trap=trap, s=trap.s, e11=e11, beta=beta, lam=lam,
                     energy=e, rho_sq_integral=rho_sq, support_radius=radius)
    ident = abs(sol.lam - (sol.energy + beta * e11 * rho_sq))
    if ident > TF_IDENTITY_TOL * (1 + abs(sol.lam)):
        raise TfError(f"chemical-potential identity violated by {ident!r}")
    return sol


def tf_scale(sol: TfSolution, beta: float) -> TfSolution:
    """Exact rescaling of a base solution at beta = 1 to a new beta."""
    if abs(sol.beta - 1.0) > 1e-12:
        raise TfError("tf_scale expects a beta = 1 base solution")
    if beta <= 0:
        raise TfError("beta must be positive")
    s = sol.s
    w = beta ** (s / (s + 2))
    return TfSolution(
        trap=sol.trap,
        s=s,
        e11=sol.e11,
        beta=beta,
        lam=w * sol.lam,
        energy=w * sol.energy,
        rho_sq_integral=beta ** (-2 / (s + 2)) * sol.rho_sq_integral,
        support_radius=beta ** (1 / (s + 2)) * sol.support_radius,
    )


# -- surrogate density distance ---------------------------------------------


def _lipschitz_dictionary(R: float) -> list[Callable]:
    """Fixed dictionary of 1-Lipschitz test functions on the ball B_R."""
    fns: list[Callable] = [
        lambda X, Y: X,
        lambda X, Y: Y,
        lambda X, Y: np.hypot(X, Y),
        lambda X, Y: -np.hypot(X, Y),
    ]
    # radial hats centered at a few radii
    for r0 in (0.25 * R, 0.5 * R, 0.75 * R):
        fns.append(lambda X, Y, r0=r0: np.maximum(0.3 * R - np.abs(np.hypot(X, Y) - r0), 0.0))
    # mollified half-plane indicators (delta * tanh(x / delta) has Lip 1)
    d = 0.15 * R
    for ang in (0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4):
        cx, cy = np.cos(ang), np.sin(ang)
        fns.append(lambda X, Y, cx=cx, cy=cy, d=d: d * np.tanh((cx * X + cy * Y) / d))
    # low-frequency waves normalized to unit Lipschitz constant
    k = np.pi / R
    fns.append(lambda X, Y: np.sin(k * X) / k)
    fns.append(lambda X, Y: np.sin(k * Y) / k)
    return fns


def tf_distance(rho: ScalarField, sol: TfSolution, R: float) -> float:
    """Surrogate dual-Lipschitz distance between a solver density and TF-1.

    The density is rescaled to the beta = 1 frame (x -> beta^{1/(s+2)} x,
    amplitude beta^{2/(s+2)}) and compared to the base TF profile over
    the ball B_R: sup over a fixed dictionary of 1-Lipschitz functions
    of |int phi * (rho_rescaled - rho_TF1)|, plus a mollified-L1 term at
    the same length scale.  A surrogate metric, not the exact dual norm.
    """
    if R <= 0:
        raise TfError("ball radius must be positive")
    s = sol.s
    beta = sol.beta
    scale = beta ** (1 / (s + 2))
    g = rho.grid
    # rescaled coordinates and amplitude
    X, Y = g.meshgrid()
    Xr, Yr = X / scale, Y / scale
    hr2 = g.cell_area / scale**2
    vals = beta ** (2 / (s + 2)) * rho.values
    base = tf_solve(sol.trap, 1.0, sol.e11) if abs(beta - 1) > 1e-12 else sol
    diff = vals - base.density(Xr, Yr)
    ball = (Xr**2 + Yr**2) <= R * R
    diff_b = np.where(ball, diff, 0.0)

    best = 0.0
    for phi in _lipschitz_dictionary(R):
        val = abs(float(np.sum(phi(Xr, Yr) * diff_b)) * hr2)
        best = max(best, val)
    # mollified-L1 at scale delta (in the rescaled frame)
    delta = 0.12 * base.support_radius
    sigma_cells = delta / (g.hx / scale)
    mol = gaussian_filter(diff_b, sigma=sigma_cells, mode="constant")
    best = max(best, delta * float(np.sum(np.abs(mol))) * hr2)
    return best
