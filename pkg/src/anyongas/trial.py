"""Gauged disk-lattice trial states.

A lattice of disjoint compactly supported bumps, each carrying mass
omega, with singular-gauge phases attached so that the magnetic
interaction between disks cancels: outside a radial bump of mass omega
the vector potential equals omega * grad arg(x - center) (Newton's
theorem), so the phase

    exp(-i * beta * omega * sum_{k != j} arg(x - x_k))

cancels it on disk j.  The energy of the superposition is then the sum
of isolated single-disk energies, which is the upper-bound certificate
used both as a variational bound and as a descent initializer.

Each pairwise angle is evaluated on a branch whose cut points away from
the target disk, so the sampled field is smooth wherever it is nonzero;
outside the bumps the phase value is irrelevant (the amplitude is 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .grid import DIRICHLET, ComplexField, GridSpec, apply_dirichlet_mask, mass


class TrialError(ValueError):
    """Infeasible lattice geometry."""


def bump_profile(r: np.ndarray) -> np.ndarray:
    """Radial C-infinity bump exp(-1/(1-r^2)) supported on r < 1 (unnormalized)."""
    r = np.asarray(r, dtype=np.float64)
    out = np.zeros_like(r)
    inside = r < 1.0
    q = r[inside]
    out[inside] = np.exp(-1.0 / (1.0 - q * q))
    return out


@lru_cache(maxsize=1)
def _profile_l2_norm() -> float:
    # integral of f^2 over the unit disk
    val, _ = quad(lambda r: np.exp(-2.0 / (1.0 - r * r)) * 2 * np.pi * r, 0.0, 1.0)
    return float(np.sqrt(val))


@dataclass(frozen=True)
class BumpLattice:
    """Disjoint disks B(center, bump_radius) each carrying mass per_bump_mass."""

    centers: tuple[tuple[float, float], ...]
    bump_radius: float
    per_bump_mass: float

    def __post_init__(self):
        if self.bump_radius <= 0 or self.per_bump_mass <= 0:
            raise TrialError("bump radius and mass must be positive")
        c = np.asarray(self.centers, dtype=np.float64)
        if c.ndim != 2 or c.shape[1] != 2 or len(c) == 0:
            raise TrialError("centers must be a nonempty list of (x, y) pairs")
        if len(c) > 1:
            d2 = np.sum((c[:, None, :] - c[None, :, :]) ** 2, axis=-1)
            np.fill_diagonal(d2, np.inf)
            if d2.min() <= (2 * self.bump_radius) ** 2:
                raise TrialError("disks overlap or touch")

    def validate_on(self, g: GridSpec) -> None:
        a = self.bump_radius
        x_lo, y_lo = g.x0, g.y0
        x_hi, y_hi = g.x0 + g.Lx, g.y0 + g.Ly
        for (cx, cy) in self.centers:
            if not (x_lo + a <= cx <= x_hi - a and y_lo + a <= cy <= y_hi - a):
                raise TrialError(f"disk at ({cx}, {cy}) leaves the domain")
        if a < 3 * max(g.hx, g.hy):
            raise TrialError(f"bump radius {a} under-resolved on this grid")


def build_trial(lat: BumpLattice, beta: float, g: GridSpec) -> ComplexField:
    """Gauged superposition of the lattice's bumps on grid g."""
    lat.validate_on(g)
    X, Y = g.meshgrid()
    centers = np.asarray(lat.centers, dtype=np.float64)
    a = lat.bump_radius
    amp0 = np.sqrt(lat.per_bump_mass) / (a * _profile_l2_norm())
    u = np.zeros(g.shape, dtype=np.complex128)
    xs, ys = g.xs(), g.ys()
    for j, (cx, cy) in enumerate(centers):
        ix0, ix1 = np.searchsorted(xs, [cx - a, cx + a])
        iy0, iy1 = np.searchsorted(ys, [cy - a, cy + a])
        XX = X[iy0:iy1, ix0:ix1]
        YY = Y[iy0:iy1, ix0:ix1]
        r = np.hypot(XX - cx, YY - cy) / a
        bump = amp0 * bump_profile(r)
        phase = np.zeros_like(XX)
        for k, (ox, oy) in enumerate(centers):
            if k == j:
                continue
            # branch with the cut pointing away from disk j
            dx, dy = cx - ox, cy - oy
            rx, ry = XX - ox, YY - oy
            phase += np.arctan2(dx * ry - dy * rx, dx * rx + dy * ry)
        u[iy0:iy1, ix0:ix1] += bump * np.exp(-1j * beta * lat.per_bump_mass * phase)
    u = apply_dirichlet_mask(g, u)
    return ComplexField(g, u)


def square_lattice(g: GridSpec, m: int, total_mass: float,
                   fill: float = 0.9) -> BumpLattice:
    """m x m lattice of disks filling the square domain of g."""
    if g.Lx != g.Ly:
        raise TrialError("square lattice requires a square domain")
    d = g.Lx / m
    a = fill * d / 2
    centers = tuple(
        (g.x0 + (i + 0.5) * d, g.y0 + (j + 0.5) * d)
        for j in range(m) for i in range(m)
    )
    return BumpLattice(centers, a, total_mass / (m * m))


def upper_bound_certificate(g: GridSpec, beta: float, M: float,
                            family: tuple[int, ...] = (2, 3, 4, 5),
                            ) -> tuple[float, ComplexField]:
    """Best disk-packing trial energy over a small family of lattice spacings.

    Returns the discrete energy of the best trial state (an upper bound
    for the discrete minimization on the same grid) and the state.
    """
    from .model import ModelParams, energy

    if g.bc != DIRICHLET:
        raise TrialError("certificates are built on dirichlet squares")
    if M <= 0:
        raise TrialError("mass must be positive")
    p = ModelParams(beta=beta)
    best: tuple[float, ComplexField] | None = None
    reasons = []
    for m in family:
        try:
            lat = square_lattice(g, m, M)
            u = build_trial(lat, beta, g)
        except TrialError as e:
            reasons.append(f"m={m}: {e}")
            continue
        # sampled mass differs from M at quadrature level; rescale exactly
        u = ComplexField(g, u.values * np.sqrt(M / mass(u)))
        e_val = energy(u, p).total
        if best is None or e_val < best[0]:
            best = (e_val, u)
    if best is None:
        raise TrialError("no feasible packing in the family: " + "; ".join(reasons))
    return best
