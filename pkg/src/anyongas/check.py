"""Fast invariant battery behind `anyongas check`.

Every module's key identities at small sizes: any violation flips the
exit code.  Runs in well under a minute.
"""

from __future__ import annotations

import tempfile
from pathlib import Path

import numpy as np

from .grid import ComplexField, ScalarField, make_plane_box, make_square, mass, sample
from .io import read_field, write_field
from .model import ModelParams, energy, multiplier, residual, vector_potential, workspace_for
from .solver import SolverConfig, minimize, scaling_transform
from .spectral import curl, kernel_for
from .tf import RadialPowerTrap, tf_scale, tf_solve
from .trial import BumpLattice, bump_profile, build_trial

Check = tuple[str, bool, str]


def _compact_density(g, cx, cy, rad):
    X, Y = g.meshgrid()
    vals = bump_profile(np.hypot(X - cx, Y - cy) / rad)
    return vals / (np.sum(vals) * g.cell_area)


def _rand_state(g, rng, M=1.0):
    X, Y = g.meshgrid()
    env = np.sin(np.pi * (X - g.x0) / g.Lx) * np.sin(np.pi * (Y - g.y0) / g.Ly)
    vals = env * (1 + 0.3 * (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)))
    if g.bc == "dirichlet":
        vals[0, :] = 0
        vals[:, 0] = 0
    u = ComplexField(g, vals)
    return ComplexField(g, u.values * np.sqrt(M / mass(u)))


def run_battery(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out: list[Check] = []

    def record(name: str, value: float, tol: float):
        out.append((name, bool(value <= tol), f"value={value:.3e} tol={tol:.1e}"))

    # curl identity and Newton far field
    g = make_plane_box(16.0, 256)
    rho = _compact_density(g, 0.4, -0.3, 3.2)
    A = vector_potential(ScalarField(g, rho))
    c = curl(A).values
    record("curl A = 2 pi rho", np.abs(c - 2 * np.pi * rho).max() / (2 * np.pi * rho.max()), 1e-6)

    X, Y = g.meshgrid()
    RX, RY = X - 0.4, Y + 0.3
    R2 = RX**2 + RY**2
    far = R2 > (1.5 * 3.2) ** 2
    rel = (np.hypot(A.vx + RY / R2, A.vy - RX / R2)[far]
           / np.hypot(RY / R2, RX / R2)[far]).max()
    record("Newton far field", rel, 1e-6)

    tx, ty = kernel_for(g).realspace_grad_table()
    refl = lambda t: np.roll(t[::-1, ::-1], (1, 1), axis=(0, 1))
    record("kernel antisymmetry",
           max(np.abs(tx + refl(tx)).max(), np.abs(ty + refl(ty)).max())
           / np.abs(tx).max(), 1e-9)

    # scaling covariance of the energy
    gs = make_square(1.0, 48, "dirichlet")
    worst = 0.0
    for lam, mu in ((2.0, 1.0), (1.0, 2.0), (0.5, 3.0)):
        u = _rand_state(gs, rng)
        v = scaling_transform(u, lam, mu)
        lhs = energy(v, ModelParams(beta=0.7)).total
        rhs = lam**2 * energy(u, ModelParams(beta=0.7 * lam**2 * mu**2)).total
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    record("scaling covariance", worst, 1e-8)

    # gradient vs finite differences; multiplier pairing
    ws = workspace_for(gs)
    p = ModelParams(beta=1.4)
    u = _rand_state(gs, rng)
    G = ws.gradient(u.values, p)
    worst = 0.0
    for _ in range(5):
        v = rng.standard_normal(gs.shape) + 1j * rng.standard_normal(gs.shape)
        v[0, :] = 0
        v[:, 0] = 0
        eps = 1e-5
        fd = (ws.energy_value(u.values + eps * v, p)
              - ws.energy_value(u.values - eps * v, p)) / (2 * eps)
        pred = 2 * float(np.real(gs.cell_area * np.sum(np.conj(v) * G)))
        worst = max(worst, abs(fd - pred) / abs(fd))
    record("gradient finite differences", worst, 1e-6)

    lam_val = multiplier(u, p)
    inner = float(np.real(np.sum(np.conj(u.values) * residual(u, p, 0.0).values))
                  * gs.cell_area)
    record("multiplier pairing", abs(inner - lam_val) / abs(lam_val), 1e-8)

    # magnetic bounds along a short descent
    rep = minimize(gs, ModelParams(beta=4.0), 1.0,
                   SolverConfig(max_iters=120, grad_tol=1e-3, seed=seed))
    ok = not any("bound checks failed" in w for w in rep.warnings)
    out.append(("magnetic bounds on iterates", ok, f"warnings={list(rep.warnings)!r}"))

    # linear limit
    g0 = make_square(1.0, 64, "dirichlet")
    rep0 = minimize(g0, ModelParams(beta=0.0), 1.0,
                    SolverConfig(max_iters=200, grad_tol=1e-8, seed=seed))
    record("linear dirichlet ground energy",
           abs(rep0.breakdown.total - 2 * np.pi**2) / (2 * np.pi**2), 1e-3)

    # Thomas-Fermi closed form and scaling
    sol = tf_solve(RadialPowerTrap(1.0, 2.0), 1.0, 2 * np.pi)
    record("TF closed form", abs(sol.energy - (4 / 3) * np.sqrt(2.0)), 1e-8)
    record("TF chemical potential identity",
           abs(sol.lam - sol.energy - 2 * np.pi * sol.rho_sq_integral), 1e-10)
    record("TF scaling exactness",
           abs(tf_scale(sol, 16.0).energy - 4 * sol.energy) / sol.energy, 1e-12)

    # trial-state gauge cancellation
    gt = make_square(8.0, 256, "dirichlet")
    single = build_trial(BumpLattice(((4.0, 4.0),), 1.0, 1.0), 2.0, gt)
    pair = build_trial(BumpLattice(((2.2, 2.3), (5.9, 5.6)), 1.0, 1.0), 2.0, gt)
    e1 = energy(single, ModelParams(beta=2.0)).total
    e2 = energy(pair, ModelParams(beta=2.0)).total
    record("trial gauge cancellation", abs(e2 - 2 * e1) / (2 * e1), 1e-6)

    # dump round trip
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "state.afd"
        write_field(rep.state, path)
        back = read_field(path)
        ok = (np.array_equal(back.values, rep.state.values)
              and back.grid == rep.state.grid)
        out.append(("afd round trip bit-exact", ok, "compared raw arrays"))

    # quadrature sanity
    gp = make_plane_box(1.0, 16)
    one = ComplexField(gp, np.ones(gp.shape, dtype=complex))
    record("constant quadrature", abs(mass(one) - 1.0), 1e-14)

    return out
