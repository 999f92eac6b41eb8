import numpy as np
import pytest

from anyongas.grid import make_square, mass
from anyongas.model import ModelParams, energy
from anyongas.solver import SolverConfig, minimize
from anyongas.trial import (
    BumpLattice,
    TrialError,
    build_trial,
    square_lattice,
    upper_bound_certificate,
)


def test_single_bump_is_phase_free():
    g = make_square(4.0, 128, "dirichlet")
    lat = BumpLattice(((2.0, 2.0),), bump_radius=1.0, per_bump_mass=1.0)
    u = build_trial(lat, beta=3.0, g=g)
    assert np.abs(u.values.imag).max() == 0
    assert mass(u) == pytest.approx(1.0, rel=1e-3)  # quadrature-level


def test_overlapping_disks_rejected():
    with pytest.raises(TrialError, match="overlap"):
        BumpLattice(((0.0, 0.0), (1.5, 0.0)), bump_radius=1.0, per_bump_mass=1.0)


def test_disk_outside_domain_rejected():
    g = make_square(4.0, 64, "dirichlet")
    lat = BumpLattice(((0.5, 2.0),), bump_radius=1.0, per_bump_mass=1.0)
    with pytest.raises(TrialError, match="domain"):
        build_trial(lat, beta=1.0, g=g)


def test_two_bump_energy_additivity():
    # gauge cancellation: the pair energy equals twice the isolated energy
    beta, omega = 2.0, 1.0
    g = make_square(8.0, 256, "dirichlet")
    single = build_trial(BumpLattice(((4.0, 4.0),), 1.0, omega), beta, g)
    pair = build_trial(
        BumpLattice(((2.2, 2.3), (5.9, 5.6)), 1.0, omega), beta, g)
    p = ModelParams(beta=beta)
    e1 = energy(single, p).total
    e2 = energy(pair, p).total
    assert e2 == pytest.approx(2 * e1, rel=1e-6)


def test_lattice_energy_additivity_many_disks():
    beta = 1.0
    g = make_square(8.0, 256, "dirichlet")
    lat = square_lattice(g, 3, total_mass=9.0)
    u = build_trial(lat, beta, g)
    single = build_trial(BumpLattice(((4.0, 4.0),), lat.bump_radius, lat.per_bump_mass), beta, g)
    p = ModelParams(beta=beta)
    assert energy(u, p).total == pytest.approx(9 * energy(single, p).total, rel=1e-6)


def test_gauge_cancellation_pointwise():
    # on disk j the other disk's numerical A matches omega * grad arg
    # (Newton's theorem) to 1e-6 relative
    from anyongas.grid import ScalarField
    from anyongas.model import density, vector_potential

    g = make_square(8.0, 256, "dirichlet")
    omega = 1.5
    other = build_trial(BumpLattice(((2.2, 2.3),), 1.0, omega), 0.0, g)
    A = vector_potential(density(other))
    X, Y = g.meshgrid()
    RX, RY = X - 2.2, Y - 2.3
    R2 = RX**2 + RY**2
    in_disk_j = np.hypot(X - 5.9, Y - 5.6) < 1.0
    ex, ey = -omega * RY / R2, omega * RX / R2  # omega * grad arg(x - x_k)
    rel = np.hypot(A.vx - ex, A.vy - ey)[in_disk_j] / np.hypot(ex, ey)[in_disk_j]
    assert rel.max() < 1e-6


def test_certificate_beats_solver_never():
    # variational principle: descent started anywhere ends at or below it
    g = make_square(4.0, 64, "dirichlet")
    beta, M = 2.0, 1.0
    cert, state = upper_bound_certificate(g, beta, M)
    assert mass(state) == pytest.approx(M, rel=1e-12)
    cfg = SolverConfig(max_iters=300, grad_tol=1e-3, seed=3,
                       initializer="trial_lattice", restarts=0)
    rep = minimize(g, ModelParams(beta=beta), M, cfg)
    assert rep.breakdown.total <= cert + 1e-8


def test_certificate_small_beta_near_linear_packing():
    # as beta -> 0 the certificate approaches the linear energy of the packing
    g = make_square(4.0, 128, "dirichlet")
    cert, state = upper_bound_certificate(g, 1e-6, 1.0)
    lin = energy(state, ModelParams(beta=0.0)).total
    assert cert == pytest.approx(lin, rel=1e-6)


def test_certificate_infeasible_geometry():
    g = make_square(1.0, 8, "dirichlet")  # 8 points: all packings under-resolved
    with pytest.raises(TrialError, match="packing"):
        upper_bound_certificate(g, 1.0, 1.0)
