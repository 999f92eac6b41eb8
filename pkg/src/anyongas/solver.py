"""Constrained minimization of the magnetic energy on the mass sphere.

Projected gradient descent with a spectral inverse-Laplacian
preconditioner, Barzilai-Borwein step proposals, and a backtracking
Armijo line search on the retracted (renormalized) iterate.  Accepted
energies are non-increasing by construction.  For beta > 8 the default
is geometric beta-continuation (factor 2) plus random restarts, keeping
the best energy across branches: the large-beta landscape has many
vortex-lattice local minima and branches are compared by energy only.

The search direction lives in the tangent space of the mass sphere
intersected with the admissible set (zero wall ring on dirichlet
grids); the reported stationarity measure is the norm of that projected
residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import (
    DIRICHLET,
    PLANE,
    ComplexField,
    GridSpec,
    apply_dirichlet_mask,
    mass,
)
from .model import EnergyBreakdown, ModelParams, Workspace, workspace_for

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """Descent failure (non-decreasing line search, NaN energy)."""


@dataclass(frozen=True)
class SolverConfig:
    """Descent parameters.

    grad_tol defaults to 1e-6 * sqrt(M) when left as None.  continuation
    is an increasing beta schedule; None selects the default policy
    (geometric factor-2 ramp starting at <= 8 when beta > 8, otherwise
    direct).  restarts counts additional random-seed reruns of the full
    schedule at solve time; None means 3 for beta > 8, else 0.
    """

    max_iters: int = 4000
    grad_tol: float | None = None
    step0: float = 0.05
    backtrack_shrink: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 60
    continuation: tuple[float, ...] | None = None
    seed: int = 0
    initializer: str = "gaussian"
    initializer_file: str | None = None
    restarts: int | None = None
    precondition: bool = True
    bound_check_every: int = 1
    cross_check_every: int = 64

    def __post_init__(self):
        if self.grad_tol is not None and self.grad_tol <= 0:
            raise ValueError("grad_tol must be positive")
        if self.continuation is not None:
            if len(self.continuation) == 0:
                raise ValueError("continuation schedule must not be empty")
            if list(self.continuation) != sorted(self.continuation):
                raise ValueError("continuation schedule must be increasing")


@dataclass(frozen=True)
class SolveReport:
    """Converged state with diagnostics.

    history holds (energy, projected residual norm) per accepted iterate
    of the final-beta stage; energies are non-increasing.
    """

    state: ComplexField
    breakdown: EnergyBreakdown
    lam: float
    iterations: int
    projected_residual_norm: float
    history: tuple[tuple[float, float], ...]
    warnings: tuple[str, ...] = ()
    beta: float = 0.0
    restart_index: int = 0


def default_schedule(beta: float) -> tuple[float, ...]:
    if beta <= 8 or beta <= 0:
        return (beta,)
    sched = [beta]
    while sched[-1] / 2 > 8:
        sched.append(sched[-1] / 2)
    sched.append(sched[-1] / 2)
    return tuple(reversed(sched))


def _initial_state(g: GridSpec, p: ModelParams, M: float, cfg: SolverConfig,
                   rng: np.random.Generator) -> np.ndarray:
    X, Y = g.meshgrid()
    if cfg.initializer == "file":
        from .io import read_field

        if cfg.initializer_file is None:
            raise SolverError("initializer 'file' requires initializer_file")
        f = read_field(cfg.initializer_file)
        if f.grid.shape != g.shape:
            raise SolverError("initializer file grid does not match")
        return np.asarray(f.values, dtype=np.complex128).copy()

    if cfg.initializer == "trial_lattice" and g.bc == DIRICHLET:
        from .trial import upper_bound_certificate

        _, u = upper_bound_certificate(g, p.beta, M)
        return u.values.copy()

    # gaussian envelope adapted to the domain
    if g.bc == PLANE:
        cx = g.x0 + g.Lx / 2
        cy = g.y0 + g.Ly / 2
        w = g.Lx / 6
        env = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * w * w))
    else:
        env = np.sin(np.pi * (X - g.x0) / g.Lx) * np.sin(np.pi * (Y - g.y0) / g.Ly)
        env = np.abs(env)
    u = env * (1 + 0.25 * (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)))

    if cfg.initializer == "vortex_imprint":
        n_vort = int(min(max(round(p.beta * M), 0), 256))
        for _ in range(n_vort):
            zx = g.x0 + g.Lx * (0.2 + 0.6 * rng.random())
            zy = g.y0 + g.Ly * (0.2 + 0.6 * rng.random())
            u = u * ((X - zx) + 1j * (Y - zy)) / (0.3 * g.Lx)
    elif cfg.initializer != "gaussian":
        raise SolverError(f"unknown initializer {cfg.initializer!r}")
    return apply_dirichlet_mask(g, u)


def _renormalize(u: np.ndarray, M: float, h2: float) -> np.ndarray:
    m = h2 * float(np.sum(u.real**2 + u.imag**2))
    return u * np.sqrt(M / m)


def _descend(ws: Workspace, p: ModelParams, M: float, u: np.ndarray,
             cfg: SolverConfig, grad_tol: float) -> dict:
    """One descent run at fixed beta; returns state + diagnostics."""
    g = ws.grid
    h2 = ws.h2
    u = _renormalize(u, M, h2)
    E = ws.energy_value(u, p)
    if not np.isfinite(E):
        raise SolverError("non-finite energy at the initial state")
    tau = cfg.step0
    prev_u = prev_pr = None
    history: list[tuple[float, float]] = []
    warnings: list[str] = []
    bound_violations = 0
    rn = np.inf
    it = 0
    for it in range(cfg.max_iters):
        pc = ws.pieces(u)
        G = ws.gradient(u, p, pc)
        lam = float(np.real(h2 * np.sum(np.conj(u) * G))) / M
        r = apply_dirichlet_mask(g, G - lam * u)
        rn = float(np.sqrt(h2 * np.sum(r.real**2 + r.imag**2)))
        history.append((E, rn))

        if cfg.bound_check_every and it % cfg.bound_check_every == 0:
            bd = ws.breakdown(u, p, pc)
            if not bd.bounds_ok(p.beta, g.bc == DIRICHLET):
                bound_violations += 1

        if rn <= grad_tol:
            break
        if cfg.precondition:
            pr = apply_dirichlet_mask(g, ws.ops.solve_shifted_laplacian(r, 1.0 + abs(lam)))
        else:
            pr = r
        if prev_u is not None:
            s = u - prev_u
            y = pr - prev_pr
            sy = float(np.real(h2 * np.sum(np.conj(s) * y)))
            if sy > 0:
                ss = float(np.real(h2 * np.sum(np.conj(s) * s)))
                tau = min(max(ss / sy, 1e-7), 1e3)
        d = -pr
        slope = 2 * float(np.real(h2 * np.sum(np.conj(d) * r)))
        t = tau
        accepted = False
        for _ in range(cfg.max_backtracks):
            cand = _renormalize(u + t * d, M, h2)
            if cfg.cross_check_every and it % cfg.cross_check_every == 0:
                Ec = ws.breakdown(cand, p, check=True).total
            else:
                Ec = ws.energy_value(cand, p)
            if not np.isfinite(Ec):
                raise SolverError(f"non-finite energy during line search at iter {it}")
            if Ec <= E + cfg.sufficient_decrease * t * slope:
                accepted = True
                break
            t *= cfg.backtrack_shrink
        if not accepted:
            if abs(tau * slope) < 1e-12 * (1 + abs(E)):
                warnings.append("stalled at roundoff before reaching grad_tol")
                break
            raise SolverError(
                f"line search found no decrease after {cfg.max_backtracks} halvings "
                f"(iter {it}, energy {E!r}, residual {rn:.3e})")
        prev_u, prev_pr = u, pr
        u, E = cand, Ec

    if bound_violations:
        warnings.append(f"magnetic bound checks failed on {bound_violations} iterates")
    if it + 1 >= cfg.max_iters and rn > grad_tol:
        warnings.append("max_iters reached before grad_tol")
    return {"u": u, "E": E, "rn": rn, "iters": it, "history": history, "warnings": warnings}


def minimize(g: GridSpec, p: ModelParams, M: float, cfg: SolverConfig,
             initial_state: ComplexField | None = None) -> SolveReport:
    """Minimize the energy over {mass = M} on grid g.

    Runs the continuation schedule (and restarts) and returns the best
    branch by energy.  Reports are reproducible for a fixed seed.
    ``initial_state`` overrides the configured initializer on the first
    branch (warm starts across parameter sweeps); when given, the
    continuation schedule is skipped for that branch.
    """
    if M <= 0:
        raise ValueError("mass must be positive")
    if g.bc == PLANE and p.V is None:
        raise SolverError("plane solves need a trap potential")
    if g.bc != PLANE and p.V is not None:
        raise SolverError("wall-domain solves take no trap")

    ws = workspace_for(g)
    grad_tol = cfg.grad_tol if cfg.grad_tol is not None else 1e-6 * np.sqrt(M)
    schedule = cfg.continuation if cfg.continuation is not None else default_schedule(p.beta)
    if schedule and abs(schedule[-1] - p.beta) > 1e-12 * max(1.0, p.beta):
        raise ValueError("continuation schedule must end at beta")
    n_restarts = cfg.restarts if cfg.restarts is not None else (3 if p.beta > 8 else 0)

    best: SolveReport | None = None
    for restart in range(n_restarts + 1):
        rng = np.random.default_rng(cfg.seed + 7919 * restart)
        warm = restart == 0 and initial_state is not None
        if warm:
            if initial_state.grid.shape != g.shape:
                raise SolverError("warm-start state has the wrong shape")
            u = apply_dirichlet_mask(g, np.asarray(initial_state.values,
                                                   dtype=np.complex128).copy())
        else:
            u = _initial_state(g, p, M, cfg, rng)
        branch_schedule = (p.beta,) if warm else schedule
        run = None
        for beta_k in branch_schedule:
            pk = ModelParams(beta=beta_k, V=p.V)
            # intermediate stages only need a loose tolerance
            tol_k = grad_tol if beta_k == branch_schedule[-1] else max(grad_tol, 1e-3 * (1 + beta_k))
            run = _descend(ws, pk, M, u, cfg, tol_k)
            u = run["u"]
            logger.debug("beta stage %.4g: E=%.8g iters=%d", beta_k, run["E"], run["iters"])
        m_err = abs(mass(ComplexField(g, u, is_state=False)) - M)
        warns = list(run["warnings"])
        if m_err > 1e-10 * M:
            warns.append(f"final mass error {m_err:.3e}")
        pcT = ws.pieces(u)
        GT = ws.gradient(u, p, pcT)
        lamT = float(np.real(ws.h2 * np.sum(np.conj(u) * GT))) / M
        bd = ws.breakdown(u, p, pcT, check=True)
        report = SolveReport(
            state=ComplexField(g, u),
            breakdown=bd,
            lam=lamT,
            iterations=run["iters"],
            projected_residual_norm=run["rn"],
            history=tuple(run["history"]),
            warnings=tuple(warns),
            beta=p.beta,
            restart_index=restart,
        )
        if best is None or report.breakdown.total < best.breakdown.total:
            best = report
    assert best is not None
    return best


def scaling_transform(u: ComplexField, amplitude: float, dilation: float) -> ComplexField:
    """u_{lambda,mu}(x) = lambda * u(x / mu) on the mu-dilated grid.

    Exact pointwise rescaling: mass scales by lambda^2 mu^2 and the
    energy obeys E_{mu Omega, beta}[u_{lambda,mu}] =
    lambda^2 E_{Omega, beta lambda^2 mu^2}[u].
    """
    return ComplexField(u.grid.dilated(dilation), amplitude * u.values,
                        warnings=u.warnings)
