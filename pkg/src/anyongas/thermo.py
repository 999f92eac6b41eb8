"""Thermodynamic-constant estimation for the homogeneous gas.

The energy per unit area of the walled gas satisfies exact scaling
(e(beta, rho) = beta rho^2 e(1,1)), so the large-volume limit can be
probed two equivalent ways: growing beta on a fixed unit square
(primary estimator, one grid) or growing the square at fixed beta = 1
(cross-check).  Samples are normalized so every one converges to
e(1,1) >= 2*pi from above as the effective size grows.

The extrapolation model c0 + c1/sqrt(beta_eff) is a declared heuristic
(no proven rate at this order); the raw samples are always reported and
the error bar combines the fit rms with the extrapolation step.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .grid import DIRICHLET, GridSpec, make_square
from .model import ModelParams
from .solver import SolveReport, SolverConfig, minimize

logger = logging.getLogger(__name__)

LOWER_BOUND = 2 * np.pi
# discretization allowance on the per-sample lower bound
BOUND_SLACK = 0.05
# samples are only trusted while the vortex scale 1/sqrt(beta) spans
# at least this many grid spacings
MIN_POINTS_PER_VORTEX = 4.0


class ThermoError(RuntimeError):
    pass


@dataclass(frozen=True)
class ThermoEstimate:
    """Normalized energy-per-area samples and their extrapolation.

    samples are (beta_eff, E0-normalized) pairs with beta_eff the
    effective coupling-size parameter (beta for the fixed-square sweep,
    beta*rho*L^2 for size sweeps); all converge to e(1,1) from above.
    lower_envelope is the largest per-solve magnetic lower bound
    2*pi*int(rho^2); an extrapolation below it (minus the fit residual)
    is flagged as untrustworthy.
    """

    samples: tuple[tuple[float, float], ...]
    e11: float
    fit_model: str
    fit_residual: float
    error_bar: float
    lower_envelope: float = 0.0
    neumann_gap: tuple[tuple[float, float], ...] = ()
    warnings: tuple[str, ...] = ()

    def lower_bound_ok(self) -> bool:
        return all(v >= LOWER_BOUND * (1 - BOUND_SLACK) for _, v in self.samples)


def _fit_inverse_sqrt(keys: np.ndarray, vals: np.ndarray) -> tuple[float, float, float]:
    A = np.stack([np.ones_like(keys), 1.0 / np.sqrt(keys)], axis=1)
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    resid = vals - A @ coef
    rms = float(np.sqrt(np.mean(resid**2)))
    return float(coef[0]), float(coef[1]), rms


def _assemble(samples, gaps, warns, envelope: float = 0.0) -> ThermoEstimate:
    if len(samples) < 3:
        raise ThermoError(f"extrapolation needs >= 3 samples, have {len(samples)}")
    keys = np.array([k for k, _ in samples])
    vals = np.array([v for _, v in samples])
    c0, c1, rms = _fit_inverse_sqrt(keys, vals)
    err = rms + abs(c1) / np.sqrt(keys.max())
    est = ThermoEstimate(
        samples=tuple(samples),
        e11=c0,
        fit_model="c0 + c1/sqrt(beta_eff)",
        fit_residual=rms,
        error_bar=err,
        lower_envelope=envelope,
        neumann_gap=tuple(gaps),
        warnings=tuple(warns),
    )
    if not est.lower_bound_ok():
        est = replace(est, warnings=est.warnings
                      + ("a sample violates the 2*pi lower bound beyond slack",))
    if est.e11 < envelope - rms:
        est = replace(est, warnings=est.warnings
                      + ("extrapolation below the magnetic lower envelope; "
                         "beta range too small to trust the fit",))
    return est


def _solve_unit_square(beta: float, g: GridSpec, cfg: SolverConfig,
                       warm: SolveReport | None) -> SolveReport:
    init = warm.state if warm is not None else None
    return minimize(g, ModelParams(beta=beta), 1.0, cfg, initial_state=init)


def estimate_e11(betas: list[float], g: GridSpec, cfg: SolverConfig) -> ThermoEstimate:
    """Fixed-domain sweep: solve E0(Q, beta, 1) on the unit square per beta,
    normalize by beta, extrapolate in 1/sqrt(beta)."""
    if g.bc != DIRICHLET or abs(g.Lx - 1.0) > 1e-12 or abs(g.Ly - 1.0) > 1e-12:
        raise ThermoError("estimate_e11 runs on the dirichlet unit square")
    if list(betas) != sorted(betas) or len(betas) < 3:
        raise ThermoError("betas must be increasing with at least 3 values")
    warns: list[str] = []
    samples: list[tuple[float, float]] = []
    warm: SolveReport | None = None
    envelope = 0.0
    for i, beta in enumerate(betas):
        if np.sqrt(beta) * g.hx * MIN_POINTS_PER_VORTEX > 1.0:
            warns.append(f"stopped before beta={beta:g}: vortex scale under-resolved")
            break
        try:
            rep = _solve_unit_square(beta, g, replace(cfg, seed=cfg.seed + i), warm)
        except Exception as e:  # partial estimate, flagged
            warns.append(f"solve failed at beta={beta:g}: {e}")
            break
        if rep.breakdown.l4_margin(beta) < -1e-8 * (1 + rep.breakdown.total):
            warns.append(f"L4 lower-bound check failed at beta={beta:g}")
        samples.append((beta, rep.breakdown.total / beta))
        # magnetic floor from the least-finite-size solve: int rho^2
        # decreases toward its limit, so only the largest beta counts
        envelope = 2 * np.pi * rep.breakdown.l4
        warm = rep
        logger.info("thermo sample beta=%g: E0/beta=%.6f", beta, samples[-1][1])
    return _assemble(samples, [], warns, envelope)


def estimate_e11_from_sizes(Ls: list[float], ns: list[int],
                            cfg: SolverConfig, beta: float = 1.0,
                            rho: float = 1.0) -> ThermoEstimate:
    """Size sweep at fixed beta: E0(LQ, beta, rho L^2)/(beta rho^2 L^2).

    The effective parameter beta*rho*L^2 makes the samples directly
    comparable with the fixed-square sweep.
    """
    if list(Ls) != sorted(Ls) or len(Ls) < 3:
        raise ThermoError("Ls must be increasing with at least 3 values")
    warns: list[str] = []
    samples: list[tuple[float, float]] = []
    for i, (L, n) in enumerate(zip(Ls, ns)):
        g = make_square(L, n, DIRICHLET)
        rep = minimize(g, ModelParams(beta=beta), rho * L * L,
                       replace(cfg, seed=cfg.seed + i))
        beta_eff = beta * rho * L * L
        samples.append((beta_eff, rep.breakdown.total / (beta * rho * rho * L * L)))
        logger.info("thermo size sample L=%g: value=%.6f", L, samples[-1][1])
    return _assemble(samples, [], warns)


def scaling_consistency(beta: float, rho: float, cfg: SolverConfig,
                        L_eff: float = 6.0, n: int = 128) -> dict:
    """Measure e(beta, rho)/e(1, 1) at matched effective sizes.

    Solves the (beta, rho) problem on the square of side L_eff/sqrt(beta
    rho) and the (1, 1) reference on the side-L_eff square, so both
    probe the same effective thermodynamic state; the normalized ratio
    approaches beta*rho^2.
    """
    if beta <= 0 or rho <= 0:
        raise ThermoError("beta and rho must be positive")
    L_a = L_eff / np.sqrt(beta * rho)
    g_a = make_square(L_a, n, DIRICHLET)
    rep_a = minimize(g_a, ModelParams(beta=beta), rho * L_a**2, cfg)
    sample_a = rep_a.breakdown.total / L_a**2

    # same seed for both solves: the (1,1) case is then the identical
    # discrete problem and the ratio is exactly 1
    g_b = make_square(L_eff, n, DIRICHLET)
    rep_b = minimize(g_b, ModelParams(beta=1.0), L_eff**2, cfg)
    sample_b = rep_b.breakdown.total / L_eff**2
    return {
        "beta": beta,
        "rho": rho,
        "expected": beta * rho * rho,
        "ratio": sample_a / sample_b,
        "sample_beta_rho": sample_a,
        "sample_11": sample_b,
        "L_eff": L_eff,
    }


def neumann_dirichlet_gap(Ls: list[float], beta: float, rho: float,
                          cfg: SolverConfig, ns: list[int] | None = None,
                          ) -> list[tuple[float, float]]:
    """Relative gap (E0 - E)/E0 from paired dirichlet/neumann solves."""
    if list(Ls) != sorted(Ls):
        raise ThermoError("Ls must be increasing")
    if ns is None:
        ns = [max(64, min(256, int(16 * L) // 2 * 2)) for L in Ls]
    out = []
    for i, (L, n) in enumerate(zip(Ls, ns)):
        M = rho * L * L
        cfg_i = replace(cfg, seed=cfg.seed + i)
        e_dir = minimize(make_square(L, n, "dirichlet"), ModelParams(beta=beta),
                         M, cfg_i).breakdown.total
        e_neu = minimize(make_square(L, n, "neumann"), ModelParams(beta=beta),
                         M, cfg_i).breakdown.total
        if e_neu > e_dir + 1e-8:
            raise ThermoError(
                f"variational ordering violated at L={L}: E={e_neu!r} > E0={e_dir!r}")
        out.append((L, (e_dir - e_neu) / e_dir))
        logger.info("ND gap L=%g: %.4f", L, out[-1][1])
    return out
