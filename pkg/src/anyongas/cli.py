"""Command-line front end.

Subcommands: solve | thermo | tf | lda | check.  All experiment
parameters come from a JSON config file (unknown keys are errors, so
typos fail loudly); --seed overrides the configured seed and --threads
sizes the FFT worker pool.  Outputs are deterministic for a fixed
config and seed: CSV tables with full-precision floats, sorted-key JSON
summaries, and bit-exact binary field dumps.

Exit codes: 0 ok, 1 invariant violation (check), 2 solver failure,
3 config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import scipy.fft

from . import check as check_mod
from .grid import DIRICHLET, GridSpec, make_plane_box, make_square, sample
from .io import write_csv, write_field, write_json
from .lda import lda_sweep, log_log_slope
from .model import ModelParams
from .solver import SolverConfig, SolverError, minimize
from .tf import AnisotropicQuadraticTrap, RadialPowerTrap, TfError, tf_scale, tf_solve
from .thermo import ThermoError, estimate_e11, estimate_e11_from_sizes, neumann_dirichlet_gap

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_SOLVER = 2
EXIT_CONFIG = 3


class ConfigError(ValueError):
    pass


def _strict(d: dict, allowed: set[str], where: str) -> None:
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def parse_grid(cfg: dict) -> GridSpec:
    _strict(cfg, {"kind", "L", "extent", "n", "bc"}, "grid")
    kind = cfg.get("kind")
    if kind == "square":
        return make_square(float(cfg["L"]), int(cfg["n"]), cfg.get("bc", DIRICHLET))
    if kind == "plane":
        return make_plane_box(float(cfg["extent"]), int(cfg["n"]))
    raise ConfigError(f"grid.kind must be 'square' or 'plane', got {kind!r}")


def parse_trap(cfg: dict):
    _strict(cfg, {"type", "coefficient", "degree", "c1", "c2"}, "trap")
    t = cfg.get("type")
    if t == "harmonic":
        return RadialPowerTrap(float(cfg.get("coefficient", 1.0)), 2.0)
    if t == "power":
        return RadialPowerTrap(float(cfg.get("coefficient", 1.0)), float(cfg["degree"]))
    if t == "anisotropic":
        return AnisotropicQuadraticTrap(float(cfg["c1"]), float(cfg["c2"]))
    raise ConfigError(f"trap.type must be harmonic|power|anisotropic, got {t!r}")


_SOLVER_KEYS = {
    "max_iters", "grad_tol", "step0", "backtrack_shrink", "sufficient_decrease",
    "max_backtracks", "continuation", "seed", "initializer", "initializer_file",
    "restarts", "precondition", "bound_check_every", "cross_check_every",
}


def parse_solver(cfg: dict, seed_override: int | None) -> SolverConfig:
    _strict(cfg, _SOLVER_KEYS, "solver")
    kw = dict(cfg)
    if "continuation" in kw and kw["continuation"] is not None:
        kw["continuation"] = tuple(float(b) for b in kw["continuation"])
    if seed_override is not None:
        kw["seed"] = seed_override
    try:
        return SolverConfig(**kw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"bad solver config: {e}") from e


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e


def _breakdown_dict(rep) -> dict:
    bd = rep.breakdown
    return {
        "kinetic_magnetic": bd.kinetic_magnetic,
        "potential": bd.potential,
        "total": bd.total,
        "l4": bd.l4,
        "diamagnetic": bd.diamagnetic,
    }


# -- commands ---------------------------------------------------------------


def cmd_solve(config: dict, out: Path, seed: int | None, plot: bool) -> int:
    _strict(config, {"grid", "beta", "mass", "trap", "solver"}, "config")
    g = parse_grid(config["grid"])
    beta = float(config["beta"])
    M = float(config.get("mass", 1.0))
    trap = parse_trap(config["trap"]) if config.get("trap") else None
    if (g.bc == "plane") != (trap is not None):
        raise ConfigError("plane grids need a trap; wall grids take none")
    V = sample(lambda X, Y: trap(X, Y), g) if trap is not None else None
    cfg = parse_solver(config.get("solver", {}), seed)
    rep = minimize(g, ModelParams(beta=beta, V=V), M, cfg)

    write_json(out / "summary.json", {
        "beta": beta,
        "mass": M,
        "grid": {"nx": g.nx, "ny": g.ny, "hx": g.hx, "hy": g.hy,
                 "x0": g.x0, "y0": g.y0, "bc": g.bc},
        "energy": _breakdown_dict(rep),
        "lambda": rep.lam,
        "iterations": rep.iterations,
        "projected_residual_norm": rep.projected_residual_norm,
        "restart_index": rep.restart_index,
        "warnings": list(rep.warnings),
    })
    write_csv(out / "history.csv", ["iteration", "energy", "residual_norm"],
              [(i, e, r) for i, (e, r) in enumerate(rep.history)])
    write_field(rep.state, out / "state.afd")
    if plot:
        from .plotting import plot_state

        plot_state(rep.state, out / "state.png")
    print(f"energy = {rep.breakdown.total:.12g}  lambda = {rep.lam:.12g}  "
          f"iterations = {rep.iterations}")
    return EXIT_OK


def cmd_thermo(config: dict, out: Path, seed: int | None, plot: bool) -> int:
    _strict(config, {"betas", "n", "solver", "size_sweep", "neumann_dirichlet"}, "config")
    betas = [float(b) for b in config["betas"]]
    n = int(config.get("n", 256))
    cfg = parse_solver(config.get("solver", {}), seed)
    g = make_square(1.0, n, DIRICHLET)
    est = estimate_e11(betas, g, cfg)

    rows = [("sample", b, v, "E0(Q,beta,1)/beta") for b, v in est.samples]
    est_sizes = None
    if "size_sweep" in config:
        sw = config["size_sweep"]
        _strict(sw, {"Ls", "ns", "beta", "rho"}, "size_sweep")
        est_sizes = estimate_e11_from_sizes(
            [float(L) for L in sw["Ls"]], [int(m) for m in sw["ns"]], cfg,
            beta=float(sw.get("beta", 1.0)), rho=float(sw.get("rho", 1.0)))
        rows += [("size_sample", k, v, "E0(LQ,beta,rho L^2)/(beta rho^2 L^2)")
                 for k, v in est_sizes.samples]
    gaps = []
    if "neumann_dirichlet" in config:
        nd = config["neumann_dirichlet"]
        _strict(nd, {"Ls", "ns", "beta", "rho"}, "neumann_dirichlet")
        gaps = neumann_dirichlet_gap(
            [float(L) for L in nd["Ls"]], float(nd.get("beta", 1.0)),
            float(nd.get("rho", 1.0)), cfg,
            ns=[int(m) for m in nd["ns"]] if "ns" in nd else None)
        rows += [("nd_gap", L, gv, "(E0-E)/E0") for L, gv in gaps]
    rows.append(("e11_estimate", est.samples[-1][0], est.e11,
                 f"e11_estimate >= {2 * np.pi:.4f} - tol (proven lower bound)"))
    write_csv(out / "samples.csv", ["kind", "key", "value", "note"], rows)
    payload = {
        "e11": est.e11,
        "fit_model": est.fit_model,
        "fit_residual": est.fit_residual,
        "error_bar": est.error_bar,
        "samples": [list(s) for s in est.samples],
        "neumann_gap": [list(gp) for gp in gaps],
        "warnings": list(est.warnings),
        "lower_bound": 2 * np.pi,
    }
    if est_sizes is not None:
        payload["size_sweep"] = {
            "e11": est_sizes.e11,
            "error_bar": est_sizes.error_bar,
            "samples": [list(s) for s in est_sizes.samples],
        }
    write_json(out / "estimate.json", payload)
    if plot:
        from .plotting import plot_thermo

        plot_thermo(est, est_sizes, out / "thermo.png")
    print(f"e11_estimate = {est.e11:.6f} +/- {est.error_bar:.6f} "
          f">= {2 * np.pi:.4f} - tol")
    return EXIT_OK


def cmd_tf(config: dict, out: Path, seed: int | None, plot: bool) -> int:
    _strict(config, {"trap", "beta", "e11"}, "config")
    trap = parse_trap(config["trap"])
    beta = float(config.get("beta", 1.0))
    e11 = float(config["e11"])
    base = tf_solve(trap, 1.0, e11)
    sol = tf_scale(base, beta) if beta != 1.0 else base
    write_json(out / "tf.json", {
        "degree": sol.s,
        "e11": e11,
        "beta": beta,
        "energy": sol.energy,
        "chemical_potential": sol.lam,
        "support_radius": sol.support_radius,
        "rho_sq_integral": sol.rho_sq_integral,
        "base_energy": base.energy,
        "base_chemical_potential": base.lam,
    })
    if plot:
        from .plotting import plot_tf

        plot_tf(sol, out / "tf.png")
    print(f"E_TF_1 = {base.energy:.7f}   lambda_TF_1 = {base.lam:.7f}")
    if beta != 1.0:
        print(f"E_TF(beta={beta:g}) = {sol.energy:.7f}")
    return EXIT_OK


def cmd_lda(config: dict, out: Path, seed: int | None, plot: bool) -> int:
    _strict(config, {"trap", "betas", "e11", "solver", "max_n", "distance_R"}, "config")
    trap = parse_trap(config["trap"])
    betas = [float(b) for b in config["betas"]]
    e11_cfg = config["e11"]
    if isinstance(e11_cfg, dict):
        _strict(e11_cfg, {"from_estimate"}, "e11")
        with open(e11_cfg["from_estimate"], "r", encoding="utf-8") as f:
            e11 = float(json.load(f)["e11"])
    else:
        e11 = float(e11_cfg)
    cfg = parse_solver(config.get("solver", {}), seed)
    res = lda_sweep(trap, betas, cfg, e11,
                    max_n=int(config.get("max_n", 512)),
                    distance_R=config.get("distance_R"))
    write_csv(out / "sweep.csv",
              ["beta", "n", "extent", "e_af", "e_tf_measured", "e_tf_2pi",
               "ratio_measured", "ratio_2pi", "tf_distance", "vortex_count",
               "runtime_s", "resolution_margin", "flags"],
              [(r.beta, r.n, r.extent, r.e_af, r.e_tf_measured, r.e_tf_2pi,
                r.ratio_measured, r.ratio_2pi, r.tf_distance, r.vortex_count,
                r.runtime_s, r.resolution_margin, ";".join(r.flags))
               for r in res.records])
    write_json(out / "sweep.json", {
        "e11_measured": e11,
        "trap_degree": res.trap_degree,
        "records": [{
            "beta": r.beta, "n": r.n, "extent": r.extent, "e_af": r.e_af,
            "e_tf_measured": r.e_tf_measured, "e_tf_2pi": r.e_tf_2pi,
            "ratio_measured": r.ratio_measured, "ratio_2pi": r.ratio_2pi,
            "tf_distance": r.tf_distance, "vortex_count": r.vortex_count,
            "resolution_margin": r.resolution_margin, "flags": list(r.flags),
        } for r in res.records],
        "top_octave_log_log_slope": (log_log_slope(list(res.records))
                                     if len(res.records) >= 2 else None),
    })
    if plot:
        from .plotting import plot_lda

        plot_lda(res, out / "lda.png")
    for r in res.records:
        print(f"beta={r.beta:<8g} ratio={r.ratio_measured:.4f} "
              f"distance={r.tf_distance:.4g} vortices={r.vortex_count}")
    return EXIT_OK


def cmd_check(config: dict, out: Path, seed: int | None, plot: bool) -> int:
    results = check_mod.run_battery(seed=0 if seed is None else seed)
    width = max(len(name) for name, _, _ in results)
    violations = 0
    for name, ok, detail in results:
        status = "pass" if ok else "FAIL"
        print(f"{name:<{width}}  {status}  {detail}")
        violations += 0 if ok else 1
    print(f"{violations} violation(s) in {len(results)} checks")
    return EXIT_OK if violations == 0 else EXIT_INVARIANT


COMMANDS = {
    "solve": (cmd_solve, True),
    "thermo": (cmd_thermo, True),
    "tf": (cmd_tf, True),
    "lda": (cmd_lda, True),
    "check": (cmd_check, False),
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="anyongas",
        description="Average-field anyon gas: solves, thermodynamic "
                    "extrapolation, Thomas-Fermi validation.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="FFT worker threads")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--plot", action="store_true", help="also write PNG plots")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    fn, needs_config = COMMANDS[args.command]
    try:
        config = {}
        if needs_config:
            if not args.config:
                raise ConfigError(f"{args.command} requires --config")
            config = load_config(args.config)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with scipy.fft.set_workers(max(1, args.threads)):
            return fn(config, out, args.seed, args.plot)
    except (ConfigError, TfError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverError, ThermoError) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
