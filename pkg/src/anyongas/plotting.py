"""Optional PNG plots behind the --plot flag; CSV output stays authoritative."""

from __future__ import annotations

import numpy as np


def _mpl():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_state(state, path) -> None:
    plt = _mpl()
    g = state.grid
    fig, axes = plt.subplots(1, 2, figsize=(10, 4.2))
    extent = (g.x0, g.x0 + g.Lx, g.y0, g.y0 + g.Ly)
    im0 = axes[0].imshow(np.abs(state.values) ** 2, origin="lower", extent=extent)
    axes[0].set_title("density")
    fig.colorbar(im0, ax=axes[0])
    im1 = axes[1].imshow(np.angle(state.values), origin="lower", extent=extent,
                         cmap="twilight", vmin=-np.pi, vmax=np.pi)
    axes[1].set_title("phase")
    fig.colorbar(im1, ax=axes[1])
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_thermo(est, est_sizes, path) -> None:
    plt = _mpl()
    fig, ax = plt.subplots(figsize=(6, 4.2))
    ks = np.array([k for k, _ in est.samples])
    vs = np.array([v for _, v in est.samples])
    ax.plot(1 / np.sqrt(ks), vs, "o-", label="fixed-square sweep")
    if est_sizes is not None:
        ks2 = np.array([k for k, _ in est_sizes.samples])
        vs2 = np.array([v for _, v in est_sizes.samples])
        ax.plot(1 / np.sqrt(ks2), vs2, "s--", label="size sweep")
    ax.axhline(2 * np.pi, color="k", lw=0.8, label="2*pi bound")
    ax.axhline(est.e11, color="C3", lw=0.8, ls=":", label=f"extrapolated {est.e11:.3f}")
    ax.set_xlabel("1 / sqrt(beta_eff)")
    ax.set_ylabel("normalized energy per area")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_tf(sol, path) -> None:
    plt = _mpl()
    r = np.linspace(0, 1.4 * sol.support_radius, 400)
    rho = sol.density(r, np.zeros_like(r))
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.plot(r, rho)
    ax.axvline(sol.support_radius, color="k", lw=0.8, ls="--")
    ax.set_xlabel("r")
    ax.set_ylabel("TF density")
    ax.set_title(f"beta={sol.beta:g}, e11={sol.e11:.4f}")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_lda(res, path) -> None:
    plt = _mpl()
    betas = [r.beta for r in res.records]
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].semilogx(betas, [r.ratio_measured for r in res.records], "o-",
                     label="measured e11")
    axes[0].semilogx(betas, [r.ratio_2pi for r in res.records], "s--",
                     label="e11 = 2*pi")
    axes[0].axhline(1.0, color="k", lw=0.8)
    axes[0].set_xlabel("beta")
    axes[0].set_ylabel("E_af / E_TF")
    axes[0].legend()
    axes[1].loglog(betas, [r.tf_distance for r in res.records], "o-")
    axes[1].set_xlabel("beta")
    axes[1].set_ylabel("surrogate density distance")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
