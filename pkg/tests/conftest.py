import re

import numpy as np
import pytest

from anyongas.grid import ComplexField, GridSpec, apply_dirichlet_mask, mass
from anyongas.trial import bump_profile

_ACCEPTANCE_RESULTS: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running acceptance criteria")


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\w+)", report.nodeid)
    if m and report.when == "call":
        _ACCEPTANCE_RESULTS[m.group(1)] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE_RESULTS):
        outcome = _ACCEPTANCE_RESULTS[key]
        status = "pass" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"criterion {key}: {status}")


def normalize(u: ComplexField, M: float = 1.0) -> ComplexField:
    return ComplexField(u.grid, u.values * np.sqrt(M / mass(u)))


def random_state(g: GridSpec, rng: np.random.Generator, M: float = 1.0) -> ComplexField:
    """Smooth-ish random complex state respecting the grid's bc."""
    X, Y = g.meshgrid()
    if g.bc == "plane":
        cx, cy = g.x0 + g.Lx / 2, g.y0 + g.Ly / 2
        env = np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / (2 * (g.Lx / 8) ** 2))
    else:
        env = np.sin(np.pi * (X - g.x0) / g.Lx) * np.sin(np.pi * (Y - g.y0) / g.Ly)
    phase = np.exp(1j * (rng.standard_normal() * np.sin(2 * np.pi * (X - g.x0) / g.Lx)
                         + rng.standard_normal() * np.sin(2 * np.pi * (Y - g.y0) / g.Ly)))
    noise = 0.2 * (rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    vals = apply_dirichlet_mask(g, env * phase * (1 + noise))
    return normalize(ComplexField(g, vals), M)


def random_direction(g: GridSpec, rng: np.random.Generator) -> np.ndarray:
    """Admissible variation (ring-zero on dirichlet grids)."""
    v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    return apply_dirichlet_mask(g, v)


def compact_bump(g: GridSpec, cx: float, cy: float, radius: float,
                 amplitude: float = 1.0) -> np.ndarray:
    """Exactly compactly supported C-infinity bump (vanishes for r >= radius)."""
    X, Y = g.meshgrid()
    r = np.hypot(X - cx, Y - cy) / radius
    return amplitude * bump_profile(r)


def random_compact_density(g: GridSpec, rng: np.random.Generator,
                           n_bumps: int = 3) -> np.ndarray:
    """Random sum of compact bumps supported well inside the box, unit mass."""
    margin = 0.32 * g.Lx
    vals = np.zeros(g.shape)
    for _ in range(n_bumps):
        cx = g.x0 + margin + (g.Lx - 2 * margin) * rng.random()
        cy = g.y0 + margin + (g.Ly - 2 * margin) * rng.random()
        rad = (0.20 + 0.08 * rng.random()) * g.Lx
        vals += compact_bump(g, cx, cy, rad, amplitude=0.5 + rng.random())
    return vals / (np.sum(vals) * g.cell_area)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
