import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from anyongas.cli import main
from anyongas.grid import make_square
from anyongas.io import FormatError, read_field, write_csv, write_field
from conftest import random_state

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


def run_cli(args):
    return main([str(a) for a in args])


# -- io ----------------------------------------------------------------------


def test_afd_round_trip_complex(tmp_path, rng):
    g = make_square(1.5, 32, "dirichlet")
    u = random_state(g, rng)
    path = tmp_path / "u.afd"
    write_field(u, path)
    back = read_field(path)
    assert back.grid == g
    assert np.array_equal(back.values, u.values)
    assert path.read_bytes()[:4] == b"AFD1"


def test_afd_rejects_garbage(tmp_path):
    path = tmp_path / "bad.afd"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(FormatError):
        read_field(path)


def test_csv_full_precision(tmp_path):
    path = tmp_path / "t.csv"
    x = 0.1 + 0.2  # not exactly representable
    write_csv(path, ["a", "b"], [(x, 7)])
    text = path.read_text()
    assert text.splitlines()[0] == "a,b"
    val = text.splitlines()[1].split(",")[0]
    assert float(val) == x  # 17 significant digits round-trip


# -- commands ------------------------------------------------------------------


@pytest.mark.parametrize("name", ["solve_dirichlet", "solve_neumann", "solve_plane"])
def test_smoke_solve_configs(name, tmp_path):
    rc = run_cli(["solve", "--config", CONFIGS / f"{name}.json", "--out", tmp_path])
    assert rc == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert np.isfinite(summary["energy"]["total"])
    assert (tmp_path / "history.csv").exists()
    state = read_field(tmp_path / "state.afd")
    assert state.grid.nx == summary["grid"]["nx"]


def test_solve_determinism(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    for out in (out1, out2):
        rc = run_cli(["solve", "--config", CONFIGS / "solve_dirichlet.json",
                      "--out", out, "--seed", 5])
        assert rc == 0
    for fname in ("summary.json", "history.csv", "state.afd"):
        assert (out1 / fname).read_bytes() == (out2 / fname).read_bytes()


def test_tf_command_prints_closed_form(tmp_path, capsys):
    rc = run_cli(["tf", "--config", CONFIGS / "tf_harmonic.json", "--out", tmp_path])
    assert rc == 0
    captured = capsys.readouterr().out
    assert "1.885618" in captured
    payload = json.loads((tmp_path / "tf.json").read_text())
    assert payload["energy"] == pytest.approx((4 / 3) * np.sqrt(2), abs=1e-8)


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"grid": {"kind": "square", "L": 1.0, "n": 64,
                                        "bc": "dirichlet", "typo_key": 1},
                               "beta": 1.0}))
    rc = run_cli(["solve", "--config", bad, "--out", tmp_path])
    assert rc == 3

    missing = tmp_path / "missing.json"
    rc = run_cli(["solve", "--config", missing, "--out", tmp_path])
    assert rc == 3

    rc = run_cli(["solve", "--out", tmp_path])  # no --config
    assert rc == 3


def test_solver_failure_exit_code(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({
        "grid": {"kind": "square", "L": 1.0, "n": 32, "bc": "dirichlet"},
        "beta": 1.0,
        "solver": {"initializer": "file"},   # no file given -> solver error
    }))
    rc = run_cli(["solve", "--config", cfg, "--out", tmp_path])
    assert rc == 2


def test_thermo_command_end_to_end(tmp_path):
    cfg = tmp_path / "thermo.json"
    cfg.write_text(json.dumps({
        "betas": [2.0, 4.0, 8.0],
        "n": 48,
        "solver": {"max_iters": 250, "grad_tol": 0.05, "seed": 0, "restarts": 0},
        "size_sweep": {"Ls": [2.0, 3.0, 4.0], "ns": [32, 48, 48]},
        "neumann_dirichlet": {"Ls": [2.0, 3.0], "ns": [32, 48]},
    }))
    rc = run_cli(["thermo", "--config", cfg, "--out", tmp_path])
    assert rc == 0
    est = json.loads((tmp_path / "estimate.json").read_text())
    assert len(est["samples"]) == 3
    assert "size_sweep" in est and len(est["size_sweep"]["samples"]) == 3
    assert len(est["neumann_gap"]) == 2
    text = (tmp_path / "samples.csv").read_text()
    assert text.startswith("kind,key,value,note")
    assert "e11_estimate" in text and "6.2832" in text


def test_lda_command_end_to_end(tmp_path):
    cfg = tmp_path / "lda.json"
    cfg.write_text(json.dumps({
        "trap": {"type": "harmonic", "coefficient": 1.0},
        "betas": [2.0, 4.0],
        "e11": 7.0,
        "max_n": 96,
        "solver": {"max_iters": 250, "grad_tol": 0.01, "seed": 0, "restarts": 0},
    }))
    rc = run_cli(["lda", "--config", cfg, "--out", tmp_path])
    assert rc == 0
    sweep = json.loads((tmp_path / "sweep.json").read_text())
    assert [r["beta"] for r in sweep["records"]] == [2.0, 4.0]
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header.split(",")[:4] == ["beta", "n", "extent", "e_af"]


def test_plot_flag_writes_png(tmp_path):
    pytest.importorskip("matplotlib")
    rc = run_cli(["tf", "--config", CONFIGS / "tf_harmonic.json",
                  "--out", tmp_path, "--plot"])
    assert rc == 0
    assert (tmp_path / "tf.png").stat().st_size > 0


def test_check_command_passes():
    assert run_cli(["check"]) == 0


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "anyongas.cli", "tf",
         "--config", str(CONFIGS / "tf_harmonic.json"), "--out", str(tmp_path)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "E_TF_1" in proc.stdout
