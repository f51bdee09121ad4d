import json
import subprocess
import sys

import numpy as np
import pytest

from scatterdm import io
from scatterdm.cli import main
from scatterdm.nm_measures import delta_closed_form


def load(path):
    cols = io.read_csv(path)
    return list(cols), np.array([[float(v) for v in col] for col in cols.values()]).T


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def test_simulate_writes_outputs(tmp_path):
    assert run(tmp_path, "simulate", "--alpha", "1", "--tmax", "4", "--dt", "0.01") == 0
    cols, data = load(tmp_path / "trajectory.csv")
    assert cols == list(io.TRAJECTORY_COLUMNS)
    t, p_g, p_e, re_c, im_c, delta, det = data.T
    assert (t[0], p_g[0], p_e[0], re_c[0], im_c[0], delta[0], det[0]) == (0, 0, 1, 1, 0, 1, 1)
    assert np.abs(delta - delta_closed_form(t, 1.0)).max() < 1e-3
    assert np.allclose(det, (re_c**2 + im_c**2) * delta)
    cols, rates = load(tmp_path / "rates.csv")
    assert cols == list(io.RATES_COLUMNS) and len(rates) == len(data)
    assert set(np.unique(rates[:, -1])) <= {0.0, 1.0}
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["command"] == "simulate"
    assert (tmp_path / "trajectory.gp").exists()


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        d.mkdir()
        assert run(d, "simulate", "--alpha", "0.5", "--tmax", "2") == 0
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_large_alpha_has_no_negative_delta(tmp_path):
    assert run(tmp_path, "simulate", "--alpha", "10", "--tmax", "6") == 0
    _, data = load(tmp_path / "trajectory.csv")
    assert data[:, 5].min() >= 0


@pytest.mark.parametrize(
    "args",
    [
        ("simulate", "--alpha", "-1"),
        ("simulate", "--geometry", "semi", "--a", "1.0", "--dt", "0.3"),
        ("sweep-alpha", "--alphas", "2,1"),
    ],
)
def test_bad_config_exit_code(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_unwritable_output_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--tmax", "1", "--out", str(blocker / "sub")]) == 3


def test_config_file_then_flags(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[physical]\nalpha = 10\n[lattice]\ntmax = 1.0\ndt = 0.01\n")
    assert run(tmp_path, "simulate", "--config", str(cfg), "--alpha", "1") == 0
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert meta["physical"]["alpha"] == 1.0
    _, data = load(tmp_path / "trajectory.csv")
    assert data[-1, 0] == pytest.approx(1.0)


def test_negativity_map(tmp_path):
    assert run(tmp_path, "negativity-map", "--alphas", "0.5,1,10", "--tmax", "10") == 0
    cols, data = load(tmp_path / "negativity.csv")
    assert cols == list(io.NEGATIVITY_COLUMNS)
    assert data[:, 2].min() >= 0
    assert data[data[:, 0] == 10, 2].max() == 0
    assert data[data[:, 0] == 1, 2].max() > 0.05


def test_sweep_same_for_any_worker_count(tmp_path, monkeypatch):
    outs = []
    for w in ("1", "2"):
        d = tmp_path / w
        d.mkdir()
        monkeypatch.setenv("SCATTERDM_WORKERS", w)
        args = ("sweep-alpha", "--alphas", "0.5,1", "--k0a-list", "1", "--tmax", "3")
        assert run(d, *args) == 0
        outs.append((d / "sweep.csv").read_bytes())
    assert outs[0] == outs[1]
    cols, data = load(tmp_path / "1" / "sweep.csv")
    assert cols == list(io.SWEEP_COLUMNS) and len(data) == 4


def test_module_entry_point_help():
    res = subprocess.run([sys.executable, "-m", "scatterdm", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for name in ("simulate", "negativity-map", "sweep-alpha", "validate"):
        assert name in res.stdout


@pytest.mark.slow
def test_validate_passes_and_fault_fails(tmp_path, capsys):
    assert run(tmp_path, "validate") == 0
    assert "11/11" in capsys.readouterr().out
    assert run(tmp_path, "validate", "--inject-fault", "skip-mirror-delay") == 1
    assert "FAIL" in capsys.readouterr().out
