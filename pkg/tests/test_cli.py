import csv
import subprocess
import sys

import pytest

from pairwave.cli import main
from pairwave.config import RunPlan, serialize_config
from pairwave.model import baseline_spec
from pairwave.sweep import SimSettings


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(serialize_config(baseline_spec(n_max=1), RunPlan(sim=SimSettings(samples=10))))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_default(capsys):
    code, out, _ = run(["validate"], capsys)
    assert code == 0
    assert "sep12" in out and "overall: warn" in out


def test_validate_failing_point(capsys):
    code, out, _ = run(["validate", "--c1", "3"], capsys)
    assert code == 1
    assert "overall: fail" in out


def test_simulate_default_smoke(capsys):
    code, out, _ = run(["simulate", "--config", "default"], capsys)
    assert code == 0
    for key in ("F_joint", "F_pair1", "F_pair2", "t_op"):
        assert key in out


def test_simulate_writes_csv(tmp_path, small_config, capsys):
    out_csv = tmp_path / "one.csv"
    code, _, _ = run(["--config", small_config, "simulate", "--t-final-ns", "1", "--out", str(out_csv)], capsys)
    assert code == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 1
    assert float(rows[0]["F_joint"]) > 0


def test_simulate_validity_failure_is_user_error(small_config, capsys):
    code, _, err = run(["--config", small_config, "simulate", "--c1", "3"], capsys)
    assert code == 1
    assert "force" in err


def test_numerical_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "closed.toml"
    path.write_text(serialize_config(baseline_spec(n_max=1, dissipation=False)))
    code, _, err = run(["--config", str(path), "simulate", "--dt-ps", "400"], capsys)
    assert code == 2
    assert "numerical failure" in err


def test_analytic_t_op(capsys):
    code, out, _ = run(["analytic", "--t-op"], capsys)
    assert code == 0
    lines = [l for l in out.splitlines() if l.startswith("pair")]
    assert len(lines) == 2
    for line in lines:
        assert "c = +0.707106781+0.000000000i" in line
        assert "s = +0.000000000+0.707106781i" in line


def test_analytic_needs_time(capsys):
    code, _, _ = run(["analytic"], capsys)
    assert code == 1


def test_sweep_fig5_rows(tmp_path, small_config, capsys):
    out_csv, svg = tmp_path / "f5.csv", tmp_path / "f5.svg"
    code, out, _ = run(
        ["--config", small_config, "sweep", "--fig5", "--subgrid", "2x2", "--workers", "1",
         "--out", str(out_csv), "--svg", str(svg)],
        capsys,
    )
    assert code == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert len(rows) == 4
    assert [float(r["omega_mhz"]) for r in rows] == [50, 200, 50, 200]
    assert svg.read_text().startswith("<svg")
    assert "optimum" in out


def test_sweep_unwritable_output(small_config, capsys):
    code, _, err = run(["--config", small_config, "sweep", "--fig5", "--out", "/nonexistent/dir/x.csv"], capsys)
    assert code == 1
    assert "does not exist" in err


def test_sweep_without_axes(tmp_path, capsys):
    path = tmp_path / "noaxes.toml"
    path.write_text(serialize_config(baseline_spec(n_max=1)))
    code, _, err = run(["--config", str(path), "sweep", "--out", str(tmp_path / "x.csv")], capsys)
    assert code == 1
    assert "no sweep axes" in err


@pytest.mark.parametrize(
    "argv",
    [["frobnicate"], ["sweep", "--subgrid", "axb"], ["simulate", "--c1", "many"], ["sweep", "--fig4", "--fig5"], []],
)
def test_bad_flags(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 1
    assert "error" in err


def test_missing_config_file(capsys):
    code, _, err = run(["--config", "/no/such.toml", "validate"], capsys)
    assert code == 1
    assert "cannot read config" in err


def test_oracle_quick(capsys):
    code, out, _ = run(["oracle", "--quick"], capsys)
    assert code == 0
    assert out.count(" ok") == 4


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "pairwave", "analytic", "--t", "0"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "c = +1.000000000" in proc.stdout
