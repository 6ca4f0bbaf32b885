import json
import subprocess
import sys
from pathlib import Path

import pytest

W1_JSON = {
    "d": 1,
    "p": 1,
    "jumps": [
        {
            "from": 1,
            "to": 1,
            "atoms": [
                {"dx": [-1], "prob": 0.2},
                {"dx": [0], "prob": 0.3},
                {"dx": [1], "prob": 0.5},
            ],
        }
    ],
}

CENTERED_JSON = {
    "d": 1,
    "p": 1,
    "jumps": [
        {
            "from": 1,
            "to": 1,
            "atoms": [
                {"dx": [-1], "prob": 0.5},
                {"dx": [1], "prob": 0.5},
            ],
        }
    ],
}


def run_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "madd.cli", *args], capture_output=True, text=True
    )


@pytest.fixture()
def w1_path(tmp_path: Path) -> str:
    p = tmp_path / "w1.json"
    p.write_text(json.dumps(W1_JSON))
    return str(p)


def outputs(stdout: str) -> dict:
    out = {}
    for line in stdout.splitlines():
        if " = " in line:
            key, val = line.split(" = ", 1)
            out[key] = val
    return out


class TestLoadErrors:
    def test_row_mass_error_names_row(self, tmp_path):
        bad = dict(W1_JSON)
        bad["jumps"] = [
            {"from": 1, "to": 1, "atoms": [{"dx": [1], "prob": 0.99}]}
        ]
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(bad))
        cp = run_cli("validate", "--spec", str(p))
        assert cp.returncode == 2
        assert "row 1" in cp.stderr

    def test_dx_length_schema_error(self, tmp_path):
        bad = {
            "d": 2,
            "p": 1,
            "jumps": [{"from": 1, "to": 1, "atoms": [{"dx": [1], "prob": 1.0}]}],
        }
        p = tmp_path / "bad.json"
        p.write_text(json.dumps(bad))
        cp = run_cli("validate", "--spec", str(p))
        assert cp.returncode == 2
        assert "dx" in cp.stderr and "length" in cp.stderr

    def test_parse_error_reports_position(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text('{"d": 1,,}')
        cp = run_cli("validate", "--spec", str(p))
        assert cp.returncode == 2
        assert "line" in cp.stderr and "column" in cp.stderr

    def test_missing_file(self):
        cp = run_cli("validate", "--spec", "/nonexistent/x.json")
        assert cp.returncode == 2


class TestVerbs:
    def test_validate_flags(self, w1_path):
        cp = run_cli("validate", "--spec", w1_path)
        assert cp.returncode == 0
        out = outputs(cp.stdout)
        for flag in (
            "rows_stochastic",
            "markov_irreducible",
            "chain_irreducible",
            "aperiodic",
            "non_centered",
        ):
            assert out[flag] == "True"

    def test_moments(self, w1_path):
        cp = run_cli("moments", "--spec", w1_path)
        assert cp.returncode == 0
        assert outputs(cp.stdout)["global_drift"] == "(0.3)"

    def test_section_and_sigma(self, w1_path):
        cp = run_cli("section", "--spec", w1_path)
        out = outputs(cp.stdout)
        assert float(out["sigma_row_1"].strip("()")) == pytest.approx(0.7)

    def test_green_series_value(self, w1_path):
        cp = run_cli(
            "green", "--spec", w1_path, "--method", "series", "--i", "1", "--j", "1",
            "--x", "5",
        )
        assert cp.returncode == 0
        assert float(outputs(cp.stdout)["value"]) == pytest.approx(3.3333, abs=1e-3)

    def test_green_mc_runs(self, w1_path):
        cp = run_cli(
            "green", "--spec", w1_path, "--method", "mc", "--x", "2",
            "--paths", "5000", "--horizon", "200", "--seed", "3",
        )
        assert cp.returncode == 0

    def test_asym_value(self, w1_path):
        cp = run_cli("asym", "--spec", w1_path, "--x", "7")
        out = outputs(cp.stdout)
        assert float(out["value"]) == pytest.approx(10 / 3, abs=1e-6)
        assert float(out["m_exponent"]) == -1.0

    def test_compare_table(self, w1_path, tmp_path):
        csv_path = str(tmp_path / "cmp.csv")
        cp = run_cli(
            "compare", "--spec", w1_path, "--u", "1", "--radii", "5,10",
            "--methods", "series", "--out", csv_path,
        )
        assert cp.returncode == 0
        header = Path(csv_path).read_text().splitlines()[0]
        assert header == "r,x_1,method,value,error,asym,ratio"

    def test_boundary_on_centered_spec_exits_3(self, tmp_path):
        p = tmp_path / "centered.json"
        p.write_text(json.dumps(CENTERED_JSON))
        cp = run_cli("boundary", "--spec", str(p), "--directions", "2")
        assert cp.returncode == 3
        assert "drift" in cp.stderr

    def test_simulate_summary(self, w1_path):
        cp = run_cli(
            "simulate", "--spec", w1_path, "--paths", "2000", "--horizon", "100",
            "--seed", "1",
        )
        assert cp.returncode == 0
        drift = float(outputs(cp.stdout)["mean_endpoint_per_step"].strip("()"))
        assert drift == pytest.approx(0.3, abs=0.05)


class TestDeterminism:
    def test_boundary_csv_byte_stable(self, w1_path, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        run_cli("boundary", "--spec", w1_path, "--directions", "2", "--out", a)
        run_cli("boundary", "--spec", w1_path, "--directions", "2", "--out", b)
        assert Path(a).read_bytes() == Path(b).read_bytes()

    def test_simulate_csv_byte_stable(self, w1_path, tmp_path):
        a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        for path in (a, b):
            run_cli(
                "simulate", "--spec", w1_path, "--paths", "500", "--horizon", "50",
                "--seed", "9", "--out", path,
            )
        assert Path(a).read_bytes() == Path(b).read_bytes()


def test_checks_battery_passes_on_w1(w1_path):
    cp = run_cli("checks", "--spec", w1_path)
    assert cp.returncode == 0, cp.stdout + cp.stderr
    assert "FAIL" not in cp.stdout
    assert cp.stdout.count("PASS") >= 10
