import io
import json
import subprocess
import sys

import pytest

from hankel_mra import cli


def run(*argv):
    buf = io.StringIO()
    code, report = cli.run(list(argv), buf)
    return code, report, buf.getvalue()


@pytest.fixture(autouse=True)
def no_env_dir(monkeypatch):
    monkeypatch.delenv(cli.OUTPUT_ENV, raising=False)


def test_specfun_check_passes():
    code, report, text = run("specfun-check")
    assert code == cli.EXIT_OK
    names = {c["name"] for c in report["checks"]}
    assert {"bessel_addition", "q_bessel_orthogonality"} <= names
    assert json.loads(text)["passed"] is True


def test_specfun_check_fails_at_impossible_tolerance():
    code, report, _ = run("specfun-check", "--tol", "1e-30")
    assert code == cli.EXIT_FAIL
    assert not report["passed"]


def test_usage_errors(tmp_path, capsys):
    assert run("nonsense")[0] == cli.EXIT_USAGE
    assert run("transform", "--alpha", "-2")[0] == cli.EXIT_USAGE
    assert run("specfun-check", "--tol", "-1")[0] == cli.EXIT_USAGE
    assert run("build-bank", "--variant", "q_spiral")[0] == cli.EXIT_USAGE
    assert run("check-cuntz", "--bank", str(tmp_path / "missing.json"))[0] == cli.EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("--config", str(bad), "specfun-check")[0] == cli.EXIT_USAGE
    bad.write_text(json.dumps({"specfun-check": {"bogus": 1}}))
    assert run("--config", str(bad), "specfun-check")[0] == cli.EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"frame-bounds": {"J": 2, "K": 4, "n_tests": 3}}))
    _, report, _ = run("--config", str(cfg), "frame-bounds")
    assert (report["config"]["J"], report["config"]["K"], report["config"]["n_tests"]) == (2, 4, 3)
    _, report, _ = run("--config", str(cfg), "frame-bounds", "--J", "3")
    assert report["config"]["J"] == 3 and report["config"]["K"] == 4
    # flat config applies too
    cfg.write_text(json.dumps({"K": 50}))
    _, report, _ = run("--config", str(cfg), "specfun-check")
    assert report["config"]["K"] == 50


def test_transform_round_trip():
    code, report, _ = run("transform", "--round-trip")
    assert code == cli.EXIT_OK
    assert report["checks"][0]["residual"] <= 1e-6
    assert report["samples"].startswith("index,node,re,im")


def test_transform_q_lattice(tmp_path):
    q = 0.5
    lines = ["index,node,re,im"] + [f"{i},{q ** k!r},{1.0 / (1 + k * k)!r},0.0" for i, k in enumerate(range(6, -4, -1))]
    path = tmp_path / "lat.csv"
    path.write_text("\n".join(lines) + "\n")
    code, report, _ = run("transform", "--input", str(path), "--q", "0.5", "--alpha", "1")
    assert code == cli.EXIT_OK and report["n"] == 10


def test_transform_empty_input(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("index,node,re,im\n")
    code, report, _ = run("transform", "--input", str(path))
    assert code == cli.EXIT_OK and report["n"] == 0


@pytest.mark.parametrize(
    "argv",
    [
        ("--nu", "2"),
        ("--variant", "q_spiral", "--q", "0.5", "--m0", "annular"),
        ("--nu", "3", "--m0", "random", "--seed", "4"),
        ("--variant", "half_turn", "--m0", "random"),
    ],
)
def test_build_bank_unitary(argv):
    code, report, _ = run("build-bank", *argv)
    assert code == cli.EXIT_OK
    assert report["failing_points"] == []


def test_build_bank_failures():
    code, report, _ = run("build-bank", "--variant", "q_spiral", "--q", "0.5", "--m0", "annular-bessel")
    assert code == cli.EXIT_FAIL and report["bank"] is None
    code, report, _ = run("build-bank", "--variant", "half_turn", "--m0", "bessel-series")
    assert code == cli.EXIT_FAIL
    by_name = {c["name"]: c for c in report["checks"]}
    assert by_name["residue_diagonal"]["passed"] and not by_name["unitarity"]["passed"]
    assert report["failing_points"]


def test_check_cuntz_round_trip(tmp_path):
    out = tmp_path / "bank.json"
    assert run("--output", str(out), "build-bank", "--variant", "q_spiral", "--q", "0.5", "--m0", "annular")[0] == 0
    code, report, _ = run("check-cuntz", "--bank", str(out), "--n-tests", "4")
    assert code == cli.EXIT_OK
    code, report, _ = run("check-cuntz", "--bank", str(out), "--n-tests", "4", "--perturb", "1.01")
    assert code == cli.EXIT_FAIL
    assert report["relations"]["max_isometry_residual"] == pytest.approx(0.0201, rel=1e-8)


def test_check_cuntz_rejects_failed_build(tmp_path):
    out = tmp_path / "bank.json"
    run("--output", str(out), "build-bank", "--variant", "q_spiral", "--q", "0.5", "--m0", "annular-bessel")
    assert run("check-cuntz", "--bank", str(out))[0] == cli.EXIT_USAGE


def test_frame_bounds():
    code, report, _ = run("frame-bounds", "--J", "3", "--K", "8", "--n-tests", "3")
    assert code == cli.EXIT_OK and report["warnings"] == []
    code, report, _ = run("frame-bounds", "--J", "1", "--K", "1", "--n-tests", "2")
    assert report["warnings"]
    code, _, _ = run("frame-bounds", "--family", "zero", "--n-tests", "2")
    assert code == cli.EXIT_FAIL


def test_csv_format():
    code, _, text = run("--format", "csv", "specfun-check")
    rows = text.strip().splitlines()
    assert rows[0] == "command,identity,params,residual,threshold,passed"
    assert all(r.startswith("specfun-check,") for r in rows[1:])


def test_output_env_directory(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path))
    code, _, text = run("frame-bounds", "--J", "2", "--K", "4", "--n-tests", "2")
    assert code == 0 and text == ""
    assert json.loads((tmp_path / "frame-bounds.json").read_text())["command"] == "frame-bounds"
    run("--output", "sub/x.csv", "--format", "csv", "specfun-check")
    assert (tmp_path / "sub" / "x.csv").exists()


def test_reruns_are_byte_identical():
    a = run("frame-bounds", "--J", "2", "--K", "4", "--n-tests", "2")[2]
    b = run("frame-bounds", "--J", "2", "--K", "4", "--n-tests", "2")[2]
    assert a == b


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hankel_mra.cli", "frame-bounds", "--J", "2", "--K", "4", "--n-tests", "2"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"] is True
