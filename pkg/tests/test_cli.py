import json

import numpy as np
import pytest

from susy2 import __version__
from susy2.cli import EXIT_CONFIG, EXIT_FAILED, EXIT_NUMERIC, EXIT_OK, main
from susy2.io import read_grid_function

EXP_PAIR = {
    "command": "transform",
    "problem": {"kind": "WholeLine", "L": 5.0},
    "transformation": {"mode": "NonConfluent", "u1": {"kind": "ExpA", "param": 0.7}, "u2": {"kind": "ExpA", "param": "-1.3+0.2i"}},
    "numeric": {"grid_n": 501},
}


def write(tmp_path, cfg, name="run.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def test_verify_example_one(tmp_path):
    assert main(["verify", "--example", "1", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"] and report["verdict"]["case_label"] == "FIN_c"


def test_example_command_and_failed_check(tmp_path):
    assert main(["example", "2", "--out", str(tmp_path / "ok")]) == EXIT_OK
    # a tolerance far below the discretization error must fail the spectrum check
    assert main(["verify", "--example", "1", "--eig-n", "200", "--tol", "1e-12", "--out", str(tmp_path / "bad")]) == EXIT_FAILED


def test_transform_of_trivial_pair_writes_zero_potential(tmp_path):
    out = tmp_path / "out"
    assert main(["--config", str(write(tmp_path, EXP_PAIR)), "--out", str(out)]) == EXIT_OK
    V1 = read_grid_function(out / "V1.csv")
    assert V1.grid.n == 501 and np.max(np.abs(V1.values)) < 1e-12
    summary = json.loads((out / "result.json").read_text())
    assert summary["regular"] and summary["singular_nodes"] == 0


def test_classify_example_eight(tmp_path):
    assert main(["classify", "--example", "8", "--out", str(tmp_path)]) == EXIT_OK
    verdict = json.loads((tmp_path / "verdict.json").read_text())
    assert verdict["irreducible"] is False and verdict["case_label"] == "WL_nonconfluent"


def test_spectrum_outputs(tmp_path):
    assert main(["spectrum", "--example", "1", "--levels", "3", "--eig-n", "2000", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "eigenvalues.csv").read_text().splitlines()
    assert lines[0] == "re,im,residual" and len(lines) == 4
    assert float(lines[1].split(",")[0]) == pytest.approx(1 / 9, abs=1e-6)


@pytest.mark.parametrize(
    "argv",
    [
        ["example", "99"],
        ["verify"],
        ["transform", "3"],
        ["verify", "--example", "1", "--grid-n", "100"],
    ],
)
def test_configuration_errors(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == EXIT_CONFIG


def test_bad_config_files(tmp_path):
    assert main(["verify", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG
    (tmp_path / "broken.json").write_text("{")
    assert main(["verify", "--config", str(tmp_path / "broken.json")]) == EXIT_CONFIG
    (tmp_path / "list.json").write_text("[]")
    assert main(["verify", "--config", str(tmp_path / "list.json")]) == EXIT_CONFIG


def test_numeric_failure_writes_diagnostics(tmp_path):
    cfg = {
        "command": "transform",
        "problem": {"kind": "WholeLine", "L": 40.0},
        "seed_potential": "zero",
        "transformation": {
            "mode": "NonConfluent",
            "u1": {"ivp": {"energy": -1e4, "x0": 0.0, "u0": 1.0, "du0": 0.0}},
            "u2": {"ivp": {"energy": 1.0, "x0": 0.0, "u0": 0.0, "du0": 1.0}},
        },
        "numeric": {"grid_n": 2001},
    }
    out = tmp_path / "out"
    assert main(["--config", str(write(tmp_path, cfg)), "--out", str(out)]) == EXIT_NUMERIC
    info = json.loads((out / "error.json").read_text())
    assert info["command"] == "transform" and info["error"] == "OverflowError"


def test_reruns_are_byte_identical(tmp_path):
    for name in ("a", "b"):
        assert main(["verify", "--example", "2", "--out", str(tmp_path / name)]) == EXIT_OK
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_version(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    assert __version__ in capsys.readouterr().out
