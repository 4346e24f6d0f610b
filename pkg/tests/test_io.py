import json
import math

import numpy as np
import pytest

from susy2.io import dumps, fmt_float, parse_complex, read_grid_function, write_eigenvalues, write_grid_function
from susy2.problem import Grid, GridFunction


def test_fmt_float():
    assert fmt_float(0.0) == "0.0"
    assert fmt_float(2) == "2.0"
    assert fmt_float(float("nan")) == "null"
    assert float(fmt_float(0.1)) == 0.1
    assert fmt_float(1e-6) == "9.9999999999999995e-07"


@pytest.mark.parametrize(
    "text, value",
    [("1+2i", 1 + 2j), (" 0.5 - 1e-3 i ", 0.5 - 1e-3j), ("3j", 3j), ("-2", -2), ([1, -1], 1 - 1j), (4, 4), (2.5j, 2.5j)],
)
def test_parse_complex(text, value):
    assert parse_complex(text) == value


@pytest.mark.parametrize("bad", ["", "abc", [1, 2, 3], True, None, {"re": 1}])
def test_parse_complex_rejects(bad):
    with pytest.raises(ValueError):
        parse_complex(bad)


def test_dumps_is_deterministic_and_plain():
    obj = {"z": 1 - 2j, "nan": float("nan"), "arr": np.array([1.0, 2.0, 3.0]), "flag": np.bool_(True), "n": np.int64(3)}
    text = dumps(obj)
    assert text == dumps(obj)
    data = json.loads(text)
    assert data == {"z": [1.0, -2.0], "nan": None, "arr": [1.0, 2.0, 3.0], "flag": True, "n": 3}
    with pytest.raises(TypeError):
        dumps({"f": object()})


def test_grid_function_csv_round_trip(tmp_path):
    g = Grid(-1.0, 1.0, 21)
    f = GridFunction(g, np.exp(1j * g.x) / 3, 1j * np.exp(1j * g.x) / 3)
    path = write_grid_function(tmp_path / "f.csv", f)
    back = read_grid_function(path)
    assert back.grid.n == 21 and np.array_equal(back.values, f.values) and np.array_equal(back.derivs, f.derivs)
    write_eigenvalues(tmp_path / "ev.csv", [1 + 1j, 2.0], [1e-9, float("nan")])
    lines = (tmp_path / "ev.csv").read_text().splitlines()
    assert lines[0] == "re,im,residual" and lines[2].endswith("nan")


def test_csv_without_derivatives(tmp_path):
    x = np.linspace(0, 1, 11)
    rows = ["x,re,im"] + [f"{t:.17g},{t * t:.17g},0.0" for t in x]
    (tmp_path / "v.csv").write_text("\n".join(rows) + "\n")
    f = read_grid_function(tmp_path / "v.csv")
    assert np.allclose(f.derivs, 2 * x)


def test_csv_errors(tmp_path):
    (tmp_path / "even.csv").write_text("x,re,im\n0,0,0\n1,0,0\n")
    with pytest.raises(ValueError):
        read_grid_function(tmp_path / "even.csv")
    (tmp_path / "uneven.csv").write_text("x,re,im\n0,0,0\n0.2,0,0\n1,0,0\n")
    with pytest.raises(ValueError):
        read_grid_function(tmp_path / "uneven.csv")
    (tmp_path / "cols.csv").write_text("t,y\n0,0\n1,0\n2,0\n")
    with pytest.raises(ValueError):
        read_grid_function(tmp_path / "cols.csv")
    assert math.isfinite(float(fmt_float(1e300)))
