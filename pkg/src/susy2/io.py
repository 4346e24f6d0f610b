"""JSON and CSV serialization with deterministic formatting.

Floats are written with 17 significant digits, complex numbers as
``[re, im]`` pairs and non-finite floats as ``null``. Key order is the
insertion order of the dicts built by the package, so identical runs give
byte-identical files.
"""

from __future__ import annotations

import enum
import json
import math
from pathlib import Path

import numpy as np

from .problem import Grid, GridFunction


def fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    if x == 0:
        return "0.0"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def parse_complex(value) -> complex:
    """Parse ``"re+imi"`` strings (``i`` or ``j``), ``[re, im]`` pairs or plain numbers.

    Raises
    ------
    ValueError
        The value is not a recognizable complex number.
    """
    if isinstance(value, bool):
        raise ValueError(f"not a complex number: {value!r}")
    if isinstance(value, (int, float, complex, np.number)):
        return complex(value)
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"complex pairs need two entries, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        text = value.strip().replace(" ", "").replace("i", "j")
        if not text:
            raise ValueError("empty complex string")
        try:
            return complex(text)
        except ValueError:
            raise ValueError(f"cannot parse complex number {value!r}") from None
    raise ValueError(f"not a complex number: {value!r}")


def to_plain(obj):
    """Convert package objects into JSON-ready builtins (complex -> [re, im])."""
    if hasattr(obj, "to_dict"):
        return to_plain(obj.to_dict())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _dump(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj) and len(obj) <= 2:
            return "[" + ", ".join(_dump(v, indent, level + 1) for v in obj) + "]"
        items = ",\n".join(pad + _dump(v, indent, level + 1) for v in obj)
        return "[\n" + items + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = ",\n".join(f"{pad}{_dump(str(k), indent, level + 1)}: {_dump(v, indent, level + 1)}" for k, v in obj.items())
        return "{\n" + items + "\n" + end + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _dump(to_plain(obj), indent, 0) + "\n"


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj), encoding="utf-8", newline="\n")
    return path


def write_grid_function(path, f: GridFunction) -> Path:
    """CSV with columns ``x, re, im, d_re, d_im``."""
    rows = ["x,re,im,d_re,d_im"]
    for x, v, d in zip(f.x, f.values, f.derivs):
        rows.append(",".join(fmt_float(t) if math.isfinite(t) else "nan" for t in (x, v.real, v.imag, d.real, d.imag)))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")
    return path


def write_eigenvalues(path, levels, residuals) -> Path:
    """CSV with columns ``re, im, residual``."""
    rows = ["re,im,residual"]
    for z, r in zip(levels, residuals):
        z = complex(z)
        rows.append(",".join(fmt_float(t) if math.isfinite(t) else "nan" for t in (z.real, z.imag, float(r))))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(rows) + "\n", encoding="utf-8", newline="\n")
    return path


def read_grid_function(path) -> GridFunction:
    """Read a CSV written by :func:`write_grid_function`.

    Files with only ``x, re, im`` columns get derivatives from
    :func:`numpy.gradient`. Nodes must be uniformly spaced.
    """
    data = np.genfromtxt(path, delimiter=",", names=True, dtype=float)
    names = data.dtype.names
    if names is None or not {"x", "re", "im"} <= set(names):
        raise ValueError(f"{path}: CSV needs columns x, re, im")
    x = np.atleast_1d(data["x"])
    if len(x) < 3 or len(x) % 2 == 0:
        raise ValueError(f"{path}: need an odd number (>= 3) of nodes, got {len(x)}")
    grid = Grid(float(x[0]), float(x[-1]), len(x))
    if np.max(np.abs(x - grid.x)) > 1e-9 * max(1.0, abs(grid.x1 - grid.x0)):
        raise ValueError(f"{path}: nodes are not uniformly spaced")
    vals = np.atleast_1d(data["re"]) + 1j * np.atleast_1d(data["im"])
    if "d_re" in names and "d_im" in names:
        ders = np.atleast_1d(data["d_re"]) + 1j * np.atleast_1d(data["d_im"])
    else:
        ders = np.gradient(vals, grid.h, edge_order=2)
    return GridFunction(grid, vals, ders, exact=False, label=str(Path(path).name))
