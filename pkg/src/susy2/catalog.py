"""Worked examples with closed-form partner potentials and expected verdicts.

Ids 1-9 follow the fixture numbering; id 10 is the half-line oscillating
case ``u2 = sin(k1 x + c)``. Default parameters and expected verdict fields
live in ``data/examples.json``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

import numpy as np

from .darboux import TransformationSpec
from .errors import ConstraintViolation
from .problem import (
    BoundaryProblem,
    ClosedForm,
    ClosedFormKind,
    Grid,
    GridFunction,
    ProblemKind,
    make_closed_form,
    zero_potential,
)

SEED_LEVEL_COUNT = 40
POLE_GUARD = 1e-12


def _cplx(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return v


def load_fixtures() -> dict:
    """Raw fixture file as a dict keyed by example id."""
    text = resources.files("susy2").joinpath("data/examples.json").read_text()
    raw = json.loads(text)
    out = {}
    for entry in raw["examples"]:
        entry = dict(entry)
        entry["params"] = {k: _cplx(v) for k, v in entry["params"].items()}
        out[entry["id"]] = entry
    return out


def _problem_from(entry: dict) -> BoundaryProblem:
    p = entry["problem"]
    kind = ProblemKind(p["kind"])
    if kind is ProblemKind.FINITE_INTERVAL:
        return BoundaryProblem.finite(p["a"], p["b"])
    if kind is ProblemKind.HALF_LINE:
        return BoundaryProblem.half_line(p["L"])
    return BoundaryProblem.whole_line(p["L"])


def _guarded(num, den):
    den = np.asarray(den, dtype=complex)
    num = np.asarray(num, dtype=complex)
    scale = max(float(np.max(np.abs(den))), 1.0)
    out = np.full(den.shape, np.nan + 0j)
    ok = np.abs(den) > POLE_GUARD * scale
    out[ok] = num[ok] / den[ok]
    return out


# closed-form partner potentials ---------------------------------------------

def _v1_ex1(p, x):
    n0, a, b = p["n0"], p["a"], p["b"]
    num = (n0**2 - a**2) * (n0**2 * (np.cos(2 * a * x + 2 * b) + 1) + a**2 * (np.cos(2 * n0 * x) - 1))
    den = (n0 * np.cos(n0 * x) * np.cos(a * x + b) + a * np.sin(n0 * x) * np.sin(a * x + b)) ** 2
    return _guarded(num, den)


def _v1_ex2(p, x):
    a1, a2 = p["a1"], p["a2"]
    xp, xm = x + math.pi, x - math.pi
    num = (a2**2 - a1**2) * (a2**2 * (1 - np.cos(2 * a1 * xp)) - a1**2 * (1 - np.cos(2 * a2 * xm)))
    den = (a1 * np.cos(a1 * xp) * np.sin(a2 * xm) - a2 * np.cos(a2 * xm) * np.sin(a1 * xp)) ** 2
    return _guarded(num, den)


def _ex3_sign(p) -> int:
    return 1 if p["branch"] == "upper" else -1


def ex3_displayed(p, x):
    """Example 3 exactly as printed: ``-+ n0^2 (n0(2c+x) sin + 2 cos +- 2) / (sin +- n0(2c+x))^2``.

    Differs from the transformed potential by a constant factor of -2; see
    :func:`_v1_ex3`.
    """
    n0, c, s = p["n0"], p["c"], _ex3_sign(p)
    t = n0 * (2 * c + x)
    num = -s * n0**2 * (t * np.sin(n0 * x) + 2 * np.cos(n0 * x) + s * 2)
    return _guarded(num, (np.sin(n0 * x) + s * t) ** 2)


def _v1_ex3(p, x):
    # -2 log(W_c)'' for W_c = c + int_0^x u^2; equals -2 times the printed form
    return -2 * ex3_displayed(p, x)


def _v1_ex4(p, x):
    k0, a = p["k0"], p["a"]
    num = (k0**2 + a**2) * (k0**2 * (np.cosh(2 * a * x) - 1) + a**2 * (np.cos(2 * k0 * x) - 1))
    den = (k0 * np.cos(k0 * x) * np.sinh(a * x) - a * np.sin(k0 * x) * np.cosh(a * x)) ** 2
    return _guarded(num, den)


def _v1_ex5(p, x):
    k0, a = p["k0"], p["a"]
    num = 2 * k0**2 * (k0**2 + a**2) * np.ones_like(x, dtype=complex)
    return _guarded(num, (k0 * np.cos(k0 * x) - a * np.sin(k0 * x)) ** 2)


def _v1_ex6(p, x):
    k0, a, c = p["k0"], p["a"], p["c"]
    num = (k0**2 + a**2) * (a**2 * (1 - np.cos(2 * k0 * x)) + k0**2 * (1 + np.cosh(2 * a * x + 2 * c)))
    den = (k0 * np.cos(k0 * x) * np.cosh(a * x + c) - a * np.sin(k0 * x) * np.sinh(a * x + c)) ** 2
    return _guarded(num, den)


def _v1_ex7(p, x):
    k0, c = p["k0"], p["c"]
    num = 32 * k0**2 * np.sin(k0 * x) * (np.sin(k0 * x) - k0 * (x + c) * np.cos(k0 * x))
    return _guarded(num, (np.sin(2 * k0 * x) - 2 * k0 * (x + c)) ** 2)


def _v1_ex8(p, x):
    a1, a2, x1, x2 = p["a1"], p["a2"], p["x1"], p["x2"]
    y1, y2 = x - x1, x - x2
    num = (a2**2 - a1**2) * (a2**2 * (1 - np.cosh(2 * a1 * y1)) - a1**2 * (1 - np.cosh(2 * a2 * y2)))
    den = (a2 * np.cosh(a2 * y2) * np.sinh(a1 * y1) - a1 * np.cosh(a1 * y1) * np.sinh(a2 * y2)) ** 2
    return _guarded(num, den)


def _v1_ex10(p, x):
    # the printed numerator reads cos(2k1 + 2c); the transformed potential has cos(2k1 x + 2c)
    k0, k1, c = p["k0"], p["k1"], p["c"]
    num = (k1**2 - k0**2) * (k1**2 * (1 - np.cos(2 * k0 * x)) - k0**2 * (1 - np.cos(2 * k1 * x + 2 * c)))
    den = (k0 * np.cos(k0 * x) * np.sin(k1 * x + c) - k1 * np.sin(k0 * x) * np.cos(k1 * x + c)) ** 2
    return _guarded(num, den)


# transformation specs ---------------------------------------------------------

def _cf(kind, param, c, grid):
    return make_closed_form(ClosedForm(kind, param, c), grid)


def _spec_ex1(p, g):
    return TransformationSpec.nonconfluent(
        _cf(ClosedFormKind.SIN_K, p["n0"], 0, g), _cf(ClosedFormKind.COS_KC, p["a"], p["b"], g)
    )


def _spec_ex2(p, g):
    a1, a2 = p["a1"], p["a2"]
    return TransformationSpec.nonconfluent(
        _cf(ClosedFormKind.SIN_K, a1, a1 * math.pi, g), _cf(ClosedFormKind.SIN_K, a2, -a2 * math.pi, g)
    )


def _spec_ex3(p, g):
    kind = ClosedFormKind.COS_KC if p["branch"] == "upper" else ClosedFormKind.SIN_K
    return TransformationSpec.confluent(_cf(kind, p["n0"] / 2, 0, g), p["c"], 0.0)


def _spec_ex4(p, g):
    return TransformationSpec.nonconfluent(
        _cf(ClosedFormKind.SIN_K, p["k0"], 0, g), _cf(ClosedFormKind.SINH_A, p["a"], 0, g)
    )


def _spec_ex5(p, g):
    return TransformationSpec.nonconfluent(
        _cf(ClosedFormKind.SIN_K, p["k0"], 0, g), _cf(ClosedFormKind.EXP_A, p["a"], 0, g)
    )


def _spec_ex6(p, g):
    return TransformationSpec.nonconfluent(
        _cf(ClosedFormKind.SIN_K, p["k0"], 0, g), _cf(ClosedFormKind.COSH_AC, p["a"], p["c"], g)
    )


def _spec_ex7(p, g):
    return TransformationSpec.confluent(_cf(ClosedFormKind.SIN_K, p["k0"], 0, g), p["c"] / 2, 0.0)


def _spec_ex8(p, g):
    a1, a2 = p["a1"], p["a2"]
    return TransformationSpec.nonconfluent(
        _cf(ClosedFormKind.SINH_A, a1, -a1 * p["x1"], g), _cf(ClosedFormKind.SINH_A, a2, -a2 * p["x2"], g)
    )


def _spec_ex9(p, g):
    return TransformationSpec.confluent(_cf(ClosedFormKind.COSH_AC, p["a"], 0, g), p["c"], 0.0)


def _spec_ex10(p, g):
    return TransformationSpec.nonconfluent(
        _cf(ClosedFormKind.SIN_K, p["k0"], 0, g), _cf(ClosedFormKind.SIN_K, p["k1"], p["c"], g)
    )


# parameter constraints ----------------------------------------------------------

def _real(z, tol=1e-14):
    return abs(complex(z).imag) <= tol


def _nonzero_imag(z, tol=1e-14):
    return abs(complex(z).imag) > tol


def _is_int(v):
    return float(v).is_integer()


_CONSTRAINTS: dict[int, list[tuple[str, Callable[[dict], bool]]]] = {
    1: [
        ("n0 is a positive integer", lambda p: _is_int(p["n0"]) and p["n0"] >= 1),
        ("a is real", lambda p: _real(p["a"])),
        ("a != n0", lambda p: abs(p["a"] - p["n0"]) > 1e-12),
        ("a != n/2", lambda p: abs(2 * complex(p["a"]).real - round(2 * complex(p["a"]).real)) > 1e-12),
        ("Im(b) != 0", lambda p: _nonzero_imag(p["b"])),
    ],
    2: [
        ("a1 != a2", lambda p: abs(p["a1"] - p["a2"]) > 1e-12),
        ("Im(a1^2) != 0", lambda p: _nonzero_imag(complex(p["a1"]) ** 2)),
        ("Im(a2^2) != 0", lambda p: _nonzero_imag(complex(p["a2"]) ** 2)),
    ],
    3: [
        ("branch is upper or lower", lambda p: p["branch"] in ("upper", "lower")),
        (
            "n0 odd >= 3 (upper) or even >= 4 (lower)",
            lambda p: _is_int(p["n0"])
            and p["n0"] >= 3
            and (int(p["n0"]) % 2 == 1) == (p["branch"] == "upper"),
        ),
        ("Im(c) != 0", lambda p: _nonzero_imag(p["c"])),
    ],
    4: [
        ("k0 > 0 real", lambda p: _real(p["k0"]) and complex(p["k0"]).real > 0),
        ("Im(a^2) != 0", lambda p: _nonzero_imag(complex(p["a"]) ** 2)),
    ],
    5: [
        ("k0 > 0 real", lambda p: _real(p["k0"]) and complex(p["k0"]).real > 0),
        ("Re(a) < 0", lambda p: complex(p["a"]).real < 0),
        ("Im(a^2) != 0", lambda p: _nonzero_imag(complex(p["a"]) ** 2)),
    ],
    6: [
        ("k0 > 0 real", lambda p: _real(p["k0"]) and complex(p["k0"]).real > 0),
        ("a real and nonzero", lambda p: _real(p["a"]) and complex(p["a"]).real != 0),
        ("Im(c) != 0", lambda p: _nonzero_imag(p["c"])),
    ],
    7: [
        ("k0 > 0 real", lambda p: _real(p["k0"]) and complex(p["k0"]).real > 0),
        ("Im(c) != 0", lambda p: _nonzero_imag(p["c"])),
    ],
    8: [
        ("a1 != a2", lambda p: abs(p["a1"] - p["a2"]) > 1e-12),
        ("Im(a1^2) != 0", lambda p: _nonzero_imag(complex(p["a1"]) ** 2)),
        ("Im(a2^2) != 0", lambda p: _nonzero_imag(complex(p["a2"]) ** 2)),
        ("x1, x2 real", lambda p: _real(p["x1"]) and _real(p["x2"])),
    ],
    9: [
        ("a > 0 real", lambda p: _real(p["a"]) and complex(p["a"]).real > 0),
        ("Im(c) != 0", lambda p: _nonzero_imag(p["c"])),
    ],
    10: [
        ("k0, k1 > 0 real", lambda p: all(_real(p[k]) and complex(p[k]).real > 0 for k in ("k0", "k1"))),
        ("k0 != k1", lambda p: abs(p["k0"] - p["k1"]) > 1e-12),
        ("Im(c) != 0", lambda p: _nonzero_imag(p["c"])),
    ],
}

_SPECS = {
    1: _spec_ex1, 2: _spec_ex2, 3: _spec_ex3, 4: _spec_ex4, 5: _spec_ex5,
    6: _spec_ex6, 7: _spec_ex7, 8: _spec_ex8, 9: _spec_ex9, 10: _spec_ex10,
}
_CLOSED = {
    1: _v1_ex1, 2: _v1_ex2, 3: _v1_ex3, 4: _v1_ex4, 5: _v1_ex5,
    6: _v1_ex6, 7: _v1_ex7, 8: _v1_ex8, 9: None, 10: _v1_ex10,
}


@dataclass(frozen=True)
class ExpectedVerdict:
    case_label: str
    irreducible: bool
    real_spectrum: bool
    pt_eligible: bool

    def mismatches(self, verdict) -> list[str]:
        """Field names on which ``verdict`` disagrees."""
        got = verdict.to_dict() if hasattr(verdict, "to_dict") else dict(verdict)
        return [
            name
            for name in ("case_label", "irreducible", "real_spectrum", "pt_eligible")
            if got[name] != getattr(self, name)
        ]


@dataclass(frozen=True, eq=False)
class ExampleCase:
    """One worked example: problem, constructor, closed form and expected verdict."""

    id: int
    title: str
    problem: BoundaryProblem
    grid_n: int
    defaults: dict
    expected: ExpectedVerdict
    constraints: list = field(default_factory=list)

    @property
    def has_closed_form(self) -> bool:
        return _CLOSED[self.id] is not None

    def check(self, params: dict) -> None:
        """Raise :class:`ConstraintViolation` naming the first violated predicate."""
        for name, pred in self.constraints:
            if not pred(params):
                raise ConstraintViolation(f"example {self.id}: constraint '{name}' violated by {params}")


@dataclass(frozen=True, eq=False)
class ExampleInstance:
    case: ExampleCase
    params: dict
    problem: BoundaryProblem
    grid: Grid
    V0: GridFunction
    spec: TransformationSpec
    closed_form: GridFunction | None
    seed_levels: list[complex]

    @property
    def expected(self) -> ExpectedVerdict:
        return self.case.expected

    def at_truncation(self, L: float) -> ExampleInstance:
        """Same example on ``[0, L]`` or ``[-L, L]`` with the node spacing kept."""
        if self.problem.kind is ProblemKind.FINITE_INTERVAL:
            return self
        ratio = L / self.problem.L
        n = int(round((self.grid.n - 1) * ratio)) + 1
        n += 1 - n % 2
        return build_example(self.case, self.params, problem=self.problem.with_truncation(L), grid_n=n)


def seed_levels_for(problem: BoundaryProblem) -> list[complex]:
    """Discrete Dirichlet levels of the free seed: ``(n pi / (b - a))^2`` on an interval, none otherwise."""
    if problem.kind is not ProblemKind.FINITE_INTERVAL:
        return []
    width = problem.b - problem.a
    return [complex((n * math.pi / width) ** 2) for n in range(1, SEED_LEVEL_COUNT + 1)]


def _closed_form_gf(case_id: int, params: dict, grid: Grid) -> GridFunction | None:
    fn = _CLOSED[case_id]
    if fn is None:
        return None
    vals = fn(params, grid.x)
    ders = np.gradient(vals, grid.h)
    return GridFunction(grid, vals, ders, exact=False, label=f"closed_form_{case_id}")


def build_example(case: ExampleCase, params: dict, problem=None, grid_n=None) -> ExampleInstance:
    problem = case.problem if problem is None else problem
    grid = problem.grid(case.grid_n if grid_n is None else grid_n)
    case.check(params)
    return ExampleInstance(
        case=case,
        params=params,
        problem=problem,
        grid=grid,
        V0=zero_potential(grid),
        spec=_SPECS[case.id](params, grid),
        closed_form=_closed_form_gf(case.id, params, grid),
        seed_levels=seed_levels_for(problem),
    )


def _cases() -> dict[int, ExampleCase]:
    out = {}
    for cid, entry in load_fixtures().items():
        out[cid] = ExampleCase(
            id=cid,
            title=entry["title"],
            problem=_problem_from(entry),
            grid_n=entry["grid_n"],
            defaults=entry["params"],
            expected=ExpectedVerdict(**entry["expected"]),
            constraints=_CONSTRAINTS[cid],
        )
    return out


CASES = _cases()


def example(id: int, grid_n: int | None = None, L: float | None = None, **params) -> ExampleInstance:
    """Build example ``id`` with fixture defaults overridden by ``params``.

    Raises
    ------
    ConstraintViolation
        A parameter leaves the example's admissible range.
    KeyError
        Unknown example id or parameter name.
    """
    if id not in CASES:
        raise KeyError(f"unknown example id {id}; known: {sorted(CASES)}")
    case = CASES[id]
    unknown = set(params) - set(case.defaults)
    if unknown:
        raise KeyError(f"example {id} has no parameters {sorted(unknown)}")
    merged = {**case.defaults, **{k: _cplx(v) for k, v in params.items()}}
    problem = case.problem if L is None else case.problem.with_truncation(L)
    n = grid_n
    if n is None and L is not None and problem.kind is not ProblemKind.FINITE_INTERVAL:
        n = int(round((case.grid_n - 1) * L / case.problem.L)) + 1
        n += 1 - n % 2
    return build_example(case, merged, problem=problem, grid_n=n)


def closed_form_v1(id: int, params: dict, x) -> np.ndarray:
    """Closed-form partner potential of example ``id`` at points ``x`` (NaN at guarded poles)."""
    fn = _CLOSED[id]
    if fn is None:
        raise ValueError(f"example {id} has no closed form")
    merged = {**CASES[id].defaults, **params}
    CASES[id].check(merged)
    return fn(merged, np.asarray(x, dtype=float))
