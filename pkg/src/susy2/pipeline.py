"""Transform, classify, spectrum and verify steps shared by the CLI and the tests.

A :class:`Job` knows how to rebuild the seed potential and the transformation
on any truncation of its problem, which the L-doubling spectral check needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import catalog, spectral
from .classifier import Verdict, classify
from .darboux import TransformationSpec, TransformResult, kernel_images, second_order_potential
from .errors import ConstraintViolation, InconsistentSpec
from .io import parse_complex, read_grid_function
from .problem import (
    BoundaryProblem,
    ClosedForm,
    ClosedFormKind,
    Grid,
    GridFunction,
    ProblemKind,
    make_closed_form,
    solve_ivp,
    zero_potential,
)

COMMANDS = ("transform", "classify", "spectrum", "verify", "example")
RESIDUAL_SEED = 20240611
TAIL_PERIODS = 12


class ConfigError(ValueError):
    """A run configuration is malformed or refers to missing files."""


@dataclass(frozen=True)
class Numeric:
    grid_n: int = 2049
    L: float | None = None
    eig_n: int = 4000
    levels: int = spectral.DEFAULT_LEVELS
    tol: float = 1e-3
    stable_tol: float = 1e-4
    imag_tol: float = 1e-6
    residual_tol: float = 1e-6
    residual_samples: int = 10


@dataclass(eq=False)
class Job:
    """Everything needed to run the pipeline on one transformation."""

    label: str
    problem: BoundaryProblem
    numeric: Numeric
    build_V0: Callable[[BoundaryProblem, int], GridFunction]
    build_spec: Callable[[BoundaryProblem, Grid, GridFunction], TransformationSpec]
    seed_levels: list[complex] | None = None
    closed_form: Callable[[BoundaryProblem, int], GridFunction | None] | None = None
    expected: catalog.ExpectedVerdict | None = None
    exact_inputs: bool = True
    max_L: float | None = None

    def nodes_for(self, problem: BoundaryProblem) -> int:
        """Grid size on ``problem`` keeping the node spacing of the base problem."""
        n = self.numeric.grid_n
        if problem.kind is ProblemKind.FINITE_INTERVAL or problem.L == self.problem.L:
            return n
        m = int(round((n - 1) * problem.L / self.problem.L)) + 1
        return m + 1 - m % 2

    def build(self, problem: BoundaryProblem | None = None):
        problem = self.problem if problem is None else problem
        n = self.nodes_for(problem)
        V0 = self.build_V0(problem, n)
        spec = self.build_spec(problem, V0.grid, V0)
        return V0, spec

    def transform(self, problem: BoundaryProblem | None = None) -> tuple[GridFunction, TransformResult]:
        V0, spec = self.build(problem)
        return V0, second_order_potential(V0, spec)

    def V1_builder(self) -> Callable[[BoundaryProblem], GridFunction]:
        return lambda problem: self.transform(problem)[1].V1

    def V0_builder(self) -> Callable[[BoundaryProblem], GridFunction]:
        return lambda problem: self.build_V0(problem, self.nodes_for(problem))


# job construction -------------------------------------------------------------

def job_from_example(id: int, numeric: Numeric | None = None, grid_n_given: bool = False, **params) -> Job:
    """Job for a catalog example, optionally with overridden numerics and parameters.

    When ``numeric.L`` changes the truncation and ``grid_n_given`` is False,
    the fixture's node spacing is kept.
    """
    case = catalog.CASES.get(id)
    if case is None:
        raise ConfigError(f"unknown example id {id}; known: {sorted(catalog.CASES)}")
    base = numeric or Numeric(grid_n=case.grid_n)
    if not grid_n_given:
        base = replace(base, grid_n=case.grid_n)
    problem = case.problem
    if base.L is not None and problem.kind is not ProblemKind.FINITE_INTERVAL:
        problem = problem.with_truncation(base.L)
        if not grid_n_given:
            m = int(round((case.grid_n - 1) * problem.L / case.problem.L)) + 1
            base = replace(base, grid_n=m + 1 - m % 2)
    unknown = set(params) - set(case.defaults)
    if unknown:
        raise ConfigError(f"example {id} has no parameters {sorted(unknown)}")
    case.check({**case.defaults, **params})

    def instance(prob, n):
        return catalog.example(id, grid_n=n, L=None if prob.kind is ProblemKind.FINITE_INTERVAL else prob.L, **params)

    def build_V0(prob, n):
        return zero_potential(prob.grid(n))

    def build_spec(prob, grid, V0):
        return instance(prob, grid.n).spec

    def closed(prob, n):
        return instance(prob, n).closed_form

    return Job(
        label=f"example {id}",
        problem=problem,
        numeric=base,
        build_V0=build_V0,
        build_spec=build_spec,
        seed_levels=catalog.seed_levels_for(problem),
        closed_form=closed if case.has_closed_form else None,
        expected=case.expected,
    )


def _problem_from_config(d) -> BoundaryProblem:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError("problem needs a 'kind'")
    try:
        kind = ProblemKind(d["kind"])
        if kind is ProblemKind.FINITE_INTERVAL:
            return BoundaryProblem.finite(float(d["a"]), float(d["b"]))
        L = float(d.get("L", 15.0))
        if kind is ProblemKind.HALF_LINE:
            return BoundaryProblem.half_line(L)
        return BoundaryProblem.whole_line(L)
    except (KeyError, ValueError, TypeError) as err:
        raise ConfigError(f"bad problem description {d!r}: {err}") from None


def _function_builder(d, name: str, zero_seed: bool):
    """Builder ``(grid, V0) -> GridFunction`` for one transformation function."""
    if not isinstance(d, dict):
        raise ConfigError(f"{name}: expected an object")
    if "ivp" in d:
        ivp = d["ivp"]
        try:
            E = parse_complex(ivp["energy"])
            x0 = float(ivp.get("x0", 0.0))
            u0 = parse_complex(ivp.get("u0", 0.0))
            du0 = parse_complex(ivp.get("du0", 1.0))
        except (KeyError, ValueError, TypeError) as err:
            raise ConfigError(f"{name}: bad ivp data: {err}") from None
        return (lambda grid, V0: solve_ivp(V0, E, x0, u0, du0)), False
    try:
        cf = ClosedForm(ClosedFormKind(d["kind"]), parse_complex(d["param"]), parse_complex(d.get("c", 0.0)))
    except (KeyError, ValueError, TypeError) as err:
        raise ConfigError(f"{name}: bad closed form: {err}") from None
    if not zero_seed:
        raise ConfigError(f"{name}: closed-form functions solve the free equation; use 'ivp' with a tabulated seed")
    return (lambda grid, V0: make_closed_form(cf, grid)), True


def _csv_seed(path: str):
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"seed potential file not found: {path}")
    try:
        table = read_grid_function(p)
    except ValueError as err:
        raise ConfigError(str(err)) from None
    spline = CubicHermiteSpline(table.x, table.values, table.derivs)

    def build(problem: BoundaryProblem, n: int) -> GridFunction:
        if problem.a < table.grid.x0 - 1e-12 or problem.b > table.grid.x1 + 1e-12:
            raise ConfigError(f"seed table [{table.grid.x0}, {table.grid.x1}] does not cover [{problem.a}, {problem.b}]")
        grid = problem.grid(n)
        return GridFunction(grid, spline(grid.x), spline(grid.x, 1), exact=False, label=p.name)

    reach = min(-table.grid.x0, table.grid.x1) if table.grid.x0 < 0 else table.grid.x1
    return build, reach


def numeric_from(d: dict | None, base: Numeric | None = None) -> Numeric:
    base = base or Numeric()
    if not d:
        return base
    allowed = set(Numeric.__dataclass_fields__)
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"unknown numeric settings {sorted(unknown)}")
    try:
        kw = {}
        for key, value in d.items():
            if value is None:
                continue
            kw[key] = int(value) if key in ("grid_n", "eig_n", "levels", "residual_samples") else float(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad numeric setting: {err}") from None
    out = replace(base, **kw)
    if out.grid_n < 3 or out.grid_n % 2 == 0:
        raise ConfigError("grid_n must be odd and >= 3")
    if out.eig_n < 16:
        raise ConfigError("eig_n must be >= 16")
    return out


def job_from_config(cfg: dict) -> Job:
    """Job from a parsed JSON run configuration (see the README for the schema)."""
    if "example" in cfg and cfg["example"] is not None:
        try:
            eid = int(cfg["example"])
        except (TypeError, ValueError):
            raise ConfigError(f"bad example id {cfg['example']!r}") from None
        params = {k: parse_complex(v) if isinstance(v, (str, list)) and k != "branch" else v for k, v in cfg.get("params", {}).items()}
        case = catalog.CASES.get(eid)
        if case is None:
            raise ConfigError(f"unknown example id {eid}")
        numeric = cfg.get("numeric") or {}
        num = numeric_from(numeric, Numeric(grid_n=case.grid_n))
        try:
            return job_from_example(eid, num, grid_n_given="grid_n" in numeric, **params)
        except (ConstraintViolation, KeyError) as err:
            raise ConfigError(str(err)) from None
    for key in ("problem", "transformation"):
        if key not in cfg:
            raise ConfigError(f"configuration needs '{key}' (or 'example')")
    num = numeric_from(cfg.get("numeric"))
    problem = _problem_from_config(cfg["problem"])
    if num.L is not None:
        if problem.kind is ProblemKind.FINITE_INTERVAL:
            raise ConfigError("truncation L only applies to unbounded problems")
        problem = problem.with_truncation(num.L)
    seed = cfg.get("seed_potential", "zero")
    max_L = None
    if seed == "zero":
        zero_seed = True

        def build_V0(prob, n):
            return zero_potential(prob.grid(n))

    elif isinstance(seed, str):
        zero_seed = False
        build_V0, max_L = _csv_seed(seed)
        build_V0(problem, 3)
    else:
        raise ConfigError("seed_potential must be 'zero' or a CSV path")
    t = cfg["transformation"]
    mode = t.get("mode", "NonConfluent")
    exact = True
    if mode == "NonConfluent":
        b1, e1 = _function_builder(t.get("u1"), "u1", zero_seed)
        b2, e2 = _function_builder(t.get("u2"), "u2", zero_seed)
        exact = e1 and e2

        def build_spec(prob, grid, V0):
            return TransformationSpec.nonconfluent(b1(grid, V0), b2(grid, V0))

    elif mode == "Confluent":
        b, exact = _function_builder(t.get("u"), "u", zero_seed)
        try:
            c = parse_complex(t.get("c", 0.0))
            x_anchor = float(t.get("x_anchor", 0.0))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"bad confluent constants: {err}") from None

        def build_spec(prob, grid, V0):
            return TransformationSpec.confluent(b(grid, V0), c, x_anchor)

    else:
        raise ConfigError(f"unknown transformation mode {mode!r}")
    job = Job(
        label="config",
        problem=problem,
        numeric=num,
        build_V0=build_V0,
        build_spec=build_spec,
        exact_inputs=exact,
        max_L=max_L,
    )
    try:
        job.build()
    except (InconsistentSpec, ValueError) as err:
        raise ConfigError(f"transformation cannot be built: {err}") from None
    return job


# steps ------------------------------------------------------------------------

def transform_summary(result: TransformResult) -> dict:
    V1 = result.V1.values
    finite = np.isfinite(V1)
    return {
        "spec": result.spec.describe(),
        "regular": bool(result.regular),
        "min_wronskian_ratio": float(result.min_wronskian_ratio),
        "singular_nodes": int(np.count_nonzero(~finite)),
        "max_abs_V1": float(np.max(np.abs(V1[finite]))) if finite.any() else float("nan"),
        "grid": {"x0": result.V1.grid.x0, "x1": result.V1.grid.x1, "n": result.V1.grid.n},
    }


def seed_levels_for(job: Job) -> list[complex]:
    if job.seed_levels is not None:
        return list(job.seed_levels)
    num = job.numeric
    problem = _stability_base(job)
    return spectral.seed_levels(job.V0_builder(), problem, num.eig_n, num.levels + 4, num.stable_tol)


def run_classify(job: Job) -> Verdict:
    V0, spec = job.build()
    return classify(spec, job.problem, seed_levels_for(job), V0)


def _stability_base(job: Job) -> BoundaryProblem:
    p = job.problem
    if p.kind is ProblemKind.FINITE_INTERVAL or job.max_L is None or 2 * p.L <= job.max_L + 1e-12:
        return p
    return p.with_truncation(p.L / 2)


def _unusable(V: GridFunction) -> str | None:
    """Why ``V`` cannot be checked numerically on its grid, or ``None`` if it can."""
    if not np.all(np.isfinite(V.values[1:-1])):
        return "V1 singular inside"
    spikes = spectral.unresolved_nodes(V)
    if spikes:
        return f"V1 has {spikes} interior nodes with h^2|V1| > 1 (spikes narrower than the grid)"
    return None


def run_spectrum(job: Job) -> dict:
    """Low-lying eigenvalues of ``h1``: the lowest ``levels`` on a finite interval, L-stable ones otherwise."""
    num = job.numeric
    _, result = job.transform()
    notes = []
    reason = _unusable(result.V1)
    if reason:
        return {"levels": [], "residuals": [], "multiplicities": [], "notes": [f"{reason}; no spectrum computed"]}
    if job.problem.kind is ProblemKind.FINITE_INTERVAL:
        lv = spectral.lowest_levels(result.V1, job.problem, num.eig_n, num.levels)
    else:
        base = _stability_base(job)
        lv = spectral.stable_levels(job.V1_builder(), base, num.eig_n, num.levels, num.stable_tol)
        notes.append(spectral.continuum_note(job.problem))
        if base is not job.problem:
            notes.append(f"seed table too short for L-doubling; stability checked between L={base.L} and {2 * base.L}")
    return {
        "levels": [r.energy for r in lv],
        "residuals": [r.mismatch for r in lv],
        "multiplicities": [r.multiplicity for r in lv],
        "notes": notes,
    }


@dataclass
class Check:
    name: str
    passed: bool | None
    value: object = None
    threshold: object = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "threshold": self.threshold,
            "detail": self.detail,
        }


def closed_form_error(V1: GridFunction, cf: GridFunction, skip_ends: bool = True) -> float:
    """``max |V1 - V1_cf| / max(1, |V1_cf|)`` over nodes where both are finite."""
    a, b = V1.values, cf.values
    mask = np.isfinite(a) & np.isfinite(b)
    if skip_ends:
        mask[0] = mask[-1] = False
    return float(np.max(np.abs(a[mask] - b[mask]) / np.maximum(1.0, np.abs(b[mask]))))


def residual_energies(job: Job, alphas, count: int) -> list[complex]:
    rng = np.random.default_rng(RESIDUAL_SEED)
    out = []
    while len(out) < count:
        z = 2.0 + math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        if all(abs(z - a) > 1e-3 for a in alphas):
            out.append(complex(z))
    return out


def _embedded_checks(job: Job, result: TransformResult, energy: complex) -> list[Check]:
    checks = []
    L_tail = max(job.problem.L, TAIL_PERIODS * 2 * math.pi / math.sqrt(max(energy.real, 1e-12)))
    long_problem = job.problem.with_truncation(L_tail)
    _, long_result = job.transform(long_problem)
    images = kernel_images(long_result)
    alphas = long_result.spec.alphas
    idx = int(np.argmin([abs(a - energy) for a in alphas]))
    phi = images[idx] if len(images) > idx else images[0]
    try:
        ok = spectral.l2_tail_check(phi, long_problem)
        p = spectral.fit_tail_exponent(phi)
        checks.append(Check(f"embedded_l2_tail[{energy.real:g}]", bool(ok), p, 0.5, f"tail fitted on L={L_tail:.6g}"))
    except Exception as err:  # AmbiguousAsymptotics and fit failures are reported, not raised
        checks.append(Check(f"embedded_l2_tail[{energy.real:g}]", False, None, 0.5, str(err)))
    mis = abs(spectral.shoot_mismatch(result.V1, energy, job.problem))
    checks.append(
        Check(
            f"embedded_box_mismatch[{energy.real:g}]",
            None,
            mis,
            None,
            "informational: a truncated box only sees the embedded level when L hits a node of phi",
        )
    )
    return checks


def run_verify(job: Job, verdict: Verdict | None = None) -> dict:
    """transform -> classify -> spectrum -> compare; every check reports value and threshold."""
    num = job.numeric
    V0, result = job.transform()
    checks: list[Check] = []
    if job.closed_form is not None:
        cf = job.closed_form(job.problem, job.nodes_for(job.problem))
        if cf is not None:
            tol = 1e-8 if job.exact_inputs else 1e-6
            err = closed_form_error(result.V1, cf)
            checks.append(Check("closed_form", err <= tol, err, tol))
    verdict = run_classify(job) if verdict is None else verdict
    if job.expected is not None:
        bad = job.expected.mismatches(verdict)
        checks.append(Check("expected_verdict", not bad, bad, [], "fields that differ from the fixture"))
    energies = residual_energies(job, result.spec.alphas, num.residual_samples)
    reason = _unusable(result.V1)
    if reason is None:
        res = spectral.intertwining_residual(V0, result, energies)
        checks.append(Check("intertwining_residual", res <= num.residual_tol, res, num.residual_tol))
    else:
        checks.append(Check("intertwining_residual", None, None, num.residual_tol, f"skipped: {reason}"))
    pred = verdict.prediction
    embedded = [e for e, flag in pred.embedded_flags if flag]
    report = None
    spectrum = {"levels": [], "residuals": [], "multiplicities": []}
    if reason is not None:
        checks.append(Check("spectrum", None, None, None, f"skipped: {reason}"))
    else:
        spectrum = run_spectrum(job)
        found = spectrum["levels"]
        expected = [
            e
            for e in pred.expected_levels()
            if not any(abs(e - m) <= 1e-9 for m in embedded)
        ]
        if job.problem.kind is ProblemKind.FINITE_INTERVAL:
            k = num.levels
            tol = num.tol
        else:
            k = max(len(expected), len(found))
            tol = num.stable_tol
        report = spectral.compare_spectra(found, expected, k, tol, num.imag_tol, spectrum["residuals"])
        checks.append(
            Check(
                "spectrum",
                report.passed,
                {"unmatched_expected": report.unmatched_expected, "unmatched_found": report.unmatched_found},
                tol,
            )
        )
        if verdict.real_spectrum:
            worst = max((abs(f.imag) for _, f, _ in report.matched), default=0.0)
            checks.append(Check("real_spectrum", report.real_spectrum_confirmed, worst, num.imag_tol))
    for e in embedded:
        checks.extend(_embedded_checks(job, result, complex(e)))
    if pred.spectral_singularity_candidates:
        report_notes = [f"spectral singularity candidate at E={e} (flagged, not certified)" for e in pred.spectral_singularity_candidates]
    else:
        report_notes = []
    if report is not None:
        report.notes.extend(spectrum.get("notes", []))
        for E, m in zip(spectrum["levels"], spectrum["multiplicities"]):
            if m > 1:
                report.notes.append(f"level {E:.10g} found as a split cluster of {m} copies (defective eigenvalue); centroid reported")
    passed = all(c.passed for c in checks if c.passed is not None)
    return {
        "label": job.label,
        "passed": passed,
        "checks": [c.to_dict() for c in checks],
        "transform": transform_summary(result),
        "verdict": verdict.to_dict(),
        "spectrum": report.to_dict() if report is not None else None,
        "notes": report_notes,
    }
