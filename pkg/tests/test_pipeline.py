import math

import numpy as np
import pytest

from susy2 import pipeline
from susy2.io import write_grid_function
from susy2.pipeline import ConfigError, Numeric, job_from_config, job_from_example, numeric_from
from susy2.problem import BoundaryProblem, ProblemKind, potential_from_callable

FREE_PAIR = {
    "problem": {"kind": "FiniteInterval", "a": -math.pi, "b": math.pi},
    "transformation": {
        "mode": "NonConfluent",
        "u1": {"kind": "SinK", "param": 1.0},
        "u2": {"kind": "CosKC", "param": 0.3333333333333333, "c": "0.4i"},
    },
    "numeric": {"grid_n": 2049, "eig_n": 3000, "levels": 4},
}


def test_config_job_matches_example_one():
    job = job_from_config(FREE_PAIR)
    assert job.problem.kind is ProblemKind.FINITE_INTERVAL and job.exact_inputs
    V1 = job.transform()[1].V1
    V1_ref = job_from_example(1).transform()[1].V1
    assert np.max(np.abs(V1.values - V1_ref.values)) < 1e-12
    spec = pipeline.run_spectrum(job)
    assert np.allclose(sorted(z.real for z in spec["levels"]), [1 / 9, 0.25, 2.25, 4.0], atol=1e-6)


def test_confluent_ivp_config_matches_example_three():
    cfg = {
        "problem": {"kind": "FiniteInterval", "a": -math.pi, "b": math.pi},
        "transformation": {"mode": "Confluent", "u": {"ivp": {"energy": 2.25, "u0": 1.0, "du0": 0.0}}, "c": "0.5i"},
        "numeric": {"grid_n": 4097},
    }
    job = job_from_config(cfg)
    assert not job.exact_inputs
    V1 = job.transform()[1].V1
    ref = job_from_example(3).transform()[1].V1
    assert np.max(np.abs(V1.values - ref.values)) < 1e-6 * ref.scale()


def test_tabulated_seed(tmp_path):
    problem = BoundaryProblem.finite(0.0, math.pi)
    V = potential_from_callable(problem.grid(1001), lambda x: 0.2 * np.cos(x) + 0j, lambda x: -0.2 * np.sin(x) + 0j)
    path = write_grid_function(tmp_path / "seed.csv", V)
    cfg = {
        "problem": {"kind": "FiniteInterval", "a": 0.0, "b": math.pi},
        "seed_potential": str(path),
        "transformation": {
            "mode": "NonConfluent",
            "u1": {"ivp": {"energy": 0.7, "x0": 0.0, "u0": 1.0, "du0": 0.0}},
            "u2": {"ivp": {"energy": "1.3+0.4i", "x0": 0.0, "u0": 1.0, "du0": 0.2}},
        },
        "numeric": {"grid_n": 1001},
    }
    job = job_from_config(cfg)
    V0, res = job.transform()
    assert np.max(np.abs(V0.values - V.values)) < 1e-12
    assert res.regular
    with pytest.raises(ConfigError):
        job_from_config({**cfg, "problem": {"kind": "FiniteInterval", "a": 0.0, "b": 4.0}})
    with pytest.raises(ConfigError):
        job_from_config({**cfg, "seed_potential": str(tmp_path / "missing.csv")})
    closed = {**cfg, "transformation": FREE_PAIR["transformation"]}
    with pytest.raises(ConfigError):
        job_from_config(closed)


@pytest.mark.parametrize(
    "cfg",
    [
        {},
        {"problem": {"kind": "Ring"}, "transformation": {}},
        {"problem": {"kind": "FiniteInterval", "a": 0}, "transformation": {}},
        {**FREE_PAIR, "transformation": {"mode": "Triple"}},
        {**FREE_PAIR, "transformation": {"mode": "NonConfluent", "u1": {"kind": "SinK"}, "u2": {"kind": "SinK", "param": 2}}},
        {**FREE_PAIR, "transformation": {"mode": "NonConfluent", "u1": {"kind": "SinK", "param": 1}, "u2": {"kind": "SinK", "param": 1}}},
        {**FREE_PAIR, "numeric": {"grid_n": 100}},
        {**FREE_PAIR, "numeric": {"L": 20.0}},
        {**FREE_PAIR, "seed_potential": 3},
        {"example": 99},
        {"example": "one"},
        {"example": 1, "params": {"a": 1.0}},
        {"example": 1, "params": {"zeta": 1.0}},
    ],
)
def test_config_errors(cfg):
    with pytest.raises(ConfigError):
        job_from_config(cfg)


def test_numeric_validation():
    assert numeric_from(None) == Numeric()
    assert numeric_from({"eig_n": "500", "tol": "1e-4"}).eig_n == 500
    for bad in ({"grid_n": 4}, {"eig_n": 8}, {"speed": 1}, {"tol": "fast"}):
        with pytest.raises(ConfigError):
            numeric_from(bad)


def test_example_truncation_keeps_spacing():
    job = job_from_example(8, Numeric(L=24.0))
    base = job_from_example(8)
    assert job.problem.L == 24.0
    h = 2 * job.problem.L / (job.numeric.grid_n - 1)
    assert h == pytest.approx(2 * base.problem.L / (base.numeric.grid_n - 1), rel=1e-3)


def test_unresolvable_partner_skips_numeric_checks():
    report = pipeline.run_verify(job_from_example(6))
    checks = {c["name"]: c for c in report["checks"]}
    assert checks["intertwining_residual"]["passed"] is None
    assert checks["spectrum"]["passed"] is None and "skipped" in checks["spectrum"]["detail"]
    assert checks["closed_form"]["passed"] and report["passed"]
    assert pipeline.run_spectrum(job_from_example(6))["levels"] == []


def test_verify_example_one():
    report = pipeline.run_verify(job_from_example(1))
    assert report["passed"]
    assert {c["name"] for c in report["checks"]} >= {"closed_form", "expected_verdict", "intertwining_residual", "spectrum"}
