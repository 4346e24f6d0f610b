import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
import oracles

from susy2 import AmbiguousAsymptotics, NoConvergence, ResampleError
from susy2 import pipeline
from susy2.problem import BoundaryProblem, GridFunction, potential_from_callable, zero_potential
from susy2.spectral import (
    compare_spectra,
    discretize,
    dirichlet_reference,
    eig_complex_tridiagonal,
    fit_tail_exponent,
    l2_tail_check,
    lowest_levels,
    matched_mismatch,
    refine_eigenvalue,
    shoot_mismatch,
    stable_levels,
    tridiagonal_eigenvalues,
)

BOX = BoundaryProblem.finite(-10.0, 10.0)


def harmonic(shift=0.0, drift=0.0):
    """``x^2 + i drift x + shift``; its levels are ``2n + 1 + drift^2/4 + shift``."""
    g = BOX.grid(4001)
    return potential_from_callable(g, lambda x: x**2 + 1j * drift * x + shift, lambda x: 2 * x + 1j * drift)


def test_dense_agreement_small():
    rng = np.random.default_rng(4)
    d = rng.normal(size=12) + 1j * rng.normal(size=12)
    e = rng.normal(size=11) + 1j * rng.normal(size=11)
    dense = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
    assert oracles.multiset_distance(tridiagonal_eigenvalues(d, e), np.linalg.eigvals(dense)) < 1e-10
    assert tridiagonal_eigenvalues([2.0 + 1j], []) == pytest.approx([2.0 + 1j])


def test_qr_iteration_budget():
    rng = np.random.default_rng(5)
    d = rng.normal(size=30) + 1j * rng.normal(size=30)
    e = rng.normal(size=29) + 1j * rng.normal(size=29)
    with pytest.raises(NoConvergence):
        tridiagonal_eigenvalues(d, e, max_iter=0)


def test_discretize_checks():
    V = zero_potential(BOX.grid(101))
    T = discretize(V, BOX, 99)
    assert T.n == 99 and T.h == pytest.approx(0.2)
    assert T.dense().shape == (99, 99)
    with pytest.raises(ValueError):
        discretize(V, BOX, 8)
    with pytest.raises(ResampleError):
        discretize(V, BoundaryProblem.finite(-20.0, 20.0), 99)
    values = np.zeros(101)
    values[50] = np.nan
    with pytest.raises(ResampleError):
        discretize(GridFunction(V.grid, values, np.zeros(101)), BOX, 99)


def test_free_box_levels():
    ev = eig_complex_tridiagonal(discretize(zero_potential(BOX.grid(401)), BOX, 3000))
    ref = dirichlet_reference(5, BOX.a, BOX.b)
    assert np.max(np.abs(ev[:5] - ref)) < 1e-4


@pytest.mark.parametrize("shift, drift", [(0.0, 0.0), (0.5j, 0.0), (0.0, 1.2)])
def test_refined_oscillator_levels(shift, drift):
    V = harmonic(shift, drift)
    levels = lowest_levels(V, BOX, 3000, 4)
    ref = [2 * n + 1 + drift**2 / 4 + shift for n in range(4)]
    got = sorted((r.energy for r in levels), key=lambda z: z.real)[:4]
    assert np.max(np.abs(np.array(got) - ref)) < 1e-7


def test_refine_methods_agree_and_fail_cleanly():
    V = harmonic()
    assert refine_eigenvalue(V, 3.01, BOX, method="matched").energy == pytest.approx(3.0, abs=1e-8)
    assert abs(matched_mismatch(V, 3.0, BOX)) < 1e-8
    well = BoundaryProblem.finite(0.0, math.pi)
    V0 = potential_from_callable(well.grid(2001), lambda x: 0.3 * np.cos(x) + 0j, lambda x: -0.3 * np.sin(x) + 0j)
    a = refine_eigenvalue(V0, 4.1, well, method="matched").energy
    b = refine_eigenvalue(V0, 4.1, well, method="shoot").energy
    assert a == pytest.approx(b, abs=1e-9)
    assert abs(shoot_mismatch(V0, a, well)) < 1e-9
    with pytest.raises(NoConvergence):
        refine_eigenvalue(V, 3.5, BOX, max_iter=1)
    with pytest.raises(ValueError):
        refine_eigenvalue(V, 3.0, BOX, method="newton")


def test_deflation_finds_second_root():
    V = harmonic()
    first = refine_eigenvalue(V, 3.01, BOX).energy
    second = refine_eigenvalue(V, 3.01, BOX, deflate=[first]).energy
    assert abs(second - 3.0) > 1.0


def test_stable_levels_keep_bound_state_and_drop_box_states():
    problem = BoundaryProblem.whole_line(12.0)

    def build(p):
        g = p.grid(int(round(200 * p.L)) * 2 + 1)
        return potential_from_callable(g, lambda x: -2 / np.cosh(x) ** 2, lambda x: 4 * np.tanh(x) / np.cosh(x) ** 2)

    levels = stable_levels(build, problem, 3000, 6)
    assert len(levels) == 1
    assert levels[0].energy == pytest.approx(-1.0, abs=1e-6)
    free = stable_levels(lambda p: zero_potential(p.grid(2001)), BoundaryProblem.half_line(15.0), 2000, 6)
    assert free == []


def test_defective_level_is_reported_once():
    spec = pipeline.run_spectrum(pipeline.job_from_example(9))
    assert spec["multiplicities"] == [2]
    assert spec["levels"][0] == pytest.approx(-1.0, abs=1e-6)


def test_compare_spectra():
    rep = compare_spectra([1.0, 2.0 + 1e-9j, 5.0], [1.0005, 2.0, 3.0], 3, 1e-3)
    assert [m[0] for m in rep.matched] == [1.0005, 2.0]
    assert rep.unmatched_expected == [3.0] and rep.unmatched_found == [5.0]
    assert not rep.passed and rep.real_spectrum_confirmed
    ok = compare_spectra([0.25, 1.0], [1.0, 0.25], 2, 1e-6, imag_tol=1e-12)
    assert ok.passed and ok.to_dict()["passed"]


def test_tail_diagnostics():
    problem = BoundaryProblem.half_line(200.0)
    g = problem.grid(20001)
    x = g.x
    decaying = GridFunction(g, np.sin(x) / (1 + x), np.cos(x) / (1 + x))
    assert fit_tail_exponent(decaying) == pytest.approx(1.0, abs=0.05)
    assert l2_tail_check(decaying, problem)
    flat = GridFunction(g, np.sin(x), np.cos(x))
    assert not l2_tail_check(flat, problem)
    # p = 0.4 grows the tail integral sublinearly yet fits below 1/2
    borderline = GridFunction(g, np.sin(x) / (1 + x) ** 0.4, np.cos(x) / (1 + x) ** 0.4)
    with pytest.raises(AmbiguousAsymptotics):
        l2_tail_check(borderline, problem)
    with pytest.raises(ValueError):
        l2_tail_check(decaying, BOX)
