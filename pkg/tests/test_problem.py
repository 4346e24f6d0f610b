import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))
import oracles

from susy2 import AmbiguousAsymptotics, GridMismatch
from susy2.problem import (
    Asymptotics,
    BoundaryProblem,
    ClosedForm,
    ClosedFormKind,
    Grid,
    GridFunction,
    ProblemKind,
    boundary_signature,
    classify_tail,
    make_closed_form,
    midpoint_values,
    potential_from_callable,
    schrodinger_residual,
    second_difference,
    solve_ivp,
    zero_potential,
)


def test_grid_rejects_even_or_tiny_node_counts():
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 10)
    with pytest.raises(ValueError):
        Grid(0.0, 1.0, 1)
    with pytest.raises(ValueError):
        Grid(1.0, 1.0, 11)


def test_grid_nodes_and_lookup():
    g = Grid(-2.0, 2.0, 9)
    assert g.h == pytest.approx(0.5)
    assert g.index_of(0.5) == 5
    assert g.is_symmetric()
    with pytest.raises(ValueError):
        g.index_of(0.3)
    with pytest.raises(ValueError):
        g.index_of(3.0)


def test_boundary_problem_constructors():
    fin = BoundaryProblem.finite(-1, 2)
    assert fin.kind is ProblemKind.FINITE_INTERVAL and fin.L is None
    assert fin.left_is_finite and fin.right_is_finite
    hl = BoundaryProblem.half_line(7.0)
    assert (hl.a, hl.b) == (0.0, 7.0) and hl.left_is_finite and not hl.right_is_finite
    wl = BoundaryProblem.whole_line(3.0).with_truncation(6.0)
    assert (wl.a, wl.b, wl.L) == (-6.0, 6.0, 6.0)
    assert fin.with_truncation(10.0) is fin


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind=ProblemKind.FINITE_INTERVAL, a=1.0, b=0.0),
        dict(kind=ProblemKind.HALF_LINE, a=1.0, b=5.0, L=5.0),
        dict(kind=ProblemKind.WHOLE_LINE, a=-5.0, b=5.0, L=None),
    ],
)
def test_boundary_problem_validation(kwargs):
    with pytest.raises(ValueError):
        BoundaryProblem(**kwargs)


def test_grid_function_shape_and_immutability():
    g = Grid(0.0, 1.0, 5)
    with pytest.raises(GridMismatch):
        GridFunction(g, np.zeros(4), np.zeros(5))
    f = GridFunction(g, np.arange(5.0), np.ones(5), energy=2)
    assert f.energy == 2 + 0j and f.values.dtype == complex
    with pytest.raises(ValueError):
        f.values[0] = 1.0
    assert (2 * f).values[4] == 8.0


@pytest.mark.parametrize("kind", list(ClosedFormKind))
def test_closed_forms_solve_the_free_equation(kind):
    cf = ClosedForm(kind, 0.8 + 0.3j, 0.2 - 0.1j)
    g = Grid(-3.0, 3.0, 2001)
    u = make_closed_form(cf, g)
    assert u.energy == cf.energy
    d2 = second_difference(u.values, g.h, 8)
    assert np.max(np.abs(-d2 - cf.energy * u.values[4:-4])) < 1e-9 * u.scale()
    assert np.max(np.abs(u.derivs - np.gradient(u.values, g.h, edge_order=2))) < 1e-4 * u.scale()


def test_second_difference_orders():
    g = Grid(0.0, 2 * math.pi, 201)
    f = np.sin(g.x)
    e4 = np.max(np.abs(second_difference(f, g.h, 4) + f[2:-2]))
    e8 = np.max(np.abs(second_difference(f, g.h, 8) + f[4:-4]))
    assert e4 < 1e-6 and e8 < 1e-11
    with pytest.raises(KeyError):
        second_difference(f, g.h, 6)


def test_midpoint_values_are_cubic_exact():
    g = Grid(-1.0, 1.0, 11)
    V = potential_from_callable(g, lambda x: x**3 - x, lambda x: 3 * x**2 - 1)
    mid = 0.5 * (g.x[:-1] + g.x[1:])
    assert np.allclose(midpoint_values(V), mid**3 - mid, atol=1e-14)


@pytest.mark.parametrize("k", [1.3, 0.7 + 0.4j, 2j])
def test_solve_ivp_matches_free_solution(k):
    g = Grid(-4.0, 4.0, 4001)
    x0 = g.x[1500]
    u = solve_ivp(zero_potential(g), k * k, x0, 0.3 - 0.2j, 1.0 + 0.5j)
    ref, dref = oracles.free_solution(k, g.x, x0, 0.3 - 0.2j, 1.0 + 0.5j)
    scale = np.max(np.abs(ref))
    assert np.max(np.abs(u.values - ref)) < 1e-9 * scale
    assert np.max(np.abs(u.derivs - dref)) < 1e-9 * max(scale, 1.0) * max(1.0, abs(k))
    assert not u.exact and u.energy == k * k


def test_solve_ivp_with_potential_has_small_residual():
    rng = np.random.default_rng(3)
    g = Grid(-5.0, 5.0, 2001)
    f, df = oracles.random_trig_potential(rng)
    V = potential_from_callable(g, f, df)
    u = solve_ivp(V, 1.5 + 0.5j, 0.0, 1.0, 0.0)
    assert schrodinger_residual(u, V, 1.5 + 0.5j) < 1e-5


def test_solve_ivp_overflow():
    g = Grid(0.0, 30.0, 301)
    with pytest.raises(OverflowError):
        solve_ivp(zero_potential(g), -100.0, 0.0, 1.0, 1.0, cap=1e20)


def test_classify_tail():
    g = Grid(0.0, 20.0, 2001)
    decay = make_closed_form(ClosedForm(ClosedFormKind.EXP_A, -0.5), g)
    grow = make_closed_form(ClosedForm(ClosedFormKind.EXP_A, 0.5 + 0.2j), g)
    osc = make_closed_form(ClosedForm(ClosedFormKind.SIN_K, 1.3), g)
    assert classify_tail(decay, "right") is Asymptotics.DECAYING
    assert classify_tail(decay, "left") is Asymptotics.GROWING
    assert classify_tail(grow, "right") is Asymptotics.GROWING
    assert classify_tail(osc, "right") is Asymptotics.OSCILLATING
    flat = GridFunction(g, np.ones(g.n), np.zeros(g.n))
    with pytest.raises(AmbiguousAsymptotics):
        classify_tail(flat, "right")


def test_boundary_signatures():
    fin = BoundaryProblem.finite(0.0, math.pi)
    g = fin.grid(501)
    s = boundary_signature(make_closed_form(ClosedForm(ClosedFormKind.SIN_K, 1.0), g), fin)
    assert s.vanishes_at_left and s.vanishes_at_right
    c = boundary_signature(make_closed_form(ClosedForm(ClosedFormKind.COS_KC, 1.0), g), fin)
    assert not c.vanishes_at_left and not c.vanishes_at_right
    wl = BoundaryProblem.whole_line(10.0)
    gw = wl.grid(1001)
    sech = make_closed_form(ClosedForm(ClosedFormKind.COSH_AC, 1.0), gw)
    sig = boundary_signature(sech, wl)
    assert sig.left_asymptotic is Asymptotics.GROWING and sig.right_asymptotic is Asymptotics.GROWING
    assert sig.to_dict()["right_asymptotic"] == "Growing"
