"""Boundary problems, grid functions and solutions of ``-u'' + V u = E u``.

Everything here is complex valued. A :class:`GridFunction` always carries its
first derivative next to its values; for closed forms the derivative is
analytic, for integrated solutions it is the co-evolved ``u'`` of the RK4
system. Nothing in the package differentiates a solution numerically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import AmbiguousAsymptotics, GridMismatch

Energy = complex

MAGNITUDE_CAP = 1e150
CLOSED_FORM_VANISH_TOL = 1e-9
IVP_VANISH_TOL = 1e-6
DEFAULT_L = 15.0


class ProblemKind(str, enum.Enum):
    FINITE_INTERVAL = "FiniteInterval"
    HALF_LINE = "HalfLine"
    WHOLE_LINE = "WholeLine"


class PotentialClass(str, enum.Enum):
    CONFINING = "Confining"
    SCATTERING = "Scattering"
    GENERIC = "Generic"


@dataclass(frozen=True)
class Grid:
    """Uniform grid with an odd number of nodes ``n`` on ``[x0, x1]``."""

    x0: float
    x1: float
    n: int

    def __post_init__(self):
        if not self.x1 > self.x0:
            raise ValueError(f"grid needs x0 < x1, got [{self.x0}, {self.x1}]")
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"grid needs an odd node count >= 3, got {self.n}")

    @property
    def h(self) -> float:
        return (self.x1 - self.x0) / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.n)

    def index_of(self, x: float) -> int:
        """Index of the node at ``x``; raises if ``x`` is not (numerically) a node."""
        i = int(round((x - self.x0) / self.h))
        if i < 0 or i >= self.n or abs(self.x0 + i * self.h - x) > 1e-9 * max(1.0, abs(x)):
            raise ValueError(f"x={x} is not a node of {self}")
        return i

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return abs(self.x0 + self.x1) <= tol * max(1.0, abs(self.x0))


@dataclass(frozen=True)
class BoundaryProblem:
    """One of the three Dirichlet problems, truncated at ``L`` when unbounded.

    ``a``/``b`` are the (possibly truncated) endpoints actually used on the grid.
    """

    kind: ProblemKind
    a: float
    b: float
    L: float | None = None
    potential_class: PotentialClass = PotentialClass.GENERIC

    def __post_init__(self):
        object.__setattr__(self, "kind", ProblemKind(self.kind))
        object.__setattr__(self, "potential_class", PotentialClass(self.potential_class))
        if not self.a < self.b:
            raise ValueError(f"boundary problem needs a < b, got a={self.a}, b={self.b}")
        if self.kind is ProblemKind.HALF_LINE and self.a != 0.0:
            raise ValueError("half-line problems start at a = 0")
        if self.kind is not ProblemKind.FINITE_INTERVAL:
            if self.L is None or self.L <= 0:
                raise ValueError("unbounded problems need a positive truncation L")

    @classmethod
    def finite(cls, a: float, b: float, potential_class=PotentialClass.GENERIC) -> BoundaryProblem:
        return cls(ProblemKind.FINITE_INTERVAL, float(a), float(b), None, potential_class)

    @classmethod
    def half_line(cls, L: float = DEFAULT_L, potential_class=PotentialClass.SCATTERING) -> BoundaryProblem:
        return cls(ProblemKind.HALF_LINE, 0.0, float(L), float(L), potential_class)

    @classmethod
    def whole_line(cls, L: float = DEFAULT_L, potential_class=PotentialClass.SCATTERING) -> BoundaryProblem:
        return cls(ProblemKind.WHOLE_LINE, -float(L), float(L), float(L), potential_class)

    def with_truncation(self, L: float) -> BoundaryProblem:
        """Same problem with a different truncation half-width."""
        if self.kind is ProblemKind.HALF_LINE:
            return BoundaryProblem.half_line(L, self.potential_class)
        if self.kind is ProblemKind.WHOLE_LINE:
            return BoundaryProblem.whole_line(L, self.potential_class)
        return self

    @property
    def left_is_finite(self) -> bool:
        return self.kind is not ProblemKind.WHOLE_LINE

    @property
    def right_is_finite(self) -> bool:
        return self.kind is ProblemKind.FINITE_INTERVAL

    def grid(self, n: int) -> Grid:
        return Grid(self.a, self.b, n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples of a function and its first derivative on a grid.

    ``energy`` is set when the function solves the seed equation at that energy.
    ``exact`` is False for integrator output (looser vanishing tolerances apply).
    """

    grid: Grid
    values: np.ndarray
    derivs: np.ndarray
    energy: complex | None = None
    exact: bool = True
    label: str = field(default="", compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        derivs = np.asarray(self.derivs, dtype=complex)
        if values.shape != (self.grid.n,) or derivs.shape != (self.grid.n,):
            raise GridMismatch(
                f"values/derivs must have length {self.grid.n}, got {values.shape} and {derivs.shape}"
            )
        values.setflags(write=False)
        derivs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "derivs", derivs)
        if self.energy is not None:
            object.__setattr__(self, "energy", complex(self.energy))

    @classmethod
    def zeros(cls, grid: Grid) -> GridFunction:
        return cls(grid, np.zeros(grid.n), np.zeros(grid.n))

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def scale(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __mul__(self, factor) -> GridFunction:
        return GridFunction(self.grid, self.values * factor, self.derivs * factor, self.energy, self.exact)

    __rmul__ = __mul__


def check_same_grid(*fs: GridFunction) -> Grid:
    grid = fs[0].grid
    for f in fs[1:]:
        if f.grid != grid:
            raise GridMismatch(f"grid functions live on different grids: {grid} vs {f.grid}")
    return grid


class ClosedFormKind(str, enum.Enum):
    SIN_K = "SinK"
    COS_KC = "CosKC"
    SINH_A = "SinhA"
    COSH_AC = "CoshAC"
    EXP_A = "ExpA"


@dataclass(frozen=True)
class ClosedForm:
    """Elementary free-particle solution.

    ``SinK``/``CosKC`` are ``sin(kx + c)``/``cos(kx + c)`` at ``E = k**2``;
    ``SinhA``/``CoshAC``/``ExpA`` are ``sinh(ax + c)``/``cosh(ax + c)``/``exp(ax + c)``
    at ``E = -a**2``. ``param`` is ``k`` or ``a``; ``c`` is a phase offset.
    """

    kind: ClosedFormKind
    param: complex
    c: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ClosedFormKind(self.kind))
        object.__setattr__(self, "param", complex(self.param))
        object.__setattr__(self, "c", complex(self.c))

    @property
    def energy(self) -> complex:
        if self.kind in (ClosedFormKind.SIN_K, ClosedFormKind.COS_KC):
            return self.param**2
        return -(self.param**2)

    def evaluate(self, x) -> tuple[np.ndarray, np.ndarray]:
        z = self.param * np.asarray(x, dtype=complex) + self.c
        q = self.param
        kind = self.kind
        if kind is ClosedFormKind.SIN_K:
            return np.sin(z), q * np.cos(z)
        if kind is ClosedFormKind.COS_KC:
            return np.cos(z), -q * np.sin(z)
        if kind is ClosedFormKind.SINH_A:
            return np.sinh(z), q * np.cosh(z)
        if kind is ClosedFormKind.COSH_AC:
            return np.cosh(z), q * np.sinh(z)
        ez = np.exp(z)
        return ez, q * ez


def make_closed_form(kind: ClosedForm, grid: Grid) -> GridFunction:
    """Sample a closed-form solution with its analytic derivative; ``.energy`` is set."""
    values, derivs = kind.evaluate(grid.x)
    return GridFunction(grid, values, derivs, energy=kind.energy, exact=True, label=kind.kind.value)


def zero_potential(grid: Grid) -> GridFunction:
    return GridFunction.zeros(grid)


def potential_from_callable(grid: Grid, f, df) -> GridFunction:
    """Potential sampled from callables for V and V'."""
    x = grid.x
    return GridFunction(grid, f(x), df(x))


def midpoint_values(V: GridFunction) -> np.ndarray:
    """Cubic Hermite estimate of V at every cell midpoint (uses the stored V')."""
    v, dv, h = V.values, V.derivs, V.grid.h
    return 0.5 * (v[:-1] + v[1:]) + h * (dv[:-1] - dv[1:]) / 8.0


def solve_ivp(
    V: GridFunction,
    E: complex,
    x_start: float,
    u0: complex,
    du0: complex,
    cap: float = MAGNITUDE_CAP,
) -> GridFunction:
    """Solve ``-u'' + V u = E u`` on V's grid with fixed-step RK4 in both directions.

    Raises
    ------
    OverflowError
        If ``|u|`` exceeds ``cap`` anywhere (exponential blow-up).
    """
    grid = V.grid
    i0 = grid.index_of(x_start)
    vn = np.ascontiguousarray(V.values)
    vm = np.ascontiguousarray(midpoint_values(V))
    u = np.empty(grid.n, dtype=complex)
    p = np.empty(grid.n, dtype=complex)
    E = complex(E)
    for stop in (grid.n - 1, 0):
        if stop == i0:
            u[i0], p[i0] = u0, du0
            continue
        status, where = _kernels.rk4_march(vn, vm, E, grid.h, i0, stop, complex(u0), complex(du0), cap, u, p)
        if status == _kernels.OVERFLOW:
            raise OverflowError(f"|u| exceeded {cap:g} at x={grid.x0 + where * grid.h:.6g}")
    return GridFunction(grid, u, p, energy=E, exact=False, label="ivp")


_CENTRAL_D2 = {
    4: np.array([-1, 16, -30, 16, -1]) / 12,
    8: np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560]),
}


def second_difference(values: np.ndarray, h: float, order: int = 4) -> np.ndarray:
    """Central second derivative of the given order, on nodes ``m..n-1-m`` with ``m = order // 2``.

    Order 4 is the five-point stencil.
    """
    w = _CENTRAL_D2[order]
    m = len(w) // 2
    f = np.asarray(values)
    n = len(f)
    out = np.zeros(n - 2 * m, dtype=f.dtype)
    for j, c in enumerate(w):
        out += c * f[j : n - 2 * m + j]
    return out / (h * h)


def schrodinger_residual(u: GridFunction, V: GridFunction, E: complex) -> float:
    """``max |-D2 u + (V - E) u| / (1 + |u|)`` over interior nodes."""
    check_same_grid(u, V)
    d2 = second_difference(u.values, u.grid.h)
    core = slice(2, -2)
    r = -d2 + (V.values[core] - E) * u.values[core]
    return float(np.max(np.abs(r) / (1.0 + np.abs(u.values[core]))))


def moment_integral(V: GridFunction, problem: BoundaryProblem) -> float:
    """Truncated proxy of ``int x |V| dx`` over the problem's grid."""
    x = V.grid.x
    return float(np.trapezoid(np.abs(x * V.values), x))


class Asymptotics(str, enum.Enum):
    DECAYING = "Decaying"
    GROWING = "Growing"
    OSCILLATING = "Oscillating"


@dataclass(frozen=True)
class Signature:
    """Endpoint behaviour of a solution.

    Finite endpoints report vanishing flags; truncated infinities report an
    :class:`Asymptotics` class (and count as vanishing iff decaying).
    """

    vanishes_at_left: bool
    vanishes_at_right: bool
    left_asymptotic: Asymptotics | None = None
    right_asymptotic: Asymptotics | None = None

    def to_dict(self) -> dict:
        return {
            "vanishes_at_left": self.vanishes_at_left,
            "vanishes_at_right": self.vanishes_at_right,
            "left_asymptotic": None if self.left_asymptotic is None else self.left_asymptotic.value,
            "right_asymptotic": None if self.right_asymptotic is None else self.right_asymptotic.value,
        }


def vanish_tol(u: GridFunction) -> float:
    return CLOSED_FORM_VANISH_TOL if u.exact else IVP_VANISH_TOL


def classify_tail(
    u: GridFunction,
    side: str,
    fraction: float = 0.1,
    dead_band: float = 0.05,
) -> Asymptotics:
    """Asymptotic class of ``u`` over the outer ``fraction`` of the grid on ``side``.

    The envelope ``sqrt(|u|^2 + |u'|^2/|E|)`` is constant for free oscillations
    and exponential otherwise, so a partial oscillation period is not mistaken
    for growth. Without an energy the bare ``|u|`` is used.
    """
    n = u.grid.n
    w = max(5, int(round(fraction * n)))
    if side == "right":
        sl = slice(n - w, n)
        xs = u.x[sl] - u.x[n - w]
        vals, ders = u.values[sl], u.derivs[sl]
    else:
        sl = slice(0, w)
        xs = u.x[w - 1] - u.x[sl]
        vals, ders = u.values[sl][::-1], u.derivs[sl][::-1]
        xs = xs[::-1]
    env2 = np.abs(vals) ** 2
    if u.energy is not None and abs(u.energy) > 1e-14:
        env2 = env2 + np.abs(ders) ** 2 / abs(u.energy)
    tiny = np.finfo(float).tiny
    log_env = 0.5 * np.log(env2 + tiny)
    slope = np.polyfit(xs, log_env, 1)[0]
    trend = slope * (xs[-1] - xs[0])
    if trend > math.log1p(dead_band):
        return Asymptotics.GROWING
    if trend < -math.log1p(dead_band):
        return Asymptotics.DECAYING
    phase = np.unwrap(np.angle(vals))
    ripple = np.ptp(np.abs(vals)) / max(np.max(np.abs(vals)), tiny)
    if np.ptp(phase) >= math.pi / 2 or ripple > dead_band:
        return Asymptotics.OSCILLATING
    raise AmbiguousAsymptotics(
        f"growth ratio {math.exp(trend):.4f} within dead band on the {side} tail; increase L"
    )


def boundary_signature(u: GridFunction, problem: BoundaryProblem, tol: float | None = None) -> Signature:
    """Vanishing pattern / asymptotic class of ``u`` at both ends of ``problem``."""
    tol = vanish_tol(u) if tol is None else tol
    peak = u.scale()
    left_class = right_class = None
    if problem.left_is_finite:
        left = abs(u.values[0]) <= tol * peak
    else:
        left_class = classify_tail(u, "left")
        left = left_class is Asymptotics.DECAYING
    if problem.right_is_finite:
        right = abs(u.values[-1]) <= tol * peak
    else:
        right_class = classify_tail(u, "right")
        right = right_class is Asymptotics.DECAYING
    return Signature(bool(left), bool(right), left_class, right_class)
