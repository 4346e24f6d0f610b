"""First- and second-order Darboux (SUSY) transformations of potentials and solutions.

Second derivatives of transformation functions are always eliminated through
the seed equation ``u'' = (V0 - alpha) u``; the log-Wronskian second derivative
is formed as ``(W'' W - W'^2) / W^2`` so no complex logarithm is ever taken.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import GridMismatch, InconsistentSpec, KernelInput
from .problem import GridFunction, check_same_grid

REGULARITY_TOL = 1e-8
SINGULAR_GUARD = 1e-6


class Mode(str, enum.Enum):
    NON_CONFLUENT = "NonConfluent"
    CONFLUENT = "Confluent"


@dataclass(frozen=True, eq=False)
class TransformationSpec:
    """Everything that defines one second-order transformation.

    Non-confluent: ``u1``, ``u2`` with factorization constants ``alpha1 != alpha2``.
    Confluent: ``u`` at ``alpha`` with the integration constant ``c`` and anchor
    ``x_anchor`` of ``W_c(x) = c + int_{x_anchor}^x u^2``.
    """

    mode: Mode
    u1: GridFunction | None = None
    u2: GridFunction | None = None
    alpha1: complex | None = None
    alpha2: complex | None = None
    u: GridFunction | None = None
    alpha: complex | None = None
    c: complex = 0.0
    x_anchor: float = 0.0

    @classmethod
    def nonconfluent(cls, u1, u2, alpha1=None, alpha2=None) -> TransformationSpec:
        check_same_grid(u1, u2)
        alpha1 = u1.energy if alpha1 is None else complex(alpha1)
        alpha2 = u2.energy if alpha2 is None else complex(alpha2)
        if alpha1 is None or alpha2 is None:
            raise InconsistentSpec("factorization constants are required")
        if abs(alpha1 - alpha2) <= 1e-14 * (1 + abs(alpha1)):
            raise InconsistentSpec("non-confluent transformation needs alpha1 != alpha2")
        return cls(Mode.NON_CONFLUENT, u1=u1, u2=u2, alpha1=complex(alpha1), alpha2=complex(alpha2))

    @classmethod
    def confluent(cls, u, c, x_anchor=0.0, alpha=None) -> TransformationSpec:
        alpha = u.energy if alpha is None else complex(alpha)
        if alpha is None:
            raise InconsistentSpec("factorization constant is required")
        u.grid.index_of(x_anchor)
        return cls(Mode.CONFLUENT, u=u, alpha=complex(alpha), c=complex(c), x_anchor=float(x_anchor))

    @property
    def grid(self):
        return (self.u1 if self.mode is Mode.NON_CONFLUENT else self.u).grid

    @property
    def functions(self) -> list[GridFunction]:
        if self.mode is Mode.NON_CONFLUENT:
            return [self.u1, self.u2]
        return [self.u]

    @property
    def alphas(self) -> list[complex]:
        if self.mode is Mode.NON_CONFLUENT:
            return [self.alpha1, self.alpha2]
        return [self.alpha]

    def describe(self) -> dict:
        if self.mode is Mode.NON_CONFLUENT:
            return {
                "mode": self.mode.value,
                "alpha1": self.alpha1,
                "alpha2": self.alpha2,
                "u1": self.u1.label,
                "u2": self.u2.label,
            }
        return {
            "mode": self.mode.value,
            "alpha": self.alpha,
            "c": self.c,
            "x_anchor": self.x_anchor,
            "u": self.u.label,
        }


@dataclass(frozen=True, eq=False)
class TransformResult:
    V1: GridFunction
    W: GridFunction
    spec: TransformationSpec
    regular: bool
    min_wronskian_ratio: float = float("nan")


def wronskian2(u: GridFunction, v: GridFunction) -> GridFunction:
    """``W(u, v) = u v' - u' v``.

    With energies attached to both arguments the derivative is exact,
    ``W' = (E_u - E_v) u v``; otherwise it is a second-order finite difference.
    """
    grid = check_same_grid(u, v)
    W = u.values * v.derivs - u.derivs * v.values
    if u.energy is not None and v.energy is not None:
        dW = (u.energy - v.energy) * u.values * v.values
    else:
        dW = np.gradient(W, grid.h, edge_order=2)
    return GridFunction(grid, W, dW)


def _log_derivative(u: GridFunction, guard: float):
    peak = u.scale()
    singular = np.abs(u.values) <= guard * peak
    with np.errstate(divide="ignore", invalid="ignore"):
        w = u.derivs / u.values
    w[singular] = np.nan
    return w, singular


def first_order_potential(V0: GridFunction, u1: GridFunction, guard: float = SINGULAR_GUARD) -> GridFunction:
    """Intermediate potential ``V0 - 2 w'`` with ``w = u1'/u1``.

    Uses ``w' = V0 - alpha1 - w^2``. Nodes where ``|u1| <= guard * max|u1|``
    come back as NaN (singular points of the intermediate potential).
    """
    grid = check_same_grid(V0, u1)
    if u1.energy is None:
        raise InconsistentSpec("u1 must carry its factorization constant")
    w, _ = _log_derivative(u1, guard)
    dw = V0.values - u1.energy - w * w
    Vt = -V0.values + 2 * u1.energy + 2 * w * w
    dVt = -V0.derivs + 4 * w * dw
    return GridFunction(grid, Vt, dVt, label="intermediate")


def first_order_map(
    psi: GridFunction, u1: GridFunction, V0: GridFunction, guard: float = SINGULAR_GUARD
) -> GridFunction:
    """``-psi' + w psi``, a solution of the intermediate equation at ``psi.energy``."""
    grid = check_same_grid(psi, u1, V0)
    if psi.energy is None or u1.energy is None:
        raise InconsistentSpec("psi and u1 must carry energies")
    w, _ = _log_derivative(u1, guard)
    dw = V0.values - u1.energy - w * w
    values = -psi.derivs + w * psi.values
    derivs = -(V0.values - psi.energy) * psi.values + dw * psi.values + w * psi.derivs
    return GridFunction(grid, values, derivs, energy=psi.energy, exact=psi.exact)


def confluent_wc(u: GridFunction, c: complex, x_anchor: float) -> GridFunction:
    """``W_c(x) = c + int_{x_anchor}^x u^2``; ``W_c' = u^2``.

    Cells are integrated with the cubic Hermite rule (end-corrected trapezoid)
    using ``(u^2)' = 2 u u'``. Its error is a smooth function of ``x``, unlike
    cumulative Simpson whose even/odd node pattern shows up in finite
    differences of ``V1``.
    """
    grid = u.grid
    i0 = grid.index_of(x_anchor)
    h = grid.h
    f = u.values**2
    df = 2 * u.values * u.derivs
    cells = 0.5 * h * (f[:-1] + f[1:]) + h * h / 12 * (df[:-1] - df[1:])
    # accumulate outwards from the anchor so large tails never cancel against small values
    cum = np.zeros(grid.n, dtype=complex)
    cum[i0 + 1 :] = np.cumsum(cells[i0:])
    cum[:i0] = -np.cumsum(cells[:i0][::-1])[::-1]
    return GridFunction(grid, complex(c) + cum, f)


def _wronskian_of(spec: TransformationSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """W, W', W'' of a transformation (before the third derivative is needed)."""
    if spec.mode is Mode.NON_CONFLUENT:
        u1, u2 = spec.u1, spec.u2
        delta = spec.alpha1 - spec.alpha2
        W = u1.values * u2.derivs - u1.derivs * u2.values
        dW = delta * u1.values * u2.values
        d2W = delta * (u1.derivs * u2.values + u1.values * u2.derivs)
        return W, dW, d2W
    u = spec.u
    Wc = confluent_wc(u, spec.c, spec.x_anchor).values
    return Wc, u.values**2, 2 * u.values * u.derivs


def _regularity(spec: TransformationSpec, W: np.ndarray, tol: float) -> float:
    """Smallest ratio of ``|W|`` to the magnitude of the terms it is built from (open interval)."""
    if spec.mode is Mode.NON_CONFLUENT:
        u1, u2 = spec.u1, spec.u2
        size = np.abs(u1.values * u2.derivs) + np.abs(u1.derivs * u2.values)
    else:
        u = spec.u
        mass = np.abs(u.values) ** 2
        x = u.grid.x
        cum = cumulative_simpson(mass, x=x, initial=0.0)
        size = abs(spec.c) + np.abs(cum - cum[u.grid.index_of(spec.x_anchor)])
    size = size + 1e-300
    inner = slice(1, -1)
    return float(np.min(np.abs(W[inner]) / size[inner]))


def second_order_potential(
    V0: GridFunction, spec: TransformationSpec, tol: float = REGULARITY_TOL
) -> TransformResult:
    """``V1 = V0 - 2 [log W]''`` with its exact derivative.

    ``regular`` is False when ``W`` (numerically) vanishes inside the open
    interval: ``|W|`` must exceed ``tol`` times the size of the products it is
    the difference of.
    """
    grid = check_same_grid(V0, *spec.functions)
    # seed functions with infinite endpoint values (kernel images) give NaN there, not warnings
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        W, dW, d2W = _wronskian_of(spec)
        if spec.mode is Mode.NON_CONFLUENT:
            u1, u2 = spec.u1, spec.u2
            delta = spec.alpha1 - spec.alpha2
            d3W = delta * (
                (2 * V0.values - spec.alpha1 - spec.alpha2) * u1.values * u2.values
                + 2 * u1.derivs * u2.derivs
            )
        else:
            u = spec.u
            d3W = 2 * u.derivs**2 + 2 * (V0.values - spec.alpha) * u.values**2
        r1 = dW / W
        r2 = d2W / W
        r3 = d3W / W
        logpp = r2 - r1 * r1
        dlogpp = r3 - r2 * r1 - 2 * r1 * logpp
    V1 = GridFunction(grid, V0.values - 2 * logpp, V0.derivs - 2 * dlogpp, label="V1")
    ratio = _regularity(spec, W, tol)
    regular = bool(np.all(np.isfinite(V1.values[1:-1])) and ratio > tol)
    return TransformResult(V1, GridFunction(grid, W, dW, label="W"), spec, regular, ratio)


def _same_energy(E, alpha) -> bool:
    return abs(E - alpha) <= 1e-12 * (1 + abs(alpha))


def _independent(u: GridFunction, psi: GridFunction) -> bool:
    W = u.values * psi.derivs - u.derivs * psi.values
    size = np.abs(u.values * psi.derivs) + np.abs(u.derivs * psi.values)
    return float(np.max(np.abs(W))) > 1e-8 * float(np.max(size))


def apply_intertwiner(psi: GridFunction, E: complex, spec: TransformationSpec, W: GridFunction, form: int = 1):
    """Apply the second-order intertwiner to a seed solution at energy ``E``.

    Non-confluent, ``form=1``: ``(E - a2) psi + (a1 - a2) W(u2, psi)/W u1``;
    ``form=2``: ``(E - a1) psi + (a1 - a2) W(u1, psi)/W u2``. Confluent:
    ``(a - E) psi + W(psi, u)/W_c u``. The two non-confluent forms agree for
    any solution ``psi``; at ``E = alpha`` they annihilate the matching
    transformation function.
    """
    # zeros of W (singular transforms) propagate as NaN/inf without warnings
    with np.errstate(divide="ignore", invalid="ignore"):
        return _intertwine(psi, E, spec, W, form)


def _intertwine(psi, E, spec, W, form):
    grid = check_same_grid(psi, W, *spec.functions)
    p, dp = psi.values, psi.derivs
    w, dw = W.values, W.derivs
    if spec.mode is Mode.NON_CONFLUENT:
        a1, a2 = spec.alpha1, spec.alpha2
        if form == 1:
            ua, ub, aa, ab = spec.u1, spec.u2, a1, a2
            coef = a1 - a2
        else:
            ua, ub, aa, ab = spec.u2, spec.u1, a2, a1
            coef = a1 - a2
        # form 1: (E - a2) psi + coef W(u2, psi)/W u1 ; form 2: (E - a1) psi + coef W(u1, psi)/W u2
        Wb = ub.values * dp - ub.derivs * p
        dWb = (ab - E) * ub.values * p
        ratio = Wb / w
        dratio = dWb / w - Wb * dw / w**2
        values = (E - ab) * p + coef * ratio * ua.values
        derivs = (E - ab) * dp + coef * (dratio * ua.values + ratio * ua.derivs)
        return GridFunction(grid, values, derivs, energy=E, exact=psi.exact)
    u, a = spec.u, spec.alpha
    Wp = p * u.derivs - dp * u.values
    dWp = (E - a) * p * u.values
    ratio = Wp / w
    dratio = dWp / w - Wp * dw / w**2
    values = (a - E) * p + ratio * u.values
    derivs = (a - E) * dp + dratio * u.values + ratio * u.derivs
    return GridFunction(grid, values, derivs, energy=E, exact=psi.exact)


def _quotient(num: GridFunction, W: GridFunction, energy) -> GridFunction:
    with np.errstate(divide="ignore", invalid="ignore"):
        values = num.values / W.values
        derivs = (num.derivs * W.values - num.values * W.derivs) / W.values**2
    return GridFunction(W.grid, values, derivs, energy=energy, exact=num.exact)


def second_order_map(psi: GridFunction, E: complex, spec: TransformationSpec, W: GridFunction) -> GridFunction:
    """Image of a seed solution under the second-order transformation.

    For ``E`` away from the factorization constants this is the intertwiner
    (form 1). At ``E = alpha1`` (``alpha2``) with ``psi`` independent of ``u1``
    (``u2``) the image is ``u2/W`` (``u1/W``); in the confluent case at
    ``E = alpha`` it is ``u/W_c``. Constant factors are dropped.

    Raises
    ------
    KernelInput
        ``psi`` is proportional to the transformation function at its own
        energy; the zero image is attached to the exception.
    """
    check_same_grid(psi, W, *spec.functions)
    E = complex(E)
    if spec.mode is Mode.NON_CONFLUENT:
        for alpha, own, other in ((spec.alpha1, spec.u1, spec.u2), (spec.alpha2, spec.u2, spec.u1)):
            if _same_energy(E, alpha):
                if not _independent(own, psi):
                    image = apply_intertwiner(psi, E, spec, W)
                    raise KernelInput("psi lies in the kernel of the intertwiner", image=image)
                return _quotient(other, W, alpha)
        return apply_intertwiner(psi, E, spec, W)
    if _same_energy(E, spec.alpha):
        if not _independent(spec.u, psi):
            image = apply_intertwiner(psi, E, spec, W)
            raise KernelInput("psi lies in the kernel of the intertwiner", image=image)
        return _quotient(spec.u, W, spec.alpha)
    return apply_intertwiner(psi, E, spec, W)


def kernel_images(result: TransformResult) -> list[GridFunction]:
    """Solutions of the transformed equation at the factorization constants."""
    spec, W = result.spec, result.W
    if spec.mode is Mode.NON_CONFLUENT:
        return [_quotient(spec.u2, W, spec.alpha1), _quotient(spec.u1, W, spec.alpha2)]
    return [_quotient(spec.u, W, spec.alpha)]


def reverse_transform(result: TransformResult, tol: float = REGULARITY_TOL) -> GridFunction:
    """Undo a transformation: transform ``V1`` with the kernel images, giving back ``V0``."""
    if not result.regular:
        raise InconsistentSpec("cannot reverse a singular transformation (W vanishes inside the interval)")
    spec = result.spec
    V1 = result.V1
    if spec.mode is Mode.NON_CONFLUENT:
        phi1, phi2 = kernel_images(result)
        back = TransformationSpec.nonconfluent(phi1, phi2, spec.alpha1, spec.alpha2)
    else:
        (phi,) = kernel_images(result)
        i0 = spec.u.grid.index_of(spec.x_anchor)
        back = TransformationSpec.confluent(phi, -1.0 / result.W.values[i0], spec.x_anchor, spec.alpha)
    res = second_order_potential(V1, back, tol)
    if not res.regular:
        raise InconsistentSpec("reverse transformation is singular")
    return res.V1
