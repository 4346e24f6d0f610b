"""Independent numerical check of predicted spectra.

Dirichlet finite differences give a complex symmetric tridiagonal matrix whose
eigenvalues come from :func:`eig_complex_tridiagonal`; low-lying ones are then
polished by shooting (:func:`refine_eigenvalue`). On truncated unbounded
domains a level only counts as discrete if it survives doubling ``L``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import _kernels
from .classifier import SpectrumPrediction
from .darboux import TransformResult, second_order_map
from .errors import AmbiguousAsymptotics, NoConvergence, ResampleError
from .problem import (
    MAGNITUDE_CAP,
    BoundaryProblem,
    GridFunction,
    ProblemKind,
    midpoint_values,
    second_difference,
    solve_ivp,
)

RENORM_EVERY = 50
DEFAULT_LEVELS = 6
# Relative distance below which finite-difference eigenvalues form one cluster.
# A defective (Jordan block) level splits under an O(d) perturbation by
# O(sqrt(d)), so its copies land this close together.
CLUSTER_TOL = 5e-3
# second truncation ratio for real non-negative candidates (irrational on purpose)
SECOND_RATIO = math.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """``-d^2/dx^2 + V`` on ``n`` interior nodes with Dirichlet ends eliminated."""

    n: int
    diag: np.ndarray
    off: float
    h: float
    problem: BoundaryProblem
    x: np.ndarray

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + self.off * (np.eye(self.n, k=1) + np.eye(self.n, k=-1))


def _endpoint_safe(V: GridFunction):
    """Values/derivatives with a non-finite end node replaced by its neighbour.

    End nodes carry the Dirichlet zero, so the potential there never enters
    the stencil or the first RK4 stage (it multiplies ``u = 0``).
    """
    vals, ders = V.values.copy(), V.derivs.copy()
    for i, j in ((0, 1), (-1, -2)):
        if not (np.isfinite(vals[i]) and np.isfinite(ders[i])):
            vals[i] = vals[j]
            ders[i] = 0.0
    return vals, ders


def _sweep_arrays(V: GridFunction):
    vals, ders = _endpoint_safe(V)
    if not np.all(np.isfinite(vals)):
        raise ValueError("shooting needs a potential that is finite at every interior node")
    safe = GridFunction(V.grid, vals, ders)
    return np.ascontiguousarray(vals), np.ascontiguousarray(midpoint_values(safe))


def discretize(V: GridFunction, problem: BoundaryProblem, n: int) -> TridiagonalOperator:
    """Three-point Dirichlet discretization on ``n`` interior nodes of ``[a, b]``.

    ``V`` is resampled with the cubic Hermite interpolant through its stored
    values and derivatives when the grids differ.
    """
    if n < 16:
        raise ValueError("discretization needs n >= 16 interior nodes")
    h = (problem.b - problem.a) / (n + 1)
    x = problem.a + h * np.arange(1, n + 1)
    window = (V.x >= problem.a - 1e-12) & (V.x <= problem.b + 1e-12)
    inner = V.values[window][1:-1]
    if not np.all(np.isfinite(inner)):
        raise ResampleError("potential has flagged singular nodes inside the window")
    if V.grid.x0 > problem.a + 1e-12 or V.grid.x1 < problem.b - 1e-12:
        raise ResampleError("potential grid does not cover the problem interval")
    vals, ders = _endpoint_safe(V)
    if not (np.all(np.isfinite(vals)) and np.all(np.isfinite(ders))):
        raise ResampleError("potential has non-finite values")
    spline = CubicHermiteSpline(V.x, vals, ders)
    Vx = spline(x)
    return TridiagonalOperator(n, 2.0 / h**2 + Vx.astype(complex), -1.0 / h**2, h, problem, x)


def tridiagonal_eigenvalues(diag, sub, sup=None, max_iter: int = 100) -> np.ndarray:
    """All eigenvalues of a complex tridiagonal matrix, sorted by real part.

    A nonsymmetric tridiagonal is first brought to complex symmetric form by
    the diagonal similarity with off-diagonals ``sqrt(sub * sup)``.

    Raises
    ------
    NoConvergence
        An eigenvalue needed more than ``max_iter`` QR sweeps.
    """
    d = np.array(diag, dtype=complex)
    sub = np.asarray(sub, dtype=complex)
    e = sub.copy() if sup is None else np.sqrt(sub * np.asarray(sup, dtype=complex))
    if d.size == 1:
        return d
    status, where = _kernels.tridiag_qr(d, e, max_iter)
    if status != _kernels.OK:
        raise NoConvergence(f"QR iteration stalled at index {where} after {max_iter} sweeps")
    return d[np.lexsort((d.imag, d.real))]


def eig_complex_tridiagonal(T: TridiagonalOperator, max_iter: int = 100) -> np.ndarray:
    """Eigenvalues of a discretized operator, sorted by real part."""
    return tridiagonal_eigenvalues(T.diag, np.full(T.n - 1, T.off, dtype=complex), max_iter=max_iter)


def _check_span(V: GridFunction, problem: BoundaryProblem):
    tol = 1e-9 * max(1.0, problem.b - problem.a)
    if abs(V.grid.x0 - problem.a) > tol or abs(V.grid.x1 - problem.b) > tol:
        raise ValueError(f"potential grid [{V.grid.x0}, {V.grid.x1}] must span [{problem.a}, {problem.b}]")


def shoot_mismatch(V: GridFunction, E: complex, problem: BoundaryProblem, every: int = RENORM_EVERY) -> complex:
    """``u(b)`` for ``u(a) = 0, u'(a) = 1``, divided by the sup-norm of the trajectory.

    Zero exactly at the Dirichlet eigenvalues of the (truncated) problem.
    """
    _check_span(V, problem)
    vn, vm = _sweep_arrays(V)
    value, log_scale = _kernels.shoot_march(vn, vm, complex(E), V.grid.h, every)
    if not np.isfinite(value) or not np.isfinite(log_scale):
        raise OverflowError("shooting overflowed despite renormalization")
    return complex(value)


def _matching_node(V: GridFunction) -> int:
    """Bottom of the well: the node of smallest ``Re V`` in the middle 90% of the grid.

    Bound states are largest there, so the Wronskian is taken away from the
    forbidden regions where the growing mode swamps it.
    """
    n = V.grid.n
    lo, hi = max(n // 20, 1), n - max(n // 20, 1)
    re = V.values[lo:hi].real
    if not np.all(np.isfinite(re)) or np.ptp(re) == 0:
        return n // 2
    return lo + int(np.argmin(re))


def matched_mismatch(V: GridFunction, E: complex, problem: BoundaryProblem, node: int | None = None) -> complex:
    """Normalized Wronskian at an interior node of the Dirichlet solutions from ``a`` and from ``b``.

    Vanishes at the same energies as :func:`shoot_mismatch` but stays well
    conditioned for states that decay strongly towards both ends, where a
    single sweep from ``a`` loses the level to the growing mode.
    """
    _check_span(V, problem)
    n = V.grid.n
    vn, vm = _sweep_arrays(V)
    m = _matching_node(V) if node is None else node
    u = np.empty(n, dtype=complex)
    p = np.empty(n, dtype=complex)
    E = complex(E)
    h = V.grid.h
    st, where = _kernels.rk4_march(vn, vm, E, h, 0, m, 0j, 1 + 0j, MAGNITUDE_CAP, u, p)
    if st != _kernels.OK:
        raise OverflowError(f"left sweep overflowed at node {where}")
    uL, pL = u[m], p[m]
    st, where = _kernels.rk4_march(vn, vm, E, h, n - 1, m, 0j, -1 + 0j, MAGNITUDE_CAP, u, p)
    if st != _kernels.OK:
        raise OverflowError(f"right sweep overflowed at node {where}")
    uR, pR = u[m], p[m]
    scale = math.hypot(abs(uL), abs(pL)) * math.hypot(abs(uR), abs(pR))
    return complex((uL * pR - pL * uR) / scale)


@dataclass(frozen=True)
class RefinedLevel:
    energy: complex
    mismatch: float
    iterations: int
    multiplicity: int = 1


def refine_eigenvalue(
    V: GridFunction,
    E_guess: complex,
    problem: BoundaryProblem,
    tol: float = 1e-10,
    max_iter: int = 50,
    method: str = "matched",
    deflate=(),
) -> RefinedLevel:
    """Complex secant iteration on a boundary mismatch started at ``E_guess``.

    ``method`` is ``"matched"`` (two-sided sweep, :func:`matched_mismatch`)
    or ``"shoot"`` (single sweep, :func:`shoot_mismatch`). Roots listed in
    ``deflate`` are divided out, which finds the second copy of a near-double
    root.

    Raises
    ------
    NoConvergence
        No step below ``tol * (1 + |E|)`` within ``max_iter`` iterations.
    """
    if method == "matched":
        node = _matching_node(V)

        def mismatch(E):
            return matched_mismatch(V, E, problem, node)

    elif method == "shoot":

        def mismatch(E):
            return shoot_mismatch(V, E, problem)

    else:
        raise ValueError(f"unknown method {method!r}")
    if deflate:
        raw = mismatch
        roots = [complex(r) for r in deflate]

        def mismatch(E):
            return raw(E) / np.prod([E - r for r in roots])

    E0 = complex(E_guess)
    E1 = E0 + 1e-6 * (1 + abs(E0))
    f0 = mismatch(E0)
    f1 = mismatch(E1)
    for it in range(1, max_iter + 1):
        if f1 == f0:
            if f1 == 0:
                return RefinedLevel(E1, 0.0, it)
            raise NoConvergence(f"secant stalled at E={E1}")
        E2 = E1 - f1 * (E1 - E0) / (f1 - f0)
        E0, f0 = E1, f1
        E1 = E2
        f1 = mismatch(E1)
        if abs(E1 - E0) <= tol * (1 + abs(E1)):
            return RefinedLevel(E1, abs(f1), it)
    raise NoConvergence(f"secant did not converge from {E_guess} (last E={E1}, |mismatch|={abs(f1):.3g})")


@dataclass
class SpectrumReport:
    eigenvalues: list[complex]
    residuals: list[float]
    matched: list[tuple[complex, complex, float]]
    unmatched_expected: list[complex]
    unmatched_found: list[complex]
    real_spectrum_confirmed: bool
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.unmatched_expected and not self.unmatched_found

    def to_dict(self) -> dict:
        return {
            "eigenvalues": list(self.eigenvalues),
            "residuals": list(self.residuals),
            "matched": [{"expected": e, "found": f, "error": err} for e, f, err in self.matched],
            "unmatched_expected": list(self.unmatched_expected),
            "unmatched_found": list(self.unmatched_found),
            "real_spectrum_confirmed": self.real_spectrum_confirmed,
            "passed": self.passed,
            "notes": list(self.notes),
        }


def compare_spectra(
    found,
    prediction,
    k: int,
    tol: float,
    imag_tol: float | None = None,
    residuals=None,
) -> SpectrumReport:
    """Greedy nearest-neighbour pairing of the ``k`` lowest found and expected levels."""
    imag_tol = tol if imag_tol is None else imag_tol
    found = sorted((complex(z) for z in found), key=lambda z: (z.real, z.imag))
    if isinstance(prediction, SpectrumPrediction):
        expected = prediction.expected_levels(k)
    else:
        expected = sorted((complex(z) for z in prediction), key=lambda z: (z.real, z.imag))[:k]
    pool = found[:k]
    pairs = sorted(
        ((abs(e - f), i, j) for i, e in enumerate(expected) for j, f in enumerate(pool)),
        key=lambda t: t[0],
    )
    used_e, used_f, matched = set(), set(), []
    for dist, i, j in pairs:
        if dist > tol or i in used_e or j in used_f:
            continue
        used_e.add(i)
        used_f.add(j)
        matched.append((expected[i], pool[j], dist))
    matched.sort(key=lambda t: (t[0].real, t[0].imag))
    real_ok = all(abs(f.imag) <= imag_tol for _, f, _ in matched)
    return SpectrumReport(
        eigenvalues=found,
        residuals=[] if residuals is None else list(residuals),
        matched=matched,
        unmatched_expected=[e for i, e in enumerate(expected) if i not in used_e],
        unmatched_found=[f for j, f in enumerate(pool) if j not in used_f],
        real_spectrum_confirmed=real_ok,
    )


def phi_residual(phi: GridFunction, V: GridFunction, E: complex, order: int = 8, resolved: float = 1e-2) -> float:
    """``max |-D2 phi + (V - E) phi| / max|phi|`` over interior nodes.

    ``D2`` is the central stencil of the given ``order`` (8 by default, so
    the measured residual is not dominated by truncation error). Stencil
    windows touching a non-finite value of ``phi`` or ``V``, or a node with
    ``h^2 |V| > resolved`` (an endpoint singularity), are skipped.
    """
    m = order // 2
    core = slice(m, -m)
    with np.errstate(invalid="ignore"):
        bad = ~(np.isfinite(phi.values) & np.isfinite(V.values)) | (phi.grid.h**2 * np.abs(V.values) > resolved)
    window = np.convolve(bad.astype(float), np.ones(order + 1), mode="valid") > 0
    safe_phi = np.where(bad, 0.0, phi.values)
    d2 = second_difference(safe_phi, phi.grid.h, order)
    with np.errstate(invalid="ignore"):
        r = -d2 + (V.values[core] - E) * safe_phi[core]
    r = r[~window]
    if r.size == 0:
        return float("nan")
    good = phi.values[~bad]
    scale = float(np.max(np.abs(good))) if good.size else 0.0
    return float(np.max(np.abs(r)) / max(scale, np.finfo(float).tiny))


def unresolved_nodes(V: GridFunction, margin: int = 4, limit: float = 1.0) -> int:
    """Nodes at least ``margin`` away from both ends where ``h^2 |V| > limit``.

    Such spikes are narrower than the grid spacing, so neither finite
    differences nor shooting on this grid say anything about the operator.
    Endpoint singularities are excluded on purpose.
    """
    h2 = V.grid.h**2
    inner = V.values[margin : V.grid.n - margin]
    with np.errstate(invalid="ignore"):
        return int(np.count_nonzero(~np.isfinite(inner) | (h2 * np.abs(inner) > limit)))


def intertwining_residual(V0: GridFunction, result: TransformResult, E_samples) -> float:
    """Largest scaled residual of ``(h1 - E) L psi_E`` over the sampled energies."""
    grid = V0.grid
    x_mid = grid.x[grid.n // 2]
    worst = 0.0
    for E in E_samples:
        psi = solve_ivp(V0, E, x_mid, 1.0, 0.5 + 0.25j)
        phi = second_order_map(psi, E, result.spec, result.W)
        worst = max(worst, phi_residual(phi, result.V1, complex(E)))
    return worst


def _tail(phi: GridFunction, side: str):
    n = phi.grid.n
    half = n // 2
    if side == "right":
        return phi.x[half:], np.abs(phi.values[half:])
    x = -phi.x[: half + 1][::-1]
    return x, np.abs(phi.values[: half + 1][::-1])


def fit_tail_exponent(phi: GridFunction, side: str = "right") -> float:
    """Exponent ``p`` of a ``C / x**p`` fit to the envelope of ``|phi|`` over the outer half."""
    x, a = _tail(phi, side)
    keep = x > 0
    x, a = x[keep], a[keep]
    peaks = [i for i in range(1, len(a) - 1) if a[i] >= a[i - 1] and a[i] >= a[i + 1] and a[i] > 0]
    idx = np.array(peaks) if len(peaks) >= 3 else np.nonzero(a > 0)[0]
    slope = np.polyfit(np.log(x[idx]), np.log(a[idx]), 1)[0]
    return float(-slope)


def l2_tail_check(phi: GridFunction, problem: BoundaryProblem, growth_ratio: float = 0.8) -> bool:
    """Whether ``phi`` is square integrable judged from its truncated tail(s).

    Both the sublinear growth of ``int |phi|^2`` over the outer half and a
    power-law fit with ``p > 1/2`` must agree.

    Raises
    ------
    AmbiguousAsymptotics
        The two tail diagnostics disagree.
    """
    if problem.kind is ProblemKind.FINITE_INTERVAL:
        raise ValueError("tail check needs an unbounded problem")
    sides = ("right",) if problem.kind is ProblemKind.HALF_LINE else ("left", "right")
    verdicts = []
    for side in sides:
        x, a = _tail(phi, side)
        dens = a**2
        m = len(x) // 2
        first = np.trapezoid(dens[: m + 1], x[: m + 1])
        second = np.trapezoid(dens[m:], x[m:])
        sublinear = second < growth_ratio * first if first > 0 else True
        decaying = fit_tail_exponent(phi, side) > 0.5
        if sublinear != decaying:
            raise AmbiguousAsymptotics(
                f"{side} tail: integral ratio {second / first:.3f} and power fit disagree; increase L"
            )
        verdicts.append(decaying)
    return all(verdicts)


def lowest_levels(
    V: GridFunction,
    problem: BoundaryProblem,
    eig_n: int,
    k: int = DEFAULT_LEVELS,
    refine: bool = True,
    extra_complex: bool = True,
) -> list[RefinedLevel]:
    """The ``k`` lowest-real-part eigenvalues, polished by shooting when possible.

    With ``extra_complex`` every finite-difference eigenvalue with a sizeable
    imaginary part below the ``k``-th real part is kept as a candidate too.
    """
    T = discretize(V, problem, eig_n)
    ev = eig_complex_tridiagonal(T)
    picks = list(ev[:k])
    if extra_complex and len(ev) > k:
        cut = ev[k - 1].real + 10.0
        picks += [z for z in ev[k:] if z.real <= cut and abs(z.imag) > 1e-6 * (1 + abs(z))]
    out = []
    for group in _clusters(picks):
        if not refine:
            refined = [RefinedLevel(complex(z), float("nan"), 0) for z in group]
        else:
            refined = []
            for z in group:
                refined.append(_polish(V, z, problem, [r.energy for r in refined if r.iterations]))
        if len(group) == 1:
            out.append(refined[0])
            continue
        # a split cluster is one defective level; its centroid cancels the leading splitting error
        centre = complex(np.mean([r.energy for r in refined]))
        worst = max((r.mismatch for r in refined), default=float("nan"))
        its = max(r.iterations for r in refined)
        out.append(RefinedLevel(centre, worst, its, len(group)))
    out.sort(key=lambda r: (r.energy.real, r.energy.imag))
    return out


def _clusters(values) -> list[list[complex]]:
    groups: list[list[complex]] = []
    for z in sorted((complex(v) for v in values), key=lambda z: (z.real, z.imag)):
        for g in groups:
            if any(abs(z - w) <= CLUSTER_TOL * (1 + abs(w)) for w in g):
                g.append(z)
                break
        else:
            groups.append([z])
    return groups


def _polish(V: GridFunction, z: complex, problem: BoundaryProblem, deflate=()) -> RefinedLevel:
    try:
        lev = refine_eigenvalue(V, z, problem, deflate=deflate)
    except (NoConvergence, OverflowError):
        return RefinedLevel(complex(z), float("nan"), 0)
    if abs(lev.energy - z) > 1e-2 * (1 + abs(z)):
        return RefinedLevel(complex(z), float("nan"), 0)
    return lev


def stable_levels(
    build: Callable[[BoundaryProblem], GridFunction],
    problem: BoundaryProblem,
    eig_n: int,
    k: int = DEFAULT_LEVELS,
    tol: float = 1e-4,
) -> list[RefinedLevel]:
    """Levels at truncation ``L`` that move by at most ``tol`` when ``L`` doubles.

    ``build(problem)`` returns the potential on that problem's grid. Real
    non-negative candidates (where box states of the continuum live) must in
    addition survive ``L -> sqrt(2) L``, since for a nearly free tail every
    second box state reappears exactly after doubling; the irrational ratio
    avoids any such coincidence.
    """
    if problem.kind is ProblemKind.FINITE_INTERVAL:
        return lowest_levels(build(problem), problem, eig_n, k)
    L = problem.L
    base = lowest_levels(build(problem), problem, eig_n, k)
    wide = problem.with_truncation(2 * L)
    doubled = [r.energy for r in lowest_levels(build(wide), wide, 2 * eig_n, 3 * k)]
    keep = [r for r in base if doubled and min(abs(r.energy - d) for d in doubled) <= tol]
    suspects = [r for r in keep if r.energy.real >= 0 and abs(r.energy.imag) <= tol]
    if suspects:
        mid = problem.with_truncation(SECOND_RATIO * L)
        others = [r.energy for r in lowest_levels(build(mid), mid, int(SECOND_RATIO * eig_n), 3 * k)]
        keep = [
            r
            for r in keep
            if r not in suspects or (others and min(abs(r.energy - d) for d in others) <= tol)
        ]
    return keep


def seed_levels(
    V0: GridFunction | Callable[[BoundaryProblem], GridFunction],
    problem: BoundaryProblem,
    eig_n: int,
    k: int = DEFAULT_LEVELS,
    tol: float = 1e-4,
) -> list[complex]:
    """Discrete seed levels: the ``k`` lowest on a finite interval, the L-stable ones otherwise."""
    if problem.kind is ProblemKind.FINITE_INTERVAL:
        V = V0(problem) if callable(V0) else V0
        return [r.energy for r in lowest_levels(V, problem, eig_n, k)]
    build = V0 if callable(V0) else None
    if build is None:
        raise ValueError("unbounded seed problems need a builder taking the truncated problem")
    return [r.energy for r in stable_levels(build, problem, eig_n, k, tol)]


def continuum_note(problem: BoundaryProblem) -> str | None:
    if problem.kind is ProblemKind.FINITE_INTERVAL:
        return None
    return (
        "continuum points (e.g. removed or singular points inside it) are invisible to a truncated box; "
        "only L-stable discrete levels are checked"
    )


def dirichlet_reference(n_levels: int, a: float, b: float) -> list[float]:
    """Exact Dirichlet levels of ``-d^2/dx^2`` on ``[a, b]``."""
    width = b - a
    return [(math.pi * (j + 1) / width) ** 2 for j in range(n_levels)]
