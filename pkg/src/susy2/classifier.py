"""Reducible/irreducible case analysis of second-order transformations.

``classify`` matches the boundary behaviour of the transformation functions
against the case tables for the three Dirichlet problems and predicts how the
spectrum changes. Eigenfunction and ground-state tests are numerical: a
factorization constant counts as a seed level when it lies within
``LEVEL_TOL`` of one of the supplied seed levels.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .darboux import Mode, TransformationSpec, second_order_potential
from .errors import AsymmetricGrid, InconsistentSpec
from .problem import (
    Asymptotics,
    BoundaryProblem,
    GridFunction,
    ProblemKind,
    Signature,
    boundary_signature,
    vanish_tol,
    zero_potential,
)

LEVEL_TOL = 1e-6
REAL_TOL = 1e-12
ZERO_TOL = 1e-6
PT_TOL = 1e-8


class CaseLabel(str, enum.Enum):
    FIN_a = "FIN_a"
    FIN_b = "FIN_b"
    FIN_c = "FIN_c"
    FIN_d = "FIN_d"
    FIN_confluent = "FIN_confluent"
    HL_a = "HL_a"
    HL_b = "HL_b"
    HL_c = "HL_c"
    HL_d = "HL_d"
    HL_confluent = "HL_confluent"
    WL_nonconfluent = "WL_nonconfluent"
    WL_confluent = "WL_confluent"


@dataclass
class ZeroReport:
    count: int
    locations: list[float]
    endpoint_zeros: dict[str, bool]

    @property
    def total(self) -> int:
        """Zeros on the closed interval, endpoints (or limits at infinity) included."""
        return self.count + sum(bool(v) for v in self.endpoint_zeros.values())


def _hermite_cubic(u0, u1, d0, d1, h):
    """Coefficients (highest first) of the cubic in s in [0, h] matching values and slopes."""
    c0 = u0
    c1 = d0
    c2 = (3 * (u1 - u0) / h - 2 * d0 - d1) / h
    c3 = (d0 + d1 - 2 * (u1 - u0) / h) / (h * h)
    return np.array([c3, c2, c1, c0])


def _closest_approach(u: GridFunction, i: int):
    """Smallest |u| on the cells adjacent to node i, from the Hermite cubic; (x, |u|)."""
    best = (u.x[i], abs(u.values[i]))
    h = u.grid.h
    for j in (i - 1, i):
        if j < 0 or j + 1 >= u.grid.n:
            continue
        coeffs = _hermite_cubic(u.values[j], u.values[j + 1], u.derivs[j], u.derivs[j + 1], h)
        if coeffs[0] == 0 and coeffs[1] == 0 and coeffs[2] == 0:
            continue
        for r in np.roots(np.trim_zeros(coeffs, "f")):
            s = r.real
            if -1e-9 * h <= s <= h * (1 + 1e-9):
                m = abs(np.polyval(coeffs, s))
                if m < best[1]:
                    best = (u.x[j] + s, m)
    return best


def count_zeros(u: GridFunction, problem: BoundaryProblem | None = None, tol: float = ZERO_TOL) -> ZeroReport:
    """Real zeros of a complex solution strictly inside the interval.

    A node where ``|u|`` has a local minimum is refined on the neighbouring
    cells with the Hermite cubic through ``(u, u')``; it is a zero when the
    refined ``|u|`` is below ``tol * max|u|`` and the phase of ``u`` flips
    across it.
    """
    a = np.abs(u.values)
    peak = float(a.max())
    n = u.grid.n
    h = u.grid.h
    x0, x1 = u.grid.x0, u.grid.x1
    found: list[float] = []
    if peak == 0.0:
        return ZeroReport(0, [], {"left": True, "right": True})
    for i in range(1, n - 1):
        if not (a[i] <= a[i - 1] and a[i] <= a[i + 1]):
            continue
        xz, m = _closest_approach(u, i)
        if m > tol * peak:
            continue
        if xz - x0 <= 1e-9 * (x1 - x0) or x1 - xz <= 1e-9 * (x1 - x0):
            continue
        ul, ur = u.values[i - 1], u.values[i + 1]
        if abs(ul) == 0 or abs(ur) == 0:
            continue
        flip = (ul * np.conj(ur)).real / (abs(ul) * abs(ur))
        if flip > -0.5:
            continue
        if found and abs(xz - found[-1]) < 0.5 * h:
            continue
        found.append(float(xz))
    vt = vanish_tol(u)
    if problem is None or problem.kind is ProblemKind.FINITE_INTERVAL:
        ends = {"left": bool(a[0] <= vt * peak), "right": bool(a[-1] <= vt * peak)}
    else:
        sig = boundary_signature(u, problem)
        ends = {"left": sig.vanishes_at_left, "right": sig.vanishes_at_right}
    return ZeroReport(len(found), found, ends)


@dataclass
class SpectrumPrediction:
    """Predicted discrete spectrum of the transformed problem relative to the seed's."""

    base: list[complex] | str
    removed: list[complex] = field(default_factory=list)
    added: list[complex] = field(default_factory=list)
    complex_levels: list[complex] = field(default_factory=list)
    embedded_flags: list[tuple[complex, bool]] = field(default_factory=list)
    spectral_singularity_candidates: list[complex] = field(default_factory=list)
    isospectral: bool = False

    def expected_levels(self, k: int | None = None, tol: float = LEVEL_TOL) -> list[complex]:
        """Numeric discrete levels sorted by real part: base minus removed plus added."""
        if isinstance(self.base, str):
            raise ValueError(f"symbolic base spectrum {self.base!r} has no numeric rendering")
        levels = [complex(e) for e in self.base if not any(abs(e - r) <= tol for r in self.removed)]
        for e in list(self.added) + list(self.complex_levels):
            if not any(abs(e - l) <= tol for l in levels):
                levels.append(complex(e))
        levels.sort(key=lambda z: (z.real, z.imag))
        return levels if k is None else levels[:k]

    def to_dict(self) -> dict:
        return {
            "base": self.base if isinstance(self.base, str) else [complex(e) for e in self.base],
            "removed": list(self.removed),
            "added": list(self.added),
            "complex_levels": list(self.complex_levels),
            "embedded_flags": [[e, bool(f)] for e, f in self.embedded_flags],
            "spectral_singularity_candidates": list(self.spectral_singularity_candidates),
            "isospectral": self.isospectral,
        }


@dataclass
class Verdict:
    problem_kind: ProblemKind
    case_label: CaseLabel
    irreducible: bool
    real_spectrum: bool
    prediction: SpectrumPrediction
    pt_eligible: bool
    complex_potential: bool = False
    notes: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "problem_kind": self.problem_kind.value,
            "case_label": self.case_label.value,
            "irreducible": self.irreducible,
            "real_spectrum": self.real_spectrum,
            "pt_eligible": self.pt_eligible,
            "complex_potential": self.complex_potential,
            "prediction": self.prediction.to_dict(),
            "notes": list(self.notes),
            "flags": list(self.flags),
        }


def pt_check(V: GridFunction) -> float:
    """``max |V(-x) - conj(V(x))|`` on a grid symmetric about the origin."""
    if not V.grid.is_symmetric():
        raise AsymmetricGrid(f"grid [{V.grid.x0}, {V.grid.x1}] is not symmetric about 0")
    v = V.values
    return float(np.max(np.abs(v[::-1] - np.conj(v))))


def _is_real(z: complex) -> bool:
    return abs(complex(z).imag) <= REAL_TOL * (1 + abs(z))


def _close(z, w, tol=LEVEL_TOL) -> bool:
    return abs(complex(z) - complex(w)) <= tol


class _SeedLevels:
    def __init__(self, levels):
        self.levels = sorted((complex(e) for e in levels), key=lambda z: (z.real, z.imag))

    def index(self, alpha) -> int | None:
        for k, e in enumerate(self.levels):
            if _close(alpha, e):
                return k
        return None

    def contains(self, alpha) -> bool:
        return self.index(alpha) is not None

    def is_ground(self, alpha) -> bool:
        return self.index(alpha) == 0


def _pt_symmetric_seed(V0: GridFunction, problem: BoundaryProblem) -> bool:
    if not V0.grid.is_symmetric():
        return False
    scale = max(V0.scale(), 1.0)
    return pt_check(V0) <= 1e-10 * scale


def _has_interior_node(u: GridFunction, problem: BoundaryProblem) -> bool:
    return count_zeros(u, problem).count > 0


def _finite_nonconfluent(spec, sigs, seeds, V0, problem, notes, flags):
    (s1, s2) = sigs
    u1, u2 = spec.u1, spec.u2
    a1, a2 = spec.alpha1, spec.alpha2
    both1 = s1.vanishes_at_left and s1.vanishes_at_right
    both2 = s2.vanishes_at_left and s2.vanishes_at_right
    symmetric = _pt_symmetric_seed(V0, problem)
    if both2 and not both1:
        # relabel so that u1 is the function vanishing at both ends
        s1, s2, u1, u2, a1, a2 = s2, s1, u2, u1, a2, a1
        both1, both2 = both2, both1
        notes.append("transformation functions relabelled: u1 is the one vanishing at both ends")
    if both1 and both2:
        ground = seeds.is_ground(a1) or seeds.is_ground(a2)
        notes.append("case (a): both transformation functions are eigenfunctions; V1 is real")
        pred = SpectrumPrediction(seeds.levels, removed=[a1, a2])
        return CaseLabel.FIN_a, not ground, True, pred, False
    if both1:
        k = seeds.index(a1)
        if k is None:
            flags.append("u1_not_a_seed_level")
            notes.append("u1 vanishes at both ends but alpha1 is not a computed seed level")
        irreducible = k is not None and k > 0
        if s2.vanishes_at_left or s2.vanishes_at_right:
            real = _is_real(a2)
            pred = SpectrumPrediction(
                seeds.levels, removed=[a1], added=[a2], complex_levels=[] if real else [a2]
            )
            notes.append(
                "case (b): level alpha2 is added; a complex V1 needs complex alpha2, "
                "so no complex potential with a real spectrum arises"
            )
            return CaseLabel.FIN_b, irreducible, real, pred, False
        real = _is_real(a2)
        pred = SpectrumPrediction(seeds.levels, removed=[a1], added=[a2], complex_levels=[] if real else [a2])
        notes.append(f"case (c): level alpha1 removed (k={k}), level alpha2 added; irreducible iff k > 0")
        if real and seeds.contains(a2):
            flags.append("non_diagonalizable")
            notes.append("alpha2 coincides with a seed level: h1 becomes non-diagonalizable")
        return CaseLabel.FIN_c, irreducible, real, pred, symmetric and problem.a == -problem.b
    crossed = (s1.vanishes_at_left and s2.vanishes_at_right and not s1.vanishes_at_right and not s2.vanishes_at_left) or (
        s1.vanishes_at_right and s2.vanishes_at_left and not s1.vanishes_at_left and not s2.vanishes_at_right
    )
    if crossed:
        if _is_real(a1) and _is_real(a2):
            notes.append("case (d) with real alphas: V1 stays real")
        notes.append("case (d): neither kernel image satisfies the boundary conditions; strictly isospectral")
        pt = symmetric and _close(a2, np.conj(a1), 1e-12 * (1 + abs(a1)))
        pred = SpectrumPrediction(seeds.levels, isospectral=True)
        return CaseLabel.FIN_d, True, True, pred, pt
    raise InconsistentSpec(
        "finite interval: vanishing pattern "
        f"u1={s1.vanishes_at_left, s1.vanishes_at_right}, u2={s2.vanishes_at_left, s2.vanishes_at_right} "
        "matches no case (a)-(d); Dirichlet conditions are not preserved"
    )


def _finite_confluent(spec, sig, seeds, V0, problem, notes, flags):
    if not (sig.vanishes_at_left and sig.vanishes_at_right):
        raise InconsistentSpec("finite interval, confluent: u must vanish at both ends (be an eigenfunction)")
    k = seeds.index(spec.alpha)
    if k is None:
        flags.append("u_not_a_seed_level")
    if _is_real(spec.c):
        notes.append("real c gives a real V1; a complex potential needs Im(c) != 0")
    notes.append("confluent: spectrum unchanged; irreducible iff u is not the ground state")
    pt = _pt_symmetric_seed(V0, problem) and spec.x_anchor == 0.0 and abs(spec.c.real) <= REAL_TOL * (1 + abs(spec.c))
    pred = SpectrumPrediction(seeds.levels, isospectral=True)
    return CaseLabel.FIN_confluent, k is not None and k > 0, True, pred, pt


def _half_line_nonconfluent(spec, sigs, seeds, V0, problem, notes, flags):
    (s1, s2) = sigs
    u1, u2 = spec.u1, spec.u2
    a1, a2 = spec.alpha1, spec.alpha2
    if not s1.vanishes_at_left and s2.vanishes_at_left:
        s1, s2, u1, u2, a1, a2 = s2, s1, u2, u1, a2, a1
        notes.append("transformation functions relabelled: u1 is the one vanishing at the origin")
    if not s1.vanishes_at_left:
        raise InconsistentSpec("half line: one transformation function must vanish at the origin")
    node = _has_interior_node(u1, problem)
    real1 = _is_real(a1)
    if not real1:
        notes.append("complex alpha1: u1 is nodeless on (0, inf), so the chain is reducible")
    removed = [a1] if seeds.contains(a1) else []
    if removed:
        notes.append("alpha1 is a seed bound state and is removed from the discrete spectrum")
    if s2.vanishes_at_left:
        irreducible = real1 and _is_real(a2) and node
        notes.append("case (a): an irreducible chain needs real alpha2 and then gives a real V1")
        notes.append("W vanishes at the origin, V1 is singular there")
        pred = SpectrumPrediction(seeds.levels, removed=removed, isospectral=not removed)
        return CaseLabel.HL_a, irreducible, True, pred, False
    cls = s2.right_asymptotic
    if cls is Asymptotics.DECAYING:
        irreducible = real1 and node and not _is_real(a2)
        notes.append("case (b): phi_alpha2 grows at infinity, spectrum equals the seed's")
        if not removed:
            flags.append("alpha1_exception_point")
            notes.append(f"possible exception of the point E=alpha1={a1} (not decided here)")
        pred = SpectrumPrediction(seeds.levels, removed=removed, isospectral=not removed)
        return CaseLabel.HL_b, irreducible, True, pred, False
    if cls is Asymptotics.GROWING:
        real2 = _is_real(a2)
        notes.append("case (c): phi_alpha2 is an eigenfunction, level alpha2 is created")
        pred = SpectrumPrediction(
            seeds.levels, removed=removed, added=[a2], complex_levels=[] if real2 else [a2]
        )
        return CaseLabel.HL_c, real1 and node, real2, pred, False
    if not (_is_real(a2) and a2.real > 0):
        raise InconsistentSpec("half line case (d): an oscillating u2 requires alpha2 > 0")
    notes.append("case (d): alpha2 lies in the continuum and is a spectral singularity candidate (not certified)")
    pred = SpectrumPrediction(
        seeds.levels, removed=removed, spectral_singularity_candidates=[a2], isospectral=not removed
    )
    return CaseLabel.HL_d, real1 and node, True, pred, False


def _half_line_confluent(spec, sig, seeds, V0, problem, notes, flags):
    if not sig.vanishes_at_left:
        raise InconsistentSpec("half line, confluent: u must vanish at the origin")
    alpha = spec.alpha
    real = _is_real(alpha)
    node = _has_interior_node(spec.u, problem)
    if spec.x_anchor != 0.0:
        notes.append("x_anchor differs from 0")
    pred = SpectrumPrediction(seeds.levels)
    if seeds.contains(alpha):
        pred.isospectral = True
        notes.append("u is a seed bound state; spectrum unchanged")
    elif real:
        pred.added.append(alpha)
        if alpha.real > 0 and sig.right_asymptotic is Asymptotics.OSCILLATING:
            pred.embedded_flags.append((alpha, True))
            notes.append("alpha > 0: phi_alpha decays like 1/x, bound state embedded into the continuum")
            notes.append("V1 decays like 1/x^2, not a scattering potential")
        else:
            notes.append("alpha appears as a new discrete level")
    else:
        pred.added.append(alpha)
        pred.complex_levels.append(alpha)
        notes.append("complex alpha: u is nodeless and the complex level alpha is created")
    if _is_real(spec.c):
        notes.append("real c gives a real V1")
    return CaseLabel.HL_confluent, real and node, real, pred, False


def _grows_both(sig: Signature) -> bool:
    return sig.left_asymptotic is Asymptotics.GROWING and sig.right_asymptotic is Asymptotics.GROWING


def _decays_both(sig: Signature) -> bool:
    return sig.left_asymptotic is Asymptotics.DECAYING and sig.right_asymptotic is Asymptotics.DECAYING


def _whole_line_nonconfluent(spec, sigs, seeds, V0, problem, notes, flags):
    pred = SpectrumPrediction(seeds.levels)
    for u, alpha, sig in zip(spec.functions, spec.alphas, sigs):
        if _grows_both(sig):
            pred.added.append(alpha)
            if not _is_real(alpha):
                pred.complex_levels.append(alpha)
        elif _decays_both(sig):
            pred.removed.append(alpha)
        if _has_interior_node(u, problem):
            notes.append(f"transformation function at alpha={alpha} has a real node")
    s1, s2 = sigs
    jost = (
        s1.left_asymptotic is Asymptotics.DECAYING
        and s1.right_asymptotic is not Asymptotics.DECAYING
        and s2.right_asymptotic is Asymptotics.DECAYING
        and s2.left_asymptotic is not Asymptotics.DECAYING
    ) or (
        s1.right_asymptotic is Asymptotics.DECAYING
        and s1.left_asymptotic is not Asymptotics.DECAYING
        and s2.left_asymptotic is Asymptotics.DECAYING
        and s2.right_asymptotic is not Asymptotics.DECAYING
    )
    if jost:
        notes.append("Jost pair: transformation functions vanish at opposite infinities; isospectral")
    pred.isospectral = not (pred.removed or pred.added)
    real = not pred.complex_levels
    pt = _pt_symmetric_seed(V0, problem) and _close(spec.alpha2, np.conj(spec.alpha1), 1e-12 * (1 + abs(spec.alpha1)))
    notes.append("whole line, non-confluent: every such chain factorizes into two good first-order steps")
    return CaseLabel.WL_nonconfluent, False, real, pred, pt


def _whole_line_confluent(spec, sig, seeds, V0, problem, notes, flags):
    alpha = spec.alpha
    real = _is_real(alpha)
    pred = SpectrumPrediction(seeds.levels)
    if _decays_both(sig) or seeds.contains(alpha):
        pred.isospectral = True
        notes.append("u is a seed bound state; spectrum unchanged")
    else:
        pred.added.append(alpha)
        if not real:
            pred.complex_levels.append(alpha)
            if sig.left_asymptotic is Asymptotics.DECAYING or sig.right_asymptotic is Asymptotics.DECAYING:
                notes.append("u decays at one infinity and has no real nodes: reducible")
        else:
            notes.append("level alpha joins the discrete spectrum")
    irreducible = real and not _is_real(spec.c)
    pt = _pt_symmetric_seed(V0, problem) and spec.x_anchor == 0.0 and abs(spec.c.real) <= REAL_TOL * (1 + abs(spec.c))
    return CaseLabel.WL_confluent, irreducible, real, pred, pt


def classify(
    spec: TransformationSpec,
    problem: BoundaryProblem,
    seed_levels,
    V0: GridFunction | None = None,
) -> Verdict:
    """Case label, reducibility and predicted spectrum of a transformation.

    ``seed_levels`` are the discrete levels of the seed problem (numeric).
    ``V0`` defaults to the zero potential and is used for PT eligibility and
    to decide whether ``V1`` comes out complex.

    Raises
    ------
    InconsistentSpec
        The boundary behaviour of the transformation functions matches no case.
    """
    V0 = zero_potential(spec.grid) if V0 is None else V0
    seeds = _SeedLevels(seed_levels)
    notes: list[str] = []
    flags: list[str] = []
    sigs = [boundary_signature(u, problem) for u in spec.functions]
    kind = problem.kind
    confluent = spec.mode is Mode.CONFLUENT
    if kind is ProblemKind.FINITE_INTERVAL:
        handler = _finite_confluent if confluent else _finite_nonconfluent
    elif kind is ProblemKind.HALF_LINE:
        handler = _half_line_confluent if confluent else _half_line_nonconfluent
    else:
        handler = _whole_line_confluent if confluent else _whole_line_nonconfluent
    arg = sigs[0] if confluent else sigs
    label, irreducible, real, pred, pt = handler(spec, arg, seeds, V0, problem, notes, flags)
    result = second_order_potential(V0, spec)
    V1 = result.V1.values[1:-1]
    finite = np.isfinite(V1)
    complex_pot = bool(np.any(np.abs(V1[finite].imag) > 1e-10 * max(1.0, float(np.max(np.abs(V1[finite]))))))
    if not result.regular:
        flags.append("singular_W")
        notes.append("W vanishes inside the interval; V1 is singular")
    if pt and V1.size and result.V1.grid.is_symmetric():
        vals = result.V1.values
        both = np.isfinite(vals) & np.isfinite(vals[::-1])
        dev = np.abs(vals[::-1] - np.conj(vals))[both]
        scale = max(1.0, float(np.max(np.abs(vals[both]))))
        if dev.size and float(dev.max()) > PT_TOL * scale:
            pt = False
            notes.append("seed and constants allow PT symmetry, but V1(-x) != conj(V1(x)) numerically")
    if kind is ProblemKind.WHOLE_LINE and not confluent and real and complex_pot:
        notes.append("complex V1 with a real spectrum on the whole line: reducible")
    return Verdict(
        problem_kind=kind,
        case_label=label,
        irreducible=bool(irreducible),
        real_spectrum=bool(real),
        prediction=pred,
        pt_eligible=bool(pt),
        complex_potential=complex_pot,
        notes=notes,
        flags=flags,
    )
