"""Second-order Darboux (SUSY) partners of Schrodinger operators.

Build partner potentials from pairs of seed solutions (or one solution in
the confluent case), classify the transformation as reducible or
irreducible, and check the predicted spectrum with an independent
non-Hermitian eigensolver.
"""

from .classifier import CaseLabel, SpectrumPrediction, Verdict, ZeroReport, classify, count_zeros, pt_check
from .darboux import (
    Mode,
    TransformationSpec,
    TransformResult,
    apply_intertwiner,
    confluent_wc,
    kernel_images,
    reverse_transform,
    second_order_map,
    second_order_potential,
    wronskian2,
)
from .errors import (
    AmbiguousAsymptotics,
    AsymmetricGrid,
    ConstraintViolation,
    GridMismatch,
    InconsistentSpec,
    KernelInput,
    NoConvergence,
    ResampleError,
    Susy2Error,
)
from .problem import (
    BoundaryProblem,
    ClosedForm,
    ClosedFormKind,
    Grid,
    GridFunction,
    ProblemKind,
    classify_tail,
    make_closed_form,
    potential_from_callable,
    solve_ivp,
    zero_potential,
)
from .spectral import (
    compare_spectra,
    discretize,
    eig_complex_tridiagonal,
    l2_tail_check,
    lowest_levels,
    refine_eigenvalue,
    shoot_mismatch,
    stable_levels,
    tridiagonal_eigenvalues,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
