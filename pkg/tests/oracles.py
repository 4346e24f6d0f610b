"""Independent reference computations used by the tests.

Nothing here imports the package's numerical kernels: eigenvalues come from
the characteristic polynomial of a tridiagonal matrix, seed solutions from
elementary functions.
"""

from __future__ import annotations

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment


def charpoly_tridiagonal(diag, sub, sup) -> np.ndarray:
    """Coefficients (lowest first) of ``det(T - z)`` from the three-term recursion."""
    d = np.asarray(diag, dtype=complex)
    prod = np.asarray(sub, dtype=complex) * np.asarray(sup, dtype=complex)
    prev, cur = np.array([1.0 + 0j]), np.array([d[0], -1.0 + 0j])
    for k in range(1, len(d)):
        nxt = P.polysub(P.polymul(cur, [d[k], -1.0]), prod[k - 1] * prev)
        prev, cur = cur, nxt
    return cur


def _det_and_derivative(d, prod, z):
    p0, p1 = 1.0 + 0j, d[0] - z
    q0, q1 = 0.0 + 0j, -1.0 + 0j
    for k in range(1, len(d)):
        p2 = (d[k] - z) * p1 - prod[k - 1] * p0
        q2 = (d[k] - z) * q1 - p1 - prod[k - 1] * q0
        p0, p1, q0, q1 = p1, p2, q1, q2
    return p1, q1


def tridiagonal_roots(diag, sub, sup, polish: int = 8) -> np.ndarray:
    """Eigenvalues via ``np.roots`` of the characteristic polynomial, Newton-polished on the recursion."""
    d = np.asarray(diag, dtype=complex)
    prod = np.asarray(sub, dtype=complex) * np.asarray(sup, dtype=complex)
    roots = np.roots(charpoly_tridiagonal(diag, sub, sup)[::-1]).astype(complex)
    for _ in range(polish):
        for i, z in enumerate(roots):
            p, dp = _det_and_derivative(d, prod, z)
            if dp != 0:
                step = p / dp
                if abs(step) < 1e-2 * (1 + abs(z)):
                    roots[i] = z - step
    return roots


def multiset_distance(a, b) -> float:
    """Largest pairwise distance after optimal (Hungarian) matching of two equal-size multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("multisets differ in size")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max()) if len(a) else 0.0


def random_trig_potential(rng: np.random.Generator, terms: int = 4, amplitude: float = 3.0):
    """A smooth real potential ``sum c_j cos(w_j x + p_j)`` with its derivative, as callables."""
    c = rng.uniform(-amplitude, amplitude, terms) / terms
    w = rng.uniform(0.2, 3.0, terms)
    p = rng.uniform(0, 2 * np.pi, terms)

    def f(x):
        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(c * np.cos(w * x + p), axis=-1)

    def df(x):
        x = np.asarray(x, dtype=float)[..., None]
        return np.sum(-c * w * np.sin(w * x + p), axis=-1)

    return f, df


def free_solution(k: complex, x, x0: float = 0.0, u0: complex = 0.0, du0: complex = 1.0):
    """Solution of ``-u'' = k^2 u`` with ``u(x0) = u0``, ``u'(x0) = du0`` and its derivative."""
    x = np.asarray(x, dtype=float) - x0
    k = complex(k)
    if k == 0:
        return u0 + du0 * x, np.full_like(x, du0, dtype=complex)
    u = u0 * np.cos(k * x) + du0 * np.sin(k * x) / k
    du = -u0 * k * np.sin(k * x) + du0 * np.cos(k * x)
    return u, du
