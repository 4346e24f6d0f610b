"""Compiled inner loops: RK4 marching and the complex-symmetric tridiagonal QR."""

import numpy as np
from numba import njit

# status codes shared with the Python wrappers
OK = 0
OVERFLOW = 1
NO_CONVERGENCE = 2


@njit(cache=True)
def rk4_march(vn, vm, energy, h, start, stop, u0, p0, cap, out_u, out_p):
    """March (u, u') from node ``start`` towards node ``stop`` (exclusive of start).

    ``vn`` holds the potential at nodes, ``vm[i]`` its value at the midpoint of
    ``[x_i, x_{i+1}]``. Results are written into ``out_u``/``out_p``.
    """
    step = 1 if stop > start else -1
    hs = h * step
    u = u0
    p = p0
    out_u[start] = u
    out_p[start] = p
    i = start
    while i != stop:
        j = i + step
        va = vn[i] - energy
        vb = vn[j] - energy
        mid = vm[i] if step > 0 else vm[j]
        vc = mid - energy
        k1u = p
        k1p = va * u
        k2u = p + 0.5 * hs * k1p
        k2p = vc * (u + 0.5 * hs * k1u)
        k3u = p + 0.5 * hs * k2p
        k3p = vc * (u + 0.5 * hs * k2u)
        k4u = p + hs * k3p
        k4p = vb * (u + hs * k3u)
        u = u + hs / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        p = p + hs / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        if abs(u) > cap or not np.isfinite(u.real + u.imag):
            return OVERFLOW, j
        out_u[j] = u
        out_p[j] = p
        i = j
    return OK, stop


@njit(cache=True)
def shoot_march(vn, vm, energy, h, every):
    """Integrate from node 0 with u=0, u'=1 to the last node with periodic renormalization.

    Returns ``(u_end / running_max, log_scale)`` where ``running_max`` is the
    sup-norm of the (rescaled) trajectory.
    """
    n = vn.shape[0]
    u = 0.0 + 0.0j
    p = 1.0 + 0.0j
    log_scale = 0.0
    peak = 0.0
    for i in range(n - 1):
        va = vn[i] - energy
        vb = vn[i + 1] - energy
        vc = vm[i] - energy
        k1u = p
        k1p = va * u
        k2u = p + 0.5 * h * k1p
        k2p = vc * (u + 0.5 * h * k1u)
        k3u = p + 0.5 * h * k2p
        k3p = vc * (u + 0.5 * h * k2u)
        k4u = p + h * k3p
        k4p = vb * (u + h * k3u)
        u = u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        p = p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
        au = abs(u)
        if au > peak:
            peak = au
        if (i + 1) % every == 0 and peak > 0.0:
            u = u / peak
            p = p / peak
            log_scale += np.log(peak)
            peak = 1.0
    if peak == 0.0:
        return u, log_scale
    return u / peak, log_scale + np.log(peak)


@njit(cache=True)
def _csqrt(z):
    return np.sqrt(z + 0.0j)


@njit(cache=True)
def _wilkinson(a, b, c):
    # eigenvalue of [[a, b], [b, c]] closer to c (complex symmetric, b not conjugated)
    half = 0.5 * (a - c)
    disc = _csqrt(half * half + b * b)
    m = 0.5 * (a + c)
    l1 = m + disc
    l2 = m - disc
    if abs(l1 - c) < abs(l2 - c):
        return l1
    return l2


@njit(cache=True)
def tridiag_qr(d, e, max_iter):
    """Eigenvalues of the complex symmetric tridiagonal matrix (d, e), in place.

    Implicit single-shift QR with complex orthogonal rotations (c^2 + s^2 = 1),
    which keep the matrix complex symmetric and therefore tridiagonal.
    """
    n = d.shape[0]
    eps = 2.220446049250313e-16
    hi = n - 1
    iters = 0
    exceptional = 0
    while hi > 0:
        # deflate from the bottom
        if abs(e[hi - 1]) <= eps * (abs(d[hi - 1]) + abs(d[hi])):
            e[hi - 1] = 0.0
            hi -= 1
            iters = 0
            continue
        lo = hi - 1
        while lo > 0 and abs(e[lo - 1]) > eps * (abs(d[lo - 1]) + abs(d[lo])):
            lo -= 1
        if lo > 0:
            e[lo - 1] = 0.0
        iters += 1
        if iters > max_iter:
            return NO_CONVERGENCE, hi
        if hi - lo == 1:
            # 2x2 block: closed form
            a = d[lo]
            b = e[lo]
            c = d[hi]
            half = 0.5 * (a - c)
            disc = _csqrt(half * half + b * b)
            m = 0.5 * (a + c)
            d[lo] = m + disc
            d[hi] = m - disc
            e[lo] = 0.0
            hi -= 2
            iters = 0
            continue
        mu = _wilkinson(d[hi - 1], e[hi - 1], d[hi])
        if iters % 11 == 0:
            # exceptional shift against cycling and rotation breakdown
            exceptional += 1
            mu = d[hi] + (0.75 + 0.1j * exceptional) * abs(e[hi - 1])
        d_save = d[lo:hi + 1].copy()
        e_save = e[lo:hi].copy()
        x = d[lo] - mu
        z = e[lo]
        bulge = 0.0 + 0.0j
        breakdown = False
        for k in range(lo, hi):
            r = _csqrt(x * x + z * z)
            if abs(r) <= 1e-12 * (abs(x) + abs(z)) or abs(r) == 0.0:
                breakdown = True
                break
            c = x / r
            s = z / r
            if k > lo:
                e[k - 1] = c * e[k - 1] + s * bulge
            p = d[k]
            q = e[k]
            t = d[k + 1]
            cs = c * s
            d[k] = c * c * p + 2.0 * cs * q + s * s * t
            d[k + 1] = s * s * p - 2.0 * cs * q + c * c * t
            e[k] = cs * (t - p) + (c * c - s * s) * q
            if k < hi - 1:
                bulge = s * e[k + 1]
                e[k + 1] = c * e[k + 1]
                x = e[k]
                z = bulge
        if breakdown:
            d[lo:hi + 1] = d_save
            e[lo:hi] = e_save
            iters = (iters // 11 + 1) * 11 - 1  # exceptional shift on the next sweep
    return OK, 0
