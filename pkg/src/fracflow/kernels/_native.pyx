# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled core of the hot kernels; mirrors kernels/pure.py exactly.

Keep the panel construction and summation order identical to the pure
implementation: the parity test compares the two to tight tolerances.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport M_PI, acos, ceil, cos, fabs, log2, pow, sin, sqrt

cnp.import_array()

cdef int _NG = 20
cdef double[20] _GLX
cdef double[20] _GLW
_glx_py, _glw_py = np.polynomial.legendre.leggauss(20)
for _i in range(20):
    _GLX[_i] = _glx_py[_i]
    _GLW[_i] = _glw_py[_i]

cdef enum:
    MAX_GEOM = 64


def basis_matrix(t, int kmax, sb):
    """Orthonormal-polynomial table P[j, k] = p_k(t_j), identical contract to pure."""
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[::1] sbv = np.ascontiguousarray(sb, dtype=np.float64)
    out_arr = np.empty((tv.shape[0], kmax + 1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j
    cdef int k
    cdef double x
    for j in range(tv.shape[0]):
        x = tv[j]
        out[j, 0] = 1.0 / sbv[0]
        if kmax >= 1:
            out[j, 1] = x * out[j, 0] / sbv[1]
        for k in range(1, kmax):
            out[j, k + 1] = (x * out[j, k] - sbv[k] * out[j, k - 1]) / sbv[k + 1]
    return out_arr


cdef double _poly_eval(double x, double[::1] coeffs, double[::1] sb) noexcept nogil:
    cdef double pm1 = 1.0 / sb[0]
    cdef double acc = coeffs[0] * pm1
    cdef double pk, tmp
    cdef int k, K = <int>coeffs.shape[0]
    if K == 1:
        return acc
    pk = x * pm1 / sb[1]
    acc += coeffs[1] * pk
    for k in range(1, K - 1):
        tmp = (x * pk - sb[k] * pm1) / sb[k + 1]
        pm1 = pk
        pk = tmp
        acc += coeffs[k + 1] * pk
    return acc


cdef double _azim_one(double tp, double t0, int n, double p, double sm2) noexcept nogil:
    """A(t0, t') for a single t': geometric phi-panels from the peak width."""
    cdef double s0 = sqrt(max(1.0 - t0 * t0, 0.0))
    cdef double spv = sqrt(max(1.0 - tp * tp, 0.0))
    cdef double al = 2.0 - 2.0 * t0 * tp
    cdef double be = 2.0 * s0 * spv
    cdef double diff = al - be
    if diff < 1e-300:
        diff = 1e-300
    cdef double bec = be if be > 1e-300 else 1e-300
    cdef double h = sqrt(2.0 * diff / bec)
    if h < 1e-9:
        h = 1e-9
    if h > M_PI / 4.0:
        h = M_PI / 4.0
    cdef double total = 0.0
    cdef double a = 0.0
    cdef double b = h
    cdef double mid, half, phi, f
    cdef int seg, q
    for seg in range(MAX_GEOM):
        if b > M_PI:
            b = M_PI
        mid = 0.5 * (a + b)
        half = 0.5 * (b - a)
        if half > 0.0:
            for q in range(_NG):
                phi = mid + half * _GLX[q]
                f = pow(al - be * cos(phi), -p)
                if n == 3:
                    f *= sin(phi)
                elif n > 3:
                    f *= pow(sin(phi), n - 2)
                total += f * _GLW[q] * half
        if b >= M_PI:
            break
        a = b
        b = 2.0 * b
    return sm2 * total


cdef double _region_integral(
    double t0,
    double v0,
    double near,
    double far,
    double w0,
    double[::1] coeffs,
    double[::1] sb,
    int n,
    double sigma,
    double sm2,
) noexcept nogil:
    cdef double total_len = fabs(far - near)
    if total_len <= 0.0:
        return 0.0
    cdef double sgn = 1.0 if far > near else -1.0
    cdef double p = 0.5 * (n + 2.0 * sigma)
    cdef double step0 = w0
    if step0 < total_len * 1e-12:
        step0 = total_len * 1e-12
    if step0 < 1e-12:
        step0 = 1e-12
    cdef double acc = 0.0
    cdef double b0 = 0.0
    cdef double b1 = step0
    cdef double lo, hi, mid, half, theta, tval, g, sn
    cdef int seg, q
    for seg in range(MAX_GEOM):
        if b1 > total_len or seg == MAX_GEOM - 1:
            b1 = total_len
        lo = near + sgn * b0
        hi = near + sgn * b1
        if hi < lo:
            lo, hi = hi, lo
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo)
        if half > 0.0:
            for q in range(_NG):
                theta = mid + half * _GLX[q]
                tval = cos(theta)
                g = (v0 - _poly_eval(tval, coeffs, sb)) * _azim_one(tval, t0, n, p, sm2)
                sn = sin(theta)
                if n == 2:
                    g *= sn
                elif n == 3:
                    g *= sn * sn
                else:
                    g *= pow(sn, n - 1)
                acc += g * _GLW[q] * half
        if b1 >= total_len:
            break
        b0 = b1
        b1 = 2.0 * b1
    return acc


cdef double _clamped_acos(double x) noexcept nogil:
    if x > 1.0:
        x = 1.0
    if x < -1.0:
        x = -1.0
    return acos(x)


def pv_levels(tnodes, coeffs, sb, int n, double sigma, double eps_cap, double sm2):
    """Window-excluded latitude integrals; identical contract to pure.pv_levels."""
    cdef double[::1] tv = np.ascontiguousarray(tnodes, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(coeffs, dtype=np.float64)
    cdef double[::1] sbv = np.ascontiguousarray(sb, dtype=np.float64)
    cdef Py_ssize_t nodes = tv.shape[0]
    levels_arr = np.empty((nodes, 4), dtype=np.float64)
    eps_arr = np.empty(nodes, dtype=np.float64)
    cdef double[:, ::1] levels = levels_arr
    cdef double[::1] eps_out = eps_arr
    cdef Py_ssize_t i
    cdef int j
    cdef double t0, v0, th0, eps0, e, i_small, acc
    cdef double th_hi, th_lo, ring_r, ring_l, ein, eout
    with nogil:
        for i in range(nodes):
            t0 = tv[i]
            v0 = _poly_eval(t0, cv, sbv)
            th0 = acos(t0)
            eps0 = (1.0 - fabs(t0)) / 2.0
            if eps_cap < eps0:
                eps0 = eps_cap
            e = eps0 / 8.0
            eps_out[i] = e

            th_hi = _clamped_acos(t0 + e)
            th_lo = _clamped_acos(t0 - e)
            i_small = _region_integral(t0, v0, th_hi, 0.0, th0 - th_hi, cv, sbv, n, sigma, sm2)
            i_small += _region_integral(t0, v0, th_lo, M_PI, th_lo - th0, cv, sbv, n, sigma, sm2)
            levels[i, 0] = i_small
            acc = i_small
            for j in range(1, 4):
                ein = e * (2.0 ** (j - 1))
                eout = 2.0 * ein
                ring_r = _region_integral(
                    t0,
                    v0,
                    _clamped_acos(t0 + ein),
                    _clamped_acos(t0 + eout),
                    th0 - _clamped_acos(t0 + ein),
                    cv,
                    sbv,
                    n,
                    sigma,
                    sm2,
                )
                ring_l = _region_integral(
                    t0,
                    v0,
                    _clamped_acos(t0 - ein),
                    _clamped_acos(t0 - eout),
                    _clamped_acos(t0 - ein) - th0,
                    cv,
                    sbv,
                    n,
                    sigma,
                    sm2,
                )
                acc -= ring_r + ring_l
                levels[i, j] = acc
    return levels_arr, eps_arr
