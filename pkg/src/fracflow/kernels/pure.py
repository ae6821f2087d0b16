"""Pure-numpy reference implementation of the hot kernels.

The compiled core in ``_native.pyx`` mirrors these routines loop for loop;
any change here must be replicated there (the test suite checks parity).
"""

from __future__ import annotations

import math

import numpy as np

_GLX, _GLW = np.polynomial.legendre.leggauss(20)

_MAX_GEOM_PANELS = 64


def jacobi_sqrt_b(alpha: float, count: int) -> np.ndarray:
    """Square roots of the monic Jacobi(alpha, alpha) recurrence moments.

    Entry 0 is sqrt(mu0) with mu0 the total weight integral; entries k >= 1
    are sqrt(b_k) of the monic three-term recurrence.  These drive both the
    orthonormal basis evaluation and the Golub-Welsch node solve.
    """
    b = np.empty(count)
    b[0] = 2.0 ** (2 * alpha + 1) * math.exp(
        2 * math.lgamma(alpha + 1) - math.lgamma(2 * alpha + 2)
    )
    k = np.arange(1, count, dtype=float)
    b[1:] = (
        4 * k * (k + alpha) ** 2 * (k + 2 * alpha)
        / ((2 * k + 2 * alpha) ** 2 * (2 * k + 2 * alpha + 1) * (2 * k + 2 * alpha - 1))
    )
    return np.sqrt(b)


def basis_matrix(t: np.ndarray, kmax: int, sb: np.ndarray) -> np.ndarray:
    """Orthonormal-polynomial table P[j, k] = p_k(t_j), k = 0..kmax.

    The p_k are orthonormal on [-1, 1] against the weight (1-t^2)^alpha whose
    recurrence data is ``sb``; normalization is carried inside the recurrence
    so no overflow occurs at large degree.
    """
    t = np.asarray(t, dtype=float)
    out = np.empty((t.size, kmax + 1))
    out[:, 0] = 1.0 / sb[0]
    if kmax >= 1:
        out[:, 1] = t * out[:, 0] / sb[1]
    for k in range(1, kmax):
        out[:, k + 1] = (t * out[:, k] - sb[k] * out[:, k - 1]) / sb[k + 1]
    return out


def _poly_eval(t: np.ndarray, coeffs: np.ndarray, sb: np.ndarray) -> np.ndarray:
    """Evaluate sum_k coeffs[k] p_k(t) by the same recurrence, batched."""
    t = np.asarray(t, dtype=float)
    pm1 = np.full_like(t, 1.0 / sb[0])
    acc = coeffs[0] * pm1
    if coeffs.size == 1:
        return acc
    pk = t * pm1 / sb[1]
    acc = acc + coeffs[1] * pk
    for k in range(1, coeffs.size - 1):
        pk, pm1 = (t * pk - sb[k] * pm1) / sb[k + 1], pk
        acc += coeffs[k + 1] * pk
    return acc


def _geometric_breakpoints(total: float, step0: float) -> np.ndarray:
    """0 = b_0 < b_1 < ... = total with geometrically growing spacing."""
    bps = [0.0]
    x = max(step0, total * 1e-12, 1e-12)
    while x < total and len(bps) < _MAX_GEOM_PANELS:
        bps.append(x)
        x *= 2.0
    bps.append(total)
    return np.asarray(bps)


def _azimuthal_kernel(tp: np.ndarray, t0: float, n: int, sigma: float, sm2: float) -> np.ndarray:
    """Azimuthally integrated chordal kernel A(t0, t') for a batch of t'.

    A = |S^{n-2}| * int_0^pi (al - be cos(phi))^{-(n+2s)/2} sin(phi)^{n-2} dphi
    with al = 2 - 2 t0 t', be = 2 sqrt(1-t0^2) sqrt(1-t'^2).  The integrand
    peaks at phi = 0 with width ~ sqrt((al-be)/be); panels grow geometrically
    from that scale so a fixed-order rule resolves every regime.
    """
    p = 0.5 * (n + 2 * sigma)
    tp = np.asarray(tp, dtype=float)
    s0 = math.sqrt(max(1.0 - t0 * t0, 0.0))
    sp = np.sqrt(np.clip(1.0 - tp * tp, 0.0, None))
    al = 2.0 - 2.0 * t0 * tp
    be = 2.0 * s0 * sp
    h = np.sqrt(2.0 * np.clip(al - be, 1e-300, None) / np.clip(be, 1e-300, None))
    h = np.clip(h, 1e-9, math.pi / 4)

    nseg = np.ceil(np.log2(math.pi / h)).astype(int) + 1
    smax = min(int(nseg.max()), _MAX_GEOM_PANELS)
    # breakpoint matrix: 0, h, 2h, ..., capped at pi (zero-width tails)
    j = np.arange(smax)
    bp = np.minimum(h[:, None] * 2.0 ** j[None, :], math.pi)
    bp = np.concatenate([np.zeros((tp.size, 1)), bp], axis=1)
    bp[:, -1] = math.pi
    a, b = bp[:, :-1], bp[:, 1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    phi = mid[:, :, None] + half[:, :, None] * _GLX
    f = (al[:, None, None] - be[:, None, None] * np.cos(phi)) ** (-p)
    if n > 2:
        f *= np.sin(phi) ** (n - 2)
    vals = (f * _GLW).sum(axis=2) * half
    return sm2 * vals.sum(axis=1)


def _region_integral(
    t0: float,
    v0: float,
    near: float,
    far: float,
    w0: float,
    coeffs: np.ndarray,
    sb: np.ndarray,
    n: int,
    sigma: float,
    sm2: float,
) -> float:
    """Integrate the subtracted kernel over theta from near to far.

    ``near`` is the endpoint closest to the singular colatitude; panels grow
    geometrically away from it starting at the distance ``w0`` of that
    endpoint from the singularity.
    """
    total = abs(far - near)
    if total <= 0.0:
        return 0.0
    sgn = 1.0 if far > near else -1.0
    bps = _geometric_breakpoints(total, w0)
    a = near + sgn * bps[:-1]
    b = near + sgn * bps[1:]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    theta = (mid[:, None] + half[:, None] * _GLX).ravel()
    tvals = np.cos(theta)
    g = (v0 - _poly_eval(tvals, coeffs, sb)) * _azimuthal_kernel(tvals, t0, n, sigma, sm2)
    g *= np.sin(theta) ** (n - 1)
    g = g.reshape(mid.size, _GLX.size)
    return float(((g * _GLW).sum(axis=1) * half).sum())


def pv_levels(
    tnodes: np.ndarray,
    coeffs: np.ndarray,
    sb: np.ndarray,
    n: int,
    sigma: float,
    eps_cap: float,
    sm2: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Window-excluded latitude integrals of the subtracted singular kernel.

    For every node t0 and shrinking symmetric windows |t' - t0| > eps with
    eps = e, 2e, 4e, 8e (e = eps0/8, eps0 = min(eps_cap, (1-|t0|)/2)),
    returns I(eps) for the integral

        int (v(t0) - v(t')) A(t0, t') (1-t'^2)^{(n-2)/2} dt'

    computed in colatitude variables.  Extrapolation of eps -> 0 is the
    caller's job.  Returns (levels[nodes, 4], e[nodes]).
    """
    tnodes = np.asarray(tnodes, dtype=float)
    nodes = tnodes.size
    levels = np.empty((nodes, 4))
    eps_out = np.empty(nodes)
    vnodes = _poly_eval(tnodes, coeffs, sb)
    for i in range(nodes):
        t0 = tnodes[i]
        v0 = vnodes[i]
        th0 = math.acos(t0)
        eps0 = min(eps_cap, (1.0 - abs(t0)) / 2.0)
        e = eps0 / 8.0
        eps_out[i] = e

        def theta_of(tval: float) -> float:
            return math.acos(min(max(tval, -1.0), 1.0))

        def outer(eps: float) -> float:
            th_hi = theta_of(t0 + eps)
            th_lo = theta_of(t0 - eps)
            right = _region_integral(
                t0, v0, th_hi, 0.0, th0 - th_hi, coeffs, sb, n, sigma, sm2
            )
            left = _region_integral(
                t0, v0, th_lo, math.pi, th_lo - th0, coeffs, sb, n, sigma, sm2
            )
            return right + left

        def ring(eps_in: float, eps_out_: float) -> float:
            r = _region_integral(
                t0,
                v0,
                theta_of(t0 + eps_in),
                theta_of(t0 + eps_out_),
                th0 - theta_of(t0 + eps_in),
                coeffs,
                sb,
                n,
                sigma,
                sm2,
            )
            l = _region_integral(
                t0,
                v0,
                theta_of(t0 - eps_in),
                theta_of(t0 - eps_out_),
                theta_of(t0 - eps_in) - th0,
                coeffs,
                sb,
                n,
                sigma,
                sm2,
            )
            return r + l

        i_small = outer(e)
        r1 = ring(e, 2 * e)
        r2 = ring(2 * e, 4 * e)
        r3 = ring(4 * e, 8 * e)
        levels[i, 0] = i_small
        levels[i, 1] = i_small - r1
        levels[i, 2] = i_small - r1 - r2
        levels[i, 3] = i_small - r1 - r2 - r3
    return levels, eps_out
