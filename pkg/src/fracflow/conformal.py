"""Stereographic transfer between radial densities on R^n and zonal fields on S^n.

The inverse stereographic projection from the north pole identifies |x| = r
with latitude cosine t = (r^2-1)/(r^2+1); densities transfer with powers of
the conformal factor (1+r^2)/2.  Exponent (n-2s)/2 carries Sobolev-side
densities, (n+2s)/2 carries their duals.  The dilation subgroup of the
Moebius group preserves zonality and is represented by the bubble scale
``lam``; off-axis translations are out of scope by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DecayError, DomainError, StateError
from .specfun import SphereParams, constants
from .zonal import ZonalField, ZonalGrid

__all__ = [
    "BubbleParams",
    "TimeMap",
    "latitude_of_radius",
    "radius_of_latitude",
    "pushforward_radial",
    "bubble_zonal",
    "time_map_forward",
    "time_map_inverse",
    "v_from_w",
]

_POLE_BLOWUP = 1e100


@dataclass(frozen=True)
class BubbleParams:
    """Concentration scale and amplitude of a zonal bubble profile."""

    lam: float
    amplitude: float

    def __post_init__(self):
        if self.lam <= 0:
            raise DomainError(f"bubble scale must be positive, got {self.lam}")
        if self.amplitude <= 0:
            raise DomainError(f"bubble amplitude must be positive, got {self.amplitude}")


@dataclass(frozen=True)
class TimeMap:
    """The substitution t = T(1 - e^{-s}) between physical and rescaled clocks."""

    extinction_time: float

    def __post_init__(self):
        if self.extinction_time <= 0:
            raise DomainError(f"extinction time must be positive, got {self.extinction_time}")


def latitude_of_radius(r: float) -> float:
    """Latitude cosine t = (r^2-1)/(r^2+1) of the image of |x| = r; inf -> 1."""
    if r < 0:
        raise DomainError(f"radius must be nonnegative, got {r}")
    if math.isinf(r):
        return 1.0
    return (r * r - 1.0) / (r * r + 1.0)


def radius_of_latitude(t) -> np.ndarray:
    """Inverse map r = sqrt((1+t)/(1-t)) on (-1, 1)."""
    t = np.asarray(t, dtype=float)
    return np.sqrt((1.0 + t) / (1.0 - t))


def pushforward_radial(
    profile: Callable[[np.ndarray], np.ndarray], exponent: float, grid: ZonalGrid
) -> ZonalField:
    """Transfer a radial profile to the sphere with a conformal-factor power.

    Returns the zonal field t |-> ((1+r^2)/2)^exponent * profile(r) at
    r = radius_of_latitude(t).  The profile must balance the conformal factor
    at both poles; blow-up detected on the grid raises DecayError.
    """
    r = radius_of_latitude(grid.nodes)
    vals = ((1.0 + r * r) / 2.0) ** exponent * np.asarray(profile(r), dtype=float)
    if not np.all(np.isfinite(vals)) or np.abs(vals).max() > _POLE_BLOWUP:
        raise DecayError(
            "radial profile does not extend to the poles at this exponent "
            f"(max grid value {np.abs(vals).max():.3e})"
        )
    return ZonalField(grid, vals)


def bubble_zonal(params: SphereParams, bp: BubbleParams, grid: ZonalGrid) -> ZonalField:
    """Member of the zonal steady-state family.

    v(t) = amplitude * [((1+r^2)/2) * lam/(lam^2+r^2)]^{(n-2s)/2}.  With
    amplitude = k_profile^m this solves the steady equation of the rescaled
    fast-diffusion flow exactly; at lam = 1 it degenerates to the constant
    c_steady * (amplitude / k_profile^m).
    """
    n, s = params.n, params.sigma
    p = (n - 2 * s) / 2
    r2 = (1.0 + grid.nodes) / (1.0 - grid.nodes)
    vals = bp.amplitude * (((1.0 + r2) / 2.0) * bp.lam / (bp.lam**2 + r2)) ** p
    return ZonalField(grid, vals)


def steady_amplitude(params: SphereParams) -> float:
    """Amplitude k_profile^m that makes bubble_zonal an exact steady state."""
    cs = constants(params)
    return cs.k_profile**cs.m


def time_map_forward(tm: TimeMap, s: float) -> float:
    """Physical time t = T(1 - e^{-s}) for rescaled clock s >= 0."""
    if s < 0:
        raise DomainError(f"rescaled clock must be nonnegative, got {s}")
    return tm.extinction_time * (-math.expm1(-s))


def time_map_inverse(tm: TimeMap, t: float) -> float:
    """Rescaled clock s = -ln(1 - t/T) for physical time t in [0, T)."""
    if not 0.0 <= t < tm.extinction_time:
        raise DomainError(
            f"physical time must lie in [0, T) with T={tm.extinction_time}, got {t}"
        )
    return -math.log1p(-t / tm.extinction_time)


def v_from_w(w: ZonalField, tm: TimeMap, t: float) -> ZonalField:
    """Rescaled-orbit field v = (T-t)^{-m/(1-m)} w at physical time t.

    ``w`` is the sphere transfer of u^m (Sobolev-side exponent), so that the
    plain flow of w^N maps to the rescaled flow of v^N under the time map.
    """
    if not 0.0 <= t < tm.extinction_time:
        raise DomainError(
            f"physical time must lie in [0, T) with T={tm.extinction_time}, got {t}"
        )
    if not w.is_positive():
        raise StateError("v_from_w requires a strictly positive field")
    cs = constants(w.grid.params)
    factor = (tm.extinction_time - t) ** (-cs.m / (1.0 - cs.m))
    return ZonalField(w.grid, factor * w.nodal)
