"""Functionals, bounds, fits, and inequality checks computed from zonal fields.

All quadratic forms of the nonlocal operator and its inverse are evaluated
spectrally (multiplication / division by the eigenvalue sequence); the
kernel-quadrature route exists only as the cross-validator in ``zonal``.
Sphere-side expressions are exact conformal transfers of their flat-space
counterparts: with w the Sobolev-side transfer of u^m and psi = w^N the
dual-side transfer of u,

    int u^{m+1} dx            = int w^{N+1} dvol
    int u^m (-Lap)^s u^m dx   = int w P(w) dvol
    int u (-Lap)^{-s} u dx    = sum_k lambda_k^{-1} c_k(psi)^2
    int u^{m-1}|-(-Lap)^s u^m + E u|^2 dx
                              = int w^{1-N} (-P(w) + E w^N)^2 dvol

(the last weight is certified against a radial quadrature in the tests).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .conformal import (
    BubbleParams,
    TimeMap,
    bubble_zonal,
    steady_amplitude,
    time_map_inverse,
    v_from_w,
)
from .errors import DiagnosticError, DomainError, EstimationError
from .specfun import SphereParams, constants
from .zonal import ZonalField, ZonalGrid, apply_psigma, integrate, quadratic_form, synthesize

__all__ = [
    "DiagRecord",
    "ExtinctionReport",
    "DeficitReport",
    "FitResult",
    "QEGRecord",
    "functional_J",
    "functional_S",
    "functional_F",
    "functional_H",
    "qegk",
    "accumulate_G",
    "extinction_bounds",
    "estimate_extinction_time",
    "fit_bubble",
    "deficits",
    "harnack_ratio",
    "trial_field",
    "extinction_report",
]


@dataclass(frozen=True)
class DiagRecord:
    """Per-snapshot diagnostics; fields not meaningful for a flow kind are None."""

    harnack_ratio: float
    volume: float
    J: Optional[float] = None
    S_func: Optional[float] = None
    F: Optional[float] = None
    H: Optional[float] = None
    r_sigma: Optional[float] = None
    lambda_fit: Optional[float] = None
    fit_residual: Optional[float] = None


@dataclass(frozen=True)
class FitResult:
    """Best bubble-scale fit of a field; boundary_warning marks a clipped search."""

    lambda_hat: float
    residual_sup: float
    boundary_warning: bool = False


@dataclass(frozen=True)
class QEGRecord:
    Q: float
    E: float
    K_val: float


@dataclass(frozen=True)
class DeficitReport:
    """Sharp-inequality deficits with the remainder-term bound when n > 4s."""

    sobolev_deficit: float
    hls_deficit: float
    remainder_lhs: Optional[float] = None
    remainder_rhs_bound: Optional[float] = None
    remainder_ok: Optional[bool] = None

    def as_dict(self) -> dict:
        return {
            "sobolev_deficit": self.sobolev_deficit,
            "hls_deficit": self.hls_deficit,
            "remainder_lhs": self.remainder_lhs,
            "remainder_rhs_bound": self.remainder_rhs_bound,
            "remainder_ok": self.remainder_ok,
        }


@dataclass(frozen=True)
class ExtinctionReport:
    T_hat: float
    T_upper: float
    T_lower: Optional[float]
    F0: float
    sandwich_ok: bool
    lambda_limit: float
    k_measured: float
    residual_history: list = field(default_factory=list)  # (s, sup_residual, lambda_fit)

    def as_dict(self) -> dict:
        return {
            "T_hat": self.T_hat,
            "T_upper": self.T_upper,
            "T_lower": self.T_lower,
            "F0": self.F0,
            "sandwich_ok": self.sandwich_ok,
            "lambda_limit": self.lambda_limit,
            "k_measured": self.k_measured,
        }


def _require_positive(v: ZonalField, what: str):
    if v.nodal.min() <= 0.0:
        raise DomainError(f"{what} requires a strictly positive field")


def functional_J(v: ZonalField) -> float:
    """Energy of the rescaled flow: (1/2) int v P(v) - int v^{N+1} / ((1-m)(N+1)).

    Non-increasing and nonnegative along rescaled orbits.
    """
    _require_positive(v, "functional_J")
    cs = constants(v.grid.params)
    quad = 0.5 * quadratic_form(v)
    power = integrate(ZonalField(v.grid, v.nodal ** (cs.bigN + 1)))
    return quad - power / ((1 - cs.m) * (cs.bigN + 1))


def functional_S(v: ZonalField) -> float:
    """Scale-invariant quotient int v P(v) / (int v^{N+1})^{2/(N+1)}."""
    if np.all(v.nodal == 0.0):
        raise DomainError("functional_S is undefined for the zero field")
    _require_positive(v, "functional_S")
    cs = constants(v.grid.params)
    power = integrate(ZonalField(v.grid, v.nodal ** (cs.bigN + 1)))
    return quadratic_form(v) / power ** (2.0 / (cs.bigN + 1))


def functional_F(w: ZonalField) -> float:
    """Mass functional int w^{N+1} dvol, the transfer of int u^{m+1} dx."""
    _require_positive(w, "functional_F")
    cs = constants(w.grid.params)
    return integrate(ZonalField(w.grid, w.nodal ** (cs.bigN + 1)))


def functional_H(psi: ZonalField) -> float:
    """Dual-side deficit: sum lambda_k^{-1} c_k(psi)^2 - S (int psi^{2n/(n+2s)})^{(n+2s)/n}.

    ``psi`` is the dual-exponent transfer of a flat-space density (psi = w^N
    along extinction orbits).  Nonpositive by sharpness, zero exactly on the
    extremal family.
    """
    _require_positive(psi, "functional_H")
    g = psi.grid
    n, s = g.params.n, g.params.sigma
    cs = constants(g.params)
    c = psi.spectral
    quad = float(np.dot(c * c, 1.0 / g.multipliers))
    p = 2.0 * n / (n + 2 * s)
    norm = integrate(ZonalField(g, psi.nodal**p)) ** ((n + 2 * s) / n)
    return quad - cs.sobolev_s * norm


def qegk(state_a, state_b) -> QEGRecord:
    """Dissipation-rate record (Q, E, K) of an extinction orbit.

    Evaluated at the first of two consecutive flow states (the pair fixes the
    interval a caller may hand to ``accumulate_G``).  F' is computed from the
    analytic identity F' = -(m+1) int w P(w) dvol, never by differencing.
    """
    w = state_a.field
    _require_positive(w, "qegk")
    g = w.grid
    cs = constants(g.params)
    n, s = g.params.n, g.params.sigma
    F = functional_F(w)
    wPw = float(np.dot(w.nodal * apply_psigma(w).nodal, g.weights))
    Fp = -(cs.m + 1.0) * wPw
    if Fp >= 0.0:
        raise DiagnosticError(f"state does not dissipate: F' = {Fp:.3e} >= 0")
    Q = -Fp * F ** ((2 * s - n) / n) / (cs.m + 1.0)
    E = -Fp / ((cs.m + 1.0) * F)
    resid = -apply_psigma(w).nodal + E * w.nodal**cs.bigN
    K_val = float(np.dot(g.weights, w.nodal ** (1.0 - cs.bigN) * resid**2))
    return QEGRecord(Q=Q, E=E, K_val=K_val)


def accumulate_G(clocks: Sequence[float], e_values: Sequence[float], t1: float, t2: float,
                 params: SphereParams) -> float:
    """G(t1, t2) = exp((m+1) int_{t1}^{t2} E ds) by trapezoidal accumulation."""
    if t2 < t1:
        raise DomainError("accumulate_G requires t1 <= t2")
    if t1 == t2:
        return 1.0
    clocks = np.asarray(clocks, dtype=float)
    e_values = np.asarray(e_values, dtype=float)
    if clocks[0] - 1e-12 > t1 or clocks[-1] + 1e-12 < t2:
        raise DomainError("requested interval is not covered by the recorded clocks")
    ts = np.unique(np.concatenate([[t1, t2], clocks[(clocks > t1) & (clocks < t2)]]))
    es = np.interp(ts, clocks, e_values)
    cs = constants(params)
    return float(math.exp((cs.m + 1.0) * np.trapezoid(es, ts)))


def extinction_bounds(w0: ZonalField) -> tuple[Optional[float], float]:
    """Lower/upper bounds for the extinction time from the initial field.

    T_upper = (n+2s) S/(4s) F0^{2s/n};  T_lower = (n+2s)/(2n) F0 / int w0 P(w0),
    the latter only when n > 4s.
    """
    _require_positive(w0, "extinction_bounds")
    g = w0.grid
    n, s = g.params.n, g.params.sigma
    cs = constants(g.params)
    F0 = functional_F(w0)
    T_upper = (n + 2 * s) * cs.sobolev_s / (4 * s) * F0 ** (2 * s / n)
    T_lower = None
    if n > 4 * s:
        wPw = float(np.dot(w0.nodal * apply_psigma(w0).nodal, g.weights))
        T_lower = (n + 2 * s) / (2 * n) * F0 / wPw
    return T_lower, T_upper


def estimate_extinction_time(
    f_series: Sequence[tuple[float, float]], params: SphereParams
) -> float:
    """Extrapolated extinction time from a decreasing mass series.

    Fits F^{(1-m)/(m+1)} (exactly linear on self-similar orbits) against time
    over the trailing quarter of the samples and returns the zero crossing.
    Widens the window once to the trailing half if the fit quality is poor.
    """
    pts = np.asarray(f_series, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 5:
        raise EstimationError("need at least 5 (t, F) samples")
    t, F = pts[:, 0], pts[:, 1]
    cs = constants(params)
    y = F ** ((1 - cs.m) / (cs.m + 1))

    def tail_fit(frac: float):
        i0 = max(0, int(len(t) * (1 - frac)))
        i0 = min(i0, len(t) - 5)
        tt, yy = t[i0:], y[i0:]
        if np.any(np.diff(yy) >= 0):
            raise EstimationError("mass series tail is not strictly decreasing")
        a, b = np.polyfit(tt, yy, 1)
        resid = yy - (a * tt + b)
        ss_tot = float(np.sum((yy - yy.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
        return a, b, r2

    a, b, r2 = tail_fit(0.25)
    if r2 < 0.999:
        a, b, r2 = tail_fit(0.5)
        if r2 < 0.999:
            raise EstimationError(f"extinction fit quality too low (R^2 = {r2:.6f})")
    if a >= 0:
        raise EstimationError("fitted mass power is not decreasing")
    return float(-b / a)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_LN_LAM_LO, _LN_LAM_HI = math.log(1e-3), math.log(1e3)


def _golden_min(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_bubble(v: ZonalField) -> FitResult:
    """L2-best bubble scale at the steady amplitude, by golden section in ln(lam).

    Returns the minimizer and the sup-norm residual there; the boundary flag
    is set when the search ends against the scale box [1e-3, 1e3].
    """
    _require_positive(v, "fit_bubble")
    g = v.grid
    params = g.params
    amp = steady_amplitude(params)
    W = g.weights

    def objective(ln_lam: float) -> float:
        b = bubble_zonal(params, BubbleParams(lam=math.exp(ln_lam), amplitude=amp), g)
        d = v.nodal - b.nodal
        return float(np.dot(W, d * d))

    ln_hat = _golden_min(objective, _LN_LAM_LO, _LN_LAM_HI)
    lam_hat = math.exp(ln_hat)
    b = bubble_zonal(params, BubbleParams(lam=lam_hat, amplitude=amp), g)
    resid = float(np.abs(v.nodal - b.nodal).max())
    boundary = ln_hat < _LN_LAM_LO + 1e-6 or ln_hat > _LN_LAM_HI - 1e-6
    return FitResult(lambda_hat=lam_hat, residual_sup=resid, boundary_warning=boundary)


def fit_bubble_free_amplitude(v: ZonalField) -> tuple[float, float, float]:
    """Best (lam, amplitude) bubble fit; amplitude solved linearly per scale.

    Returns (lam_hat, amplitude_hat, residual_sup).
    """
    _require_positive(v, "fit_bubble_free_amplitude")
    g = v.grid
    params = g.params
    W = g.weights

    def best_amp(lam: float) -> float:
        shape = bubble_zonal(params, BubbleParams(lam=lam, amplitude=1.0), g).nodal
        return float(np.dot(W, v.nodal * shape) / np.dot(W, shape * shape))

    def objective(ln_lam: float) -> float:
        lam = math.exp(ln_lam)
        shape = bubble_zonal(params, BubbleParams(lam=lam, amplitude=1.0), g).nodal
        a = float(np.dot(W, v.nodal * shape) / np.dot(W, shape * shape))
        d = v.nodal - a * shape
        return float(np.dot(W, d * d))

    ln_hat = _golden_min(objective, _LN_LAM_LO, _LN_LAM_HI)
    lam_hat = math.exp(ln_hat)
    amp = best_amp(lam_hat)
    shape = bubble_zonal(params, BubbleParams(lam=lam_hat, amplitude=1.0), g).nodal
    resid = float(np.abs(v.nodal - amp * shape).max())
    return lam_hat, amp, resid


def deficits(v: ZonalField, tol: float = 1e-12) -> DeficitReport:
    """Sharp Sobolev / dual deficits of the transfer field v, plus the
    remainder-term bound with constant (n+2s)/n (1-e^{-n/2s}) S when n > 4s."""
    _require_positive(v, "deficits")
    g = v.grid
    n, s = g.params.n, g.params.sigma
    cs = constants(g.params)
    power = integrate(ZonalField(g, v.nodal ** (cs.bigN + 1)))
    sobolev_deficit = cs.sobolev_s * quadratic_form(v) - power ** ((n - 2 * s) / n)

    psi = ZonalField(g, v.nodal**cs.bigN)
    cpsi = psi.spectral
    riesz = float(np.dot(cpsi * cpsi, 1.0 / g.multipliers))
    hls_deficit = cs.sobolev_s * power ** ((n + 2 * s) / n) - riesz

    if n > 4 * s:
        c_bound = (n + 2 * s) / n * (1.0 - math.exp(-n / (2 * s))) * cs.sobolev_s
        rhs = c_bound * power ** (4 * s / n) * sobolev_deficit
        ok = bool(hls_deficit <= rhs + tol * max(1.0, abs(rhs)))
        return DeficitReport(
            sobolev_deficit=sobolev_deficit,
            hls_deficit=hls_deficit,
            remainder_lhs=hls_deficit,
            remainder_rhs_bound=rhs,
            remainder_ok=ok,
        )
    return DeficitReport(sobolev_deficit=sobolev_deficit, hls_deficit=hls_deficit)


def harnack_ratio(v: ZonalField) -> float:
    """max/min of a positive field over the nodes."""
    lo = float(v.nodal.min())
    if lo <= 0.0:
        raise DomainError("harnack_ratio requires a strictly positive field")
    return float(v.nodal.max()) / lo


def trial_field(grid: ZonalGrid, seed: int, rho: float = 0.7, min_frac: float = 0.1,
                amplitude: float = 1.0) -> ZonalField:
    """Seeded random positive band-limited field.

    Coefficients decay like rho^k; a constant is added so min = min_frac * max,
    then the field is scaled to the requested sup amplitude.  Deterministic in
    the seed.
    """
    rng = np.random.default_rng(seed)
    K = grid.degree_max
    coeffs = rng.uniform(-1.0, 1.0, K + 1) * rho ** np.arange(K + 1)
    raw = synthesize(grid, coeffs).nodal
    shift = (min_frac * raw.max() - raw.min()) / (1.0 - min_frac)
    vals = raw + shift
    return ZonalField(grid, vals * (amplitude / vals.max()))


def extinction_report(
    clocks: Sequence[float], w_fields: Sequence[ZonalField], params: SphereParams
) -> ExtinctionReport:
    """Assemble the extinction summary from a recorded plain-flow orbit.

    Estimates the extinction time from the mass series, converts snapshots to
    rescaled-orbit fields, fits the bubble family (fixed steady amplitude for
    the residual history, free amplitude at the final usable snapshot for the
    measured profile constant) and checks the time-bound sandwich.
    """
    if len(clocks) != len(w_fields) or len(clocks) < 5:
        raise EstimationError("need at least 5 recorded snapshots")
    cs = constants(params)
    f_series = [(t, functional_F(w)) for t, w in zip(clocks, w_fields)]
    T_hat = estimate_extinction_time(f_series, params)
    T_lower, T_upper = extinction_bounds(w_fields[0])
    F0 = f_series[0][1]
    slack = 1e-9
    sandwich_ok = T_hat <= T_upper * (1 + slack) and (
        T_lower is None or T_lower * (1 - slack) <= T_hat
    )

    tm = TimeMap(extinction_time=T_hat)
    history = []
    last_v = None
    for t, w in zip(clocks, w_fields):
        if t >= T_hat * (1 - 1e-9):
            break
        v = v_from_w(w, tm, t)
        s = time_map_inverse(tm, t)
        fit = fit_bubble(v)
        history.append((s, fit.residual_sup, fit.lambda_hat))
        last_v = v
    if last_v is None:
        raise EstimationError("no snapshot lies before the estimated extinction time")
    lam_hat, amp_hat, _ = fit_bubble_free_amplitude(last_v)
    k_measured = amp_hat ** (1.0 / cs.m)
    return ExtinctionReport(
        T_hat=T_hat,
        T_upper=T_upper,
        T_lower=T_lower,
        F0=F0,
        sandwich_ok=bool(sandwich_ok),
        lambda_limit=lam_hat,
        k_measured=k_measured,
        residual_history=history,
    )
