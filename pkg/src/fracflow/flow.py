"""Right-hand sides and time integration for the three zonal flows.

All three flows share the structure d(v^N)/dclock = -P(v) + c v^N with

    c = r_sigma(v)   volume-preserving curvature flow (recomputed per stage),
    c = 0            plain flow, extinguishing in finite time,
    c = 1/(1-m)      fast-diffusion rescaling, whose steady states are the
                     bubble family at the profile amplitude.

Stepping is classical RK4 with a spectral stiffness bound on dt, positivity
rejection with halving, and reprojection to the retained degree after every
accepted step (implicit dealiasing).

The constant steady state of the rescaled flow is linearly unstable in the
pure-amplitude direction (rate (N-1) lambda_0 > 0): the rescaling tunes an
extinction time, and a mistuned amplitude drifts to 0 or infinity.  Rescaled
runs therefore renormalize int v^{N+1} to the steady-family value after each
step by default, which projects out exactly that neutral-unstable direction
and reproduces the orbit with the correctly tuned extinction time; disable
via SolverConfig.renormalize=False to integrate the raw equation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import diagnostics
from .errors import DomainError, StateError, StepFailure
from .specfun import SphereParams, constants
from .zonal import ZonalField, apply_psigma, integrate, project, quadratic_form

__all__ = [
    "FlowKind",
    "FlowState",
    "SolverConfig",
    "Termination",
    "Snapshot",
    "Trajectory",
    "sigma_curvature_avg",
    "rhs",
    "step",
    "run",
    "write_trajectory_csv",
    "CSV_COLUMNS",
]


class FlowKind(enum.Enum):
    NORMALIZED_YAMABE = "normalized-yamabe"
    UNNORMALIZED = "unnormalized"
    RESCALED_FAST_DIFFUSION = "rescaled-fast-diffusion"


class Termination(enum.Enum):
    CONVERGED = "converged"
    EXTINCT = "extinct"
    MAX_STEPS = "max-steps"
    STEP_FAILURE = "step-failure"


@dataclass
class FlowState:
    field: ZonalField
    clock: float
    kind: FlowKind
    step_index: int = 0


@dataclass
class SolverConfig:
    """Stepping and termination knobs.

    positivity_floor=None resolves to 1e-10 * min(initial) at run start.
    renormalize=None resolves to True for the rescaled kind, False otherwise.
    extinct_f_frac is the fraction of the initial mass at which a plain-flow
    run is declared extinct (the mass-power extrapolation is also consulted);
    integrating into the degenerate near-zero regime is never attempted.
    """

    dt_init: float = 0.1
    safety: float = 0.5
    positivity_floor: Optional[float] = None
    max_steps: int = 200_000
    stop_residual: float = 1e-9
    record_every: int = 10
    renormalize: Optional[bool] = None
    extinct_f_frac: float = 1e-5

    def __post_init__(self):
        if self.dt_init <= 0 or not 0 < self.safety <= 1:
            raise DomainError("dt_init must be positive and safety in (0, 1]")
        if self.max_steps <= 0 or self.stop_residual <= 0 or self.record_every <= 0:
            raise DomainError("max_steps, stop_residual, record_every must be positive")
        if self.positivity_floor is not None and self.positivity_floor <= 0:
            raise DomainError("positivity_floor must be positive when given")
        if not 0 < self.extinct_f_frac < 1:
            raise DomainError("extinct_f_frac must lie in (0, 1)")


@dataclass(frozen=True)
class Snapshot:
    clock: float
    field: ZonalField
    record: diagnostics.DiagRecord
    step_index: int
    dt: Optional[float]  # dt of the step that produced this state; None at start


@dataclass
class Trajectory:
    params: SphereParams
    kind: FlowKind
    config: SolverConfig
    snapshots: list
    termination: Termination

    @property
    def clocks(self) -> np.ndarray:
        return np.array([s.clock for s in self.snapshots])

    @property
    def fields(self) -> list:
        return [s.field for s in self.snapshots]


def sigma_curvature_avg(v: ZonalField) -> float:
    """Average curvature of the conformal metric: int v P(v) / int v^{N+1}."""
    if v.nodal.min() <= 0.0:
        raise DomainError("sigma_curvature_avg requires a strictly positive field")
    cs = constants(v.grid.params)
    vol = integrate(ZonalField(v.grid, v.nodal ** (cs.bigN + 1)))
    return quadratic_form(v) / vol


def _coefficient(kind: FlowKind, f: ZonalField, cs) -> float:
    if kind is FlowKind.NORMALIZED_YAMABE:
        return sigma_curvature_avg(f)
    if kind is FlowKind.RESCALED_FAST_DIFFUSION:
        return cs.inv_one_minus_m
    return 0.0


def rhs(state: FlowState) -> ZonalField:
    """Time derivative of the field: (N f^{N-1})^{-1} (-P(f) + c f^N), nodally."""
    f = state.field
    if f.nodal.min() <= 0.0:
        raise StateError("flow state lost positivity")
    cs = constants(f.grid.params)
    c = _coefficient(state.kind, f, cs)
    Pf = apply_psigma(f).nodal
    fn = f.nodal
    deriv = (-Pf + c * fn**cs.bigN) / (cs.bigN * fn ** (cs.bigN - 1.0))
    return ZonalField(f.grid, deriv)


def _stiffness_dt(f: ZonalField, cs, config: SolverConfig) -> float:
    lam_top = f.grid.multipliers[-1]
    dt = config.safety * cs.bigN * float(f.nodal.min()) ** (cs.bigN - 1.0) / lam_top
    return min(dt, config.dt_init)


def step(
    state: FlowState,
    config: SolverConfig,
    floor: float = 0.0,
    dt: Optional[float] = None,
) -> tuple[FlowState, float]:
    """One RK4 step with positivity rejection; returns (new state, dt used).

    dt defaults to the spectral stiffness bound safety * N min(f)^{N-1} /
    lambda_K clamped by dt_init.  Any stage or the reprojected result dipping
    below ``floor`` rejects the step and retries at dt/2, up to 20 halvings.
    """
    f0 = state.field
    if f0.nodal.min() <= floor:
        raise StateError("flow state is at or below the positivity floor")
    cs = constants(f0.grid.params)
    h = _stiffness_dt(f0, cs, config) if dt is None else float(dt)
    grid = f0.grid

    def deriv(nodal: np.ndarray) -> np.ndarray:
        stage = FlowState(ZonalField(grid, nodal), state.clock, state.kind, state.step_index)
        return rhs(stage).nodal

    y = f0.nodal
    k1 = deriv(y)
    for _ in range(21):
        stages_ok = True
        t2 = y + 0.5 * h * k1
        if t2.min() <= floor:
            stages_ok = False
        if stages_ok:
            k2 = deriv(t2)
            t3 = y + 0.5 * h * k2
            if t3.min() <= floor:
                stages_ok = False
        if stages_ok:
            k3 = deriv(t3)
            t4 = y + h * k3
            if t4.min() <= floor:
                stages_ok = False
        if stages_ok:
            k4 = deriv(t4)
            new_field = project(ZonalField(grid, y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)))
            if new_field.nodal.min() > floor:
                return (
                    FlowState(new_field, state.clock + h, state.kind, state.step_index + 1),
                    h,
                )
        h *= 0.5
    raise StepFailure(f"step rejected 20 times from clock {state.clock}")


def _family_volume(params: SphereParams) -> float:
    cs = constants(params)
    return cs.c_steady ** (cs.bigN + 1) * cs.vol_sn


def _renormalize(f: ZonalField, target_volume: float, cs) -> ZonalField:
    vol = integrate(ZonalField(f.grid, f.nodal ** (cs.bigN + 1)))
    theta = (target_volume / vol) ** (1.0 / (cs.bigN + 1.0))
    return ZonalField(f.grid, f.nodal * theta)


def _record(f: ZonalField, kind: FlowKind, cs) -> diagnostics.DiagRecord:
    volume = integrate(ZonalField(f.grid, f.nodal ** (cs.bigN + 1)))
    harnack = float(f.nodal.max() / f.nodal.min())
    J = S = F = H = r_sig = lam_fit = fit_res = None
    if kind is FlowKind.UNNORMALIZED:
        F = volume
        psi = ZonalField(f.grid, f.nodal**cs.bigN)
        H = diagnostics.functional_H(psi)
    else:
        S = diagnostics.functional_S(f)
        r_sig = sigma_curvature_avg(f)
        fit = diagnostics.fit_bubble(f)
        lam_fit, fit_res = fit.lambda_hat, fit.residual_sup
        if kind is FlowKind.RESCALED_FAST_DIFFUSION:
            J = diagnostics.functional_J(f)
    return diagnostics.DiagRecord(
        harnack_ratio=harnack,
        volume=volume,
        J=J,
        S_func=S,
        F=F,
        H=H,
        r_sigma=r_sig,
        lambda_fit=lam_fit,
        fit_residual=fit_res,
    )


def run(initial: ZonalField, kind: FlowKind, config: SolverConfig) -> Trajectory:
    """Integrate from a positive band-limited field until a termination event.

    Converged: sup|rhs| / sup|field| <= stop_residual (curvature / rescaled
    kinds; checked before the step budget, so a tie resolves to Converged).
    Extinct: plain-flow mass has dropped to extinct_f_frac of its initial
    value, or the linear extrapolation of F^{(1-m)/(m+1)} crosses zero within
    the next step.  MaxSteps / StepFailure otherwise.
    """
    params = initial.grid.params
    cs = constants(params)
    f = project(initial)
    if f.nodal.min() <= 0.0:
        raise StateError("initial field must be strictly positive (after projection)")
    floor = (
        config.positivity_floor
        if config.positivity_floor is not None
        else 1e-10 * float(f.nodal.min())
    )
    renorm = (
        config.renormalize
        if config.renormalize is not None
        else kind is FlowKind.RESCALED_FAST_DIFFUSION
    )
    target_vol = _family_volume(params)
    if renorm:
        f = _renormalize(f, target_vol, cs)

    state = FlowState(field=f, clock=0.0, kind=kind, step_index=0)
    snapshots = [Snapshot(0.0, state.field, _record(state.field, kind, cs), 0, None)]
    last_recorded = 0
    termination = Termination.MAX_STEPS

    F0 = integrate(ZonalField(f.grid, f.nodal ** (cs.bigN + 1)))
    y_exp = (1 - cs.m) / (cs.m + 1)
    y_prev = None
    clock_prev = None
    last_dt = None

    def record(st: FlowState, dt_used):
        nonlocal last_recorded
        snapshots.append(Snapshot(st.clock, st.field, _record(st.field, kind, cs), st.step_index, dt_used))
        last_recorded = st.step_index

    while True:
        r = rhs(state)
        resid = float(np.abs(r.nodal).max() / np.abs(state.field.nodal).max())
        if kind is not FlowKind.UNNORMALIZED and resid <= config.stop_residual:
            termination = Termination.CONVERGED
            break
        if kind is FlowKind.UNNORMALIZED:
            Fnow = integrate(ZonalField(state.field.grid, state.field.nodal ** (cs.bigN + 1)))
            y_now = Fnow**y_exp
            dt_next = _stiffness_dt(state.field, cs, config)
            crossing = False
            if y_prev is not None and state.clock > clock_prev:
                slope = (y_now - y_prev) / (state.clock - clock_prev)
                crossing = slope < 0 and y_now + slope * dt_next <= 0.0
            if Fnow <= config.extinct_f_frac * F0 or crossing:
                termination = Termination.EXTINCT
                break
            y_prev, clock_prev = y_now, state.clock
        if state.step_index >= config.max_steps:
            termination = Termination.MAX_STEPS
            break
        try:
            state, last_dt = step(state, config, floor)
        except StepFailure:
            termination = Termination.STEP_FAILURE
            break
        if renorm:
            state = FlowState(
                _renormalize(state.field, target_vol, cs),
                state.clock,
                state.kind,
                state.step_index,
            )
        if state.step_index % config.record_every == 0:
            record(state, last_dt)

    if state.step_index != last_recorded:
        record(state, last_dt)
    return Trajectory(
        params=params, kind=kind, config=config, snapshots=snapshots, termination=termination
    )


CSV_COLUMNS = [
    "step",
    "clock",
    "dt",
    "min_v",
    "max_v",
    "harnack_ratio",
    "volume",
    "J",
    "S_func",
    "F",
    "H",
    "r_sigma",
    "lambda_fit",
    "fit_residual",
]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def trajectory_csv_rows(traj: Trajectory):
    yield ",".join(CSV_COLUMNS)
    for snap in traj.snapshots:
        rec = snap.record
        cells = [
            _fmt(snap.step_index),
            _fmt(snap.clock),
            _fmt(snap.dt),
            _fmt(float(snap.field.nodal.min())),
            _fmt(float(snap.field.nodal.max())),
            _fmt(rec.harnack_ratio),
            _fmt(rec.volume),
            _fmt(rec.J),
            _fmt(rec.S_func),
            _fmt(rec.F),
            _fmt(rec.H),
            _fmt(rec.r_sigma),
            _fmt(rec.lambda_fit),
            _fmt(rec.fit_residual),
        ]
        yield ",".join(cells)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Emit one row per recorded snapshot with the fixed column schema."""
    with open(path, "w", newline="\n") as fh:
        for row in trajectory_csv_rows(traj):
            fh.write(row + "\n")
