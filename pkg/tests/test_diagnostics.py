import math

import numpy as np
import pytest
from scipy import integrate as scipy_integrate

from fracflow import (
    BubbleParams,
    FlowKind,
    FlowState,
    SphereParams,
    ZonalField,
    bubble_zonal,
    build_grid,
    constants,
    synthesize,
)
from fracflow.conformal import steady_amplitude
from fracflow.diagnostics import (
    accumulate_G,
    deficits,
    estimate_extinction_time,
    extinction_bounds,
    fit_bubble,
    fit_bubble_free_amplitude,
    functional_F,
    functional_H,
    functional_J,
    functional_S,
    harnack_ratio,
    qegk,
    trial_field,
)
from fracflow.errors import DomainError, EstimationError
from fracflow.zonal import apply_psigma, integrate


def _const(grid, c):
    return ZonalField(grid, np.full(grid.node_count, float(c)))


def test_J_at_steady_constant(grid35, p35):
    cs = constants(p35)
    # direct arithmetic: (1/2 * 1 * 0.25 - 0.125 / 1.5) * 2 pi^2
    expect = (0.5 * 0.25 - 0.125 / 1.5) * 2 * math.pi**2
    assert functional_J(_const(grid35, cs.c_steady)) == pytest.approx(expect, rel=1e-10)


def test_J_small_field_limit(grid35):
    assert abs(functional_J(_const(grid35, 1e-8))) <= 1e-14


def test_S_examples(grid35, p35):
    assert functional_S(_const(grid35, 1.0)) == pytest.approx(
        (2 * math.pi**2) ** (1 / 3), rel=1e-10
    )
    v = trial_field(grid35, seed=8)
    assert functional_S(3.0 * v) == pytest.approx(functional_S(v), rel=1e-12)
    s_const = functional_S(_const(grid35, 1.0))
    for seed in range(12):
        trial = trial_field(grid35, seed=seed)
        assert functional_S(trial) >= s_const * (1 - 1e-10)
    with pytest.raises(DomainError):
        functional_S(_const(grid35, 0.0))


def test_F_constant(grid35, p35):
    cs = constants(p35)
    assert functional_F(_const(grid35, 1.0)) == pytest.approx(cs.vol_sn, rel=1e-12)


def test_H_extremal_and_sign(p35):
    grid = build_grid(p35, 48)
    cs = constants(p35)
    amp = steady_amplitude(p35)
    w = bubble_zonal(p35, BubbleParams(lam=1.3, amplitude=amp), grid)
    psi = ZonalField(grid, w.nodal**cs.bigN)
    scale = float(np.dot(psi.spectral**2, 1.0 / grid.multipliers))
    assert abs(functional_H(psi)) <= 1e-8 * scale
    off = synthesize(grid, np.zeros(grid.degree_max + 1))
    coeffs = np.zeros(grid.degree_max + 1)
    coeffs[0] = math.sqrt(cs.vol_sn)
    coeffs[2] = 0.4
    off = synthesize(grid, coeffs)
    assert functional_H(off) < 0


def test_qegk_selfsimilar_equality_case(grid35, p35):
    cs = constants(p35)
    w = _const(grid35, 0.7)
    state_a = FlowState(w, 0.0, FlowKind.UNNORMALIZED)
    state_b = FlowState(w, 0.01, FlowKind.UNNORMALIZED)
    rec = qegk(state_a, state_b)
    scale = cs.psigma1**2 * 0.7 ** (1 + cs.bigN) * cs.vol_sn
    assert abs(rec.K_val) <= 1e-10 * scale
    # the quotient bound equivalent to monotone H
    assert cs.sobolev_s * rec.Q >= 1.0 - 1e-12


def test_qegk_quotient_bound_random(grid35, p35):
    cs = constants(p35)
    for seed in range(8):
        w = trial_field(grid35, seed=seed)
        rec = qegk(
            FlowState(w, 0.0, FlowKind.UNNORMALIZED),
            FlowState(w, 0.01, FlowKind.UNNORMALIZED),
        )
        assert cs.sobolev_s * rec.Q >= 1.0 - 1e-12
        assert rec.E > 0 and rec.K_val >= 0


def test_K_weight_radial_oracle():
    # certification of the conformal weight w^{1-N} in the K integrand: the
    # sphere-side value must match a flat-space radial quadrature on a bubble
    # instance where every ingredient is in closed form
    params = SphereParams(3, 0.5)
    grid = build_grid(params, 64)
    cs = constants(params)
    n, s = params.n, params.sigma
    lam = 1.5
    a = 0.8 * steady_amplitude(params)
    p_minus = (n - 2 * s) / 2

    w = ZonalField(
        grid, a * bubble_zonal(params, BubbleParams(lam=lam, amplitude=1.0), grid).nodal
    )
    rec = qegk(
        FlowState(w, 0.0, FlowKind.UNNORMALIZED),
        FlowState(w, 0.01, FlowKind.UNNORMALIZED),
    )

    area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    c_flat = 2 ** (2 * s) * cs.psigma1

    def bubble(r):
        return (lam / (lam**2 + r * r)) ** p_minus

    def integrand(r):
        um = a * bubble(r)
        u = um**cs.bigN
        lap = a * c_flat * bubble(r) ** cs.bigN
        return u ** (cs.m - 1) * (-lap + rec.E * u) ** 2 * r ** (n - 1)

    flat, err = scipy_integrate.quad(integrand, 0.0, np.inf, limit=400)
    flat *= area
    assert rec.K_val == pytest.approx(flat, rel=1e-6)


def test_H_rate_identity_along_orbit(p35):
    # the deficit functional's growth rate equals 2 F (S Q - 1): centered
    # differences of recorded H against the analytic rate at the midpoint
    from fracflow import FlowKind, FlowState, SolverConfig, run

    grid = build_grid(p35, 16)
    cs = constants(p35)
    traj = run(
        trial_field(grid, seed=201),
        FlowKind.UNNORMALIZED,
        SolverConfig(record_every=1, max_steps=400),
    )
    snaps = traj.snapshots
    hi = min(len(snaps) - 2, 150)
    checked = 0
    for i in range(10, hi, 20):
        prev, here, nxt = snaps[i - 1], snaps[i], snaps[i + 1]
        dH = (nxt.record.H - prev.record.H) / (nxt.clock - prev.clock)
        rec = qegk(
            FlowState(here.field, here.clock, FlowKind.UNNORMALIZED),
            FlowState(nxt.field, nxt.clock, FlowKind.UNNORMALIZED),
        )
        predicted = 2.0 * here.record.F * (cs.sobolev_s * rec.Q - 1.0)
        assert dH == pytest.approx(predicted, rel=0.01)
        checked += 1
    assert checked >= 5


def test_accumulate_G(p35):
    clocks = np.linspace(0.0, 1.0, 11)
    e_vals = np.full(11, 0.5)
    cs = constants(p35)
    assert accumulate_G(clocks, e_vals, 0.3, 0.3, p35) == 1.0
    got = accumulate_G(clocks, e_vals, 0.0, 1.0, p35)
    assert got == pytest.approx(math.exp((cs.m + 1) * 0.5), rel=1e-12)
    with pytest.raises(DomainError):
        accumulate_G(clocks, e_vals, 0.0, 2.0, p35)


def test_extinction_bounds_gates():
    g35 = build_grid(SphereParams(3, 0.5), 12)
    lo, hi = extinction_bounds(_const(g35, 1.0))
    assert lo is not None and hi > 0  # n=3 > 4*0.5
    g275 = build_grid(SphereParams(2, 0.75), 12)
    lo2, hi2 = extinction_bounds(_const(g275, 1.0))
    assert lo2 is None  # 2 < 3 = 4*0.75


def test_extinction_bounds_sharp_at_extremal(p35):
    # constant data lie on the extremal family: the upper bound saturates
    grid = build_grid(p35, 12)
    cs = constants(p35)
    w0 = _const(grid, 1.0)
    T_exact = 1.0 / ((1 - cs.m) * cs.psigma1)
    lo, hi = extinction_bounds(w0)
    assert hi / T_exact == pytest.approx(1.0, abs=1e-3)
    assert hi / T_exact >= 1.0 - 1e-9
    assert lo <= T_exact <= hi * (1 + 1e-9)


def test_estimate_extinction_time_power_law(p35):
    cs = constants(p35)
    power = (cs.m + 1) / (1 - cs.m)
    ts = np.linspace(0.0, 0.9, 40)
    series = [(t, (1.0 - t) ** power) for t in ts]
    assert estimate_extinction_time(series, p35) == pytest.approx(1.0, abs=1e-6)


def test_estimate_extinction_time_errors(p35):
    with pytest.raises(EstimationError):
        estimate_extinction_time([(0.0, 1.0), (0.1, 0.9)], p35)
    ts = np.linspace(0, 1, 30)
    rising = [(t, 1.0 + t) for t in ts]
    with pytest.raises(EstimationError):
        estimate_extinction_time(rising, p35)


def test_fit_bubble_family_member(grid35, p35):
    amp = steady_amplitude(p35)
    v = bubble_zonal(p35, BubbleParams(lam=2.0, amplitude=amp), grid35)
    fit = fit_bubble(v)
    assert fit.lambda_hat == pytest.approx(2.0, abs=1e-6)
    assert fit.residual_sup <= 1e-10
    assert not fit.boundary_warning


def test_fit_bubble_constant(grid35, p35):
    cs = constants(p35)
    fit = fit_bubble(_const(grid35, cs.c_steady))
    assert fit.lambda_hat == pytest.approx(1.0, abs=1e-6)
    assert fit.residual_sup <= 1e-12


def test_fit_bubble_scale_mismatch(grid35, p35):
    cs = constants(p35)
    v = _const(grid35, 1.05 * cs.c_steady)
    fit = fit_bubble(v)
    assert fit.residual_sup > 1e-3
    # brute-force scan oracle: lambda = 1 is the best constant-approximant
    lams = np.geomspace(0.2, 5.0, 81)
    objs = []
    for lam in lams:
        b = bubble_zonal(p35, BubbleParams(lam=float(lam), amplitude=steady_amplitude(p35)), grid35)
        objs.append(float(np.dot(grid35.weights, (v.nodal - b.nodal) ** 2)))
    assert abs(math.log(fit.lambda_hat)) <= abs(math.log(lams[int(np.argmin(objs))])) + 0.1


def test_fit_bubble_free_amplitude(grid35, p35):
    amp = 0.85 * steady_amplitude(p35)
    v = bubble_zonal(p35, BubbleParams(lam=1.6, amplitude=amp), grid35)
    lam_hat, amp_hat, resid = fit_bubble_free_amplitude(v)
    assert lam_hat == pytest.approx(1.6, abs=1e-6)
    assert amp_hat == pytest.approx(amp, rel=1e-8)
    assert resid <= 1e-10


def test_deficits_extremal(grid35):
    rep = deficits(_const(grid35, 1.0))
    assert abs(rep.sobolev_deficit) <= 1e-10
    assert abs(rep.hls_deficit) <= 1e-10
    assert rep.remainder_ok is not None


def test_deficits_off_extremal(grid35, p35):
    cs = constants(p35)
    coeffs = np.zeros(grid35.degree_max + 1)
    coeffs[0] = math.sqrt(cs.vol_sn)
    coeffs[1] = 0.3
    v = synthesize(grid35, coeffs)
    rep = deficits(v)
    assert rep.sobolev_deficit > 0 and rep.hls_deficit > 0
    assert rep.remainder_ok


def test_deficits_gating():
    params = SphereParams(2, 0.75)
    grid = build_grid(params, 12)
    rep = deficits(_const(grid, 1.0))
    assert rep.remainder_lhs is None and rep.remainder_ok is None


@pytest.mark.parametrize("n,sigma", [(3, 0.5), (4, 0.25)])
def test_deficit_random_sweep(n, sigma):
    params = SphereParams(n, sigma)
    grid = build_grid(params, 16)
    for seed in range(25):
        rep = deficits(trial_field(grid, seed=seed))
        assert rep.sobolev_deficit >= -1e-9
        assert rep.hls_deficit >= -1e-9
        assert rep.remainder_ok


def test_harnack_examples(grid35, p35):
    assert harnack_ratio(_const(grid35, 3.0)) == 1.0
    b = bubble_zonal(p35, BubbleParams(lam=2.0, amplitude=1.0), grid35)
    ratio = harnack_ratio(b)
    # monotone profile: node extremes approach the pole values, whose ratio
    # is lam^{n-2s} = 4; interior nodes stay below it
    assert ratio <= 2.0 ** (p35.n - 2 * p35.sigma) + 1e-12
    assert ratio >= 0.95 * 2.0 ** (p35.n - 2 * p35.sigma)
    pert = ZonalField(grid35, 1.0 + 0.5 * grid35.basis[:, 1])
    assert harnack_ratio(pert) > 1.0
    with pytest.raises(DomainError):
        harnack_ratio(_const(grid35, -1.0))


def test_trial_field_contract(grid35):
    f = trial_field(grid35, seed=42)
    assert f.nodal.min() == pytest.approx(0.1 * f.nodal.max(), rel=1e-9)
    assert f.nodal.max() == pytest.approx(1.0, rel=1e-12)
    g = trial_field(grid35, seed=42)
    assert np.array_equal(f.nodal, g.nodal)
    h = trial_field(grid35, seed=43)
    assert not np.array_equal(f.nodal, h.nodal)
