"""Background profiles, the Q functional against hand-integrated single-mode
fields, parameter selection, calibration minimality, and the certificate
reports."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slipconvect.boundcert import (
    BoundParams,
    CalibrationDatum,
    QBreakdown,
    RegimeError,
    calibrate_constants,
    certify,
    certify_infinite_pr,
    check_calibration,
    choose_parameters,
    choose_parameters_infinite_pr,
    dc_bound_check,
    exponent,
    make_profile,
    q_functional,
    q_functional_averaged,
    regime_satisfied,
    theta_of,
)
from slipconvect.config import PhysicalParams
from slipconvect.diagnostics import RunningAverages, spatial_record
from slipconvect.dynamics import advance_state, evaluate_flow, init_state
from slipconvect.elliptic import VelocityPair
from slipconvect.field import Grid, ScalarField, ddx2, l2_norm_sq

GAMMA = 2.0
K1 = 2.0 * math.pi / GAMMA


def uniform_x2(n2):
    return np.linspace(0.0, 1.0, n2 + 1)


# --- profile ------------------------------------------------------------------

def test_profile_values_quarter_layer():
    x2 = uniform_x2(16)
    prof = make_profile(0.25, x2)
    assert prof.delta == 0.25
    assert prof.j_delta == 4
    assert prof.tau[0] == 1.0
    assert prof.tau[-1] == 0.0
    assert prof.tau[2] == pytest.approx(0.75)   # x2 = 1/8
    assert prof.tau[8] == 0.5                   # bulk
    assert prof.tau[14] == pytest.approx(0.25)  # x2 = 7/8
    assert np.all(prof.dtau[:5] == -2.0)
    assert np.all(prof.dtau[5:12] == 0.0)
    assert prof.int_dtau_sq == pytest.approx(2.0)


def test_profile_rounding_and_validation():
    x2 = uniform_x2(16)
    assert make_profile(0.26, x2).delta == 0.25
    assert make_profile(0.26, x2).delta_requested == 0.26
    # a request near 1/2 lands strictly below it
    assert make_profile(0.49, x2).delta == pytest.approx(0.4375)
    for bad in (0.0, 0.5, 0.7, -0.1):
        with pytest.raises(ValueError, match="layer width"):
            make_profile(bad, x2)


def test_tau_prime_integral_telescopes():
    """integral of tau' over [0,1] is tau(1) - tau(0) = -1 for any layer."""
    x2 = uniform_x2(48)
    for delta in (0.1, 0.25, 1.0 / 3.0):
        prof = make_profile(delta, x2)
        assert prof.tau_prime_integral(np.ones_like(x2)) == pytest.approx(-1.0)
        assert prof.layer_integral(np.ones_like(x2)) == pytest.approx(2.0 * prof.delta)


def test_theta_requires_matching_walls():
    g = Grid(n1=8, n2=16, gamma=GAMMA)
    prof = make_profile(0.25, g.x2)
    temp = ScalarField.zeros(g)
    temp.data[0, :] = 1.0 - g.x2
    theta = theta_of(temp, prof)
    assert np.max(np.abs(theta.data[:, 0])) < 1e-13
    assert np.max(np.abs(theta.data[:, -1])) < 1e-13
    temp.data[0, 0] += 0.1
    with pytest.raises(ValueError):
        theta_of(temp, prof)


# --- parameter validation -----------------------------------------------------

@pytest.mark.parametrize(
    "kwargs,match",
    [
        (dict(b=1.0), "b must"),
        (dict(b=-0.1), "b must"),
        (dict(a=-1e-3), "nonnegative"),
        (dict(eps=0.0), "eps must"),
        (dict(delta=0.5), "delta must"),
        (dict(c0=-1.0), "c0, c2"),
    ],
)
def test_bound_params_validation(kwargs, match):
    base = dict(a=1e-3, b=0.5, m=0.0, delta=0.1, eps=1e-3, c0=1.0, c2=1.0)
    base.update(kwargs)
    with pytest.raises(ValueError, match=match):
        BoundParams(**base)


# --- Q functional on hand-integrable fields ------------------------------------

def test_q_functional_single_mode_oracle():
    """Every Q term against closed-form integrals of one-mode fields."""
    g = Grid(n1=32, n2=64, gamma=GAMMA)
    phys = PhysicalParams(ra=1e4, pr=1.0, ls=2.0, gamma=GAMMA)
    delta = 0.25
    bp = BoundParams(a=2e-3, b=0.5, m=1e-6, delta=delta, eps=1e-3, c0=1.0, c2=1.0)
    prof = make_profile(delta, g.x2)

    eps_t, w_amp, omega_amp, u1_amp = 0.1, 0.5, 2.0, 0.4
    # theta whose T = theta + tau is the smooth 1 - x2 + mode
    theta = ScalarField.from_function(
        g, lambda x1, x2: eps_t * np.sin(np.pi * x2) * np.cos(K1 * x1)
    )
    theta.data[0, :] = (1.0 - g.x2) - prof.tau
    omega = ScalarField.from_function(
        g, lambda x1, x2: omega_amp * np.sin(np.pi * x2) * np.sin(K1 * x1)
    )
    u1 = ScalarField.from_function(
        g, lambda x1, x2: u1_amp * np.sin(K1 * x1) + 0.0 * x2
    )
    u2 = ScalarField.from_function(
        g, lambda x1, x2: w_amp * np.sin(np.pi * x2) * np.cos(K1 * x1)
    )
    p = ScalarField.from_function(g, lambda x1, x2: (1.0 + x2) * np.cos(K1 * x1))

    q = q_functional(theta, VelocityPair(u1=u1, u2=u2), omega, p, prof, bp, phys)

    assert q.m_ra2 == pytest.approx(bp.m * phys.ra**2, rel=1e-14)
    assert q.grad1_theta == pytest.approx(eps_t**2 * K1**2 / 4.0, rel=1e-12)
    # mean part integrates to 1/(2 delta) - 1 exactly; the sine mode adds its
    # own FD norm through the same orthogonal split
    mode_only = ScalarField(g, theta.data.copy())
    mode_only.data[0, :] = 0.0
    expected_g2 = 0.5 / delta - 1.0 + l2_norm_sq(ddx2(mode_only))
    assert q.grad2_theta == pytest.approx(expected_g2, rel=1e-12)
    # cross term: layer integral of (eps w/2) sin^2(pi x2)
    layer = delta - math.sin(2.0 * math.pi * delta) / (2.0 * math.pi)
    assert q.cross == pytest.approx(
        -eps_t * w_amp * layer / (2.0 * delta), rel=5e-3
    )
    assert q.b_enstrophy == pytest.approx(
        (bp.b / phys.ra) * omega_amp**2 / 4.0, rel=1e-12
    )
    assert q.b_wall == pytest.approx(
        (bp.b / (phys.ra * phys.ls)) * u1_amp**2, rel=1e-12
    )
    grad_omega = omega_amp**2 * (K1**2 + np.pi**2) / 4.0
    assert q.a_grad_omega == pytest.approx(bp.a * grad_omega, rel=2e-3)
    # wall pressure work: mean_x1(p d1u1) = k1 A p_wall / 2 on each wall
    wall_work = K1 * u1_amp * (1.0 + 2.0) / 2.0
    assert q.a_wall_pressure == pytest.approx(-(bp.a / phys.ls) * wall_work, rel=1e-12)
    assert q.a_cross == pytest.approx(
        bp.a * phys.ra * omega_amp * eps_t * K1 / 4.0, rel=1e-12
    )
    assert q.total == pytest.approx(math.fsum(q.parts().values()), abs=0.0)


def test_q_averaged_matches_instantaneous():
    """A single-record average reproduces the instantaneous Q exactly."""
    g = Grid(n1=24, n2=24, gamma=GAMMA)
    phys = PhysicalParams(ra=5e4, pr=10.0, ls=2.0, gamma=GAMMA)
    state = init_state(g, phys, mode="perturbed", amplitude=5e-2, seed=8)
    for _ in range(5):
        state = advance_state(state, phys, 2e-5)
    flow = evaluate_flow(state, phys)
    bundle = spatial_record(state, flow, phys)
    avgs = RunningAverages(t_start=0.0)
    avgs.add(bundle.record.scalars(), bundle.profiles)

    bp = BoundParams(a=1e-4, b=0.5, m=1e-7, delta=0.125, eps=1e-4, c0=1.0, c2=1.0)
    prof = make_profile(0.125, g.x2)
    q_avg = q_functional_averaged(avgs, prof, bp, phys)
    theta = theta_of(state.temp, prof)
    q_inst = q_functional(
        theta, flow.vel, state.omega, bundle.pressure, prof, bp, phys
    )
    for key, value in q_inst.parts().items():
        assert q_avg.parts()[key] == pytest.approx(value, rel=1e-10, abs=1e-13)


# --- parameter selection --------------------------------------------------------

def test_choose_parameters_hand_values():
    phys = PhysicalParams(ra=1e6, pr=10.0, ls=math.inf, gamma=GAMMA)
    bp, info = choose_parameters(phys, b=0.5, c0=1.0, c2=1.0)
    assert info["a0"] == pytest.approx(0.005, rel=1e-14)
    assert bp.a == pytest.approx(0.005 * phys.ra**-1.5, rel=1e-14)
    assert bp.eps == bp.a
    assert bp.m == 0.0
    assert info["delta_raw"] * phys.ra ** (5.0 / 12.0) == pytest.approx(
        6.25e-4 ** (1.0 / 6.0), rel=1e-12
    )
    assert not info["delta_clamped"]
    assert info["regime_ok"]
    # velocity-dependent a0 reduction
    _, info2 = choose_parameters(phys, b=0.5, c0=1.0, c2=1.0, u0_w1r=10.0 * phys.ra)
    assert info2["a0"] == pytest.approx(5e-5, rel=1e-12)
    # finite slip length activates M
    phys_ls = PhysicalParams(ra=1e6, pr=10.0, ls=4.0, gamma=GAMMA)
    bp3, info3 = choose_parameters(phys_ls, b=0.5, c0=1.0, c2=1.5)
    assert bp3.m == pytest.approx(bp3.a * 1.5**2 / (2.0 * 16.0), rel=1e-13)
    assert info3["nu_bound_asymptotic"] > info["nu_bound_asymptotic"]


def test_choose_parameters_grid_floor():
    """Grid alignment rounds the layer down: delta^6 drives the only negative
    coefficient term, so the aligned value must not exceed the target."""
    phys = PhysicalParams(ra=1e4, pr=10.0, ls=math.inf, gamma=GAMMA)
    x2 = uniform_x2(64)
    bp, info = choose_parameters(phys, b=0.5, c0=4e-5, c2=1.0, x2=x2)
    assert bp.delta <= info["delta_raw"] + 1e-15
    assert any(abs(bp.delta - v) < 1e-15 for v in x2)


def test_choose_parameters_clamp_and_regime():
    phys = PhysicalParams(ra=100.0, pr=1.0, ls=math.inf, gamma=GAMMA)
    bp, info = choose_parameters(phys, b=0.5, c0=1e-9, c2=1.0)
    assert info["delta_clamped"]
    assert bp.delta < 0.5
    bad = PhysicalParams(ra=1e6, pr=1.0, ls=1.0, gamma=GAMMA)
    assert not regime_satisfied(bad)
    with pytest.raises(RegimeError):
        choose_parameters(bad, strict_regime=True)
    with pytest.raises(ValueError, match="positive"):
        choose_parameters(phys, c0=0.0)


def test_choose_parameters_infinite_pr_coefficients():
    phys = PhysicalParams(ra=5e4, pr=math.inf, ls=math.inf, gamma=GAMMA)
    c0_b, c_lap = 5.6e-4, 0.75
    x2 = uniform_x2(64)
    bp, info = choose_parameters_infinite_pr(phys, b=0.5, c0_b=c0_b, c_lap=c_lap, x2=x2)
    assert bp.a == 0.0 and bp.m == 0.0
    assert bp.eps == pytest.approx(1.0 / (phys.ra * math.sqrt(c_lap)), rel=1e-14)
    assert info["delta_raw"] * phys.ra ** (5.0 / 12.0) == pytest.approx(
        (0.5 / (c0_b * c_lap ** (1.0 / 3.0))) ** 0.25, rel=1e-12
    )
    assert bp.delta <= info["delta_raw"]
    # floor alignment keeps the omega coefficient nonnegative
    assert info["coeff_omega"] >= 0.0
    assert info["coeff_d11"] == pytest.approx(
        3.0 / (8.0 * c_lap * phys.ra**2), rel=1e-12
    )


# --- exponent --------------------------------------------------------------------

def test_exponent_exact_values():
    assert exponent(0.0) == 0.5
    assert exponent(1.0 / 24.0) == pytest.approx(5.0 / 12.0, abs=1e-15)
    assert exponent(1.0 / 24.0 - 1e-12) == pytest.approx(5.0 / 12.0, abs=1e-11)
    assert exponent(1.0) == 5.0 / 12.0
    assert exponent(100.0) == 5.0 / 12.0
    assert exponent(1.0 / 48.0) == pytest.approx(0.5 - 1.0 / 24.0, abs=1e-15)
    with pytest.raises(ValueError):
        exponent(-0.01)


@given(st.floats(min_value=0.0, max_value=10.0, allow_nan=False))
def test_exponent_range_and_monotone(alpha):
    p = exponent(alpha)
    assert 5.0 / 12.0 <= p <= 0.5
    assert exponent(alpha + 0.01) <= p + 1e-15


# --- calibration ------------------------------------------------------------------

def hand_datum(x2, u2T_value=1.0, label="d"):
    return CalibrationDatum(
        label=label,
        u2T_profile=np.full_like(x2, u2T_value),
        dT2_profile=-np.ones_like(x2),
        grad2_T_sq=1.0,
        enstrophy=2.0,
        d1_omega_sq=3.0,
        d11_omega_sq=4.0,
        lap_omega_sq=5.0,
        max_pressure_ratio=1.2,
        x2=x2,
    )


def test_calibration_hand_oracle_single_delta():
    """Flat u2T = 1 and dT2 = -1: the cross term is 2, <|d2 theta|^2> is
    1/(2 delta) - 1, so K = 2.5 - 1/(4 delta).  At delta = 1/4 the analytic
    eps peaks give c0_a = K^2/(D1 delta^6 Z) and
    c0_b = (3/4) K (K/D11)^(1/3) / (delta^4 Z)."""
    x2 = uniform_x2(64)
    datum = hand_datum(x2)
    out = calibrate_constants([datum], deltas=[0.25])
    K = 2.5 - 1.0 / (4.0 * 0.25)
    c0_a_expect = K**2 / (3.0 * 0.25**6 * 2.0)
    c0_b_expect = 0.75 * K * (K / 4.0) ** (1.0 / 3.0) / (0.25**4 * 2.0)
    assert out["c0_a"] == pytest.approx(c0_a_expect, rel=1e-12)
    assert out["c0_b"] == pytest.approx(c0_b_expect, rel=1e-12)
    assert out["c2"] == 1.2
    assert out["c_lap"] == pytest.approx(0.8)
    assert not out["degenerate"]
    assert out["argmax_a"]["delta"] == 0.25


def test_calibration_minimality():
    x2 = uniform_x2(32)
    data = [hand_datum(x2, 1.0, "a"), hand_datum(x2, 2.5, "b")]
    deltas = [0.125, 0.25, 0.375]
    out = calibrate_constants(data, deltas=deltas)
    assert check_calibration(data, out["c0_a"], out["c0_b"], deltas)
    assert not check_calibration(data, out["c0_a"] / 1.01, out["c0_b"], deltas)
    assert not check_calibration(data, out["c0_a"], out["c0_b"] / 1.01, deltas)


def test_calibration_degenerate_paths():
    x2 = uniform_x2(32)
    quiet = CalibrationDatum(
        label="rest", u2T_profile=np.zeros_like(x2), dT2_profile=-np.ones_like(x2),
        grad2_T_sq=1.0, enstrophy=1.0, d1_omega_sq=1.0, d11_omega_sq=1.0,
        lap_omega_sq=1.0, max_pressure_ratio=0.9, x2=x2,
    )
    out = calibrate_constants([quiet])
    assert out["degenerate"]
    assert out["c0_a"] == 0.0
    dead = CalibrationDatum(
        label="zero", u2T_profile=np.zeros_like(x2), dT2_profile=np.zeros_like(x2),
        grad2_T_sq=0.0, enstrophy=0.0, d1_omega_sq=0.0, d11_omega_sq=0.0,
        lap_omega_sq=0.0, max_pressure_ratio=0.0, x2=x2,
    )
    with pytest.raises(ValueError, match="degenerate"):
        calibrate_constants([dead])
    with pytest.raises(ValueError, match="no calibration data"):
        calibrate_constants([])


# --- certificates ------------------------------------------------------------------

def conduction_averages(x2):
    n = len(x2)
    means = {
        "grad1_T_sq": 0.0, "grad2_T_sq": 1.0, "enstrophy": 0.0,
        "wall_u1_sq_bottom": 0.0, "wall_u1_sq_top": 0.0, "grad_omega_sq": 0.0,
        "wall_p_du1_bottom": 0.0, "wall_p_du1_top": 0.0, "omega_dT1": 0.0,
        "nu_flux": 1.0, "nu_grad": 1.0, "nu_wall": 1.0, "d11_omega_sq": 0.0,
    }
    profiles = {"dT2": (-np.ones(n)).tolist(), "u2T": np.zeros(n).tolist()}
    return RunningAverages.from_dict(
        {"t_start": 0.0, "means": means, "profile_means": profiles}
    )


def test_certify_conduction_identity():
    phys = PhysicalParams(ra=1e4, pr=10.0, ls=math.inf, gamma=GAMMA)
    x2 = uniform_x2(64)
    avgs = conduction_averages(x2)
    bp, info = choose_parameters(phys, b=0.5, c0=4e-5, c2=1.0, x2=x2)
    report = certify(avgs, bp, phys, x2, info["nu_bound_asymptotic"])
    q = report["q_breakdown"]
    assert q["grad2_theta"] == pytest.approx(0.5 / report["params"]["delta"] - 1.0)
    assert report["q_nonnegative"]
    assert report["certified"]
    assert report["violating_term"] is None
    assert report["coeff_a"] > 0.0
    assert report["grad_omega_coeff"] > 0.0
    # (1-b) Nu + b = 1/(2 delta) + M Ra^2 - Q holds exactly on conduction
    assert abs(report["closure_defect"]) < 1e-10
    assert report["nu_bound_certified"] >= 1.0
    assert report["nu_below_certified"]
    assert report["nu_bound_identity"] == pytest.approx(1.0, abs=1e-10)


def test_certify_flags_dominant_negative_term():
    phys = PhysicalParams(ra=1e4, pr=10.0, ls=math.inf, gamma=GAMMA)
    x2 = uniform_x2(64)
    avgs = conduction_averages(x2)
    big = RunningAverages.from_dict(avgs.to_dict())
    big.profile_sums["u2T"] = 100.0 * np.ones(len(x2))
    bp, _ = choose_parameters(phys, b=0.5, c0=4e-5, c2=1.0, x2=x2)
    report = certify(big, bp, phys, x2)
    assert not report["q_nonnegative"]
    assert not report["certified"]
    assert report["violating_term"] == "cross"


def test_certify_flags_bad_coefficients():
    phys = PhysicalParams(ra=1e4, pr=10.0, ls=math.inf, gamma=GAMMA)
    x2 = uniform_x2(64)
    avgs = conduction_averages(x2)
    # a far above the optimal scale drives the lower-bound coefficient negative
    heavy = BoundParams(a=1.0, b=0.5, m=0.0, delta=0.1, eps=1.0, c0=1.0, c2=1.0)
    report = certify(avgs, heavy, phys, x2)
    assert report["q_nonnegative"]
    assert report["coeff_a"] < 0.0
    assert not report["certified"]
    assert report["violating_term"] == "coeff_a"
    # slip length below the threshold 2 sqrt(c2) kills the grad-omega weight
    # (a and c0 small enough that coeff_a stays positive)
    phys_ls = PhysicalParams(ra=1e4, pr=1e6, ls=1.0, gamma=GAMMA)
    bp2 = BoundParams(a=1e-9, b=0.5, m=0.0, delta=0.1, eps=1e-9, c0=1e-12, c2=1.0)
    report2 = certify(avgs, bp2, phys_ls, x2)
    assert report2["coeff_a"] > 0.0
    assert report2["l0_threshold"] == 2.0
    assert report2["grad_omega_coeff"] < 0.0
    assert report2["violating_term"] == "grad_omega_coeff"


def test_certify_infinite_pr_report():
    phys = PhysicalParams(ra=5e4, pr=math.inf, ls=math.inf, gamma=GAMMA)
    x2 = uniform_x2(64)
    avgs = conduction_averages(x2)
    bp, info = choose_parameters_infinite_pr(phys, b=0.5, c0_b=5.6e-4, c_lap=0.75, x2=x2)
    report = certify_infinite_pr(avgs, bp, phys, x2, info)
    assert report["kind"].endswith("(inertia-free)")
    assert report["coeff_omega"] >= 0.0
    assert report["coeff_d11"] > 0.0
    assert report["q_lower_bound"] == 0.0  # rest state: both norms vanish
    assert report["certified"]
    assert report["delta_scaling"] == pytest.approx(
        bp.delta * phys.ra ** (5.0 / 12.0), rel=1e-14
    )


def test_dc_bound_check_values():
    phys = PhysicalParams(ra=1e4, pr=1.0, ls=math.inf, gamma=GAMMA)
    x2 = uniform_x2(32)
    avgs = conduction_averages(x2)
    out = dc_bound_check(avgs, 0.1, phys)
    assert out["nu"] == 1.0
    assert out["rhs_at_delta"] == pytest.approx(5.0)  # excess = 0: just 1/(2 delta)
    assert out["holds_at_delta"] and out["holds_at_delta_star"]
    # convecting value: rhs(d) = 1/(2d) + 2 d sqrt(nu (nu-1) ra)
    five = RunningAverages.from_dict(
        {"t_start": 0.0, "means": {"nu_flux": 5.0}, "profile_means": {}}
    )
    out5 = dc_bound_check(five, 0.05, phys)
    assert out5["rhs_at_delta"] == pytest.approx(
        10.0 + 0.1 * math.sqrt(5.0 * 4.0 * 1e4), rel=1e-12
    )
    assert out5["delta_star"] == pytest.approx(0.5 / math.sqrt(5.0) / 10.0, rel=1e-12)
    assert out5["margin_at_delta_star"] == pytest.approx(
        out5["rhs_at_delta_star"] - 5.0, rel=1e-12
    )
