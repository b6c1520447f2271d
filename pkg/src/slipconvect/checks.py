"""Self-contained verification suites: manufactured solutions, discrete
identities, balance-residual grid refinement, wall-coupled balances, and
determinism (including bit-exact restart)."""

from __future__ import annotations

import math

import numpy as np

from .config import PhysicalParams, RunConfig
from .diagnostics import (
    RunningAverages,
    appendix_identity_checks,
    averaged_balances,
    energy_balance_residual,
    enstrophy_balance_residual,
    spatial_record,
)
from .dynamics import (
    SimState,
    advance_state,
    advective_dt_limit,
    evaluate_flow,
    init_state,
    save_state,
    state_from_snapshot,
)
from .elliptic import (
    BCSpec,
    check_velocity,
    helmholtz_solve,
    solve_pressure,
    solve_streamfunction,
)
from .field import (
    Grid,
    ScalarField,
    hermitian_symmetry_error,
    l2_norm_sq,
    linf_norm,
    read_snapshot,
)
from .runner import finalize_residuals


def _mini_run(
    phys: PhysicalParams,
    grid: Grid,
    t_end: float,
    dt_fixed: float | None = None,
    dt_max: float = 1e-3,
    cfl: float = 0.5,
    seed: int = 0,
    amplitude: float = 1e-3,
    t_transient: float = 0.0,
    diag_every: int = 1,
    wall_sign_flip: bool = False,
):
    """Bare integration loop used by suites that need fixed dt or the
    wall-sign fault-injection hook (the production loop exposes neither)."""
    state = init_state(grid, phys, "perturbed", amplitude=amplitude, seed=seed)
    bundles = []
    while state.time < t_end * (1.0 - 1e-12):
        flow = evaluate_flow(state, phys)
        if state.step % diag_every == 0:
            bundles.append(spatial_record(state, flow, phys))
        if dt_fixed is not None:
            dt = dt_fixed
        else:
            dt = min(dt_max, cfl * advective_dt_limit(flow, grid))
        dt = min(dt, t_end - state.time)
        state = advance_state(state, phys, dt, flow=flow, wall_sign_flip=wall_sign_flip)
    flow = evaluate_flow(state, phys)
    bundles.append(spatial_record(state, flow, phys))
    finalize_residuals(bundles, phys)
    avgs = RunningAverages(t_start=t_transient)
    for bundle in bundles:
        avgs.add(bundle.record.scalars(), bundle.profiles)
    return state, bundles, avgs


def manufactured_suite(n2_base: int = 24, gamma: float = 2.0) -> dict:
    """Helmholtz and streamfunction solves against analytic solutions on two
    grids; passes when the observed orders are second."""
    k1 = 2.0 * math.pi / gamma
    sigma = 7.0

    def helmholtz_error(n2: int) -> float:
        grid = Grid(n1=16, n2=n2, gamma=gamma)
        exact = ScalarField.from_function(
            grid, lambda x1, x2: np.cos(k1 * x1) * np.sin(np.pi * x2)
        )
        rhs = ScalarField.from_function(
            grid,
            lambda x1, x2: -(k1**2 + np.pi**2 + sigma)
            * np.cos(k1 * x1)
            * np.sin(np.pi * x2),
        )
        bc = BCSpec(kind="dirichlet", g_bottom=0.0, g_top=0.0)
        sol = helmholtz_solve(rhs, sigma, bc)
        return linf_norm(ScalarField(grid, sol.data - exact.data))

    def velocity_error(n2: int) -> float:
        grid = Grid(n1=16, n2=n2, gamma=gamma)
        omega = ScalarField.from_function(
            grid,
            lambda x1, x2: -(k1**2 + math.pi**2)
            * np.sin(np.pi * x2)
            * np.cos(k1 * x1),
        )
        u1_exact = ScalarField.from_function(
            grid, lambda x1, x2: -np.pi * np.cos(np.pi * x2) * np.cos(k1 * x1)
        )
        vel, _, _ = solve_streamfunction(omega, math.inf)
        return linf_norm(ScalarField(grid, vel.u1.data - u1_exact.data))

    eh1, eh2 = helmholtz_error(n2_base), helmholtz_error(2 * n2_base)
    ev1, ev2 = velocity_error(n2_base), velocity_error(2 * n2_base)
    order_h = math.log2(eh1 / eh2)
    order_v = math.log2(ev1 / ev2)
    passed = 1.7 < order_h < 2.3 and 1.7 < order_v < 2.3
    return {
        "name": "manufactured",
        "passed": bool(passed),
        "order_helmholtz": order_h,
        "order_velocity": order_v,
        "errors": [eh1, eh2, ev1, ev2],
    }


def identity_suite(n1: int = 32, n2: int = 33, gamma: float = 2.0, seed: int = 7) -> dict:
    """Spectral/quadrature identities on a random smooth state."""
    grid = Grid(n1=n1, n2=n2, gamma=gamma)
    rng = np.random.default_rng(seed)

    def random_field() -> ScalarField:
        phys = np.zeros((n1, n2 + 1))
        x1 = grid.x1[:, None]
        x2 = grid.x2[None, :]
        for m in range(1, 4):
            for n in range(1, 4):
                phys += rng.normal() * np.cos(
                    2 * np.pi * m * x1 / gamma + rng.uniform(0, 2 * np.pi)
                ) * np.sin(np.pi * n * x2)
        return ScalarField.from_physical(grid, phys)

    omega = random_field()
    vel, _, _ = solve_streamfunction(omega, 2.0)
    div_rel, wall_u2 = check_velocity(vel)

    phys_data = omega.to_physical()
    parseval = abs(
        l2_norm_sq(omega) - float(np.mean(phys_data**2, axis=0) @ grid.w2)
    ) / max(l2_norm_sq(omega), 1e-300)
    herm = hermitian_symmetry_error(vel.u1)

    checks = appendix_identity_checks(omega, vel)
    band = 5.0 * grid.h2
    ratios_ok = (
        abs(checks["ratio_gradu_omega"] - 1.0) <= band
        and abs(checks["ratio_lapu_gradomega"] - 1.0) <= band
    )
    interp_ok = checks["interp_violation"] <= 1e-12 * max(checks["interp_rhs"], 1.0)

    passed = (
        parseval < 1e-12
        and herm < 1e-12
        and div_rel < 1e-12
        and wall_u2 < 1e-14
        and ratios_ok
        and interp_ok
    )
    return {
        "name": "identities",
        "passed": bool(passed),
        "parseval": parseval,
        "hermitian": herm,
        "divergence": div_rel,
        "wall_u2": wall_u2,
        "appendix": checks,
        "band": band,
    }


def refinement_suite(n2_base: int = 32, gamma: float = 2.0) -> dict:
    """Instantaneous energy/enstrophy balance residuals on a smooth transient
    must drop roughly fourfold when the grid is halved in both directions.

    dt is fixed and small so the residual floor is the spatial defect of the
    discrete balance identities; the initial condition is analytic, hence
    identical across grids."""
    phys = PhysicalParams(ra=1e4, pr=1.0, ls=math.inf, gamma=gamma)
    dt = 1e-4
    n_steps = 100
    k1 = 2.0 * math.pi / gamma

    def residuals(n2: int) -> tuple[float, float]:
        grid = Grid(n1=n2, n2=n2 + 1, gamma=gamma)
        temp = ScalarField.from_function(
            grid,
            lambda x1, x2: 1.0 - x2 + 0.2 * np.sin(np.pi * x2) * np.cos(k1 * x1),
        )
        state = SimState(omega=ScalarField.zeros(grid), temp=temp)
        triple: list[SimState] = []
        for _ in range(n_steps + 2):
            if state.step >= n_steps - 1:
                triple.append(state)
            state = advance_state(state, phys, dt)
        prev, mid, nxt = triple
        flow = evaluate_flow(mid, phys)
        p, _ = solve_pressure(flow.vel, mid.temp, phys)
        re = energy_balance_residual(mid, flow.vel, prev, nxt, phys)
        rz = enstrophy_balance_residual(mid, flow.vel, p, prev, nxt, phys)
        return re, rz

    re1, rz1 = residuals(n2_base)
    re2, rz2 = residuals(2 * n2_base)
    ratio_e = re1 / max(re2, 1e-300)
    ratio_z = rz1 / max(rz2, 1e-300)
    passed = ratio_e > 2.5 and ratio_z > 2.5
    return {
        "name": "balance_refinement",
        "passed": bool(passed),
        "res_e": [re1, re2],
        "res_z": [rz1, rz2],
        "ratio_e": ratio_e,
        "ratio_z": ratio_z,
    }


def wall_coupling_suite(
    n1: int = 48, n2: int = 49, gamma: float = 2.0, wall_sign_flip: bool = False
) -> dict:
    """Averaged energy/enstrophy balances on a developed slip-wall flow; the
    wall_sign_flip hook injects a sign error into the vorticity wall data and
    must break the enstrophy balance."""
    phys = PhysicalParams(ra=2e4, pr=1.0, ls=1.0, gamma=gamma)
    grid = Grid(n1=n1, n2=n2, gamma=gamma)
    _, _, avgs = _mini_run(
        phys, grid, t_end=0.25, t_transient=0.12, amplitude=0.05, seed=5,
        diag_every=5, wall_sign_flip=wall_sign_flip,
    )
    bal = averaged_balances(avgs, phys)
    passed = bal["res_energy"] < 0.08 and bal["res_enstrophy"] < 0.08
    return {
        "name": "wall_coupling",
        "passed": bool(passed),
        "res_energy": bal["res_energy"],
        "res_enstrophy": bal["res_enstrophy"],
        "nu_flux": bal["nu_flux"],
        "mutated": wall_sign_flip,
    }


def determinism_suite(tmp_dir=None, n1: int = 32, n2: int = 33) -> dict:
    """Identical configs agree bitwise; a run resumed from a snapshot matches
    the uninterrupted run bitwise."""
    import tempfile
    from pathlib import Path

    phys = PhysicalParams(ra=3e4, pr=1.0, ls=2.0, gamma=2.0)
    grid = Grid(n1=n1, n2=n2, gamma=2.0)

    def integrate(state: SimState, n_steps: int) -> SimState:
        for _ in range(n_steps):
            flow = evaluate_flow(state, phys)
            dt = min(5e-4, 0.5 * advective_dt_limit(flow, grid))
            state = advance_state(state, phys, dt, flow=flow)
        return state

    s_a = integrate(init_state(grid, phys, "perturbed", amplitude=0.05, seed=11), 40)
    s_b = integrate(init_state(grid, phys, "perturbed", amplitude=0.05, seed=11), 40)
    repeat_equal = bool(
        np.array_equal(s_a.omega.data, s_b.omega.data)
        and np.array_equal(s_a.temp.data, s_b.temp.data)
    )

    with tempfile.TemporaryDirectory(dir=tmp_dir) as td:
        snap = Path(td) / "mid.slpc"
        s_mid = integrate(init_state(grid, phys, "perturbed", amplitude=0.05, seed=11), 20)
        save_state(s_mid, snap)
        resumed = integrate(state_from_snapshot(read_snapshot(snap), grid), 20)
    restart_equal = bool(
        np.array_equal(s_a.omega.data, resumed.omega.data)
        and np.array_equal(s_a.temp.data, resumed.temp.data)
        and s_a.time == resumed.time
    )
    return {
        "name": "determinism",
        "passed": repeat_equal and restart_equal,
        "repeat_equal": repeat_equal,
        "restart_equal": restart_equal,
    }


def run_checks(config: RunConfig | None = None, mutate_wall_sign: bool = False) -> dict:
    """Run every suite; grid sizes scale off the supplied config when given.

    mutate_wall_sign is a fault-injection hook: it flips the sign of the
    vorticity wall data inside the wall_coupling suite, which must then fail.
    """
    if config is not None:
        n1, n2 = config.grid.n1, config.grid.n2
        gamma = config.physical.gamma
    else:
        n1, n2, gamma = 32, 33, 2.0
    suites = [
        manufactured_suite(n2_base=max(16, n2 // 2), gamma=gamma),
        identity_suite(n1=n1, n2=n2, gamma=gamma),
        refinement_suite(n2_base=max(16, n2 - 1), gamma=gamma),
        wall_coupling_suite(
            n1=max(32, n1), n2=max(33, n2), gamma=gamma,
            wall_sign_flip=mutate_wall_sign,
        ),
        determinism_suite(n1=n1, n2=n2),
    ]
    return {"passed": all(s["passed"] for s in suites),
            "suites": {s["name"]: s for s in suites}}
