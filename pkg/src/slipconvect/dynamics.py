"""Time integration: IMEX AB2/CN stepping and the quasi-static infinite-Pr limit.

Advection and buoyancy are explicit (Adams-Bashforth 2 with variable-step
weights, forward Euler on the first step); diffusion is Crank-Nicolson via
per-mode Helmholtz solves.  Wall vorticity data for the implicit solve is
lagged: omega = -u1/ls (bottom), +u1/ls (top) with u1 from the current step's
velocity; free slip pins the wall vorticity to zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PhysicalParams
from .elliptic import BCSpec, VelocityPair, _helmholtz_batch, solve_streamfunction
from .field import (
    Grid,
    ScalarField,
    Snapshot,
    ddx1,
    ddx2,
    laplacian,
    linf_norm,
    read_snapshot,
    write_snapshot,
)


class SolverError(RuntimeError):
    """Base class for runtime integration failures (CLI exit code 1)."""


class SolverBlowupError(SolverError):
    """NaN/Inf in evolved fields or a breached a-priori bound."""


class CFLStepError(SolverError):
    """Requested dt exceeds the advective stability limit."""


class WallCouplingError(SolverError):
    """Quasi-static wall-vorticity iteration failed to converge."""


class MaxPrincipleError(SolverError):
    """Temperature escaped the maximum-principle band beyond tolerance."""


@dataclass
class SimState:
    omega: ScalarField
    temp: ScalarField
    time: float = 0.0
    step: int = 0
    prev_nl_omega: np.ndarray | None = None
    prev_nl_temp: np.ndarray | None = None
    dt_prev: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.omega.grid


def conduction_temp(grid: Grid) -> ScalarField:
    temp = ScalarField.zeros(grid)
    temp.data[0, :] = 1.0 - grid.x2
    return temp


def init_state(
    grid: Grid,
    phys: PhysicalParams,
    mode: str = "conduction",
    amplitude: float = 1e-3,
    seed: int = 0,
    snapshot_path: str | None = None,
) -> SimState:
    """Build the initial state: conduction, a seeded low-mode perturbation of
    it, or a restart snapshot (grid revalidated)."""
    if mode == "conduction":
        return SimState(omega=ScalarField.zeros(grid), temp=conduction_temp(grid))
    if mode == "perturbed":
        rng = np.random.default_rng(seed)
        n_modes = max(1, min(4, grid.n1 // 3 - 1))
        theta = np.zeros(grid.shape)
        x1 = grid.x1[:, None]
        profile = np.sin(np.pi * grid.x2)[None, :]
        for m in range(1, n_modes + 1):
            amp = rng.uniform(0.5, 1.0)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            theta += amp * np.cos(2.0 * np.pi * m * x1 / grid.gamma + phase) * profile
        peak = np.max(np.abs(theta))
        if peak > 0.0 and amplitude > 0.0:
            theta *= amplitude / peak
        temp = conduction_temp(grid) + ScalarField.from_physical(grid, theta)
        if linf_norm(temp) > 1.0 + 1e-12:
            raise ValueError(
                f"perturbation amplitude {amplitude} pushes max|T| above 1"
            )
        return SimState(omega=ScalarField.zeros(grid), temp=temp)
    if mode == "snapshot":
        if not snapshot_path:
            raise ValueError("snapshot mode requires a path")
        return state_from_snapshot(read_snapshot(snapshot_path), grid)
    raise ValueError(f"unknown init mode {mode!r}")


def state_from_snapshot(snap: Snapshot, grid: Grid) -> SimState:
    if (snap.n1, snap.n2) != (grid.n1, grid.n2) or snap.gamma != grid.gamma:
        raise ValueError(
            f"snapshot grid ({snap.n1}, {snap.n2}, gamma={snap.gamma}) does not "
            f"match requested grid ({grid.n1}, {grid.n2}, gamma={grid.gamma})"
        )
    if "omega" not in snap.blocks or "T" not in snap.blocks:
        raise ValueError("snapshot is missing the omega/T field blocks")
    state = SimState(
        omega=ScalarField(grid, snap.blocks["omega"].copy()),
        temp=ScalarField(grid, snap.blocks["T"].copy()),
        time=snap.time,
    )
    if "meta" in snap.blocks:
        meta = np.real(snap.blocks["meta"]).ravel()
        state.step = int(round(meta[0]))
        state.dt_prev = float(meta[1])
    if "nl_omega" in snap.blocks and "nl_T" in snap.blocks:
        state.prev_nl_omega = snap.blocks["nl_omega"].copy()
        state.prev_nl_temp = snap.blocks["nl_T"].copy()
    return state


def snapshot_blocks(state: SimState) -> dict[str, np.ndarray]:
    blocks = {"omega": state.omega.data, "T": state.temp.data}
    if state.prev_nl_omega is not None and state.prev_nl_temp is not None:
        blocks["nl_omega"] = state.prev_nl_omega
        blocks["nl_T"] = state.prev_nl_temp
    blocks["meta"] = np.array([[state.step, state.dt_prev]], dtype=np.complex128)
    return blocks


def save_state(state: SimState, path) -> None:
    write_snapshot(path, state.time, state.grid.gamma, snapshot_blocks(state))


@dataclass
class FlowEval:
    """Velocity of a state plus its physical collocation values."""

    vel: VelocityPair
    u1_phys: np.ndarray
    u2_phys: np.ndarray
    robin_top_residual: float


def evaluate_flow(state: SimState, phys: PhysicalParams) -> FlowEval:
    vel, _, robin_top = solve_streamfunction(state.omega, phys.ls)
    return FlowEval(
        vel=vel,
        u1_phys=vel.u1.to_physical(),
        u2_phys=vel.u2.to_physical(),
        robin_top_residual=robin_top,
    )


def advective_dt_limit(flow: FlowEval, grid: Grid) -> float:
    """Largest dt with unit Courant number for the current velocity."""
    h1 = grid.gamma / grid.n1
    m1 = float(np.max(np.abs(flow.u1_phys)))
    m2 = float(np.max(np.abs(flow.u2_phys)))
    lim = math.inf
    if m1 > 0.0:
        lim = h1 / m1
    if m2 > 0.0:
        lim = min(lim, grid.h2 / m2)
    return lim


def wall_vorticity_rows(
    u1: ScalarField, ls: float, sign_flip: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Per-mode Dirichlet data for the vorticity solve from the slip relations.

    sign_flip inverts both relations; it exists only as a fault-injection hook
    for the check suites.
    """
    n1 = u1.grid.n1
    if math.isinf(ls):
        return np.zeros(n1, dtype=np.complex128), np.zeros(n1, dtype=np.complex128)
    bottom = -u1.data[:, 0] / ls
    top = u1.data[:, -1] / ls
    if sign_flip:
        return -bottom, -top
    return bottom, top


def _advection(flow: FlowEval, f: ScalarField) -> np.ndarray:
    """Spectral u.grad(f), dealiased per the grid flag."""
    grid = f.grid
    fx = ddx1(f).to_physical()
    fy = ddx2(f).to_physical()
    prod = flow.u1_phys * fx + flow.u2_phys * fy
    spec = np.fft.fft(prod, axis=0) / grid.n1
    if grid.dealias:
        spec[~grid.dealias_keep, :] = 0.0
    return spec


def _ab2_combine(
    current: np.ndarray, previous: np.ndarray | None, dt: float, dt_prev: float
) -> np.ndarray:
    if previous is None or dt_prev <= 0.0:
        return current
    r = dt / dt_prev
    return (1.0 + 0.5 * r) * current - 0.5 * r * previous


def _cn_advance(
    f: ScalarField, explicit: np.ndarray, nu: float, dt: float, bc: BCSpec
) -> ScalarField:
    """One Crank-Nicolson diffusion step with the explicit forcing folded in."""
    sigma = 2.0 / (nu * dt)
    rhs = -sigma * f.data - (2.0 / nu) * explicit - laplacian(f).data
    data, _ = _helmholtz_batch(f.grid, sigma, bc, rhs, singular_policy="raise")
    return ScalarField(f.grid, data)


def _temperature_bc(grid: Grid) -> BCSpec:
    g_bottom = np.zeros(grid.n1, dtype=np.complex128)
    g_bottom[0] = 1.0
    return BCSpec("dirichlet", g_bottom=g_bottom, g_top=np.zeros(grid.n1, dtype=np.complex128))


def _check_finite(state: SimState) -> None:
    if not (
        np.all(np.isfinite(state.omega.data.view(np.float64)))
        and np.all(np.isfinite(state.temp.data.view(np.float64)))
    ):
        raise SolverBlowupError(f"non-finite field values at t={state.time:.6g}, step {state.step}")


def _check_courant(flow: FlowEval, grid: Grid, dt: float) -> None:
    lim = advective_dt_limit(flow, grid)
    if dt > lim * (1.0 + 1e-9):
        raise CFLStepError(f"dt={dt:.3e} exceeds the advective limit {lim:.3e}")


def step(
    state: SimState,
    phys: PhysicalParams,
    dt: float,
    flow: FlowEval | None = None,
    wall_sign_flip: bool = False,
) -> SimState:
    """Advance one IMEX step at finite Prandtl number."""
    if math.isinf(phys.pr):
        raise ValueError("infinite Pr states advance through step_infinite_pr")
    grid = state.grid
    if flow is None:
        flow = evaluate_flow(state, phys)
    _check_courant(flow, grid, dt)

    buoyancy = phys.pr * phys.ra * ddx1(state.temp).data
    nl_omega = -_advection(flow, state.omega) + buoyancy
    nl_temp = -_advection(flow, state.temp)
    e_omega = _ab2_combine(nl_omega, state.prev_nl_omega, dt, state.dt_prev)
    e_temp = _ab2_combine(nl_temp, state.prev_nl_temp, dt, state.dt_prev)

    w_bottom, w_top = wall_vorticity_rows(flow.vel.u1, phys.ls, wall_sign_flip)
    omega_new = _cn_advance(
        state.omega, e_omega, phys.pr, dt, BCSpec("dirichlet", w_bottom, w_top)
    )
    temp_new = _cn_advance(state.temp, e_temp, 1.0, dt, _temperature_bc(grid))

    new = SimState(
        omega=omega_new,
        temp=temp_new,
        time=state.time + dt,
        step=state.step + 1,
        prev_nl_omega=nl_omega,
        prev_nl_temp=nl_temp,
        dt_prev=dt,
    )
    _check_finite(new)
    return new


def step_infinite_pr(
    state: SimState,
    phys: PhysicalParams,
    dt: float,
    flow: FlowEval | None = None,
    wall_sign_flip: bool = False,
    wall_tol: float = 1e-10,
    max_iter: int = 50,
) -> SimState:
    """Advance temperature, then solve the quasi-static balance -lap(omega) = Ra d1 T.

    The wall values and the vorticity field are mutually coupled through the
    recovered velocity, so the per-mode solve iterates with lagged wall data
    until the wall rows change by less than wall_tol in sup norm.  The k=0
    quasi-static mean problem has the unique solution zero (no mean forcing),
    which is imposed directly.
    """
    grid = state.grid
    if flow is None:
        flow = evaluate_flow(state, phys)
    _check_courant(flow, grid, dt)

    nl_temp = -_advection(flow, state.temp)
    e_temp = _ab2_combine(nl_temp, state.prev_nl_temp, dt, state.dt_prev)
    temp_new = _cn_advance(state.temp, e_temp, 1.0, dt, _temperature_bc(grid))

    rhs = -phys.ra * ddx1(temp_new).data
    w_bottom, w_top = wall_vorticity_rows(flow.vel.u1, phys.ls, wall_sign_flip)
    w_bottom[0] = 0.0
    w_top[0] = 0.0
    omega_new = state.omega
    for _ in range(max_iter):
        data, _ = _helmholtz_batch(
            grid, 0.0, BCSpec("dirichlet", w_bottom, w_top), rhs, singular_policy="raise"
        )
        data[0, :] = 0.0
        omega_new = ScalarField(grid, data)
        vel_new, _, _ = solve_streamfunction(omega_new, phys.ls)
        nb, nt = wall_vorticity_rows(vel_new.u1, phys.ls, wall_sign_flip)
        nb[0] = 0.0
        nt[0] = 0.0
        change = max(
            float(np.max(np.abs(nb - w_bottom))), float(np.max(np.abs(nt - w_top)))
        )
        w_bottom, w_top = nb, nt
        if change < wall_tol:
            break
    else:
        raise WallCouplingError(
            f"wall-vorticity iteration did not reach {wall_tol:g} in {max_iter} sweeps"
        )

    new = SimState(
        omega=omega_new,
        temp=temp_new,
        time=state.time + dt,
        step=state.step + 1,
        prev_nl_omega=np.zeros_like(nl_temp),
        prev_nl_temp=nl_temp,
        dt_prev=dt,
    )
    _check_finite(new)
    return new


def quasi_static_residual(state: SimState, phys: PhysicalParams) -> float:
    """Max over modes of the interior sup-norm of (D2 - kp^2) omega + Ra d1 T,
    relative to the forcing scale max|Ra d1 T| (floored at 1)."""
    grid = state.grid
    h = grid.h2
    om = state.omega.data
    interior = (om[:, 2:] - 2.0 * om[:, 1:-1] + om[:, :-2]) / (h * h)
    interior = interior - (grid.kp**2)[:, None] * om[:, 1:-1]
    forcing = phys.ra * (1j * grid.kp)[:, None] * state.temp.data[:, 1:-1]
    forcing[grid.nyquist, :] = 0.0
    scale = max(float(np.max(np.abs(forcing))), 1.0)
    return float(np.max(np.abs(interior + forcing))) / scale


def advance_state(
    state: SimState,
    phys: PhysicalParams,
    dt: float,
    flow: FlowEval | None = None,
    wall_sign_flip: bool = False,
) -> SimState:
    if math.isinf(phys.pr):
        return step_infinite_pr(state, phys, dt, flow=flow, wall_sign_flip=wall_sign_flip)
    return step(state, phys, dt, flow=flow, wall_sign_flip=wall_sign_flip)
