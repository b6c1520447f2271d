"""Time-integration driver: steps the solver, samples diagnostics, enforces
run-time monitors, and writes diagnostics.csv / summary.json / snapshots."""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .diagnostics import (
    DiagnosticsRecord,
    RecordBundle,
    RunningAverages,
    averaged_balances,
    fill_balance_residuals,
    spatial_record,
    write_csv,
    write_json,
)
from .dynamics import (
    MaxPrincipleError,
    SimState,
    SolverBlowupError,
    SolverError,
    advance_state,
    advective_dt_limit,
    evaluate_flow,
    init_state,
    quasi_static_residual,
    save_state,
)
from .field import Grid, l2_norm_sq, linf_norm


@dataclass
class RunResult:
    config: RunConfig
    state: SimState
    records: list[DiagnosticsRecord]
    averages: RunningAverages
    summary: dict
    out_dir: Path | None = None


def _ddt_series(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Second-order time derivative on a nonuniform sample grid.

    Centered three-point formula in the interior, one-sided three-point at the
    ends (two-point if only two samples exist)."""
    n = len(times)
    out = np.zeros(n)
    if n < 2:
        return out
    if n == 2:
        slope = (values[1] - values[0]) / (times[1] - times[0])
        out[:] = slope
        return out
    hm = times[1:-1] - times[:-2]
    hp = times[2:] - times[1:-1]
    out[1:-1] = (
        values[2:] * hm**2
        - values[:-2] * hp**2
        + values[1:-1] * (hp**2 - hm**2)
    ) / (hm * hp * (hm + hp))
    h0, h1 = times[1] - times[0], times[2] - times[1]
    out[0] = (
        -(2 * h0 + h1) / (h0 * (h0 + h1)) * values[0]
        + (h0 + h1) / (h0 * h1) * values[1]
        - h0 / (h1 * (h0 + h1)) * values[2]
    )
    g0, g1 = times[-1] - times[-2], times[-2] - times[-3]
    out[-1] = (
        (2 * g0 + g1) / (g0 * (g0 + g1)) * values[-1]
        - (g0 + g1) / (g0 * g1) * values[-2]
        + g0 / (g1 * (g0 + g1)) * values[-3]
    )
    return out


def finalize_residuals(bundles: list[RecordBundle], phys) -> None:
    """Fill res_e/res_z on every record using neighboring-record derivatives."""
    times = np.array([b.record.time for b in bundles])
    ddt = {
        key: _ddt_series(times, np.array([getattr(b.record, key) for b in bundles]))
        for key in ("kinetic_energy", "enstrophy", "wall_u1_sq_bottom", "wall_u1_sq_top")
    }
    for i, bundle in enumerate(bundles):
        fill_balance_residuals(
            bundle.record,
            phys,
            ddt["kinetic_energy"][i],
            ddt["enstrophy"][i],
            ddt["wall_u1_sq_bottom"][i],
            ddt["wall_u1_sq_top"][i],
        )


def _windowed_mean(times: np.ndarray, values: np.ndarray) -> float:
    if len(times) == 1:
        return float(values[0])
    return float(np.trapezoid(values, times) / (times[-1] - times[0]))


def steadiness(records: list[DiagnosticsRecord], t_transient: float) -> dict:
    """Split the averaging window in half; steady when the two half-window
    nu_flux means agree within 2 percent."""
    pts = [(r.time, r.nu_flux) for r in records if r.time >= t_transient]
    if len(pts) < 4:
        return {"steady": False, "nu_half_1": math.nan, "nu_half_2": math.nan,
                "rel_change": math.nan}
    times = np.array([p[0] for p in pts])
    nus = np.array([p[1] for p in pts])
    t_mid = 0.5 * (times[0] + times[-1])
    first = times <= t_mid
    second = times >= t_mid
    nu1 = _windowed_mean(times[first], nus[first])
    nu2 = _windowed_mean(times[second], nus[second])
    rel = abs(nu2 - nu1) / max(abs(0.5 * (nu1 + nu2)), 1e-300)
    return {"steady": bool(rel < 0.02), "nu_half_1": nu1, "nu_half_2": nu2,
            "rel_change": rel}


def run(config: RunConfig, write_outputs: bool = True, quiet: bool = True) -> RunResult:
    """Integrate from t=0 (or a restart snapshot) to t_end.

    Aborts with a state dump if the temperature maximum principle or the
    kinetic-energy growth bound is violated, or if fields stop being finite.
    """
    phys = config.physical
    grid = Grid.from_spec(config.grid, config.physical.gamma)
    tspec = config.time
    out_dir = Path(config.out_dir) if write_outputs else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    state = init_state(
        grid, phys, config.init,
        amplitude=config.amplitude, seed=tspec.seed,
        snapshot_path=config.snapshot or None,
    )
    max_t0 = linf_norm(state.temp)
    max_principle_limit = max(1.0, max_t0) + 1e-8
    flow0 = evaluate_flow(state, phys)
    u0_l2 = math.sqrt(l2_norm_sq(flow0.vel.u1) + l2_norm_sq(flow0.vel.u2))
    ls_factor = 1.0 if math.isinf(phys.ls) else max(1.0, phys.ls)
    kinetic_limit = u0_l2 + 3.0 * phys.gamma * ls_factor * phys.ra

    bundles: list[RecordBundle] = []
    avgs = RunningAverages(t_start=tspec.t_transient)
    wall_start = _time.perf_counter()
    infinite_pr = math.isinf(phys.pr)

    def emit(st: SimState, fl) -> None:
        qs = quasi_static_residual(st, phys) if infinite_pr else 0.0
        bundle = spatial_record(st, fl, phys, qs_residual=qs)
        rec = bundle.record
        if rec.max_T > max_principle_limit:
            _dump_abort(out_dir, st)
            raise MaxPrincipleError(
                f"max|T| = {rec.max_T:.6g} exceeds {max_principle_limit:.6g} "
                f"at t = {st.time:.6g}"
            )
        if rec.u_l2 > kinetic_limit:
            _dump_abort(out_dir, st)
            raise SolverBlowupError(
                f"velocity norm {rec.u_l2:.6g} exceeds growth bound "
                f"{kinetic_limit:.6g} at t = {st.time:.6g}"
            )
        bundles.append(bundle)
        # every pressure-derived scalar is already on the record; keeping the
        # spectral field alive for the whole run would cost O(records * n1 * n2)
        bundle.pressure = None
        if not quiet:
            print(
                f"t = {st.time:10.6f}  step = {st.step:8d}  "
                f"nu = {rec.nu_flux:9.4f}  maxT = {rec.max_T:.6f}  "
                f"E = {rec.kinetic_energy:.4e}",
                flush=True,
            )

    try:
        while state.time < tspec.t_end * (1.0 - 1e-12) - 1e-300:
            flow = evaluate_flow(state, phys)
            if state.step % config.diag_every == 0:
                emit(state, flow)
            if (
                out_dir is not None
                and config.snapshot_every > 0
                and state.step % config.snapshot_every == 0
                and state.step > 0
            ):
                save_state(state, out_dir / f"snap_{state.step:08d}.slpc")
            dt = min(
                tspec.dt_max,
                tspec.cfl * advective_dt_limit(flow, grid),
                tspec.t_end - state.time,
            )
            state = advance_state(state, phys, dt, flow=flow)
        flow = evaluate_flow(state, phys)
        emit(state, flow)
    except SolverError:
        if bundles:
            finalize_residuals(bundles, phys)
        _dump_abort(out_dir, state)
        raise

    finalize_residuals(bundles, phys)
    for bundle in bundles:
        avgs.add(bundle.record.scalars(), bundle.profiles)

    wall_time = _time.perf_counter() - wall_start
    balances = averaged_balances(avgs, phys)
    steady = steadiness([b.record for b in bundles], tspec.t_transient)
    records = [b.record for b in bundles]
    summary = {
        "version": 1,
        "config": _config_dict(config),
        "grid": {
            "n1": grid.n1, "n2": grid.n2, "gamma": grid.gamma,
            "dealias": grid.dealias, "h2": grid.h2,
            "x2": grid.x2.tolist(),
        },
        "nu": balances,
        "steadiness": steady,
        "monitors": {
            "max_principle_limit": max_principle_limit,
            "kinetic_limit": kinetic_limit,
            "u0_l2": u0_l2,
            "max_T_seen": avgs.maxes.get("max_T", max_t0),
            "max_u_l2_seen": avgs.maxes.get("u_l2", u0_l2),
            "max_qs_residual": avgs.maxes.get("qs_residual", 0.0),
            "max_wall_robin_residual": avgs.maxes.get("wall_robin_residual", 0.0),
            "max_robin_top_residual": avgs.maxes.get("robin_top_residual", 0.0),
            "max_pressure_defect": avgs.maxes.get("pressure_defect", 0.0),
            "max_pressure_ratio": avgs.maxes.get("pressure_ratio", 0.0),
            "appendix_ratio_gradu": [
                avgs.mins.get("appendix_ratio_gradu", 1.0),
                avgs.maxes.get("appendix_ratio_gradu", 1.0),
            ],
            "appendix_ratio_lapu": [
                avgs.mins.get("appendix_ratio_lapu", 1.0),
                avgs.maxes.get("appendix_ratio_lapu", 1.0),
            ],
            "max_interp_violation": avgs.maxes.get("interp_violation", 0.0),
            "max_res_e": avgs.maxes.get("energy_residual", 0.0),
            "max_res_z": avgs.maxes.get("enstrophy_residual", 0.0),
            "c_lap_means": (
                avgs.mean("d11_omega_sq") / avgs.mean("lap_omega_sq")
                if avgs.mean("lap_omega_sq") > 0.0
                else 0.0
            ),
        },
        "final": records[-1].scalars(),
        "averages": avgs.to_dict(),
        "timing": {
            "steps": state.step,
            "wall_seconds": wall_time,
            "records": len(records),
        },
    }
    result = RunResult(
        config=config, state=state, records=records, averages=avgs,
        summary=summary, out_dir=out_dir,
    )
    if out_dir is not None:
        write_csv(out_dir / "diagnostics.csv", records)
        write_json(out_dir / "summary.json", summary)
        save_state(state, out_dir / "final.slpc")
    return result


def _dump_abort(out_dir: Path | None, state: SimState) -> None:
    if out_dir is not None:
        try:
            save_state(state, out_dir / "abort.slpc")
        except OSError:
            pass


def _config_dict(config: RunConfig) -> dict:
    phys, gs, ts = config.physical, config.grid, config.time
    return {
        "ra": phys.ra, "pr": phys.pr, "ls": phys.ls, "gamma": phys.gamma,
        "n1": gs.n1, "n2": gs.n2, "dealias": gs.dealias,
        "dt_max": ts.dt_max, "cfl": ts.cfl, "t_end": ts.t_end,
        "t_transient": ts.t_transient, "seed": ts.seed,
        "out_dir": config.out_dir, "snapshot_every": config.snapshot_every,
        "diag_every": config.diag_every, "init": config.init,
        "amplitude": config.amplitude, "snapshot": config.snapshot,
    }
