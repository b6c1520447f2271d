"""Scalar functionals, balance residuals, running averages, and CSV/JSON output.

All functionals carry the 1/Gamma domain normalization, so the energy and
enstrophy balances hold exactly as written in the continuum:

  energy:    (1/2Pr) d/dt E + |grad u|^2 + (1/ls)(u1^2 walls) = Ra <u2 T>
  enstrophy: (1/2Pr) d/dt Z + (1/2 ls Pr) d/dt (u1^2 walls) + |grad omega|^2
               = (1/ls)(p d1 u1 walls) + Ra <omega d1 T>

Residuals are |LHS - RHS| / max(|RHS|, 1) with centered time differences.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .config import PhysicalParams
from .dynamics import FlowEval, SimState
from .elliptic import VelocityPair, solve_pressure
from .field import (
    ScalarField,
    ddx1,
    ddx2,
    l2_norm_sq,
    laplacian,
    linf_norm,
    lp_norm,
    wall_mean_sq,
)

CSV_COLUMNS = [
    "time", "nu_flux", "nu_grad", "nu_wall", "E", "Z", "gZ", "wu1b", "wu1t",
    "wpdb", "wpdt", "buoy", "omdT", "lp2", "lp4", "maxT", "res_e", "res_z",
]
CSV_HEADER = ",".join(CSV_COLUMNS)


@dataclass
class DiagnosticsRecord:
    """One diagnostics row.  The first block maps onto the fixed CSV columns;
    the trailing fields feed averaged balances and bound certification."""

    time: float
    nu_flux: float
    nu_grad: float
    nu_wall: float
    kinetic_energy: float
    enstrophy: float
    grad_omega_sq: float
    wall_u1_sq_bottom: float
    wall_u1_sq_top: float
    wall_p_du1_bottom: float
    wall_p_du1_top: float
    buoyancy_flux: float
    omega_dT1: float
    lp_omega_2: float
    lp_omega_4: float
    max_T: float
    energy_residual: float = 0.0
    enstrophy_residual: float = 0.0
    # extra functionals (not CSV columns)
    grad_u_sq: float = 0.0
    lap_u_sq: float = 0.0
    grad1_T_sq: float = 0.0
    grad2_T_sq: float = 0.0
    d1_omega_sq: float = 0.0
    d11_omega_sq: float = 0.0
    lap_omega_sq: float = 0.0
    temp_l2: float = 0.0
    p_h1: float = 0.0
    pressure_defect: float = 0.0
    pressure_ratio: float = 0.0
    wall_robin_residual: float = 0.0
    robin_top_residual: float = 0.0
    appendix_ratio_gradu: float = 1.0
    appendix_ratio_lapu: float = 1.0
    interp_violation: float = 0.0
    u_l2: float = 0.0
    qs_residual: float = 0.0

    def csv_row(self) -> list[float]:
        return [
            self.time, self.nu_flux, self.nu_grad, self.nu_wall,
            self.kinetic_energy, self.enstrophy, self.grad_omega_sq,
            self.wall_u1_sq_bottom, self.wall_u1_sq_top,
            self.wall_p_du1_bottom, self.wall_p_du1_top,
            self.buoyancy_flux, self.omega_dT1,
            self.lp_omega_2, self.lp_omega_4, self.max_T,
            self.energy_residual, self.enstrophy_residual,
        ]

    def scalars(self) -> dict[str, float]:
        return asdict(self)


def nusselt_all(state, vel: VelocityPair) -> tuple[float, float, float]:
    """(nu_flux, nu_grad, nu_wall): the three equivalent Nusselt definitions.

    nu_flux = <u2 T - d2 T>, nu_grad = <|grad T|^2>, nu_wall = -(mean d2 T at
    the bottom wall).  All three are 1 on the conduction state.  Accepts a
    SimState or a bare temperature field.
    """
    temp = state.temp if isinstance(state, SimState) else state
    grid = temp.grid
    dT2 = ddx2(temp)
    u2T_profile = np.mean(vel.u2.to_physical() * temp.to_physical(), axis=0)
    nu_flux = float((u2T_profile - np.real(dT2.data[0, :])) @ grid.w2)
    nu_grad = l2_norm_sq(ddx1(temp)) + l2_norm_sq(dT2)
    nu_wall = -float(np.real(dT2.data[0, 0]))
    return nu_flux, nu_grad, nu_wall


def _wall_product(f: ScalarField, g: ScalarField, j: int) -> float:
    """(1/Gamma) * integral over x1 of f*g on a wall row (spectral Parseval)."""
    return float(np.real(np.sum(f.data[:, j] * np.conj(g.data[:, j]))))


def wall_robin_residual(omega: ScalarField, u1: ScalarField, ls: float) -> float:
    """Sup over x1 of the slip-relation defect on both walls."""
    n1 = omega.grid.n1
    om_b = np.real(np.fft.ifft(omega.data[:, 0] * n1))
    om_t = np.real(np.fft.ifft(omega.data[:, -1] * n1))
    if math.isinf(ls):
        return float(max(np.max(np.abs(om_b)), np.max(np.abs(om_t))))
    u1_b = np.real(np.fft.ifft(u1.data[:, 0] * n1))
    u1_t = np.real(np.fft.ifft(u1.data[:, -1] * n1))
    return float(
        max(np.max(np.abs(om_b + u1_b / ls)), np.max(np.abs(om_t - u1_t / ls)))
    )


@dataclass
class RecordBundle:
    record: DiagnosticsRecord
    profiles: dict[str, np.ndarray]
    pressure: ScalarField


def spatial_record(
    state: SimState,
    flow: FlowEval,
    phys: PhysicalParams,
    qs_residual: float = 0.0,
) -> RecordBundle:
    """Assemble every instantaneous functional of (omega, T, u, p) at one time.

    Time-derivative terms of the balance residuals are filled in later by the
    run loop once neighboring-step scalars exist.
    """
    grid = state.grid
    temp, omega = state.temp, state.omega
    u1, u2 = flow.vel.u1, flow.vel.u2
    inv_ls = 0.0 if math.isinf(phys.ls) else 1.0 / phys.ls
    inv_pr = 0.0 if math.isinf(phys.pr) else 1.0 / phys.pr

    dT1 = ddx1(temp)
    dT2 = ddx2(temp)
    temp_phys = temp.to_physical()
    u2T_profile = np.mean(flow.u2_phys * temp_phys, axis=0)
    dT2_profile = np.real(dT2.data[0, :]).copy()

    nu_flux = float((u2T_profile - dT2_profile) @ grid.w2)
    grad1_T_sq = l2_norm_sq(dT1)
    grad2_T_sq = l2_norm_sq(dT2)
    nu_grad = grad1_T_sq + grad2_T_sq
    nu_wall = -float(dT2_profile[0])

    d1w = ddx1(omega)
    d2w = ddx2(omega)
    lap_w = laplacian(omega)
    enstrophy = l2_norm_sq(omega)
    grad_omega_sq = l2_norm_sq(d1w) + l2_norm_sq(d2w)
    d1_omega_sq = l2_norm_sq(d1w)
    d11_omega_sq = l2_norm_sq(ddx1(d1w))
    lap_omega_sq = l2_norm_sq(lap_w)

    kinetic = l2_norm_sq(u1) + l2_norm_sq(u2)
    grad_u_sq = (
        l2_norm_sq(ddx1(u1)) + l2_norm_sq(ddx2(u1))
        + l2_norm_sq(ddx1(u2)) + l2_norm_sq(ddx2(u2))
    )
    lap_u_sq = l2_norm_sq(laplacian(u1)) + l2_norm_sq(laplacian(u2))

    pressure, p_defect = solve_pressure(flow.vel, temp, phys)
    d1u1 = ddx1(u1)
    wpdb = _wall_product(pressure, d1u1, 0)
    wpdt = _wall_product(pressure, d1u1, -1)
    p_h1 = math.sqrt(
        l2_norm_sq(pressure) + l2_norm_sq(ddx1(pressure)) + l2_norm_sq(ddx2(pressure))
    )

    omega_phys = omega.to_physical()
    omdT = float(np.mean(omega_phys * dT1.to_physical(), axis=0) @ grid.w2)
    buoy = phys.ra * float(u2T_profile @ grid.w2)

    lp2 = math.sqrt(enstrophy)
    lp4 = lp_norm(omega, 4)
    temp_l2 = math.sqrt(l2_norm_sq(temp))
    denom = inv_ls * math.sqrt(d1_omega_sq) + phys.ra * temp_l2 + inv_pr * lp2 * lp4
    pressure_ratio = p_h1 / denom if denom > 0.0 else 0.0

    ratio_gradu = math.sqrt(grad_u_sq / enstrophy) if enstrophy > 0.0 else 1.0
    ratio_lapu = math.sqrt(lap_u_sq / grad_omega_sq) if grad_omega_sq > 0.0 else 1.0
    # relative exceedance; a pure single-k1 state is the equality case, so the
    # absolute difference is fp noise proportional to the norms
    interp_rhs = math.sqrt(enstrophy * d11_omega_sq)
    interp_violation = (d1_omega_sq - interp_rhs) / max(interp_rhs, 1e-30)

    record = DiagnosticsRecord(
        time=state.time,
        nu_flux=nu_flux,
        nu_grad=nu_grad,
        nu_wall=nu_wall,
        kinetic_energy=kinetic,
        enstrophy=enstrophy,
        grad_omega_sq=grad_omega_sq,
        wall_u1_sq_bottom=wall_mean_sq(u1, "bottom"),
        wall_u1_sq_top=wall_mean_sq(u1, "top"),
        wall_p_du1_bottom=wpdb,
        wall_p_du1_top=wpdt,
        buoyancy_flux=buoy,
        omega_dT1=omdT,
        lp_omega_2=lp2,
        lp_omega_4=lp4,
        max_T=float(np.max(np.abs(temp_phys))),
        grad_u_sq=grad_u_sq,
        lap_u_sq=lap_u_sq,
        grad1_T_sq=grad1_T_sq,
        grad2_T_sq=grad2_T_sq,
        d1_omega_sq=d1_omega_sq,
        d11_omega_sq=d11_omega_sq,
        lap_omega_sq=lap_omega_sq,
        temp_l2=temp_l2,
        p_h1=p_h1,
        pressure_defect=p_defect,
        pressure_ratio=pressure_ratio,
        wall_robin_residual=wall_robin_residual(omega, u1, phys.ls),
        robin_top_residual=flow.robin_top_residual,
        appendix_ratio_gradu=ratio_gradu,
        appendix_ratio_lapu=ratio_lapu,
        interp_violation=interp_violation,
        u_l2=math.sqrt(kinetic),
        qs_residual=qs_residual,
    )
    profiles = {"u2T": u2T_profile, "dT2": dT2_profile}
    return RecordBundle(record=record, profiles=profiles, pressure=pressure)


def fill_balance_residuals(
    record: DiagnosticsRecord,
    phys: PhysicalParams,
    ddt_E: float,
    ddt_Z: float,
    ddt_wu1b: float,
    ddt_wu1t: float,
) -> None:
    """Complete res_e/res_z once neighboring-step time derivatives are known."""
    inv_ls = 0.0 if math.isinf(phys.ls) else 1.0 / phys.ls
    inv_pr = 0.0 if math.isinf(phys.pr) else 1.0 / phys.pr

    lhs_e = 0.5 * inv_pr * ddt_E + record.grad_u_sq + inv_ls * (
        record.wall_u1_sq_bottom + record.wall_u1_sq_top
    )
    rhs_e = record.buoyancy_flux
    record.energy_residual = abs(lhs_e - rhs_e) / max(abs(rhs_e), 1.0)

    lhs_z = (
        0.5 * inv_pr * ddt_Z
        + 0.5 * inv_ls * inv_pr * (ddt_wu1b + ddt_wu1t)
        + record.grad_omega_sq
    )
    rhs_z = inv_ls * (record.wall_p_du1_bottom + record.wall_p_du1_top) + (
        phys.ra * record.omega_dT1
    )
    record.enstrophy_residual = abs(lhs_z - rhs_z) / max(abs(rhs_z), 1.0)


def _centered_ddt(f_prev: float, f_mid: float, f_next: float, hm: float, hp: float) -> float:
    return (f_next * hm**2 - f_prev * hp**2 + f_mid * (hp**2 - hm**2)) / (
        hm * hp * (hm + hp)
    )


def _balance_state_scalars(state: SimState, phys: PhysicalParams, flow=None) -> dict:
    from .dynamics import evaluate_flow

    if flow is None:
        flow = evaluate_flow(state, phys)
    u1, u2 = flow.vel.u1, flow.vel.u2
    return {
        "E": l2_norm_sq(u1) + l2_norm_sq(u2),
        "Z": l2_norm_sq(state.omega),
        "wu1b": wall_mean_sq(u1, "bottom"),
        "wu1t": wall_mean_sq(u1, "top"),
        "flow": flow,
    }


def energy_balance_residual(
    state: SimState,
    vel: VelocityPair,
    prev: SimState,
    next_state: SimState,
    phys: PhysicalParams,
) -> float:
    """Instantaneous energy-balance residual from three consecutive states:
    |(1/2Pr) dE/dt + |grad u|^2 + (1/ls)(u1^2 walls) - Ra <u2 T>| / max(|RHS|, 1).
    """
    inv_ls = 0.0 if math.isinf(phys.ls) else 1.0 / phys.ls
    inv_pr = 0.0 if math.isinf(phys.pr) else 1.0 / phys.pr
    grid = state.grid
    sp = _balance_state_scalars(prev, phys)
    sn = _balance_state_scalars(next_state, phys)
    E = l2_norm_sq(vel.u1) + l2_norm_sq(vel.u2)
    ddt_E = _centered_ddt(
        sp["E"], E, sn["E"], state.time - prev.time, next_state.time - state.time
    )
    grad_u_sq = (
        l2_norm_sq(ddx1(vel.u1)) + l2_norm_sq(ddx2(vel.u1))
        + l2_norm_sq(ddx1(vel.u2)) + l2_norm_sq(ddx2(vel.u2))
    )
    walls = inv_ls * (wall_mean_sq(vel.u1, "bottom") + wall_mean_sq(vel.u1, "top"))
    u2T = float(
        np.mean(vel.u2.to_physical() * state.temp.to_physical(), axis=0) @ grid.w2
    )
    rhs = phys.ra * u2T
    lhs = 0.5 * inv_pr * ddt_E + grad_u_sq + walls
    return abs(lhs - rhs) / max(abs(rhs), 1.0)


def enstrophy_balance_residual(
    state: SimState,
    vel: VelocityPair,
    p: ScalarField,
    prev: SimState,
    next_state: SimState,
    phys: PhysicalParams,
) -> float:
    """Instantaneous enstrophy-balance residual from three consecutive states,
    with the pressure wall terms evaluated from the supplied mean-zero p."""
    inv_ls = 0.0 if math.isinf(phys.ls) else 1.0 / phys.ls
    inv_pr = 0.0 if math.isinf(phys.pr) else 1.0 / phys.pr
    grid = state.grid
    hm = state.time - prev.time
    hp = next_state.time - state.time
    sp = _balance_state_scalars(prev, phys)
    sn = _balance_state_scalars(next_state, phys)
    Z = l2_norm_sq(state.omega)
    wu1b = wall_mean_sq(vel.u1, "bottom")
    wu1t = wall_mean_sq(vel.u1, "top")
    ddt_Z = _centered_ddt(sp["Z"], Z, sn["Z"], hm, hp)
    ddt_w = _centered_ddt(
        sp["wu1b"] + sp["wu1t"], wu1b + wu1t, sn["wu1b"] + sn["wu1t"], hm, hp
    )
    d1w = ddx1(state.omega)
    grad_omega_sq = l2_norm_sq(d1w) + l2_norm_sq(ddx2(state.omega))
    d1u1 = ddx1(vel.u1)
    wall_p = _wall_product(p, d1u1, 0) + _wall_product(p, d1u1, -1)
    omdT = float(
        np.mean(state.omega.to_physical() * ddx1(state.temp).to_physical(), axis=0)
        @ grid.w2
    )
    lhs = 0.5 * inv_pr * ddt_Z + 0.5 * inv_ls * inv_pr * ddt_w + grad_omega_sq
    rhs = inv_ls * wall_p + phys.ra * omdT
    return abs(lhs - rhs) / max(abs(rhs), 1.0)


def appendix_identity_checks(state, vel: VelocityPair) -> dict[str, float]:
    """Discrete versions of |grad u| = |omega|, |lap u| = |grad omega|, and the
    x1 interpolation inequality |d1 omega|^2 <= |omega| |d1^2 omega|."""
    omega = state.omega if isinstance(state, SimState) else state
    gradu = (
        l2_norm_sq(ddx1(vel.u1)) + l2_norm_sq(ddx2(vel.u1))
        + l2_norm_sq(ddx1(vel.u2)) + l2_norm_sq(ddx2(vel.u2))
    )
    lapu = l2_norm_sq(laplacian(vel.u1)) + l2_norm_sq(laplacian(vel.u2))
    z = l2_norm_sq(omega)
    d1w = ddx1(omega)
    gz = l2_norm_sq(d1w) + l2_norm_sq(ddx2(omega))
    d1sq = l2_norm_sq(d1w)
    d11sq = l2_norm_sq(ddx1(d1w))
    return {
        "ratio_gradu_omega": math.sqrt(gradu / z) if z > 0 else 1.0,
        "ratio_lapu_gradomega": math.sqrt(lapu / gz) if gz > 0 else 1.0,
        "interp_lhs": d1sq,
        "interp_rhs": math.sqrt(z * d11sq),
        "interp_violation": (d1sq - math.sqrt(z * d11sq)) / max(math.sqrt(z * d11sq), 1e-30),
    }


class RunningAverages:
    """Single-pass trapezoidal time averages over [t_start, t_end], plus
    whole-run extrema.

    Scalar functionals and the x2 profiles of (u2 T) and (d2 T) are
    accumulated so that background-profile functionals can be evaluated for
    any layer width after the run, without revisiting snapshots.
    """

    MAX_KEYS = (
        "max_T", "lp_omega_2", "lp_omega_4", "u_l2", "wall_robin_residual",
        "robin_top_residual", "pressure_defect", "pressure_ratio",
        "appendix_ratio_gradu", "appendix_ratio_lapu", "interp_violation",
        "energy_residual", "enstrophy_residual", "qs_residual",
    )
    MIN_KEYS = ("appendix_ratio_gradu", "appendix_ratio_lapu")

    def __init__(self, t_start: float):
        self.t_start = t_start
        self.window = 0.0
        self.t_first: float | None = None
        self.t_last: float | None = None
        self.sums: dict[str, float] = {}
        self.profile_sums: dict[str, np.ndarray] = {}
        self.maxes: dict[str, float] = {}
        self.mins: dict[str, float] = {}
        self.n_records = 0
        self._last_scalars: dict[str, float] | None = None
        self._last_profiles: dict[str, np.ndarray] | None = None

    def add(self, scalars: dict[str, float], profiles: dict[str, np.ndarray]) -> None:
        time = scalars["time"]
        self.n_records += 1
        for key in self.MAX_KEYS:
            if key in scalars:
                value = scalars[key]
                if key not in self.maxes or value > self.maxes[key]:
                    self.maxes[key] = value
        for key in self.MIN_KEYS:
            if key in scalars:
                value = scalars[key]
                if key not in self.mins or value < self.mins[key]:
                    self.mins[key] = value
        if time < self.t_start:
            return
        if self.t_first is None:
            self.t_first = time
            self.sums = {k: 0.0 for k, v in scalars.items() if isinstance(v, float)}
            self.profile_sums = {k: np.zeros_like(v) for k, v in profiles.items()}
        else:
            dt_w = time - self.t_last
            for key, value in scalars.items():
                if key in self.sums:
                    self.sums[key] += 0.5 * dt_w * (value + self._last_scalars[key])
            for key, value in profiles.items():
                self.profile_sums[key] += 0.5 * dt_w * (value + self._last_profiles[key])
            self.window += dt_w
        self.t_last = time
        self._last_scalars = dict(scalars)
        self._last_profiles = {k: v.copy() for k, v in profiles.items()}

    def mean(self, key: str) -> float:
        if self.window > 0.0:
            return self.sums[key] / self.window
        if self._last_scalars is not None and key in self._last_scalars:
            return self._last_scalars[key]
        raise KeyError(f"no data accumulated for {key!r}")

    def profile_mean(self, key: str) -> np.ndarray:
        if self.window > 0.0:
            return self.profile_sums[key] / self.window
        if self._last_profiles is not None and key in self._last_profiles:
            return self._last_profiles[key]
        raise KeyError(f"no profile accumulated for {key!r}")

    def means(self) -> dict[str, float]:
        keys = self.sums if self.window > 0.0 else (self._last_scalars or {})
        return {k: self.mean(k) for k in keys}

    def to_dict(self) -> dict:
        return {
            "t_start": self.t_start,
            "window": self.window,
            "t_first": self.t_first,
            "t_last": self.t_last,
            "n_records": self.n_records,
            "means": self.means(),
            "profile_means": {k: self.profile_mean(k).tolist() for k in self.profile_sums}
            if (self.window > 0.0 or self._last_profiles)
            else {},
            "maxes": self.maxes,
            "mins": self.mins,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunningAverages":
        """Rebuild an averaged view (window collapsed onto the stored means)."""
        avgs = cls(t_start=data["t_start"])
        avgs.window = 1.0  # means below are already time-averaged
        avgs.t_first = data.get("t_first")
        avgs.t_last = data.get("t_last")
        avgs.n_records = data.get("n_records", 0)
        avgs.sums = dict(data.get("means", {}))
        avgs.profile_sums = {
            k: np.asarray(v, dtype=np.float64) for k, v in data.get("profile_means", {}).items()
        }
        avgs.maxes = dict(data.get("maxes", {}))
        avgs.mins = dict(data.get("mins", {}))
        return avgs


def averaged_balances(avgs: RunningAverages, phys: PhysicalParams) -> dict[str, float]:
    """Long-time averaged energy/enstrophy balances and the Nu-agreement spread.

    Uses the identity <|grad u|^2> accumulated directly (not via enstrophy),
    so the residual is a pure balance check.
    """
    inv_ls = 0.0 if math.isinf(phys.ls) else 1.0 / phys.ls
    buoy = avgs.mean("buoyancy_flux")
    walls_u = inv_ls * (avgs.mean("wall_u1_sq_bottom") + avgs.mean("wall_u1_sq_top"))
    lhs_e = avgs.mean("grad_u_sq") + walls_u
    res_energy = abs(lhs_e - buoy) / max(abs(buoy), 1.0)

    rhs_z = inv_ls * (
        avgs.mean("wall_p_du1_bottom") + avgs.mean("wall_p_du1_top")
    ) + phys.ra * avgs.mean("omega_dT1")
    lhs_z = avgs.mean("grad_omega_sq")
    res_enstrophy = abs(lhs_z - rhs_z) / max(abs(rhs_z), 1.0)

    nus = [avgs.mean("nu_flux"), avgs.mean("nu_grad"), avgs.mean("nu_wall")]
    nu_mean = sum(nus) / 3.0
    nu_spread = (max(nus) - min(nus)) / max(abs(nu_mean), 1e-300)
    # same balance normalized by Ra(Nu - 1), the buoyancy input written via Nu
    ra_nu = phys.ra * (nus[0] - 1.0)
    res_energy_nu = abs(lhs_e - ra_nu) / abs(ra_nu) if ra_nu != 0.0 else res_energy
    return {
        "res_energy": res_energy,
        "res_energy_nu": res_energy_nu,
        "res_enstrophy": res_enstrophy,
        "nu_flux": nus[0],
        "nu_grad": nus[1],
        "nu_wall": nus[2],
        "nu_spread": nu_spread,
        "energy_lhs": lhs_e,
        "energy_rhs": buoy,
        "enstrophy_lhs": lhs_z,
        "enstrophy_rhs": rhs_z,
    }


def write_csv(path: str | Path, records: list[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([repr(v) for v in rec.csv_row()])


def _json_sanitize(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {k: _json_sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_sanitize(float(v)) for v in obj.ravel()]
    if isinstance(obj, (np.floating, np.integer)):
        return _json_sanitize(float(obj))
    return obj


def json_restore(obj):
    if obj == "inf":
        return math.inf
    if obj == "-inf":
        return -math.inf
    if obj == "nan":
        return math.nan
    if isinstance(obj, dict):
        return {k: json_restore(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [json_restore(v) for v in obj]
    return obj


def write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(_json_sanitize(payload), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def read_json(path: str | Path) -> dict:
    return json_restore(json.loads(Path(path).read_text(encoding="utf-8")))
