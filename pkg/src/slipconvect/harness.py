"""Experiment orchestration: single runs, Ra sweeps with power-law fits, and
certification of every swept run against the calibrated Nusselt bound."""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boundcert import (
    CalibrationDatum,
    calibrate_constants,
    certify,
    choose_parameters,
    exponent,
)
from .config import (
    ConfigError,
    GridSpec,
    PhysicalParams,
    RunConfig,
    TimeSpec,
    _parse_float,
    load_config,
)
from .diagnostics import RunningAverages, read_json, write_json
from .runner import RunResult, run

SWEEP_COLUMNS = [
    "ra", "ls", "nu", "nu_bound_implied", "nu_bound_asymptotic",
    "steady_flag", "beta_running",
]


@dataclass(frozen=True)
class LsPolicy:
    """Slip length per Ra: fixed value, or the power law ls = c_s * Ra^alpha."""

    kind: str
    value: float = math.inf
    c_s: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "power"):
            raise ConfigError(f"unknown ls policy {self.kind!r}")
        if self.kind == "power":
            if self.alpha < 0.0:
                raise ConfigError("power policy needs alpha >= 0")
            if self.c_s <= 0.0:
                raise ConfigError("power policy needs c_s > 0")

    def ls_for(self, ra: float) -> float:
        if self.kind == "fixed":
            return self.value
        return self.c_s * ra**self.alpha


@dataclass(frozen=True)
class SweepPlan:
    ra_values: tuple
    ls_policy: LsPolicy
    pr: float
    gamma: float
    n1_values: tuple
    n2_values: tuple
    t_end_values: tuple
    t_transient_values: tuple
    dt_max: float = 1e-3
    cfl: float = 0.5
    seed: int = 0
    amplitude: float = 1e-3
    diag_every: int = 10
    out_dir: str = "sweep_out"
    parallel_workers: int = 1
    b: float = 0.5
    u0_w1r: float = 0.0

    def __post_init__(self):
        ras = tuple(float(r) for r in self.ra_values)
        if any(r <= 0 for r in ras):
            raise ConfigError("ra values must be positive")
        if any(b <= a for a, b in zip(ras, ras[1:])):
            raise ConfigError("ra values must be strictly increasing")
        for name in ("n1_values", "n2_values", "t_end_values", "t_transient_values"):
            if len(getattr(self, name)) != len(ras):
                raise ConfigError(f"{name} must have one entry per ra value")
        if self.parallel_workers < 1:
            raise ConfigError("parallel_workers must be >= 1")

    def run_config(self, i: int) -> RunConfig:
        ra = float(self.ra_values[i])
        phys = PhysicalParams(
            ra=ra, pr=self.pr, ls=self.ls_policy.ls_for(ra), gamma=self.gamma
        )
        return RunConfig(
            physical=phys,
            grid=GridSpec(n1=int(self.n1_values[i]), n2=int(self.n2_values[i])),
            time=TimeSpec(
                dt_max=self.dt_max, cfl=self.cfl,
                t_end=float(self.t_end_values[i]),
                t_transient=float(self.t_transient_values[i]),
                seed=self.seed,
            ),
            out_dir=str(Path(self.out_dir) / f"run_{i:02d}_ra{ra:g}"),
            diag_every=self.diag_every,
            amplitude=self.amplitude,
        )


_PLAN_LIST_KEYS = {"ra_values", "n1_values", "n2_values", "t_end_values",
                   "t_transient_values"}
_PLAN_SCALAR_KEYS = {"ls", "ls_policy", "c_s", "alpha", "pr", "gamma", "n1", "n2",
                     "t_end", "t_transient", "dt_max", "cfl", "seed", "amplitude",
                     "diag_every", "out_dir", "workers", "b", "u0"}


def parse_plan_text(text: str) -> SweepPlan:
    """key = value plan format; lists are comma separated.  Per-run lists
    (n1_values, ...) override the scalar defaults entry by entry."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected key = value, got {body!r}")
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _PLAN_LIST_KEYS | _PLAN_SCALAR_KEYS:
            raise ConfigError(f"line {lineno}: unknown plan key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate plan key {key!r}")
        raw[key] = value
    if "ra_values" not in raw:
        raise ConfigError("plan must set ra_values")
    ra_values = tuple(float(v) for v in raw.pop("ra_values").split(","))
    if len(ra_values) < 3:
        raise ConfigError("sweep needs at least 3 ra values")
    n = len(ra_values)

    def per_run(list_key: str, scalar_key: str, default, cast):
        if list_key in raw:
            vals = tuple(cast(v) for v in raw.pop(list_key).split(","))
        else:
            vals = (cast(raw.pop(scalar_key)) if scalar_key in raw else default,) * n
        return vals

    n1s = per_run("n1_values", "n1", 64, lambda v: int(float(v)))
    n2s = per_run("n2_values", "n2", 64, lambda v: int(float(v)))
    t_ends = per_run("t_end_values", "t_end", 0.3, float)
    t_trans = per_run("t_transient_values", "t_transient", 0.15, float)

    policy_kind = raw.pop("ls_policy", "fixed")
    if policy_kind not in ("fixed", "power"):
        raise ConfigError(f"unknown ls policy {policy_kind!r}")
    if policy_kind == "fixed":
        ls = _parse_float("ls", raw.pop("ls", "inf"))
        policy = LsPolicy(kind="fixed", value=ls)
    else:
        policy = LsPolicy(
            kind="power",
            c_s=float(raw.pop("c_s", "1.0")),
            alpha=float(raw.pop("alpha", "0.0")),
        )
        raw.pop("ls", None)
    plan = SweepPlan(
        ra_values=ra_values,
        ls_policy=policy,
        pr=_parse_float("pr", raw.pop("pr", "10")),
        gamma=float(raw.pop("gamma", "2.0")),
        n1_values=n1s, n2_values=n2s,
        t_end_values=t_ends, t_transient_values=t_trans,
        dt_max=float(raw.pop("dt_max", "1e-3")),
        cfl=float(raw.pop("cfl", "0.5")),
        seed=int(float(raw.pop("seed", "0"))),
        amplitude=float(raw.pop("amplitude", "1e-3")),
        diag_every=int(float(raw.pop("diag_every", "10"))),
        out_dir=raw.pop("out_dir", "sweep_out"),
        parallel_workers=int(float(raw.pop("workers", "1"))),
        b=float(raw.pop("b", "0.5")),
        u0_w1r=float(raw.pop("u0", "0.0")),
    )
    if raw:
        raise ConfigError(f"unused plan keys: {sorted(raw)}")
    return plan


def load_plan(path: str | Path) -> SweepPlan:
    return parse_plan_text(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class FitResult:
    beta: float
    prefactor: float
    r_squared: float
    n_points: int


def fit_power_law(ra: np.ndarray, nu: np.ndarray) -> FitResult:
    """Least-squares fit of log nu = beta log ra + log prefactor."""
    ra = np.asarray(ra, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64)
    n = len(ra)
    if n < 2:
        return FitResult(beta=math.nan, prefactor=math.nan, r_squared=math.nan,
                         n_points=n)
    lx, ly = np.log(ra), np.log(nu)
    beta, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (beta * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return FitResult(
        beta=float(beta), prefactor=float(math.exp(intercept)),
        r_squared=max(0.0, min(1.0, r2)), n_points=n,
    )


def run_single(config_path: str | Path, quiet: bool = False) -> RunResult:
    """Execute one configured run; prints the final Nu triple and residuals."""
    config = load_config(config_path)
    result = run(config, write_outputs=True, quiet=quiet)
    bal = result.summary["nu"]
    print(
        f"nu_flux = {bal['nu_flux']:.6g}  nu_grad = {bal['nu_grad']:.6g}  "
        f"nu_wall = {bal['nu_wall']:.6g}"
    )
    print(
        f"res_energy = {bal['res_energy']:.3e}  "
        f"res_enstrophy = {bal['res_enstrophy']:.3e}  "
        f"steady = {result.summary['steadiness']['steady']}"
    )
    return result


def _sweep_worker(args: tuple) -> tuple[int, dict]:
    i, config = args
    try:
        result = run(config, write_outputs=True, quiet=True)
        return i, result.summary
    except Exception as exc:  # noqa: BLE001 - row-level failure is data
        return i, {"failed": f"{type(exc).__name__}: {exc}"}


@dataclass
class SweepResult:
    plan: SweepPlan
    rows: list[dict]
    fit: FitResult
    calibration: dict | None
    certificates: list[dict | None]
    table_path: Path | None = None

    def qualifying(self) -> list[dict]:
        return [
            r for r in self.rows
            if not r.get("failed") and r["steady_flag"] and r["nu"] >= 1.05
        ]


def run_sweep(plan: SweepPlan, write_outputs: bool = True) -> SweepResult:
    """Run the plan (parallel up to plan.parallel_workers), calibrate the bound
    constants on the pooled data, certify each run, fit Nu(Ra), and write
    sweep.csv / sweep.json.  Failed runs become failed rows; the fit uses
    steady, supercritical survivors."""
    if len(plan.ra_values) < 3:
        raise ConfigError("sweep needs at least 3 ra values")
    configs = [(i, plan.run_config(i)) for i in range(len(plan.ra_values))]
    if plan.parallel_workers > 1:
        with multiprocessing.Pool(plan.parallel_workers) as pool:
            outcomes = pool.map(_sweep_worker, configs)
    else:
        outcomes = [_sweep_worker(c) for c in configs]
    outcomes.sort(key=lambda pair: pair[0])
    summaries = [s for _, s in outcomes]

    data = []
    for i, summary in enumerate(summaries):
        if summary.get("failed"):
            continue
        avgs = RunningAverages.from_dict(summary["averages"])
        x2 = np.asarray(summary["grid"]["x2"])
        data.append(
            (i, avgs, x2, CalibrationDatum.from_averages(avgs, x2, label=f"run_{i:02d}"))
        )
    calibration = None
    if data:
        try:
            calibration = calibrate_constants([d[-1] for d in data])
        except ValueError:
            calibration = None

    rows: list[dict] = []
    certificates: list[dict | None] = [None] * len(summaries)
    by_index = {i: (avgs, x2) for i, avgs, x2, _ in data}
    for i, summary in enumerate(summaries):
        ra = float(plan.ra_values[i])
        ls = plan.ls_policy.ls_for(ra)
        if summary.get("failed"):
            rows.append({
                "ra": ra, "ls": ls, "nu": math.nan,
                "nu_bound_implied": math.nan, "nu_bound_asymptotic": math.nan,
                "steady_flag": False, "beta_running": math.nan,
                "failed": summary["failed"],
            })
            continue
        avgs, x2 = by_index[i]
        phys = PhysicalParams(ra=ra, pr=plan.pr, ls=ls, gamma=plan.gamma)
        nu = avgs.mean("nu_flux")
        bound_implied = math.nan
        bound_asym = math.nan
        if calibration is not None and not calibration["degenerate"]:
            bp, info = choose_parameters(
                phys, b=plan.b, c0=calibration["c0_a"], c2=calibration["c2"],
                u0_w1r=plan.u0_w1r, x2=x2,
            )
            cert = certify(
                avgs, bp, phys, x2,
                nu_bound_asymptotic=info["nu_bound_asymptotic"],
            )
            cert["choose_info"] = info
            certificates[i] = cert
            bound_implied = cert["nu_bound_certified"]
            bound_asym = info["nu_bound_asymptotic"]
        rows.append({
            "ra": ra, "ls": ls, "nu": nu,
            "nu_bound_implied": bound_implied,
            "nu_bound_asymptotic": bound_asym,
            "steady_flag": bool(summary["steadiness"]["steady"]),
            "beta_running": math.nan,
        })

    # running fit over qualifying rows up to and including each row
    qualifying: list[tuple[float, float]] = []
    for row in rows:
        if not row.get("failed") and row["steady_flag"] and row["nu"] >= 1.05:
            qualifying.append((row["ra"], row["nu"]))
        if len(qualifying) >= 2:
            f = fit_power_law(*zip(*qualifying))
            row["beta_running"] = f.beta
    fit = (
        fit_power_law(*zip(*qualifying))
        if len(qualifying) >= 2
        else FitResult(math.nan, math.nan, math.nan, len(qualifying))
    )

    result = SweepResult(
        plan=plan, rows=rows, fit=fit, calibration=calibration,
        certificates=certificates,
    )
    if write_outputs:
        out = Path(plan.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table = out / "sweep.csv"
        with open(table, "w", encoding="utf-8") as fh:
            fh.write(",".join(SWEEP_COLUMNS) + "\n")
            for row in rows:
                fh.write(
                    ",".join(repr(row[c]) if not isinstance(row[c], bool)
                             else str(row[c]) for c in SWEEP_COLUMNS) + "\n"
                )
        report = {
            "fit": {
                "beta": fit.beta, "prefactor": fit.prefactor,
                "r_squared": fit.r_squared, "n_points": fit.n_points,
            },
            "calibration": calibration,
            "rows": rows,
            "certificates": certificates,
        }
        if plan.ls_policy.kind == "power":
            report["alpha"] = plan.ls_policy.alpha
            report["p_alpha"] = exponent(plan.ls_policy.alpha)
        write_json(out / "sweep.json", report)
        result.table_path = table
    return result


def load_run_dir(run_dir: str | Path) -> tuple[dict, RunningAverages, np.ndarray, PhysicalParams]:
    """Load a completed run's summary for certification."""
    summary_path = Path(run_dir) / "summary.json"
    if not summary_path.exists():
        raise ConfigError(f"no summary.json under {run_dir}")
    summary = read_json(summary_path)
    avgs = RunningAverages.from_dict(summary["averages"])
    x2 = np.asarray(summary["grid"]["x2"], dtype=np.float64)
    cfg = summary["config"]
    phys = PhysicalParams(
        ra=cfg["ra"], pr=cfg["pr"], ls=cfg["ls"], gamma=cfg["gamma"]
    )
    return summary, avgs, x2, phys
