"""Sweep plans, power-law fits, sweep execution, and run-directory loading."""

import csv
import math
from pathlib import Path

import numpy as np
import pytest

from slipconvect.config import ConfigError
from slipconvect.harness import (
    SWEEP_COLUMNS,
    LsPolicy,
    SweepPlan,
    fit_power_law,
    load_plan,
    load_run_dir,
    parse_plan_text,
    run_single,
    run_sweep,
)

PLAN_MINIMAL = """
ra_values = 1e4, 3e4, 1e5
"""

PLAN_FULL = """
# three-decade sweep
ra_values = 1e4, 3e4, 1e5
ls_policy = power
c_s = 2.0
alpha = 0.25
pr = 7
gamma = 2.0
n1 = 32
n2_values = 17, 33, 65
t_end = 0.2
t_transient = 0.1
seed = 3
workers = 2
b = 0.4
"""


def test_fit_power_law_oracle():
    ra = np.logspace(4, 7, 7)
    nu = 3.0 * ra**0.3
    fit = fit_power_law(ra, nu)
    assert fit.beta == pytest.approx(0.3, abs=1e-10)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert fit.n_points == 7
    noisy = nu * np.exp(0.05 * np.sin(np.arange(7.0)))
    fit2 = fit_power_law(ra, noisy)
    assert 0.0 <= fit2.r_squared <= 1.0
    under = fit_power_law(ra[:1], nu[:1])
    assert math.isnan(under.beta)


def test_plan_defaults_and_expansion():
    plan = parse_plan_text(PLAN_MINIMAL)
    assert plan.ra_values == (1e4, 3e4, 1e5)
    assert plan.pr == 10.0
    assert plan.ls_policy.kind == "fixed"
    assert math.isinf(plan.ls_policy.ls_for(1e5))
    assert plan.n1_values == (64, 64, 64)
    assert len(plan.t_end_values) == 3


def test_plan_full_round_trip(tmp_path):
    path = tmp_path / "sweep.plan"
    path.write_text(PLAN_FULL)
    plan = load_plan(path)
    assert plan.ls_policy.kind == "power"
    assert plan.ls_policy.ls_for(1e4) == pytest.approx(20.0)
    assert plan.pr == 7.0
    assert plan.n1_values == (32, 32, 32)
    assert plan.n2_values == (17, 33, 65)
    assert plan.parallel_workers == 2
    assert plan.b == 0.4
    cfg = plan.run_config(2)
    assert cfg.physical.ra == 1e5
    assert cfg.physical.ls == pytest.approx(2.0 * 1e5**0.25)
    assert cfg.grid.n2 == 65
    assert "run_02" in cfg.out_dir


@pytest.mark.parametrize(
    "text,match",
    [
        ("ra_values = 1e4, 1e5", "at least 3"),
        ("pr = 10", "must set ra_values"),
        ("ra_values = 1e5, 3e4, 1e6", "strictly increasing"),
        ("ra_values = 1e4, 3e4, 1e5\nbogus = 1", "unknown plan key"),
        ("ra_values = 1e4, 3e4, 1e5\npr = 1\npr = 2", "duplicate"),
        ("ra_values = 1e4, 3e4, 1e5\nn2_values = 17, 33", "one entry per"),
        ("ra_values = 1e4, 3e4, 1e5\nls_policy = banana", "unknown ls policy"),
        ("ra_values = 1e4, 3e4, 1e5\nc_s = 2", "unused plan keys"),
        ("ra_values = 1e4, 3e4, 1e5\njust words", "expected key = value"),
    ],
)
def test_plan_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_plan_text(text)


def test_ls_policy_validation():
    with pytest.raises(ConfigError, match="alpha"):
        LsPolicy(kind="power", alpha=-0.1)
    with pytest.raises(ConfigError, match="c_s"):
        LsPolicy(kind="power", c_s=0.0)


def subcritical_plan(out_dir, workers=1):
    return parse_plan_text(
        f"""
ra_values = 100, 200, 400
n1 = 16
n2 = 17
t_end = 0.02
t_transient = 0.01
dt_max = 1e-3
diag_every = 2
amplitude = 1e-3
workers = {workers}
out_dir = {out_dir}
"""
    )


def test_sweep_subcritical_rows_and_outputs(tmp_path):
    plan = subcritical_plan(tmp_path / "sw")
    result = run_sweep(plan)
    assert len(result.rows) == 3
    for row in result.rows:
        assert not row.get("failed")
        assert row["nu"] == pytest.approx(1.0, abs=1e-6)
        assert row["steady_flag"]
    # no supercritical rows: nothing qualifies for the fit
    assert result.qualifying() == []
    assert math.isnan(result.fit.beta)
    table = Path(result.table_path)
    with open(table, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == SWEEP_COLUMNS
    assert len(rows) == 4
    assert (table.parent / "sweep.json").exists()


def test_sweep_parallel_matches_serial(tmp_path):
    serial = run_sweep(subcritical_plan(tmp_path / "s1", workers=1))
    parallel = run_sweep(subcritical_plan(tmp_path / "s2", workers=2))
    for a, b in zip(serial.rows, parallel.rows):
        assert a["nu"] == b["nu"]
        assert a["steady_flag"] == b["steady_flag"]


def test_sweep_failed_rows(tmp_path, monkeypatch):
    import slipconvect.harness as harness_mod
    from slipconvect.dynamics import SolverBlowupError

    def explode(config, write_outputs=True, quiet=True):
        raise SolverBlowupError("synthetic blowup")

    monkeypatch.setattr(harness_mod, "run", explode)
    plan = subcritical_plan(tmp_path / "bad")
    result = run_sweep(plan, write_outputs=False)
    for row in result.rows:
        assert "failed" in row
        assert math.isnan(row["nu"])
        assert not row["steady_flag"]
    assert result.calibration is None
    assert math.isnan(result.fit.beta)


CONFIG_TEXT = """
ra = 5e3
pr = 1
ls = inf
gamma = 2
n1 = 16
n2 = 17
dt_max = 1e-3
cfl = 0.5
t_end = 0.01
t_transient = 0.005
init = conduction
out_dir = {out}
"""


def test_run_single_and_load_run_dir(tmp_path, capsys):
    out = tmp_path / "single"
    cfg = tmp_path / "run.cfg"
    cfg.write_text(CONFIG_TEXT.format(out=out))
    result = run_single(cfg, quiet=True)
    printed = capsys.readouterr().out
    assert "nu_flux = 1" in printed
    assert result.summary["nu"]["nu_flux"] == pytest.approx(1.0, abs=1e-10)
    assert (out / "summary.json").exists()
    assert (out / "diagnostics.csv").exists()

    summary, avgs, x2, phys = load_run_dir(out)
    assert phys.ra == 5e3
    assert math.isinf(phys.ls)
    assert avgs.mean("nu_flux") == pytest.approx(1.0, abs=1e-10)
    assert len(x2) == 18
    assert x2[1] == pytest.approx(1.0 / 17.0)
    with pytest.raises(ConfigError, match="no summary.json"):
        load_run_dir(tmp_path / "nowhere")
