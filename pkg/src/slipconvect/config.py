"""Run configuration: physical parameters, grid and time resolution, file I/O.

Config files are flat UTF-8 ``key = value`` text.  The string ``inf`` (any
case) is the sentinel for an infinite Prandtl number or slip length; it maps
to ``math.inf`` so that branch conditions can test ``math.isinf`` instead of
comparing against magic large floats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


_INF_TOKENS = {"inf", "infinite", "infinity"}
_TRUE_TOKENS = {"1", "true", "yes", "on"}
_FALSE_TOKENS = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class PhysicalParams:
    """Rayleigh number, Prandtl number, slip length and aspect ratio.

    ``pr`` and ``ls`` may be ``math.inf``; everything else must be finite.
    """

    ra: float
    pr: float
    ls: float
    gamma: float

    def __post_init__(self) -> None:
        if not (self.ra > 0.0 and math.isfinite(self.ra)):
            raise ConfigError(f"ra must be positive and finite, got {self.ra}")
        if not self.pr > 0.0:
            raise ConfigError(f"pr must be positive (or inf), got {self.pr}")
        if not self.ls > 0.0:
            raise ConfigError(f"ls must be positive (or inf), got {self.ls}")
        if not (self.gamma > 0.0 and math.isfinite(self.gamma)):
            raise ConfigError(f"gamma must be positive and finite, got {self.gamma}")


@dataclass(frozen=True)
class GridSpec:
    """Fourier modes in x1 (n1 collocation points) by n2+1 grid points in x2."""

    n1: int
    n2: int
    dealias: bool = True

    def __post_init__(self) -> None:
        if self.n1 < 8 or self.n1 % 2 != 0:
            raise ConfigError(f"n1 must be even and >= 8, got {self.n1}")
        if self.n2 < 8:
            raise ConfigError(f"n2 must be >= 8, got {self.n2}")

    @property
    def h2(self) -> float:
        return 1.0 / self.n2


@dataclass(frozen=True)
class TimeSpec:
    """Step-size policy and averaging window."""

    dt_max: float
    cfl: float
    t_end: float
    t_transient: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.dt_max > 0.0 and math.isfinite(self.dt_max)):
            raise ConfigError(f"dt_max must be positive and finite, got {self.dt_max}")
        if not 0.0 < self.cfl <= 1.0:
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not (self.t_end > 0.0 and math.isfinite(self.t_end)):
            raise ConfigError(f"t_end must be positive and finite, got {self.t_end}")
        if not 0.0 <= self.t_transient < self.t_end:
            raise ConfigError(
                f"t_transient must satisfy 0 <= t_transient < t_end, got {self.t_transient}"
            )


_INIT_MODES = ("conduction", "perturbed", "snapshot")


@dataclass(frozen=True)
class RunConfig:
    """Everything a single simulation run needs."""

    physical: PhysicalParams
    grid: GridSpec
    time: TimeSpec
    out_dir: str = "out"
    snapshot_every: int = 0  # steps between snapshots; 0 writes only the final state
    diag_every: int = 10  # steps between diagnostics rows
    init: str = "perturbed"
    amplitude: float = 1e-3
    snapshot: str = ""  # restart file, used when init == "snapshot"

    def __post_init__(self) -> None:
        if self.snapshot_every < 0:
            raise ConfigError(f"snapshot_every must be >= 0, got {self.snapshot_every}")
        if self.diag_every < 1:
            raise ConfigError(f"diag_every must be >= 1, got {self.diag_every}")
        if self.init not in _INIT_MODES:
            raise ConfigError(f"init must be one of {_INIT_MODES}, got {self.init!r}")
        if self.init == "snapshot" and not self.snapshot:
            raise ConfigError("init = snapshot requires a snapshot path")
        if not 0.0 <= self.amplitude < 1.0:
            raise ConfigError(f"amplitude must lie in [0, 1), got {self.amplitude}")


def _parse_float(key: str, raw: str) -> float:
    if raw.lower() in _INF_TOKENS:
        return math.inf
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as float") from exc


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: cannot parse {raw!r} as int") from exc


def _parse_bool(key: str, raw: str) -> bool:
    token = raw.lower()
    if token in _TRUE_TOKENS:
        return True
    if token in _FALSE_TOKENS:
        return False
    raise ConfigError(f"key {key!r}: cannot parse {raw!r} as bool")


_REQUIRED_KEYS = (
    "ra", "pr", "ls", "gamma", "n1", "n2", "dt_max", "cfl", "t_end", "t_transient",
)
_OPTIONAL_KEYS = (
    "dealias", "seed", "out_dir", "snapshot_every", "diag_every",
    "init", "amplitude", "snapshot",
)


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    """Parse ``key = value`` lines.  Blank lines and ``#`` comments are skipped."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    known = set(_REQUIRED_KEYS) | set(_OPTIONAL_KEYS)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}")
    missing = sorted(k for k in _REQUIRED_KEYS if k not in raw)
    if missing:
        raise ConfigError(f"{source}: missing required keys {missing}")

    physical = PhysicalParams(
        ra=_parse_float("ra", raw["ra"]),
        pr=_parse_float("pr", raw["pr"]),
        ls=_parse_float("ls", raw["ls"]),
        gamma=_parse_float("gamma", raw["gamma"]),
    )
    if math.isinf(physical.ra) or math.isinf(physical.gamma):
        raise ConfigError("ra and gamma must be finite")
    grid = GridSpec(
        n1=_parse_int("n1", raw["n1"]),
        n2=_parse_int("n2", raw["n2"]),
        dealias=_parse_bool("dealias", raw.get("dealias", "true")),
    )
    time = TimeSpec(
        dt_max=_parse_float("dt_max", raw["dt_max"]),
        cfl=_parse_float("cfl", raw["cfl"]),
        t_end=_parse_float("t_end", raw["t_end"]),
        t_transient=_parse_float("t_transient", raw["t_transient"]),
        seed=_parse_int("seed", raw.get("seed", "0")),
    )
    for key in ("dt_max", "cfl", "t_end", "t_transient"):
        if math.isinf(getattr(time, key if key != "dt_max" else "dt_max")):
            raise ConfigError(f"{key} must be finite")
    return RunConfig(
        physical=physical,
        grid=grid,
        time=time,
        out_dir=raw.get("out_dir", "out"),
        snapshot_every=_parse_int("snapshot_every", raw.get("snapshot_every", "0")),
        diag_every=_parse_int("diag_every", raw.get("diag_every", "10")),
        init=raw.get("init", "perturbed").lower(),
        amplitude=_parse_float("amplitude", raw.get("amplitude", "1e-3")),
        snapshot=raw.get("snapshot", ""),
    )


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text, source=str(path))


def _format_value(value: object) -> str:
    if isinstance(value, float):
        return "inf" if math.isinf(value) else repr(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def save_config(cfg: RunConfig, path: str | Path) -> None:
    """Write a config that load_config round-trips bit-exactly (floats via repr)."""
    items = [
        ("ra", cfg.physical.ra),
        ("pr", cfg.physical.pr),
        ("ls", cfg.physical.ls),
        ("gamma", cfg.physical.gamma),
        ("n1", cfg.grid.n1),
        ("n2", cfg.grid.n2),
        ("dealias", cfg.grid.dealias),
        ("dt_max", cfg.time.dt_max),
        ("cfl", cfg.time.cfl),
        ("t_end", cfg.time.t_end),
        ("t_transient", cfg.time.t_transient),
        ("seed", cfg.time.seed),
        ("out_dir", cfg.out_dir),
        ("snapshot_every", cfg.snapshot_every),
        ("diag_every", cfg.diag_every),
        ("init", cfg.init),
        ("amplitude", cfg.amplitude),
    ]
    if cfg.snapshot:
        items.append(("snapshot", cfg.snapshot))
    lines = [f"{key} = {_format_value(value)}" for key, value in items]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def with_overrides(cfg: RunConfig, **kwargs) -> RunConfig:
    """Functional update helper for sweep templates (physical/grid/time subkeys)."""
    phys_keys = {k: v for k, v in kwargs.items() if k in ("ra", "pr", "ls", "gamma")}
    grid_keys = {k: v for k, v in kwargs.items() if k in ("n1", "n2", "dealias")}
    time_keys = {k: v for k, v in kwargs.items() if k in ("dt_max", "cfl", "t_end", "t_transient", "seed")}
    top_keys = {
        k: v
        for k, v in kwargs.items()
        if k in ("out_dir", "snapshot_every", "diag_every", "init", "amplitude", "snapshot")
    }
    leftover = set(kwargs) - set(phys_keys) - set(grid_keys) - set(time_keys) - set(top_keys)
    if leftover:
        raise ConfigError(f"unknown override keys {sorted(leftover)}")
    out = cfg
    if phys_keys:
        out = replace(out, physical=replace(out.physical, **phys_keys))
    if grid_keys:
        out = replace(out, grid=replace(out.grid, **grid_keys))
    if time_keys:
        out = replace(out, time=replace(out.time, **time_keys))
    if top_keys:
        out = replace(out, **top_keys)
    return out


@dataclass(frozen=True)
class RegimeReport:
    """Which certified scaling regimes the parameter point qualifies for."""

    ra_half_valid: bool  # the uniform Ra^(1/2) bound needs no side condition
    ra512_valid: bool  # Ra^(5/12) regime condition: ls^2 * pr^2 >= ra^(3/2)
    alpha: float  # slip-length scaling exponent: ls = c_s * ra^alpha
    p_alpha: float  # certified Nusselt exponent at this alpha


def regime_check(phys: PhysicalParams, c_s: float = 1.0) -> RegimeReport:
    """Pure classification of (ra, pr, ls); no I/O, no simulation state."""
    from .boundcert import exponent  # local import: boundcert depends on config

    if math.isinf(phys.ls) or math.isinf(phys.pr):
        ra512 = True
    else:
        ra512 = phys.ls**2 * phys.pr**2 >= phys.ra**1.5
    if math.isinf(phys.ls):
        alpha = math.inf
    elif phys.ra == 1.0:
        raise ConfigError("alpha is undefined at ra = 1")
    else:
        alpha = math.log(phys.ls / c_s) / math.log(phys.ra)
    return RegimeReport(
        ra_half_valid=True,
        ra512_valid=ra512,
        alpha=alpha,
        p_alpha=exponent(alpha),
    )
