"""Scalar fields on the periodic strip [0, Gamma) x [0, 1].

Representation is mixed: Fourier coefficients along x1 (numpy fft ordering,
normalized so mode 0 is the x1-mean) by collocation values on a uniform grid
x2_j = j*h2 along x2.  Derivatives are exact mode multiplications in x1 and
second-order centered differences in x2 (one-sided second-order at the
walls).  Quadrature is the exact Fourier mean in x1 and the trapezoid rule in
x2; all domain integrals carry the 1/Gamma normalization.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .config import GridSpec, RunConfig


class SnapshotFormatError(RuntimeError):
    """Snapshot file is malformed or belongs to an incompatible layout."""


@dataclass(frozen=True)
class Grid:
    """Collocation layout plus precomputed wavenumber and quadrature tables."""

    n1: int
    n2: int
    gamma: float
    dealias: bool = True
    h2: float = dc_field(init=False)
    x1: np.ndarray = dc_field(init=False, repr=False)
    x2: np.ndarray = dc_field(init=False, repr=False)
    k: np.ndarray = dc_field(init=False, repr=False)
    kp: np.ndarray = dc_field(init=False, repr=False)
    dealias_keep: np.ndarray = dc_field(init=False, repr=False)
    w2: np.ndarray = dc_field(init=False, repr=False)

    def __post_init__(self) -> None:
        h2 = 1.0 / self.n2
        x1 = self.gamma * np.arange(self.n1) / self.n1
        x2 = np.linspace(0.0, 1.0, self.n2 + 1)
        # integer mode numbers in fft order: 0, 1, ..., n1/2-1, -n1/2, ..., -1
        k = np.fft.fftfreq(self.n1, d=1.0 / self.n1)
        kp = 2.0 * np.pi * k / self.gamma
        # 2/3 rule: keep |k| <= n1/3, i.e. 3|k| <= n1 in exact integer arithmetic
        keep = 3 * np.abs(k.astype(np.int64)) <= self.n1
        w2 = np.full(self.n2 + 1, h2)
        w2[0] = 0.5 * h2
        w2[-1] = 0.5 * h2
        for name, value in (
            ("h2", h2), ("x1", x1), ("x2", x2), ("k", k), ("kp", kp),
            ("dealias_keep", keep), ("w2", w2),
        ):
            object.__setattr__(self, name, value)
        for arr in (self.x1, self.x2, self.k, self.kp, self.dealias_keep, self.w2):
            arr.setflags(write=False)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n1, self.n2 + 1)

    @property
    def nyquist(self) -> int:
        return self.n1 // 2

    @classmethod
    def from_spec(cls, spec: GridSpec, gamma: float) -> "Grid":
        return cls(n1=spec.n1, n2=spec.n2, gamma=gamma, dealias=spec.dealias)

    @classmethod
    def from_config(cls, cfg: RunConfig) -> "Grid":
        return cls.from_spec(cfg.grid, cfg.physical.gamma)


@dataclass
class ScalarField:
    """Complex coefficient array (mode k, grid point j) of shape (n1, n2+1).

    Real-valued fields keep the Hermitian symmetry data[-k % n1, j] ==
    conj(data[k, j]); every operation here preserves it.
    """

    grid: Grid
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.shape != self.grid.shape:
            raise ValueError(f"field shape {self.data.shape} != grid shape {self.grid.shape}")
        if self.data.dtype != np.complex128:
            self.data = self.data.astype(np.complex128)

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape, dtype=np.complex128))

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray) -> "ScalarField":
        values = np.asarray(values, dtype=np.float64)
        if values.shape != grid.shape:
            raise ValueError(f"physical values shape {values.shape} != {grid.shape}")
        return cls(grid, np.fft.fft(values, axis=0) / grid.n1)

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        x1 = grid.x1[:, None]
        x2 = grid.x2[None, :]
        return cls.from_physical(grid, np.broadcast_to(fn(x1, x2), grid.shape).astype(np.float64))

    def to_physical(self) -> np.ndarray:
        return np.real(np.fft.ifft(self.data * self.grid.n1, axis=0))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.data.copy())

    def __add__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.data + other.data)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return ScalarField(self.grid, self.data - other.data)

    def __mul__(self, scalar: float) -> "ScalarField":
        return ScalarField(self.grid, self.data * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, -self.data)


def ddx1(f: ScalarField) -> ScalarField:
    """Spectral x1 derivative: multiply mode k by i*kp.

    The Nyquist row is zeroed (its odd derivative has no real-valued
    representative); it is already zero whenever dealiasing is active.
    """
    out = f.data * (1j * f.grid.kp)[:, None]
    out[f.grid.nyquist, :] = 0.0
    return ScalarField(f.grid, out)


def _ddx2_raw(data: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(data)
    out[:, 1:-1] = (data[:, 2:] - data[:, :-2]) / (2.0 * h)
    out[:, 0] = (-3.0 * data[:, 0] + 4.0 * data[:, 1] - data[:, 2]) / (2.0 * h)
    out[:, -1] = (3.0 * data[:, -1] - 4.0 * data[:, -2] + data[:, -3]) / (2.0 * h)
    return out


def ddx2(f: ScalarField) -> ScalarField:
    """Centered second-order x2 derivative, one-sided second-order at walls."""
    return ScalarField(f.grid, _ddx2_raw(f.data, f.grid.h2))


def _d2dx2_raw(data: np.ndarray, h: float) -> np.ndarray:
    out = np.empty_like(data)
    out[:, 1:-1] = (data[:, 2:] - 2.0 * data[:, 1:-1] + data[:, :-2]) / (h * h)
    out[:, 0] = (2.0 * data[:, 0] - 5.0 * data[:, 1] + 4.0 * data[:, 2] - data[:, 3]) / (h * h)
    out[:, -1] = (2.0 * data[:, -1] - 5.0 * data[:, -2] + 4.0 * data[:, -3] - data[:, -4]) / (h * h)
    return out


def d2dx2(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, _d2dx2_raw(f.data, f.grid.h2))


def laplacian(f: ScalarField) -> ScalarField:
    out = _d2dx2_raw(f.data, f.grid.h2)
    out -= (f.grid.kp**2)[:, None] * f.data
    return ScalarField(f.grid, out)


def integral(f: ScalarField) -> float:
    """(1/Gamma) * domain integral: exact x1 mean (mode 0), trapezoid in x2."""
    return float(np.real(f.data[0, :]) @ f.grid.w2)


def l2_norm_sq(f: ScalarField) -> float:
    """Gamma-normalized squared L2 norm, computed spectrally.

    By discrete Parseval this equals the physical-space trapezoid quadrature
    of |f|^2 exactly (the x1 DFT is unitary on collocation values).
    """
    return float(np.sum(np.abs(f.data) ** 2, axis=0) @ f.grid.w2)


def lp_norm(f: ScalarField, p: float) -> float:
    """Gamma-normalized L^p norm via physical-space quadrature, p >= 1."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    phys = f.to_physical()
    column = np.mean(np.abs(phys) ** p, axis=0)
    return float((column @ f.grid.w2) ** (1.0 / p))


def linf_norm(f: ScalarField) -> float:
    return float(np.max(np.abs(f.to_physical())))


def wall_trace(f: ScalarField, wall: str) -> np.ndarray:
    """Coefficient row (over modes k) at the requested wall."""
    if wall not in ("bottom", "top"):
        raise ValueError(f"wall must be 'bottom' or 'top', got {wall!r}")
    j = 0 if wall == "bottom" else -1
    return f.data[:, j].copy()


def wall_mean_sq(f: ScalarField, wall: str) -> float:
    """(1/Gamma) * integral over x1 of f^2 on a wall (spectral Parseval row sum)."""
    j = 0 if wall == "bottom" else -1
    return float(np.sum(np.abs(f.data[:, j]) ** 2))


def dealias(f: ScalarField) -> ScalarField:
    """Zero every mode with |k| > n1/3 (2/3 rule)."""
    out = f.data.copy()
    out[~f.grid.dealias_keep, :] = 0.0
    return ScalarField(f.grid, out)


def multiply(f: ScalarField, g: ScalarField, apply_dealias: bool | None = None) -> ScalarField:
    """Pointwise product evaluated in physical space.

    ``apply_dealias=None`` follows the grid's dealias flag; pass False for
    diagnostic quadratures (the x1 mean of a product of two 2/3-truncated
    fields is alias-free as is).
    """
    out = ScalarField.from_physical(f.grid, f.to_physical() * g.to_physical())
    if apply_dealias is None:
        apply_dealias = f.grid.dealias
    return dealias(out) if apply_dealias else out


def hermitian_symmetry_error(f: ScalarField) -> float:
    n1 = f.grid.n1
    idx = (-np.arange(n1)) % n1
    return float(np.max(np.abs(f.data[idx, :] - np.conj(f.data))))


def imag_residual(f: ScalarField) -> float:
    """Max |Im| of collocation values; < 1e-12 * scale for real fields."""
    return float(np.max(np.abs(np.imag(np.fft.ifft(f.data * f.grid.n1, axis=0)))))


# ---------------------------------------------------------------------------
# Snapshot files: little-endian binary, bit-exact round-trip.
#
#   header: magic "SLPC" | version u32 | n1 u32 | n2 u32 | gamma f64 | time f64
#   blocks: name_len u32 | name utf-8 | rows u32 | cols u32 | complex128 data
# ---------------------------------------------------------------------------

SNAPSHOT_MAGIC = b"SLPC"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIIdd")
_BLOCK_HEAD = struct.Struct("<I")
_BLOCK_DIMS = struct.Struct("<II")


@dataclass
class Snapshot:
    n1: int
    n2: int
    gamma: float
    time: float
    blocks: dict[str, np.ndarray]


def write_snapshot(path: str | Path, time: float, gamma: float,
                   blocks: dict[str, np.ndarray]) -> None:
    first = next(iter(blocks.values()))
    n1 = first.shape[0]
    n2 = first.shape[1] - 1 if first.ndim == 2 else 0
    parts = [_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, n1, n2, gamma, time)]
    for name, arr in blocks.items():
        arr2 = np.atleast_2d(np.asarray(arr, dtype=np.complex128))
        encoded = name.encode("utf-8")
        parts.append(_BLOCK_HEAD.pack(len(encoded)))
        parts.append(encoded)
        parts.append(_BLOCK_DIMS.pack(arr2.shape[0], arr2.shape[1]))
        parts.append(np.ascontiguousarray(arr2).astype("<c16", copy=False).tobytes())
    Path(path).write_bytes(b"".join(parts))


def read_snapshot(path: str | Path) -> Snapshot:
    buf = Path(path).read_bytes()
    if len(buf) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header")
    magic, version, n1, n2, gamma, time = _HEADER.unpack_from(buf, 0)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise SnapshotFormatError(f"{path}: unsupported version {version}")
    offset = _HEADER.size
    blocks: dict[str, np.ndarray] = {}
    while offset < len(buf):
        (name_len,) = _BLOCK_HEAD.unpack_from(buf, offset)
        offset += _BLOCK_HEAD.size
        name = buf[offset : offset + name_len].decode("utf-8")
        offset += name_len
        rows, cols = _BLOCK_DIMS.unpack_from(buf, offset)
        offset += _BLOCK_DIMS.size
        nbytes = rows * cols * 16
        if offset + nbytes > len(buf):
            raise SnapshotFormatError(f"{path}: truncated block {name!r}")
        data = np.frombuffer(buf[offset : offset + nbytes], dtype="<c16").reshape(rows, cols)
        blocks[name] = data.astype(np.complex128)
        offset += nbytes
    return Snapshot(n1=n1, n2=n2, gamma=gamma, time=time, blocks=blocks)
