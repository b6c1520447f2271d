"""Per-Fourier-mode elliptic solves on the wall-bounded direction.

Every solve here is a batch of tridiagonal systems, one per x1 mode k, for
the operator f'' - (kp^2 + sigma) f with second-order ghost-point boundary
closures.  Boundary kinds: Dirichlet, Neumann, and the slip-wall Robin pair
d2 f = f/ls at x2=0, -d2 f = f/ls at x2=1 (ls = inf degenerates to Neumann).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .config import PhysicalParams
from .field import Grid, ScalarField, ddx1, ddx2, integral


class SolvabilityError(RuntimeError):
    """Singular mode solved with incompatible boundary/source data."""


@dataclass
class TridiagonalSystem:
    """Banded storage for a batch of independent tridiagonal systems.

    sub/diag/sup are (nsys, n); sub[:, 0] and sup[:, -1] are ignored.
    """

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return kernels.thomas_batch(self.sub, self.diag, self.sup, rhs)


@dataclass
class BCSpec:
    """Wall closure for a Helmholtz solve.

    g_bottom/g_top are per-mode data rows (scalar or (n1,) complex): Dirichlet
    values or outward-consistent Neumann slopes f'(0)=g_bottom, f'(1)=g_top.
    The Robin kind is homogeneous with slip length ls.
    """

    kind: str
    g_bottom: complex | np.ndarray = 0.0
    g_top: complex | np.ndarray = 0.0
    ls: float = math.inf

    def __post_init__(self) -> None:
        if self.kind not in ("dirichlet", "neumann", "robin"):
            raise ValueError(f"unknown BC kind {self.kind!r}")
        if self.kind == "robin" and not self.ls > 0.0:
            raise ValueError(f"robin slip length must be positive, got {self.ls}")


@dataclass
class VelocityPair:
    """Divergence-free velocity recovered from a streamfunction plus mean flow."""

    u1: ScalarField
    u2: ScalarField


def _as_row(g, n1: int) -> np.ndarray:
    arr = np.asarray(g, dtype=np.complex128)
    if arr.ndim == 0:
        return np.full(n1, complex(arr), dtype=np.complex128)
    if arr.shape != (n1,):
        raise ValueError(f"boundary data must be scalar or shape ({n1},), got {arr.shape}")
    return arr.copy()


def _helmholtz_batch(
    grid: Grid,
    sigma: float,
    bc: BCSpec,
    rhs_data: np.ndarray,
    singular_policy: str = "raise",
) -> tuple[np.ndarray, float]:
    """Solve f'' - (kp^2 + sigma) f = rhs for all modes at once.

    Returns (solution, compatibility defect).  The defect is nonzero only for
    the singular constant-null-space mode (Neumann-type walls with
    kp = sigma = 0); policy 'raise' rejects incompatible data, policy
    'project' removes the defect and fixes the zero-trapezoid-mean gauge.
    """
    n1, n = grid.n1, grid.n2 + 1
    h = grid.h2
    kappa = grid.kp**2 + sigma  # (n1,)
    g0 = _as_row(bc.g_bottom, n1)
    g1 = _as_row(bc.g_top, n1)

    sub = np.ones((n1, n))
    sup = np.ones((n1, n))
    diag = np.empty((n1, n))
    diag[:] = -2.0 - (h * h) * kappa[:, None]
    b = (h * h) * rhs_data.astype(np.complex128, copy=True)

    defect = 0.0
    singular = np.zeros(n1, dtype=bool)
    if bc.kind == "dirichlet":
        diag[:, 0] = 1.0
        sup[:, 0] = 0.0
        b[:, 0] = g0
        diag[:, -1] = 1.0
        sub[:, -1] = 0.0
        b[:, -1] = g1
    elif bc.kind in ("neumann", "robin"):
        robin_term = 0.0 if bc.kind == "neumann" else 2.0 * h / bc.ls
        sup[:, 0] = 2.0
        diag[:, 0] = -2.0 - robin_term - (h * h) * kappa
        sub[:, -1] = 2.0
        diag[:, -1] = -2.0 - robin_term - (h * h) * kappa
        if bc.kind == "neumann":
            b[:, 0] += 2.0 * h * g0
            b[:, -1] -= 2.0 * h * g1
        singular = (kappa == 0.0) & (robin_term == 0.0)
        if np.any(singular):
            idx = np.nonzero(singular)[0]
            for i in idx:
                # left null vector of the closed system is the trapezoid weight
                # row, so solvability reads trapz(rhs) = g_top - g_bottom
                raw = float(np.real(rhs_data[i, :] @ grid.w2))
                want = float(np.real(g1[i] - g0[i]))
                d = raw - want
                scale = max(1.0, abs(raw), abs(want))
                if singular_policy == "raise":
                    if abs(d) > 1e-10 * scale:
                        raise SolvabilityError(
                            f"mode {i}: Neumann data incompatible with source "
                            f"(defect {d:.3e})"
                        )
                defect = max(defect, abs(d))
                b[i, :] -= (h * h) * d  # uniform projection: trapz(1) = 1
                # pin f(0)=0 in place of the (now redundant) bottom closure row
                diag[i, 0] = 1.0
                sup[i, 0] = 0.0
                b[i, 0] = 0.0

    system = TridiagonalSystem(sub=sub, diag=diag, sup=sup)
    x = system.solve(b)
    if np.any(singular):
        for i in np.nonzero(singular)[0]:
            x[i, :] -= x[i, :] @ grid.w2  # zero-mean gauge for the pinned mode
    return x, defect


def helmholtz_solve(rhs: ScalarField, sigma: float, bc: BCSpec) -> ScalarField:
    """Solve f'' - (kp^2 + sigma) f = rhs per mode with the given wall closure."""
    x, _ = _helmholtz_batch(rhs.grid, sigma, bc, rhs.data, singular_policy="raise")
    return ScalarField(rhs.grid, x)


def _mean_flow(omega_bar: np.ndarray, grid: Grid, ls: float) -> np.ndarray:
    """Integrate d2 u1_bar = -omega_bar.

    Finite ls anchors at the bottom Navier-slip relation u1(0) = -ls*omega(0);
    free slip fixes the Galilean gauge by zero mean instead (the bottom
    anchor degenerates and the x1-mean of u1 is conserved).
    """
    h = grid.h2
    accum = np.zeros(grid.n2 + 1)
    accum[1:] = np.cumsum(0.5 * h * (omega_bar[1:] + omega_bar[:-1]))
    if math.isinf(ls):
        u1_bar = -accum
        return u1_bar - (u1_bar @ grid.w2)
    return -ls * omega_bar[0] - accum


def solve_streamfunction(
    omega: ScalarField, ls: float
) -> tuple[VelocityPair, ScalarField, float]:
    """Invert the vorticity: psi per mode with psi=0 walls, then u = (-d2 psi, d1 psi).

    The k=0 mode carries no streamfunction; its horizontal mean flow is
    recovered from d2 u1_bar = -omega_bar.  Returns (velocity, psi, residual
    of the top-wall Robin relation omega(1) = u1(1)/ls, a consistency
    diagnostic of the lagged wall coupling).
    """
    grid = omega.grid
    psi_data, _ = _helmholtz_batch(
        grid, 0.0, BCSpec("dirichlet", 0.0, 0.0), omega.data, singular_policy="raise"
    )
    psi_data[0, :] = 0.0
    psi = ScalarField(grid, psi_data)

    u1 = -ddx2(psi)
    omega_bar = np.real(omega.data[0, :])
    u1.data[0, :] = _mean_flow(omega_bar, grid, ls)
    u2 = ddx1(psi)

    if math.isinf(ls):
        robin_top = abs(omega_bar[-1])
    else:
        robin_top = abs(omega_bar[-1] - np.real(u1.data[0, -1]) / ls)
    return VelocityPair(u1=u1, u2=u2), psi, robin_top


def divergence(vel: VelocityPair) -> ScalarField:
    return ddx1(vel.u1) + ddx2(vel.u2)


def check_velocity(vel: VelocityPair) -> tuple[float, float]:
    """(relative divergence error, max |u2| on the walls); both ~0 by construction."""
    from .field import l2_norm_sq

    div = divergence(vel)
    scale = math.sqrt(l2_norm_sq(ddx1(vel.u1)) + l2_norm_sq(ddx2(vel.u2)))
    rel = math.sqrt(l2_norm_sq(div)) / max(scale, 1e-300)
    wall = max(
        float(np.max(np.abs(vel.u2.data[:, 0]))),
        float(np.max(np.abs(vel.u2.data[:, -1]))),
    )
    return rel, wall


def pressure_source(vel: VelocityPair, temp: ScalarField, phys: PhysicalParams) -> ScalarField:
    """-(1/Pr) grad(u)^T : grad(u) + Ra d2 T, the Poisson right-hand side."""
    grid = temp.grid
    inv_pr = 0.0 if math.isinf(phys.pr) else 1.0 / phys.pr
    rhs = phys.ra * ddx2(temp).data
    if inv_pr != 0.0:
        d1u1 = ddx1(vel.u1).to_physical()
        d2u1 = ddx2(vel.u1).to_physical()
        d1u2 = ddx1(vel.u2).to_physical()
        d2u2 = ddx2(vel.u2).to_physical()
        s = d1u1 * d1u1 + 2.0 * d1u2 * d2u1 + d2u2 * d2u2
        s_spec = np.fft.fft(s, axis=0) / grid.n1
        if grid.dealias:
            s_spec[~grid.dealias_keep, :] = 0.0
        rhs = rhs - inv_pr * s_spec
    return ScalarField(grid, rhs)


def solve_pressure(
    vel: VelocityPair, temp: ScalarField, phys: PhysicalParams
) -> tuple[ScalarField, float]:
    """Neumann pressure solve; returns (p, k=0 compatibility defect).

    Wall data comes from the momentum traces: -d2 p|0 = (1/ls) d1 u1 - Ra and
    d2 p|1 = (1/ls) d1 u1.  The singular mean mode is projected onto the
    discretely compatible subspace (defect reported, not hidden) and gauged to
    zero domain mean.
    """
    grid = temp.grid
    rhs = pressure_source(vel, temp, phys)
    inv_ls = 0.0 if math.isinf(phys.ls) else 1.0 / phys.ls
    ikp = 1j * grid.kp
    d1u1_bottom = ikp * vel.u1.data[:, 0]
    d1u1_top = ikp * vel.u1.data[:, -1]
    d1u1_bottom[grid.nyquist] = 0.0
    d1u1_top[grid.nyquist] = 0.0
    g_bottom = -inv_ls * d1u1_bottom
    g_bottom[0] += phys.ra
    g_top = inv_ls * d1u1_top
    bc = BCSpec("neumann", g_bottom=g_bottom, g_top=g_top)
    p_data, defect = _helmholtz_batch(grid, 0.0, bc, rhs.data, singular_policy="project")
    p = ScalarField(grid, p_data)
    p.data[0, :] -= integral(p)
    return p, defect
