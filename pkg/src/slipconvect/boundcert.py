"""Background-profile certification of Nusselt bounds.

Decomposes T = tau(x2) + theta with a piecewise-linear profile tau (linear in
two wall layers of width delta, constant 1/2 in the bulk) and evaluates the
quadratic form

  Q = M Ra^2 + <|d1 theta|^2> + <|d2 theta|^2> + 2<tau' u2 theta>
      + (b/Ra)<|omega|^2> + (b/(Ra ls))(u1^2 walls) + a<|grad omega|^2>
      - (a/ls)(p d1 u1 walls) - a Ra <omega d1 theta>

on run data.  Q >= 0 together with the exact identity
(1-b) Nu + b = 1/(2 delta) + M Ra^2 - Q turns balance identities into the
bound Nu <= (1/(2 delta) + M Ra^2 - b)/(1-b).

All layer integrals are evaluated with layer-restricted trapezoid rules so
that the kinks of tau never get differenced across and <tau'^2> = 1/(2 delta)
holds exactly for grid-aligned delta.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .config import PhysicalParams
from .diagnostics import RunningAverages, _wall_product
from .elliptic import VelocityPair
from .field import ScalarField, ddx1, ddx2, l2_norm_sq, wall_mean_sq


class RegimeError(ValueError):
    """Parameter regime required by the certified bound is violated."""


@dataclass(frozen=True)
class BackgroundProfile:
    """Piecewise-linear background temperature sampled on the x2 grid.

    tau(0) = 1, tau(1) = 0, tau = 1/2 on [delta, 1-delta]; tau' = -1/(2 delta)
    on the closed layers (kink nodes carry the layer value) and 0 in the bulk.
    delta is grid-aligned; the requested value is kept for reporting.
    """

    delta: float
    delta_requested: float
    j_delta: int
    tau: np.ndarray
    dtau: np.ndarray
    x2: np.ndarray

    @property
    def int_dtau_sq(self) -> float:
        return 0.5 / self.delta

    def layer_integral(self, values: np.ndarray) -> float:
        """Trapezoid integral of a profile restricted to the two layers."""
        j = self.j_delta
        return float(
            np.trapezoid(values[: j + 1], self.x2[: j + 1])
            + np.trapezoid(values[len(values) - j - 1 :], self.x2[len(self.x2) - j - 1 :])
        )

    def tau_prime_integral(self, values: np.ndarray) -> float:
        """integral of tau' * values over [0,1] (tau' vanishes in the bulk)."""
        return -self.layer_integral(values) / (2.0 * self.delta)


def make_profile(delta: float, x2: np.ndarray) -> BackgroundProfile:
    """Sample the background profile with delta rounded to the nearest node.

    Raises ValueError unless 0 < delta < 1/2; the grid-aligned delta is kept
    strictly below 1/2 as well.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"layer width must lie in (0, 1/2), got {delta}")
    x2 = np.asarray(x2, dtype=np.float64)
    n2 = len(x2) - 1
    h2 = x2[1] - x2[0]
    j = int(round(delta / h2))
    j = max(1, j)
    while x2[j] >= 0.5:
        j -= 1
    if j < 1:
        raise ValueError(f"grid too coarse to align layer width {delta}")
    delta_g = float(x2[j])
    tau = np.empty(n2 + 1)
    left = x2 <= delta_g
    right = x2 >= 1.0 - delta_g
    tau[left] = 1.0 - x2[left] / (2.0 * delta_g)
    tau[right] = (1.0 - x2[right]) / (2.0 * delta_g)
    tau[~(left | right)] = 0.5
    dtau = np.zeros(n2 + 1)
    dtau[left | right] = -1.0 / (2.0 * delta_g)
    tau.setflags(write=False)
    dtau.setflags(write=False)
    return BackgroundProfile(
        delta=delta_g, delta_requested=float(delta), j_delta=j,
        tau=tau, dtau=dtau, x2=x2,
    )


def theta_of(temp: ScalarField, profile: BackgroundProfile) -> ScalarField:
    """theta = T - tau.  The walls of theta must vanish (T walls are 1 and 0,
    matching tau); a mismatch above 1e-12 raises ValueError."""
    theta = temp.copy()
    theta.data[0, :] -= profile.tau
    n1 = temp.grid.n1
    wall_err = max(
        float(np.max(np.abs(np.fft.ifft(theta.data[:, 0] * n1)))),
        float(np.max(np.abs(np.fft.ifft(theta.data[:, -1] * n1)))),
    )
    if wall_err > 1e-12:
        raise ValueError(
            f"temperature walls do not match the profile (defect {wall_err:.3e})"
        )
    return theta


@dataclass(frozen=True)
class BoundParams:
    """Coefficients of the quadratic form and the calibrated constants."""

    a: float
    b: float
    m: float
    delta: float
    eps: float
    c0: float
    c2: float
    u0_w1r: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.b < 1.0:
            raise ValueError(f"b must lie in [0, 1), got {self.b}")
        if self.a < 0.0 or self.m < 0.0 or self.u0_w1r < 0.0:
            raise ValueError("a, m, u0_w1r must be nonnegative")
        if self.eps <= 0.0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not 0.0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 1/2), got {self.delta}")
        if self.c0 < 0.0 or self.c2 < 0.0:
            raise ValueError("c0, c2 must be nonnegative")


@dataclass(frozen=True)
class QBreakdown:
    """Additive terms of Q.  total is their fsum; grad and wall-u1 terms and
    m_ra2 are nonnegative by construction."""

    m_ra2: float
    grad1_theta: float
    grad2_theta: float
    cross: float
    b_enstrophy: float
    b_wall: float
    a_grad_omega: float
    a_wall_pressure: float
    a_cross: float
    total: float

    def parts(self) -> dict[str, float]:
        return {
            "m_ra2": self.m_ra2,
            "grad1_theta": self.grad1_theta,
            "grad2_theta": self.grad2_theta,
            "cross": self.cross,
            "b_enstrophy": self.b_enstrophy,
            "b_wall": self.b_wall,
            "a_grad_omega": self.a_grad_omega,
            "a_wall_pressure": self.a_wall_pressure,
            "a_cross": self.a_cross,
        }


def _assemble_q(
    funcs: dict[str, float | np.ndarray],
    profile: BackgroundProfile,
    bp: BoundParams,
    phys: PhysicalParams,
) -> QBreakdown:
    """Shared term definitions for the instantaneous and averaged entry points.

    <|d2 theta|^2> is evaluated through the exact split
    <|d2 T|^2> - 2 integral(tau' d2T-mean) + 1/(2 delta), each piece with the
    quadrature that is exact for its smoothness (no differencing across the
    kinks); the result is the subinterval-wise trapezoid rule applied to the
    true nonnegative integrand.
    """
    ra, ls = phys.ra, phys.ls
    inv_ls = 0.0 if math.isinf(ls) else 1.0 / ls
    ltau_dT2 = profile.tau_prime_integral(np.asarray(funcs["dT2_profile"]))
    grad2_theta = float(funcs["grad2_T_sq"]) - 2.0 * ltau_dT2 + profile.int_dtau_sq
    cross = 2.0 * profile.tau_prime_integral(np.asarray(funcs["u2T_profile"]))
    terms = QBreakdown(
        m_ra2=bp.m * ra * ra,
        grad1_theta=float(funcs["grad1_theta_sq"]),
        grad2_theta=grad2_theta,
        cross=cross,
        b_enstrophy=(bp.b / ra) * float(funcs["enstrophy"]),
        b_wall=(bp.b / ra) * inv_ls * float(funcs["wall_u1_sq"]),
        a_grad_omega=bp.a * float(funcs["grad_omega_sq"]),
        a_wall_pressure=-bp.a * inv_ls * float(funcs["wall_p_du1"]),
        a_cross=-bp.a * ra * float(funcs["omega_dT1"]),
        total=0.0,
    )
    total = math.fsum(terms.parts().values())
    return QBreakdown(**{**terms.parts(), "total": total})


def q_functional(
    theta: ScalarField,
    vel: VelocityPair,
    omega: ScalarField,
    p: ScalarField,
    profile: BackgroundProfile,
    bp: BoundParams,
    phys: PhysicalParams,
) -> QBreakdown:
    """Q evaluated on instantaneous fields (spatial functionals only)."""
    grid = theta.grid
    temp = theta.copy()
    temp.data[0, :] += profile.tau
    dT2 = ddx2(temp)
    theta_phys = theta.to_physical()
    d1u1 = ddx1(vel.u1)
    funcs = {
        "grad1_theta_sq": l2_norm_sq(ddx1(theta)),
        "grad2_T_sq": l2_norm_sq(dT2),
        "dT2_profile": np.real(dT2.data[0, :]),
        "u2T_profile": np.mean(vel.u2.to_physical() * theta_phys, axis=0),
        "enstrophy": l2_norm_sq(omega),
        "wall_u1_sq": wall_mean_sq(vel.u1, "bottom") + wall_mean_sq(vel.u1, "top"),
        "grad_omega_sq": l2_norm_sq(ddx1(omega)) + l2_norm_sq(ddx2(omega)),
        "wall_p_du1": _wall_product(p, d1u1, 0) + _wall_product(p, d1u1, -1),
        "omega_dT1": float(
            np.mean(omega.to_physical() * ddx1(theta).to_physical(), axis=0) @ grid.w2
        ),
    }
    return _assemble_q(funcs, profile, bp, phys)


def q_functional_averaged(
    avgs: RunningAverages,
    profile: BackgroundProfile,
    bp: BoundParams,
    phys: PhysicalParams,
) -> QBreakdown:
    """Q evaluated on long-time averages (true angle brackets at finite horizon)."""
    funcs = {
        "grad1_theta_sq": avgs.mean("grad1_T_sq"),
        "grad2_T_sq": avgs.mean("grad2_T_sq"),
        "dT2_profile": avgs.profile_mean("dT2"),
        "u2T_profile": avgs.profile_mean("u2T"),
        "enstrophy": avgs.mean("enstrophy"),
        "wall_u1_sq": avgs.mean("wall_u1_sq_bottom") + avgs.mean("wall_u1_sq_top"),
        "grad_omega_sq": avgs.mean("grad_omega_sq"),
        "wall_p_du1": avgs.mean("wall_p_du1_bottom") + avgs.mean("wall_p_du1_top"),
        "omega_dT1": avgs.mean("omega_dT1"),
    }
    return _assemble_q(funcs, profile, bp, phys)


def exponent(alpha: float) -> float:
    """Bound exponent p(alpha) for slip lengths scaling like Ra^alpha:
    5/12 for alpha >= 1/24, otherwise 1/2 - 2 alpha.  Continuous at 1/24."""
    if alpha < 0.0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha >= 1.0 / 24.0:
        return 5.0 / 12.0
    return 0.5 - 2.0 * alpha


def regime_satisfied(phys: PhysicalParams) -> bool:
    """ls^2 pr^2 >= ra^(3/2); infinite ls or pr always qualifies."""
    if math.isinf(phys.ls) or math.isinf(phys.pr):
        return True
    return phys.ls**2 * phys.pr**2 >= phys.ra**1.5


def choose_parameters(
    phys: PhysicalParams,
    b: float = 0.5,
    c0: float = 1.0,
    c2: float = 1.0,
    u0_w1r: float = 0.0,
    x2: np.ndarray | None = None,
    strict_regime: bool = False,
) -> tuple[BoundParams, dict]:
    """Asymptotically optimal parameters:

      a0 = (b / 100 c2^2) min{1, Ra^2/u0^2},  a = a0 Ra^(-3/2),
      delta = (a0 b / 4 c0)^(1/6) Ra^(-5/12),  M = a c2^2 / (2 ls^2),  eps = a,

    plus the analytic bound (1/2)(4 c0/(a0 b))^(1/6) Ra^(5/12)
    + (a0 c2^2/2) ls^(-2) Ra^(1/2).  delta is clamped (and flagged) when Ra is
    too small for the scaling to fit in (0, 1/2); with x2 given it is rounded
    DOWN to the grid: delta^6 multiplies the only term that can drive the
    A coefficient negative, so alignment must never exceed the target.
    """
    ra, ls = phys.ra, phys.ls
    regime_ok = regime_satisfied(phys)
    if strict_regime and not regime_ok:
        raise RegimeError(
            f"ls^2 pr^2 = {phys.ls**2 * phys.pr**2:.3e} < ra^(3/2) = {ra**1.5:.3e}"
        )
    if c0 <= 0.0 or c2 <= 0.0:
        raise ValueError("calibrated constants must be positive here")
    min_term = 1.0 if u0_w1r <= 0.0 else min(1.0, (ra / u0_w1r) ** 2)
    a0 = (b / (100.0 * c2**2)) * min_term
    a = a0 * ra**-1.5
    delta_raw = (a0 * b / (4.0 * c0)) ** (1.0 / 6.0) * ra ** (-5.0 / 12.0)
    delta = delta_raw
    clamped = False
    if delta >= 0.5:
        clamped = True
        delta = 0.5 - 1e-6
    if x2 is not None:
        h2 = float(x2[1] - x2[0])
        j = max(1, int(math.floor(delta / h2 + 1e-12)))
        while x2[j] >= 0.5:
            j -= 1
        delta = float(x2[j])
    m = 0.0 if math.isinf(ls) else a * c2**2 / (2.0 * ls**2)
    nu_bound_asymptotic = 0.5 * (4.0 * c0 / (a0 * b)) ** (1.0 / 6.0) * ra ** (
        5.0 / 12.0
    )
    if not math.isinf(ls):
        nu_bound_asymptotic += (a0 * c2**2 / 2.0) * math.sqrt(ra) / ls**2
    bp = BoundParams(a=a, b=b, m=m, delta=delta, eps=a, c0=c0, c2=c2, u0_w1r=u0_w1r)
    info = {
        "a0": a0,
        "delta_raw": delta_raw,
        "delta_clamped": clamped,
        "regime_ok": regime_ok,
        "nu_bound_asymptotic": nu_bound_asymptotic,
    }
    return bp, info


def choose_parameters_infinite_pr(
    phys: PhysicalParams,
    b: float = 0.5,
    c0_b: float = 1.0,
    c_lap: float = 1.0,
    x2: np.ndarray | None = None,
) -> tuple[BoundParams, dict]:
    """Parameters for the inertia-free certificate (M = a = 0):

      eps = c_lap^(-1/2) Ra^(-1),
      delta = (b / (c0_b c_lap^(1/3)))^(1/4) Ra^(-5/12)  (rounded down on the
      grid so the omega coefficient b/Ra - c0_b delta^4 eps^(-2/3) stays >= 0).
    """
    ra = phys.ra
    if c0_b <= 0.0 or c_lap <= 0.0:
        raise ValueError("calibrated constants must be positive here")
    eps = ra**-1.0 / math.sqrt(c_lap)
    delta_raw = (b / (c0_b * c_lap ** (1.0 / 3.0))) ** 0.25 * ra ** (-5.0 / 12.0)
    delta = delta_raw
    clamped = False
    if delta >= 0.5:
        clamped = True
        delta = 0.5 - 1e-6
    if x2 is not None:
        h2 = float(x2[1] - x2[0])
        j = max(1, int(math.floor(delta / h2)))
        while x2[j] >= 0.5:
            j -= 1
        delta = float(x2[j])
    coeff_omega = b / ra - c0_b * delta**4 * eps ** (-2.0 / 3.0)
    coeff_d11 = 1.0 / (2.0 * c_lap * ra * ra) - eps * eps / 8.0
    bp = BoundParams(
        a=0.0, b=b, m=0.0, delta=delta, eps=eps, c0=c0_b, c2=0.0, u0_w1r=0.0
    )
    info = {
        "delta_raw": delta_raw,
        "delta_clamped": clamped,
        "delta_scaling": delta * ra ** (5.0 / 12.0),
        "coeff_omega": coeff_omega,
        "coeff_d11": coeff_d11,
        "c_lap": c_lap,
    }
    return bp, info


def _data_hash(avgs: RunningAverages) -> str:
    payload = repr(sorted(avgs.means().items())).encode()
    for key in sorted(avgs.profile_sums):
        payload += key.encode() + avgs.profile_mean(key).tobytes()
    return hashlib.sha256(payload).hexdigest()[:16]


def certify(
    avgs: RunningAverages,
    bp: BoundParams,
    phys: PhysicalParams,
    x2: np.ndarray,
    nu_bound_asymptotic: float | None = None,
) -> dict:
    """Empirical certificate at finite horizon (never a proof).

    Reports the Q breakdown on the averaged data, the lower-bound coefficient
    signs, the certified bound (1/(2 delta) + M Ra^2 - b)/(1-b) from Q >= 0,
    the identity-implied value with observed Q, and the closure defect of
    (1-b) Nu + b = 1/(2 delta) + M Ra^2 - Q together with its balance-residual
    decomposition.  Negative Q falsifies the chosen constants, not the code.
    """
    ra, ls, pr = phys.ra, phys.ls, phys.pr
    profile = make_profile(bp.delta, x2)
    q = q_functional_averaged(avgs, profile, bp, phys)

    inv_ls2 = 0.0 if math.isinf(ls) else 1.0 / ls**2
    inv_pr2 = 0.0 if math.isinf(pr) else 1.0 / pr**2
    if bp.a > 0.0:
        coeff_a = (
            bp.b / ra
            - bp.a**2 * ra**2 / 2.0
            - bp.a * bp.c2**2 * bp.u0_w1r**2 * inv_ls2 * inv_pr2 / 2.0
            - bp.a * bp.c2**2 * ra**2 * inv_ls2 * inv_pr2 / 2.0
            - 2.0 * bp.c0 * profile.delta**6 / bp.a
        )
    else:
        coeff_a = None
    grad_omega_coeff = bp.a * (0.25 - bp.c2 * inv_ls2)

    half_over_delta = 0.5 / profile.delta
    m_ra2 = bp.m * ra * ra
    nu_bound_certified = (half_over_delta + m_ra2 - bp.b) / (1.0 - bp.b)
    nu_bound_identity = (half_over_delta + m_ra2 - q.total - bp.b) / (1.0 - bp.b)

    nu_grad = avgs.mean("nu_grad")
    nu_flux = avgs.mean("nu_flux")
    nu_wall = avgs.mean("nu_wall")
    closure_defect = (1.0 - bp.b) * nu_grad + bp.b - (
        half_over_delta + m_ra2 - q.total
    )

    # theta-equation identity residual: <tau' d2 theta> + <|grad theta|^2>
    # + <tau' u2 theta> should vanish on steady averages
    ltau_dT2 = profile.tau_prime_integral(avgs.profile_mean("dT2"))
    tau_d2theta = ltau_dT2 - profile.int_dtau_sq
    theta_identity_residual = (
        tau_d2theta + q.grad1_theta + q.grad2_theta + 0.5 * q.cross
    )

    measured = {"nu_flux": nu_flux, "nu_grad": nu_grad, "nu_wall": nu_wall}
    certified = (
        q.total >= 0.0
        and (coeff_a is None or coeff_a > 0.0)
        and (bp.a == 0.0 or grad_omega_coeff > 0.0)
    )
    report = {
        "kind": "empirical certificate at finite horizon",
        "params": {
            "a": bp.a, "b": bp.b, "m": bp.m, "delta": profile.delta,
            "delta_requested": bp.delta, "eps": bp.eps,
            "c0": bp.c0, "c2": bp.c2, "u0_w1r": bp.u0_w1r,
        },
        "physical": {"ra": ra, "pr": pr, "ls": ls, "gamma": phys.gamma},
        "q_breakdown": {**q.parts(), "total": q.total},
        "q_nonnegative": q.total >= 0.0,
        "coeff_a": coeff_a,
        "grad_omega_coeff": grad_omega_coeff,
        "l0_threshold": 2.0 * math.sqrt(bp.c2) if bp.c2 > 0.0 else 0.0,
        "nu_bound_certified": nu_bound_certified,
        "nu_bound_identity": nu_bound_identity,
        "nu_bound_asymptotic": nu_bound_asymptotic,
        "nu_measured": measured,
        "nu_below_certified": max(measured.values()) <= nu_bound_certified,
        "nu_below_asymptotic": (
            None
            if nu_bound_asymptotic is None
            else max(measured.values()) <= nu_bound_asymptotic
        ),
        "closure_defect": closure_defect,
        "theta_identity_residual": theta_identity_residual,
        "certified": certified,
        "violating_term": (
            None
            if certified
            else min(q.parts().items(), key=lambda kv: kv[1])[0]
            if q.total < 0.0
            else ("coeff_a" if (coeff_a is not None and coeff_a <= 0.0) else "grad_omega_coeff")
        ),
        "data_hash": _data_hash(avgs),
        "window": avgs.window,
    }
    return report


def certify_infinite_pr(
    avgs: RunningAverages,
    bp: BoundParams,
    phys: PhysicalParams,
    x2: np.ndarray,
    info: dict | None = None,
) -> dict:
    """Certificate for the inertia-free limit: Q with M = a = 0, plus the
    lower-bound coefficients (b/Ra - c0 delta^4 eps^(-2/3)) on <|omega|^2> and
    (1/(2 C Ra^2) - eps^2/8) on <|d1^2 omega|^2>."""
    report = certify(avgs, bp, phys, x2)
    c_lap = info["c_lap"] if info else 1.0
    coeff_omega = bp.b / phys.ra - bp.c0 * bp.delta**4 * bp.eps ** (-2.0 / 3.0)
    coeff_d11 = 1.0 / (2.0 * c_lap * phys.ra**2) - bp.eps**2 / 8.0
    lower_bound = coeff_omega * avgs.mean("enstrophy") + coeff_d11 * avgs.mean(
        "d11_omega_sq"
    )
    report.update(
        {
            "kind": "empirical certificate at finite horizon (inertia-free)",
            "coeff_omega": coeff_omega,
            "coeff_d11": coeff_d11,
            "q_lower_bound": lower_bound,
            "delta_scaling": bp.delta * phys.ra ** (5.0 / 12.0),
            "certified": report["q_nonnegative"]
            and coeff_omega >= 0.0
            and coeff_d11 > 0.0,
        }
    )
    return report


def dc_bound_check(avgs: RunningAverages, delta: float, phys: PhysicalParams) -> dict:
    """Unconditional-bound sanity check: Nu <= 1/(2 delta)
    + 2 delta Nu^(1/2) ((Nu-1) Ra)^(1/2), at the given delta and at the
    optimized delta* = Nu^(-1/2) Ra^(-1/4) / 2."""
    nu = avgs.mean("nu_flux")
    ra = phys.ra
    excess = max(nu - 1.0, 0.0)

    def rhs(d: float) -> float:
        return 0.5 / d + 2.0 * d * math.sqrt(nu) * math.sqrt(excess * ra)

    delta_star = min(0.5 / math.sqrt(nu) / ra**0.25 / 1.0, 0.499)
    report = {
        "nu": nu,
        "delta": delta,
        "rhs_at_delta": rhs(delta),
        "holds_at_delta": nu <= rhs(delta) * (1.0 + 1e-12),
        "delta_star": delta_star,
        "rhs_at_delta_star": rhs(delta_star),
        "holds_at_delta_star": nu <= rhs(delta_star) * (1.0 + 1e-12),
        "margin_at_delta_star": rhs(delta_star) - nu,
    }
    return report


@dataclass(frozen=True)
class CalibrationDatum:
    """Averaged functionals of one run, as consumed by calibrate_constants."""

    label: str
    u2T_profile: np.ndarray
    dT2_profile: np.ndarray
    grad2_T_sq: float
    enstrophy: float
    d1_omega_sq: float
    d11_omega_sq: float
    lap_omega_sq: float
    max_pressure_ratio: float
    x2: np.ndarray

    @classmethod
    def from_averages(
        cls, avgs: RunningAverages, x2: np.ndarray, label: str = ""
    ) -> "CalibrationDatum":
        return cls(
            label=label or _data_hash(avgs),
            u2T_profile=avgs.profile_mean("u2T"),
            dT2_profile=avgs.profile_mean("dT2"),
            grad2_T_sq=avgs.mean("grad2_T_sq"),
            enstrophy=avgs.mean("enstrophy"),
            d1_omega_sq=avgs.mean("d1_omega_sq"),
            d11_omega_sq=avgs.mean("d11_omega_sq"),
            lap_omega_sq=avgs.mean("lap_omega_sq"),
            max_pressure_ratio=avgs.maxes.get("pressure_ratio", 0.0),
            x2=np.asarray(x2, dtype=np.float64),
        )


def _cross_terms(datum: CalibrationDatum, profile: BackgroundProfile) -> tuple[float, float]:
    """(|2<tau' u2 theta>|, <|d2 theta|^2>) for one datum and profile."""
    cross = 2.0 * profile.tau_prime_integral(datum.u2T_profile)
    ltau_dT2 = profile.tau_prime_integral(datum.dT2_profile)
    grad2_theta = datum.grad2_T_sq - 2.0 * ltau_dT2 + profile.int_dtau_sq
    return abs(cross), grad2_theta


def calibrate_constants(
    data: list[CalibrationDatum],
    deltas: list[float] | None = None,
    eps_grid: np.ndarray | None = None,
) -> dict:
    """Smallest constants making the layer inequalities hold on the data:

      (a) |2<tau' u2 theta>| <= (1/2)<|d2 theta|^2> + c0_a delta^6 eps^(-1)
          <|omega|^2> + (eps/4)<|d1 omega|^2>
      (b) ... c0_b delta^4 eps^(-2/3) <|omega|^2> + (eps^2/4)<|d1^2 omega|^2>

    maximized over the data, the profile family, and the eps grid (the
    analytically worst eps per datum is appended to the grid), plus c2 from
    the pressure-bound monitor and c_lap from <|d1^2 omega|^2>/<|lap omega|^2>.
    """
    if not data:
        raise ValueError("no calibration data supplied")
    x2 = data[0].x2
    if deltas is None:
        h2 = float(x2[1] - x2[0])
        deltas = sorted(
            {float(x2[j]) for j in range(1, len(x2) - 1) if 2 * h2 - 1e-12 < x2[j] < 0.5}
        ) or [float(x2[1])]
    if eps_grid is None:
        eps_grid = np.logspace(-8, 2, 41)

    best_a = {"c0": 0.0, "label": None, "delta": None, "eps": None}
    best_b = {"c0": 0.0, "label": None, "delta": None, "eps": None}
    degenerate = True
    for datum in data:
        if datum.enstrophy <= 0.0:
            continue
        degenerate = False
        for delta in deltas:
            profile = make_profile(delta, datum.x2)
            kk, g2t = _cross_terms(datum, profile)
            k_eff = kk - 0.5 * g2t
            if k_eff <= 0.0:
                continue
            # part (a): needed c0 = (K - (eps/4) D1)+ * eps / (delta^6 Z)
            d1 = datum.d1_omega_sq
            eps_list = list(eps_grid)
            if d1 > 0.0:
                eps_list.append(2.0 * k_eff / d1)
            for eps in eps_list:
                need = (k_eff - 0.25 * eps * d1) * eps / (
                    profile.delta**6 * datum.enstrophy
                )
                if need > best_a["c0"]:
                    best_a = {
                        "c0": need, "label": datum.label,
                        "delta": profile.delta, "eps": float(eps),
                    }
            # part (b): needed c0 = (K - (eps^2/4) D11)+ * eps^(2/3) / (delta^4 Z)
            d11 = datum.d11_omega_sq
            eps_list = list(eps_grid)
            if d11 > 0.0:
                eps_list.append(math.sqrt(k_eff / d11))
            for eps in eps_list:
                need = (k_eff - 0.25 * eps * eps * d11) * eps ** (2.0 / 3.0) / (
                    profile.delta**4 * datum.enstrophy
                )
                if need > best_b["c0"]:
                    best_b = {
                        "c0": need, "label": datum.label,
                        "delta": profile.delta, "eps": float(eps),
                    }
    if degenerate:
        raise ValueError("all calibration data degenerate (zero enstrophy)")

    c2 = max(d.max_pressure_ratio for d in data)
    c_lap_vals = [
        d.d11_omega_sq / d.lap_omega_sq for d in data if d.lap_omega_sq > 0.0
    ]
    c_lap = max(c_lap_vals) if c_lap_vals else 0.0
    return {
        "c0_a": best_a["c0"],
        "c0_b": best_b["c0"],
        "c2": c2,
        "c_lap": c_lap,
        "argmax_a": best_a,
        "argmax_b": best_b,
        "n_data": len(data),
        "deltas": list(deltas),
        "degenerate": best_a["c0"] == 0.0 and best_b["c0"] == 0.0,
    }


def check_calibration(
    data: list[CalibrationDatum],
    c0_a: float,
    c0_b: float,
    deltas: list[float],
    eps_grid: np.ndarray | None = None,
) -> bool:
    """True when both layer inequalities hold on every (datum, delta, eps)
    with the supplied constants (used by the minimality property)."""
    if eps_grid is None:
        eps_grid = np.logspace(-8, 2, 41)
    for datum in data:
        if datum.enstrophy <= 0.0:
            continue
        for delta in deltas:
            profile = make_profile(delta, datum.x2)
            kk, g2t = _cross_terms(datum, profile)
            d1, d11 = datum.d1_omega_sq, datum.d11_omega_sq
            eps_a = list(eps_grid) + ([2.0 * (kk - 0.5 * g2t) / d1] if d1 > 0 and kk > 0.5 * g2t else [])
            for eps in eps_a:
                rhs = 0.5 * g2t + c0_a * profile.delta**6 / eps * datum.enstrophy + 0.25 * eps * d1
                if kk > rhs * (1.0 + 1e-12):
                    return False
            eps_b = list(eps_grid) + ([math.sqrt((kk - 0.5 * g2t) / d11)] if d11 > 0 and kk > 0.5 * g2t else [])
            for eps in eps_b:
                rhs = 0.5 * g2t + c0_b * profile.delta**4 * eps ** (-2.0 / 3.0) * datum.enstrophy + 0.25 * eps * eps * d11
                if kk > rhs * (1.0 + 1e-12):
                    return False
    return True
