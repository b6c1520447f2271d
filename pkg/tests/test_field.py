"""Mixed Fourier/grid scalar fields: transforms, derivatives, quadrature,
traces, dealiasing, and snapshot I/O."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slipconvect.field import (
    Grid,
    ScalarField,
    d2dx2,
    ddx1,
    ddx2,
    dealias,
    hermitian_symmetry_error,
    imag_residual,
    integral,
    l2_norm_sq,
    laplacian,
    linf_norm,
    lp_norm,
    multiply,
    read_snapshot,
    wall_mean_sq,
    wall_trace,
    write_snapshot,
)

GAMMA = 2.0


def grid(n1=16, n2=16, gamma=GAMMA, dealias=True):
    return Grid(n1=n1, n2=n2, gamma=gamma, dealias=dealias)


def random_field(g: Grid, seed: int, modes: int = 3) -> ScalarField:
    """Smooth random real field from a few low Fourier modes."""
    rng = np.random.default_rng(seed)
    phys = np.zeros(g.shape)
    x1 = g.x1[:, None]
    x2 = g.x2[None, :]
    for m in range(modes + 1):
        amp_c, amp_s = rng.normal(size=2)
        prof = rng.normal(size=3)
        shape2 = prof[0] + prof[1] * x2 + prof[2] * np.sin(np.pi * x2)
        arg = 2.0 * np.pi * m * x1 / g.gamma
        phys += (amp_c * np.cos(arg) + amp_s * np.sin(arg)) * shape2
    return ScalarField.from_physical(g, phys)


# --- transforms -------------------------------------------------------------

def test_round_trip_physical():
    g = grid()
    rng = np.random.default_rng(0)
    values = rng.normal(size=g.shape)
    f = ScalarField.from_physical(g, values)
    assert np.max(np.abs(f.to_physical() - values)) < 10 * np.finfo(float).eps * np.max(np.abs(values))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_round_trip_property(seed):
    g = grid(n1=8, n2=8)
    rng = np.random.default_rng(seed)
    values = rng.normal(size=g.shape)
    f = ScalarField.from_physical(g, values)
    assert np.allclose(f.to_physical(), values, rtol=0, atol=1e-13 * (1 + np.max(np.abs(values))))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_hermitian_symmetry_preserved(seed):
    """Real input fields stay Hermitian under the derivative operators."""
    g = grid(n1=8, n2=8)
    f = random_field(g, seed)
    for op in (ddx1, ddx2, d2dx2, laplacian, dealias):
        assert hermitian_symmetry_error(op(f)) < 1e-12
    assert imag_residual(ddx1(f)) < 1e-10


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_parseval(seed):
    """Spectral l2_norm_sq equals the physical trapezoid quadrature exactly."""
    g = grid(n1=8, n2=8)
    f = random_field(g, seed)
    phys = f.to_physical()
    quad = float(np.mean(phys**2, axis=0) @ g.w2)
    assert l2_norm_sq(f) == pytest.approx(quad, rel=1e-12, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_ddx1_ddx2_commute(seed):
    g = grid(n1=8, n2=8)
    f = random_field(g, seed)
    a = ddx1(ddx2(f))
    b = ddx2(ddx1(f))
    assert np.max(np.abs(a.data - b.data)) < 1e-11 * (1 + np.max(np.abs(a.data)))


# --- ddx1 -------------------------------------------------------------------

def test_ddx1_single_mode():
    g = grid()
    k1 = 2.0 * np.pi / GAMMA
    f = ScalarField.from_function(g, lambda x1, x2: np.cos(k1 * x1) + 0.0 * x2)
    expected = ScalarField.from_function(g, lambda x1, x2: -k1 * np.sin(k1 * x1) + 0.0 * x2)
    assert np.max(np.abs(ddx1(f).data - expected.data)) < 1e-12 * k1


def test_ddx1_constant_is_zero():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: 1.0 + 0.0 * x1 + 0.0 * x2)
    assert np.max(np.abs(ddx1(f).data)) == 0.0


def test_ddx1_mode_two_with_profile():
    g = grid()
    k2 = 4.0 * np.pi / GAMMA
    f = ScalarField.from_function(g, lambda x1, x2: np.sin(k2 * x1) * x2)
    expected = ScalarField.from_function(g, lambda x1, x2: k2 * np.cos(k2 * x1) * x2)
    assert np.max(np.abs(ddx1(f).to_physical() - expected.to_physical())) < 1e-11 * k2


def test_ddx1_zeroes_nyquist():
    g = grid()
    data = np.zeros(g.shape, dtype=np.complex128)
    data[g.nyquist, :] = 1.0
    out = ddx1(ScalarField(g, data))
    assert np.max(np.abs(out.data[g.nyquist, :])) == 0.0


# --- ddx2 / d2dx2 -----------------------------------------------------------

def test_ddx2_linear_exact():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: x2 + 0.0 * x1)
    out = ddx2(f).to_physical()
    assert np.max(np.abs(out - 1.0)) < 1e-12


def test_ddx2_quadratic_exact():
    """Centered interior and second-order one-sided wall stencils are exact
    for quadratics."""
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: x2**2 + 0.0 * x1)
    out = ddx2(f).to_physical()
    expected = 2.0 * g.x2[None, :]
    assert np.max(np.abs(out - expected)) < 1e-12


def test_d2dx2_quadratic_exact():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: 3.0 * x2**2 + 0.0 * x1)
    assert np.max(np.abs(d2dx2(f).to_physical() - 6.0)) < 1e-10


def test_ddx2_convergence_order():
    errs = []
    for n2 in (16, 32):
        g = grid(n2=n2)
        f = ScalarField.from_function(g, lambda x1, x2: np.sin(np.pi * x2) + 0.0 * x1)
        exact = np.pi * np.cos(np.pi * g.x2)[None, :]
        errs.append(np.max(np.abs(ddx2(f).to_physical() - exact)))
    order = math.log2(errs[0] / errs[1])
    assert 1.8 < order < 2.2


# --- quadrature and norms ---------------------------------------------------

def test_integral_constant():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: 1.0 + 0.0 * x1 + 0.0 * x2)
    assert integral(f) == pytest.approx(1.0, abs=1e-14)


def test_integral_mean_zero_mode():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: np.sin(2.0 * np.pi * x1 / GAMMA) + 0.0 * x2)
    assert abs(integral(f)) < 1e-14


def test_integral_linear_profile():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: x2 + 0.0 * x1)
    assert integral(f) == pytest.approx(0.5, abs=1e-14)


def test_lp_norm_constant():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: 2.0 + 0.0 * x1 + 0.0 * x2)
    assert lp_norm(f, 3.0) == pytest.approx(2.0, rel=1e-12)


def test_l2_single_mode():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: np.sin(2.0 * np.pi * x1 / GAMMA) + 0.0 * x2)
    assert math.sqrt(l2_norm_sq(f)) == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert lp_norm(f, 2.0) == pytest.approx(math.sqrt(0.5), rel=1e-12)


def test_zero_field_norms():
    g = grid()
    z = ScalarField.zeros(g)
    assert l2_norm_sq(z) == 0.0
    assert lp_norm(z, 4.0) == 0.0
    assert linf_norm(z) == 0.0


def test_lp_norm_rejects_p_below_one():
    with pytest.raises(ValueError):
        lp_norm(ScalarField.zeros(grid()), 0.5)


# --- wall traces ------------------------------------------------------------

def test_wall_trace_linear():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: x2 + 0.0 * x1)
    bottom = wall_trace(f, "bottom")
    top = wall_trace(f, "top")
    # constant-in-x1 values live in the k=0 coefficient
    assert abs(bottom[0]) < 1e-14 and np.max(np.abs(bottom[1:])) < 1e-14
    assert top[0] == pytest.approx(1.0, abs=1e-14)


def test_wall_trace_conduction_profile():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: 1.0 - x2 + 0.0 * x1)
    assert wall_trace(f, "bottom")[0] == pytest.approx(1.0, abs=1e-14)
    assert abs(wall_trace(f, "top")[0]) < 1e-14


def test_wall_trace_sine_vanishes():
    g = grid()
    f = ScalarField.from_function(g, lambda x1, x2: np.sin(np.pi * x2) + 0.0 * x1)
    assert np.max(np.abs(wall_trace(f, "bottom"))) < 1e-14
    assert np.max(np.abs(wall_trace(f, "top"))) < 1e-12


def test_wall_trace_bad_wall():
    with pytest.raises(ValueError):
        wall_trace(ScalarField.zeros(grid()), "left")


def test_wall_mean_sq_single_mode():
    # f = cos(2 pi x1 / gamma) on the bottom wall: (1/Gamma) int f^2 = 1/2
    g = grid()
    f = ScalarField.from_function(
        g, lambda x1, x2: np.cos(2.0 * np.pi * x1 / GAMMA) * (1.0 - x2)
    )
    assert wall_mean_sq(f, "bottom") == pytest.approx(0.5, rel=1e-12)
    assert wall_mean_sq(f, "top") < 1e-25


# --- dealiasing -------------------------------------------------------------

def test_dealias_zeroes_high_modes():
    g = grid(n1=12)
    data = np.ones(g.shape, dtype=np.complex128)
    out = dealias(ScalarField(g, data))
    for i, k in enumerate(g.k.astype(int)):
        expected = 0.0 if 3 * abs(k) > g.n1 else 1.0
        assert np.all(out.data[i, :] == expected), f"mode {k}"


def test_dealias_keeps_low_modes():
    g = grid(n1=12)
    f = random_field(g, 3, modes=2)
    assert np.max(np.abs(dealias(f).data - f.data)) < 1e-15


def test_multiply_matches_pointwise_product():
    g = grid(n1=24)
    a = random_field(g, 1, modes=2)
    b = random_field(g, 2, modes=2)
    prod = multiply(a, b, apply_dealias=False)
    assert np.allclose(prod.to_physical(), a.to_physical() * b.to_physical(), atol=1e-12)


def test_multiply_dealiases_by_default():
    g = grid(n1=12)
    a = random_field(g, 4, modes=3)
    out = multiply(a, a)
    assert np.max(np.abs(out.data[~g.dealias_keep, :])) == 0.0


# --- snapshots --------------------------------------------------------------

def test_snapshot_round_trip_bit_exact(tmp_path):
    g = grid()
    omega = random_field(g, 5)
    temp = random_field(g, 6)
    path = tmp_path / "state.slpc"
    write_snapshot(path, time=0.125, gamma=g.gamma,
                   blocks={"omega": omega.data, "temp": temp.data})
    snap = read_snapshot(path)
    assert snap.time == 0.125
    assert snap.gamma == g.gamma
    assert (snap.n1, snap.n2) == (g.n1, g.n2)
    assert np.array_equal(snap.blocks["omega"], omega.data)
    assert np.array_equal(snap.blocks["temp"], temp.data)


def test_snapshot_rejects_corrupt_magic(tmp_path):
    from slipconvect.field import SnapshotFormatError

    path = tmp_path / "bad.slpc"
    path.write_bytes(b"NOPE" + b"\x00" * 64)
    with pytest.raises(SnapshotFormatError):
        read_snapshot(path)
