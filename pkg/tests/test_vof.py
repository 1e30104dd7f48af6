import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermocap.fields import FaceField, ScalarField
from thermocap.grid import BCSet, BoundaryCondition, build_grid
from thermocap.vof import (CFLViolation, PhaseFraction, advect_alpha, conservative_clip, fct_limit,
                           interface_compression_flux, upwind_flux)

ZG = BCSet.uniform(BoundaryCondition("zero_gradient"))
PER = BCSet.uniform(BoundaryCondition("periodic"))


def alpha_field(grid, values, bcs=ZG):
    a = ScalarField.zeros(grid, bcs)
    a.interior = values
    return a.apply_bc()


def stream_velocity(grid, psi):
    """Face velocity from a node stream function; zero psi on the boundary gives closed walls."""
    return FaceField(grid, (psi[:, 1:] - psi[:, :-1]) / grid.dy, -(psi[1:, :] - psi[:-1, :]) / grid.dx)


def random_closed_flow(grid, rng, scale):
    psi = np.zeros((grid.nx + 1, grid.ny + 1))
    psi[1:-1, 1:-1] = rng.normal(size=(grid.nx - 1, grid.ny - 1))
    fv = stream_velocity(grid, psi)
    return fv.scaled(scale / max(fv.max_abs(), 1e-300))


def disc(grid, cx, cy, r):
    X, Y = grid.mesh()
    return np.clip((r - np.hypot(X - cx, Y - cy)) / grid.dx + 0.5, 0.0, 1.0)


def test_uniform_alpha_stays_uniform():
    grid = build_grid(16, 16, (1.0, 1.0))
    rng = np.random.default_rng(3)
    fv = random_closed_flow(grid, rng, 1.0)
    step = advect_alpha(PhaseFraction(alpha_field(grid, 1.0)), fv, 0.2 * grid.dx)
    assert np.allclose(step.phase.alpha.interior, 1.0, atol=1e-14)


def test_zero_velocity_leaves_alpha_unchanged():
    grid = build_grid(16, 16, (1.0, 1.0))
    a = alpha_field(grid, disc(grid, 0.5, 0.5, 0.3))
    step = advect_alpha(PhaseFraction(a), FaceField.zeros(grid), 1e-3)
    assert np.array_equal(step.phase.alpha.interior, a.interior)
    # pure cells with identical neighbors stay exactly 0 or 1
    pure = step.phase.alpha.interior
    assert np.all((pure[0, 0] == 0.0, pure[8, 8] == 1.0))


def test_rigid_translation_conserves_and_bounds():
    grid = build_grid(32, 32, (1.0, 1.0))
    a = alpha_field(grid, disc(grid, 0.5, 0.5, 0.2), PER)
    u = FaceField(grid, np.full((33, 32), 1.0), np.full((32, 33), 0.5))
    dt = 0.25 * grid.dx
    phase = PhaseFraction(a)
    m0 = phase.mass()
    lo, hi = 0.0, 1.0
    for _ in range(int(round(2 * grid.dx / (dt * 1.0)))):
        step = advect_alpha(phase, u, dt)
        phase = step.phase
        lo, hi = min(lo, step.min_pre_clip), max(hi, step.max_pre_clip)
    assert abs(phase.mass() - m0) / m0 <= 1e-12
    assert lo >= -1e-12 and hi <= 1 + 1e-12
    assert phase.alpha.interior.min() >= 0.0 and phase.alpha.interior.max() <= 1.0


@given(st.integers(0, 2 ** 31 - 1), st.floats(0.05, 0.5))
def test_random_flow_bounded_and_conservative(seed, courant):
    grid = build_grid(12, 12, (1.0, 1.0))
    rng = np.random.default_rng(seed)
    a = alpha_field(grid, rng.uniform(0, 1, size=(12, 12)) ** 3)
    fv = random_closed_flow(grid, rng, 1.0)
    phase = PhaseFraction(a, c_alpha=1.0)
    m0 = phase.mass()
    dt = courant * grid.dx / 4.0
    for _ in range(5):
        step = advect_alpha(phase, fv, dt)
        assert step.min_pre_clip >= -1e-12 and step.max_pre_clip <= 1 + 1e-12
        phase = step.phase
    assert abs(phase.mass() - m0) <= 1e-12 * m0


def test_cfl_violation():
    grid = build_grid(8, 8, (1.0, 1.0))
    u = FaceField(grid, np.ones((9, 8)), np.zeros((8, 9)))
    u.zero_walls()
    with pytest.raises(CFLViolation):
        advect_alpha(PhaseFraction(alpha_field(grid, 0.5)), u, 0.6 * grid.dx)


def test_compression_flux_trivial_cases():
    grid = build_grid(8, 8, (1.0, 1.0))
    pure = alpha_field(grid, (np.arange(8)[:, None] > 3) * np.ones((1, 8)))
    u = FaceField(grid, np.ones((9, 8)), np.ones((8, 9)))
    f = interface_compression_flux(pure, u, 1.0)
    assert f.max_abs() == 0.0
    smeared = alpha_field(grid, disc(grid, 0.5, 0.5, 0.3))
    assert interface_compression_flux(smeared, u, 0.0).max_abs() == 0.0
    with pytest.raises(ValueError):
        interface_compression_flux(smeared, u, 2.5)
    with pytest.raises(ValueError):
        PhaseFraction(smeared, c_alpha=-0.1)


def test_compression_sharpens_smeared_profile():
    grid = build_grid(16, 4, (1.0, 0.25))
    profile = np.zeros(16)
    profile[6:11] = [0.0, 0.25, 0.5, 0.75, 1.0]
    profile[11:] = 1.0
    phase = PhaseFraction(alpha_field(grid, profile[:, None] * np.ones((1, 4))))
    pseudo = FaceField(grid, np.ones((17, 4)), np.zeros((16, 5))).zero_walls()
    widths = []
    for _ in range(8):
        a = phase.alpha.interior[:, 0]
        widths.append(float(np.sum(a * (1 - a))))
        phase = advect_alpha(phase, FaceField.zeros(grid), 0.2 * grid.dx, compression_velocity=pseudo).phase
    assert all(b <= a + 1e-15 for a, b in zip(widths, widths[1:]))
    assert widths[-1] < widths[0]


def test_fct_identity_and_overshoot():
    grid = build_grid(8, 8, (1.0, 1.0))
    rng = np.random.default_rng(5)
    a = alpha_field(grid, rng.uniform(0, 1, (8, 8)))
    u = random_closed_flow(grid, rng, 1.0)
    low = upwind_flux(a, u)
    out = fct_limit(low, low, a, 0.1 * grid.dx)
    assert np.array_equal(out.x, low.x) and np.array_equal(out.y, low.y)

    # a large antidiffusive flux into a cell at 0.9 must stop at its admissible max (1)
    vals = np.full((8, 8), 0.5)
    vals[4, 4] = 0.9
    b = alpha_field(grid, vals)
    zero = FaceField.zeros(grid)
    high = FaceField.zeros(grid)
    high.x[4, 4] = 10.0  # from cell (3,4) into (4,4)
    dt = 0.1 * grid.dx
    lim = fct_limit(zero, high, b, dt)
    new = b.interior - dt * ((lim.x[1:] - lim.x[:-1]) / grid.dx + (lim.y[:, 1:] - lim.y[:, :-1]) / grid.dy)
    assert new[4, 4] == pytest.approx(0.9, abs=1e-14)  # bound is max over neighborhood = 0.9
    assert new.max() <= 1.0

    # no antidiffusion anywhere near a pure region: flux untouched
    c = alpha_field(grid, np.zeros((8, 8)))
    assert fct_limit(zero, zero, c, dt).max_abs() == 0.0


def test_conservative_clip_keeps_volume():
    grid = build_grid(6, 6, (1.0, 1.0))
    vals = np.full((6, 6), 0.5)
    vals[0, 0] = 1.0 + 1e-3
    vals[5, 5] = -2e-4
    a = alpha_field(grid, vals)
    before = a.interior.sum()
    moved = conservative_clip(a)
    assert a.interior.min() >= 0.0 and a.interior.max() <= 1.0
    assert a.interior.sum() == pytest.approx(before, abs=1e-14)
    assert moved == pytest.approx(8e-4 * grid.cell_volume)
