import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermocap.case import CaseConfig, build_models
from thermocap.fields import FaceField, ScalarField
from thermocap.grid import BCSet, BoundaryCondition, build_grid
from thermocap.thermo import (DiffusionLimitExceeded, MixtureModel, PhaseProperties, advance_temperature,
                              boundary_conduction, conduction_dt_limit, face_conductivity, mixture_property,
                              thermal_energy)
from thermocap.weno import build_scheme

TABLE = build_models(CaseConfig()).mixture
ZG = BCSet.uniform(BoundaryCondition("zero_gradient"))
INSULATED = BoundaryCondition("neumann", gradient=0.0)


def scalar(grid, values, bcs=ZG):
    s = ScalarField.zeros(grid, bcs)
    s.interior = values
    return s.apply_bc()


def wall_bcs(bottom, top):
    return BCSet(left=INSULATED, right=INSULATED, bottom=BoundaryCondition("dirichlet", value=bottom),
                 top=BoundaryCondition("dirichlet", value=top))


def stable_dt(alpha, mixture, fraction=0.9):
    return fraction * conduction_dt_limit(mixture_property(alpha, "rho_cp", mixture).interior,
                                          face_conductivity(alpha, mixture))


def test_mixture_density_examples():
    grid = build_grid(4, 4, (1.0, 1.0))
    for a, rho in ((1.0, 500.0), (0.0, 250.0), (0.5, 375.0)):
        assert np.all(mixture_property(scalar(grid, a), "rho", TABLE).interior == rho)


@given(st.sampled_from(["rho", "mu", "rho_cp", "lambda"]))
def test_mixture_exact_at_pure_phases(which):
    grid = build_grid(4, 4, (1.0, 1.0))
    assert np.all(mixture_property(scalar(grid, 0.0), which, TABLE).data == TABLE.phase1.value(which))
    assert np.all(mixture_property(scalar(grid, 1.0), which, TABLE).data == TABLE.phase2.value(which))


def test_invalid_properties():
    with pytest.raises(ValueError):
        PhaseProperties(-1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        TABLE.blend(0.5, "enthalpy")


def test_linear_profile_is_steady():
    L = 4 * 1.44e-3
    grid = build_grid(20, 20, (L, L))
    T_bot, grad = 290.0, 200.0
    X, Y = grid.mesh()
    T = scalar(grid, T_bot + grad * Y, wall_bcs(T_bot, T_bot + grad * L))
    alpha = scalar(grid, 0.0)
    new = advance_temperature(T, FaceField.zeros(grid), alpha, stable_dt(alpha, TABLE), build_scheme(5), TABLE)
    assert np.abs(new.interior - T.interior).max() <= 1e-10


def test_uniform_temperature_unchanged_by_flow():
    grid = build_grid(16, 16, (1.0, 1.0))
    rng = np.random.default_rng(0)
    psi = np.zeros((17, 17))
    psi[1:-1, 1:-1] = rng.normal(size=(15, 15))
    u = FaceField(grid, (psi[:, 1:] - psi[:, :-1]) / grid.dy, -(psi[1:, :] - psi[:-1, :]) / grid.dx)
    u = u.scaled(0.1 * grid.dx / u.max_abs())
    T = scalar(grid, 300.0, wall_bcs(300.0, 300.0))
    alpha = scalar(grid, rng.uniform(0, 1, (16, 16)))
    new = advance_temperature(T, u, alpha, stable_dt(alpha, TABLE), build_scheme(5), TABLE)
    assert np.allclose(new.interior, 300.0, atol=1e-11)


def test_two_material_slab_interface_temperature():
    # phases with conductivities lam and 2 lam in series between fixed temperatures
    mix = MixtureModel(PhaseProperties(1.0, 1.0, 1.0, 1.0), PhaseProperties(1.0, 1.0, 1.0, 2.0))
    n = 20
    grid = build_grid(4, n, (0.2, 1.0))
    X, Y = grid.mesh()
    alpha = scalar(grid, (Y > 0.5).astype(float))
    T = scalar(grid, 0.0 * Y, wall_bcs(0.0, 1.0))
    dt = stable_dt(alpha, mix)
    scheme = build_scheme(5)
    zero = FaceField.zeros(grid)
    for _ in range(20000):
        new = advance_temperature(T, zero, alpha, dt, scheme, mix)
        if np.abs(new.interior - T.interior).max() < 1e-13:
            T = new
            break
        T = new
    # series resistance: R1 = 0.5 / lam, R2 = 0.5 / (2 lam), interface at R1 / (R1 + R2)
    expected = 0.5 / (0.5 + 0.25)
    col = T.interior[0]
    j = n // 2  # first cell of the conductive layer; the material jump sits on face j
    grad_lo = (col[j - 1] - col[j - 2]) / grid.dy
    t_face = col[j - 1] + 0.5 * grid.dy * grad_lo
    assert t_face == pytest.approx(expected, rel=0.01)
    # flux continuity through the harmonic face conductivity 4/3
    assert (4.0 / 3.0) * (col[j] - col[j - 1]) / grid.dy == pytest.approx(grad_lo, rel=1e-6)


def test_energy_balance_matches_boundary_flux():
    L = 1.0
    grid = build_grid(12, 12, (L, L))
    rng = np.random.default_rng(2)
    alpha = scalar(grid, rng.uniform(0, 1, (12, 12)))
    T = scalar(grid, 300 + rng.normal(size=(12, 12)), wall_bcs(290.0, 310.0))
    dt = stable_dt(alpha, TABLE)
    e0 = thermal_energy(T, alpha, TABLE)
    q = boundary_conduction(T, alpha, TABLE)
    new = advance_temperature(T, FaceField.zeros(grid), alpha, dt, build_scheme(5), TABLE)
    e1 = thermal_energy(new, alpha, TABLE)
    assert (e1 - e0) == pytest.approx(dt * q, rel=1e-10, abs=1e-10 * abs(e0))


@given(st.integers(0, 2 ** 31 - 1), st.floats(0.1, 1.0))
def test_maximum_principle(seed, fraction):
    grid = build_grid(10, 10, (1.0, 1.0))
    rng = np.random.default_rng(seed)
    alpha = scalar(grid, rng.uniform(0, 1, (10, 10)))
    T = scalar(grid, 300 + 5 * rng.uniform(-1, 1, (10, 10)), wall_bcs(299.0, 301.0))
    lo = min(T.interior.min(), 299.0)
    hi = max(T.interior.max(), 301.0)
    new = advance_temperature(T, FaceField.zeros(grid), alpha, stable_dt(alpha, TABLE, fraction),
                              build_scheme(5), TABLE)
    assert new.interior.min() >= lo - 1e-12 and new.interior.max() <= hi + 1e-12


def test_conduction_limit_enforced():
    grid = build_grid(8, 8, (1.0, 1.0))
    alpha = scalar(grid, 0.0)
    T = scalar(grid, 300.0, wall_bcs(300.0, 300.0))
    with pytest.raises(DiffusionLimitExceeded):
        advance_temperature(T, FaceField.zeros(grid), alpha, stable_dt(alpha, TABLE, 1.5), build_scheme(5), TABLE)
