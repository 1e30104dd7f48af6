"""Coupled time step: phase fraction, temperature, momentum, projection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .capillary import SurfaceTensionModel, balanced_face_force, interface_geometry, sigma_field
from .fields import FaceField, ScalarField, VectorField, divergence
from .flow import LinearSolverConfig, MomentumState, compute_dt, momentum_predictor, pressure_projection
from .grid import BCSet
from .thermo import DiffusionLimitExceeded, MixtureModel, advance_temperature, mixture_property
from .vof import CFLViolation, PhaseFraction, advect_alpha
from .weno import WenoScheme

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class BoundaryTable:
    alpha: BCSet
    T: BCSet
    u: BCSet
    p: BCSet


@dataclass(frozen=True)
class Models:
    mixture: MixtureModel
    surface: SurfaceTensionModel
    scheme: WenoScheme
    solver: LinearSolverConfig
    bcs: BoundaryTable
    c_alpha: float = 1.0
    cfl: float = 0.5
    dt_floor: float = 1e-12
    delta_cut: float | None = None
    alpha_smoothing: int = 2


@dataclass
class StepInfo:
    dt: float = 0.0
    alpha_min_pre_clip: float = 0.0
    alpha_max_pre_clip: float = 1.0
    clipped_mass: float = 0.0
    pressure_iterations: int = 0
    pressure_residual: float = 0.0
    max_divergence: float = 0.0
    rejected: int = 0


@dataclass
class SimState:
    alpha: ScalarField
    u: VectorField
    p: ScalarField
    T: ScalarField
    face_velocity: FaceField
    time: float = 0.0
    step: int = 0
    info: StepInfo = field(default_factory=StepInfo)

    @property
    def grid(self):
        return self.alpha.grid

    def momentum_state(self) -> MomentumState:
        return MomentumState(self.u, self.p, self.face_velocity)

    def sigma(self, surface: SurfaceTensionModel) -> ScalarField:
        return sigma_field(self.T, surface)


def sigma_max(state: SimState, surface: SurfaceTensionModel) -> float:
    return float(np.max(surface.sigma(state.T.interior)))


def advance(state: SimState, models: Models, dt: float) -> SimState:
    """One explicit step; raises CFLViolation / DiffusionLimitExceeded if dt is too large."""
    grid = state.grid
    mix = models.mixture
    alpha = state.alpha
    rho_old = mixture_property(alpha, "rho", mix)
    mu = mixture_property(alpha, "mu", mix)
    sigma = sigma_field(state.T, models.surface)
    geometry = interface_geometry(alpha, models.delta_cut, alpha_smoothing=models.alpha_smoothing)
    force = balanced_face_force(alpha, sigma, geometry)

    step = advect_alpha(PhaseFraction(alpha, models.c_alpha), state.face_velocity, dt)
    new_alpha = step.phase.alpha
    T_new = advance_temperature(state.T, state.face_velocity, alpha, dt, models.scheme, mix)

    rho_new = mixture_property(new_alpha, "rho", mix)
    d_rho = mix.phase2.rho - mix.phase1.rho
    fv = state.face_velocity
    mass_flux = FaceField(grid, mix.phase1.rho * fv.x + d_rho * step.flux.x,
                          mix.phase1.rho * fv.y + d_rho * step.flux.y)
    no_force = VectorField.zeros(grid)
    u_star = momentum_predictor(state.momentum_state(), rho_old, rho_new, mu, no_force, dt, models.scheme,
                                mass_flux)
    proj = pressure_projection(u_star, rho_new, dt, models.solver, state.p, face_force=force)
    div = divergence(proj.face_velocity).interior
    info = StepInfo(dt=dt, alpha_min_pre_clip=step.min_pre_clip, alpha_max_pre_clip=step.max_pre_clip,
                    clipped_mass=step.clipped_mass, pressure_iterations=proj.iterations,
                    pressure_residual=proj.residual, max_divergence=float(np.max(np.abs(div))))
    return SimState(new_alpha, proj.u, proj.p, T_new, proj.face_velocity, state.time + dt, state.step + 1, info)


def next_dt(state: SimState, models: Models, dt_max: float = math.inf) -> float:
    return compute_dt(state.momentum_state(), state.alpha, models.mixture, sigma_max(state, models.surface),
                      models.cfl, models.dt_floor, dt_max)


def advance_adaptive(state: SimState, models: Models, end_time: float, max_halvings: int = 20) -> SimState:
    """compute_dt then advance, halving dt on a rejected step; the last step lands on end_time."""
    dt = next_dt(state, models, end_time - state.time)
    remaining = end_time - state.time
    # avoid a sliver step at the end
    if remaining - dt < 1e-3 * dt:
        dt = remaining
    rejected = 0
    while True:
        try:
            new = advance(state, models, dt)
            new.info.rejected = rejected
            return new
        except (CFLViolation, DiffusionLimitExceeded) as exc:
            rejected += 1
            if rejected > max_halvings:
                raise
            log.info("step %d rejected (%s); halving dt", state.step + 1, exc)
            dt *= 0.5
            if dt < models.dt_floor:
                raise


def with_surface(models: Models, **changes) -> Models:
    return replace(models, surface=replace(models.surface, **changes))
