"""Mixture properties and temperature transport."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import FaceField, ScalarField, divergence, face_gradient, interpolate_to_faces
from .weno import WenoScheme, convective_flux

PROPERTIES = ("rho", "mu", "rho_cp", "lambda")


class DiffusionLimitExceeded(RuntimeError):
    def __init__(self, dt: float, limit: float):
        super().__init__(f"dt {dt:.3e} s exceeds the explicit conduction limit {limit:.3e} s")
        self.dt = dt
        self.limit = limit


@dataclass(frozen=True)
class PhaseProperties:
    rho: float  # kg/m^3
    mu: float  # kg/(m s)
    cp: float  # J/(kg K)
    lam: float  # W/(m K)

    def __post_init__(self):
        for name in ("rho", "mu", "cp", "lam"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"phase property {name} must be positive, got {v}")

    def value(self, which: str) -> float:
        if which == "rho_cp":
            return self.rho * self.cp
        if which == "lambda":
            return self.lam
        return getattr(self, which)


@dataclass(frozen=True)
class MixtureModel:
    """alpha = 0 is pure phase 1 (surrounding medium), alpha = 1 pure phase 2 (droplet)."""

    phase1: PhaseProperties
    phase2: PhaseProperties

    def blend(self, alpha, which: str):
        if which not in PROPERTIES:
            raise ValueError(f"unknown property {which!r}; choose from {PROPERTIES}")
        v1 = self.phase1.value(which)
        v2 = self.phase2.value(which)
        return v1 + (v2 - v1) * alpha

    def max_kinematic_viscosity(self) -> float:
        return max(self.phase1.mu / self.phase1.rho, self.phase2.mu / self.phase2.rho)


def mixture_property(alpha: ScalarField, which: str, mixture: MixtureModel) -> ScalarField:
    """Arithmetic alpha-blend of a phase property, ghosts included; exact at alpha in {0, 1}."""
    return ScalarField(alpha.grid, mixture.blend(alpha.data, which))


def face_conductivity(alpha: ScalarField, mixture: MixtureModel) -> FaceField:
    return interpolate_to_faces(mixture_property(alpha, "lambda", mixture), "harmonic")


def conduction_dt_limit(rho_cp: np.ndarray, lam_f: FaceField) -> float:
    """Largest dt for which explicit conduction keeps every update a convex combination."""
    g = lam_f.grid
    coeff = (lam_f.x[:-1, :] + lam_f.x[1:, :]) / g.dx ** 2 + (lam_f.y[:, :-1] + lam_f.y[:, 1:]) / g.dy ** 2
    return float(np.min(rho_cp / coeff))


def advance_temperature(T: ScalarField, face_velocity: FaceField, alpha: ScalarField, dt: float,
                        scheme: WenoScheme, mixture: MixtureModel) -> ScalarField:
    """Explicit step of rho c_p (dT/dt + u.grad T) = div(lambda grad T).

    Convection uses the conservative WENO flux minus ``T div(u)`` so that a
    uniform field stays uniform even when the face velocity is divergence
    free only to solver tolerance. ``T`` ghosts must be current; the result
    has its ghosts refreshed from ``T.bcs``.
    """
    rho_cp = mixture_property(alpha, "rho_cp", mixture).interior
    lam_f = face_conductivity(alpha, mixture)
    limit = conduction_dt_limit(rho_cp, lam_f)
    if dt > limit * (1.0 + 1e-12):
        raise DiffusionLimitExceeded(dt, limit)
    conv = convective_flux(T, face_velocity, scheme).interior
    div_u = divergence(face_velocity).interior
    cond = divergence(face_gradient(T).scaled(lam_f)).interior
    new = T.copy()
    new.interior = T.interior - dt * (conv - T.interior * div_u) + dt * cond / rho_cp
    if new.bcs is not None:
        new.apply_bc()
    return new.check_finite("temperature")


def thermal_energy(T: ScalarField, alpha: ScalarField, mixture: MixtureModel) -> float:
    rho_cp = mixture_property(alpha, "rho_cp", mixture).interior
    return float(np.sum(rho_cp * T.interior)) * T.grid.cell_volume


def boundary_conduction(T: ScalarField, alpha: ScalarField, mixture: MixtureModel) -> float:
    """Net heat inflow rate [W per unit depth] through the domain boundary."""
    q = face_gradient(T).scaled(face_conductivity(alpha, mixture))
    return q.boundary_net_outflow()
