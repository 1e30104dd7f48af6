"""Two-phase VOF solver with temperature-dependent surface tension on uniform 2D grids."""

__version__ = "0.1.0"

from .capillary import (InterfaceGeometry, SurfaceTensionModel, SurfaceTensionRangeError, balanced_face_force,
                        css_force, css_force_divergence_form, css_force_split, curvature, interface_delta,
                        interface_geometry, interface_normal, sigma_field)
from .case import CaseConfig, CaseConfigError, Diagnostics, build_droplet_case, extract_diagnostics
from .fields import (FaceField, NonFiniteFieldError, PhysicsConfigurationError, ScalarField, VectorField,
                     divergence, gradient, interpolate_to_faces, laplacian)
from .flow import LinearSolverConfig, PressureSolverError, TimeStepUnderflow, compute_dt, pressure_projection
from .grid import BCSet, BoundaryCondition, ConfigurationError, Grid, apply_boundary, build_grid
from .simulation import Models, SimState, advance, advance_adaptive
from .thermo import DiffusionLimitExceeded, MixtureModel, PhaseProperties, advance_temperature
from .vof import CFLViolation, PhaseFraction, advect_alpha
from .weno import WenoScheme, build_scheme, reconstruct_face

__all__ = [name for name in dir() if not name.startswith("_")]
