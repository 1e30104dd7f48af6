"""Thermocapillary droplet benchmark: setup and diagnostics."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import map_coordinates

from .capillary import SurfaceTensionModel
from .fields import FaceField, ScalarField, VectorField, gradient
from .flow import LinearSolverConfig, kinetic_energy
from .grid import BCSet, BoundaryCondition, Grid, build_grid
from .simulation import BoundaryTable, Models, SimState
from .thermo import MixtureModel, PhaseProperties, mixture_property
from .weno import build_scheme

# Surrounding medium (phase 1) and droplet (phase 2) of the droplet benchmark.
BENCHMARK_PHASE1 = PhaseProperties(rho=250.0, mu=0.012, cp=5e-5, lam=1.2e-6)
BENCHMARK_PHASE2 = PhaseProperties(rho=500.0, mu=0.024, cp=1e-4, lam=2.4e-6)
BENCHMARK_SIGMA = 0.1
BENCHMARK_SIGMA_T = 0.02


class CaseConfigError(ValueError):
    pass


@dataclass
class CaseConfig:
    """Every knob of the droplet case. Lengths in m, temperatures in K, times in s.

    ``sigma_T`` is signed: negative means surface tension falls with
    temperature, which drives the droplet toward the hot (top) wall.
    ``T_ref`` defaults to the temperature at the droplet center so that
    ``sigma0`` is the surface tension there.
    """

    nx: int = 100
    ny: int = 100
    radius: float = 1.44e-3
    domain_radii: float = 4.0
    rho1: float = BENCHMARK_PHASE1.rho
    mu1: float = BENCHMARK_PHASE1.mu
    cp1: float = BENCHMARK_PHASE1.cp
    lambda1: float = BENCHMARK_PHASE1.lam
    rho2: float = BENCHMARK_PHASE2.rho
    mu2: float = BENCHMARK_PHASE2.mu
    cp2: float = BENCHMARK_PHASE2.cp
    lambda2: float = BENCHMARK_PHASE2.lam
    sigma0: float = BENCHMARK_SIGMA
    sigma_T: float = -BENCHMARK_SIGMA_T
    T_ref: float | None = None
    T_bottom: float = 290.0
    grad_T: float = 200.0
    end_time: float = 0.12
    cfl: float = 0.5
    weno_order: int = 5
    c_alpha: float = 1.0
    curvature_smoothing: int = 2
    solver_method: str = "cg"
    solver_tol: float = 1e-12
    solver_max_iter: int = 1000
    preconditioner: str = "dct"
    subsamples: int = 4
    write_every: int = 0
    diagnostics_every: int = 10
    dt_floor: float = 1e-12

    def validate(self) -> "CaseConfig":
        errors = []
        for name in ("radius", "domain_radii", "rho1", "mu1", "cp1", "lambda1", "rho2", "mu2", "cp2",
                     "lambda2", "cfl", "dt_floor"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                errors.append(f"{name} must be positive (got {v})")
        if self.domain_radii <= 2.0:
            errors.append("domain_radii must exceed 2 so the droplet fits inside the walls")
        if self.nx < 4 or self.ny < 4:
            errors.append("nx and ny must be at least 4")
        if self.sigma0 < 0:
            errors.append(f"sigma0 must be non-negative (got {self.sigma0})")
        if not self.end_time >= 0:
            errors.append(f"end_time must be non-negative (got {self.end_time})")
        if self.weno_order not in (1, 3, 5):
            errors.append(f"weno_order must be 1, 3 or 5 (got {self.weno_order})")
        if not 0.0 <= self.c_alpha <= 2.0:
            errors.append(f"c_alpha must lie in [0, 2] (got {self.c_alpha})")
        if self.curvature_smoothing < 0:
            errors.append("curvature_smoothing must be >= 0")
        if self.subsamples < 1:
            errors.append("subsamples must be >= 1")
        if self.write_every < 0 or self.diagnostics_every < 1:
            errors.append("write_every must be >= 0 and diagnostics_every >= 1")
        if not 0.0 < self.solver_tol < 1.0:
            errors.append("solver_tol must lie in (0, 1)")
        if self.solver_method not in ("cg", "bicgstab"):
            errors.append(f"solver_method must be cg or bicgstab (got {self.solver_method!r})")
        if self.preconditioner not in ("dct", "jacobi", "none"):
            errors.append(f"preconditioner must be dct, jacobi or none (got {self.preconditioner!r})")
        if errors:
            raise CaseConfigError("; ".join(errors))
        return self

    @property
    def length(self) -> float:
        return self.domain_radii * self.radius

    @property
    def T_top(self) -> float:
        return self.T_bottom + self.grad_T * self.length

    @property
    def reference_temperature(self) -> float:
        if self.T_ref is not None:
            return self.T_ref
        return self.T_bottom + self.grad_T * 0.5 * self.length

    def with_overrides(self, **overrides) -> "CaseConfig":
        names = {f.name for f in dataclasses.fields(self)}
        unknown = sorted(set(overrides) - names)
        if unknown:
            raise CaseConfigError(f"unknown config key(s): {unknown}")
        return dataclasses.replace(self, **overrides)


def droplet_boundary_table(cfg: CaseConfig) -> BoundaryTable:
    zg = BoundaryCondition("zero_gradient")
    insulated = BoundaryCondition("neumann", gradient=0.0)
    T = BCSet(left=insulated, right=insulated,
              bottom=BoundaryCondition("dirichlet", value=cfg.T_bottom),
              top=BoundaryCondition("dirichlet", value=cfg.T_top))
    return BoundaryTable(alpha=BCSet.uniform(zg), T=T, u=BCSet.uniform(BoundaryCondition("no_slip")),
                         p=BCSet.uniform(zg))


def circle_fraction(grid: Grid, center: tuple[float, float], radius: float, subsamples: int = 4) -> np.ndarray:
    """Fraction of ``subsamples**2`` sub-cell points inside the circle, per interior cell."""
    X, Y = grid.mesh()
    offs = (np.arange(subsamples) + 0.5) / subsamples - 0.5
    inside = np.zeros_like(X)
    for ox in offs:
        for oy in offs:
            inside += ((X + ox * grid.dx - center[0]) ** 2 + (Y + oy * grid.dy - center[1]) ** 2) <= radius ** 2
    return inside / subsamples ** 2


def build_models(cfg: CaseConfig) -> Models:
    mixture = MixtureModel(PhaseProperties(cfg.rho1, cfg.mu1, cfg.cp1, cfg.lambda1),
                           PhaseProperties(cfg.rho2, cfg.mu2, cfg.cp2, cfg.lambda2))
    surface = SurfaceTensionModel(cfg.sigma0, cfg.sigma_T, cfg.reference_temperature)
    surface.check_range(min(cfg.T_bottom, cfg.T_top), max(cfg.T_bottom, cfg.T_top))
    solver = LinearSolverConfig(cfg.solver_method, cfg.solver_tol, cfg.solver_max_iter, cfg.preconditioner)
    return Models(mixture, surface, build_scheme(cfg.weno_order), solver, droplet_boundary_table(cfg),
                  c_alpha=cfg.c_alpha, cfl=cfg.cfl, dt_floor=cfg.dt_floor,
                  alpha_smoothing=cfg.curvature_smoothing)


def build_droplet_case(cfg: CaseConfig | None = None, **overrides) -> tuple[Grid, SimState, Models]:
    """Droplet of radius a centered in a square box of side ``domain_radii * a``.

    Cells cut by the circle get the sub-sampled area fraction; temperature
    is the linear conduction profile between the fixed bottom and top walls.
    """
    cfg = (cfg or CaseConfig()).with_overrides(**overrides).validate()
    models = build_models(cfg)
    L = cfg.length
    n_ghost = max(3, (cfg.weno_order + 1) // 2)
    grid = build_grid(cfg.nx, cfg.ny, (L, L), n_ghost)
    bcs = models.bcs

    alpha = ScalarField.zeros(grid, bcs.alpha)
    alpha.interior = circle_fraction(grid, (0.5 * L, 0.5 * L), cfg.radius, cfg.subsamples)
    alpha.apply_bc()
    T = ScalarField.from_function(grid, lambda x, y: cfg.T_bottom + cfg.grad_T * y, bcs.T).apply_bc()
    u = VectorField.zeros(grid, bcs.u)
    p = ScalarField.zeros(grid, bcs.p)
    state = SimState(alpha, u, p, T, FaceField.zeros(grid))
    return grid, state, models


@dataclass
class DiagnosticsSample:
    time: float
    step: int
    mass: float
    max_velocity: float
    centroid_x: float
    centroid_y: float
    kinetic_energy: float
    transition_width: float | None  # cells; None when no interface crossing is found
    vorticity_left: float
    vorticity_right: float


@dataclass
class Diagnostics:
    samples: list[DiagnosticsSample] = field(default_factory=list)

    def append(self, sample: DiagnosticsSample) -> None:
        if self.samples and sample.time < self.samples[-1].time:
            raise ValueError("diagnostics samples must be added in time order")
        self.samples.append(sample)

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(s, name) for s in self.samples], dtype=float)

    def __len__(self) -> int:
        return len(self.samples)


def diagonal_profile(alpha: ScalarField, samples_per_cell: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Bilinear samples of alpha along the top-left to bottom-right diagonal.

    Returns ``(arclength [m], alpha)``; sampling stops at the outermost cell
    centers so no extrapolation into ghosts is involved.
    """
    g = alpha.grid
    n = samples_per_cell * max(g.nx, g.ny) + 1
    t = np.linspace(0.0, 1.0, n)
    # cell-index coordinates of the first/last cell centers on the diagonal
    fi = t * (g.nx - 1)
    fj = (1.0 - t) * (g.ny - 1)
    vals = map_coordinates(alpha.interior, [fi, fj], order=1, mode="nearest")
    x = g.origin[0] + (fi + 0.5) * g.dx
    y = g.origin[1] + (fj + 0.5) * g.dy
    s = np.hypot(x - x[0], y - y[0])
    return s, vals


def _crossing(s: np.ndarray, v: np.ndarray, i: int, level: float) -> float:
    # linear interpolation of the level crossing between samples i and i+1
    v0, v1 = v[i], v[i + 1]
    if v1 == v0:
        return float(s[i])
    return float(s[i] + (level - v0) / (v1 - v0) * (s[i + 1] - s[i]))


def transition_width(s: np.ndarray, v: np.ndarray, cell_size: float, lo: float = 0.05,
                     hi: float = 0.95) -> float | None:
    """Largest lo->hi transition length (in cells) over the two interface crossings of the profile."""
    above = np.nonzero(v >= hi)[0]
    if above.size == 0:
        return None
    first, last = above[0], above[-1]
    widths = []
    below_before = np.nonzero(v[:first] < lo)[0]
    if below_before.size:
        j = below_before[-1]
        s_lo = _crossing(s, v, j, lo)
        s_hi = _crossing(s, v, first - 1, hi)
        widths.append(s_hi - s_lo)
    below_after = np.nonzero(v[last + 1:] < lo)[0]
    if below_after.size:
        m = last + 1 + below_after[0]
        s_hi = _crossing(s, v, last, hi)
        s_lo = _crossing(s, v, m - 1, lo)
        widths.append(s_lo - s_hi)
    if not widths:
        return None
    return max(widths) / cell_size


def half_domain_vorticity(u: VectorField) -> tuple[float, float]:
    """Integrated vorticity over the left and right halves of the domain."""
    g = u.grid
    gu = gradient(u.component(0)).data
    gv = gradient(u.component(1)).data
    omega = (gv[0] - gu[1])[g.interior]
    half = g.nx // 2
    vol = g.cell_volume
    if g.nx % 2:
        return float(np.sum(omega[:half])) * vol, float(np.sum(omega[half + 1:])) * vol
    return float(np.sum(omega[:half])) * vol, float(np.sum(omega[half:])) * vol


def centroid(alpha: ScalarField) -> tuple[float, float]:
    X, Y = alpha.grid.mesh()
    a = alpha.interior
    m = float(np.sum(a))
    if m == 0:
        raise ValueError("no phase volume present")
    return float(np.sum(a * X)) / m, float(np.sum(a * Y)) / m


def extract_diagnostics(state: SimState, models: Models) -> DiagnosticsSample:
    g = state.grid
    rho = mixture_property(state.alpha, "rho", models.mixture)
    ui = state.u.interior
    cx, cy = centroid(state.alpha)
    s, v = diagonal_profile(state.alpha)
    wl, wr = half_domain_vorticity(state.u)
    return DiagnosticsSample(
        time=state.time,
        step=state.step,
        mass=state.alpha.integral(),
        max_velocity=float(np.max(np.hypot(ui[0], ui[1]))),
        centroid_x=cx,
        centroid_y=cy,
        kinetic_energy=kinetic_energy(state.u, rho),
        transition_width=transition_width(s, v, g.dx),
        vorticity_left=wl,
        vorticity_right=wr,
    )
