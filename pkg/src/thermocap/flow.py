"""Variable-density incompressible momentum update and pressure projection.

Velocities are collocated at cell centers; the advecting velocity lives on
faces. Each step predicts the cell velocity without any pressure gradient,
interpolates it to faces, and projects the face velocity onto the discretely
divergence-free space with a compact variable-coefficient Poisson operator.
Because the predicted velocity carries no pressure gradient, the face
interpolation needs no Rhie-Chow correction term to avoid odd-even
decoupling; the cell velocity is then corrected with the average of the two
adjacent face pressure gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import fft
from scipy.sparse.linalg import LinearOperator, bicgstab, cg

from .fields import (FaceField, NonFiniteFieldError, ScalarField, VectorField, divergence,
                     interpolate_to_faces, laplacian)
from .weno import WenoScheme, upwind_face_values


class PressureSolverError(RuntimeError):
    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class TimeStepUnderflow(RuntimeError):
    pass


@dataclass(frozen=True)
class LinearSolverConfig:
    method: str = "cg"
    tol: float = 1e-12
    max_iter: int = 1000
    preconditioner: str = "dct"

    def __post_init__(self):
        if self.method not in ("cg", "bicgstab"):
            raise ValueError(f"unknown linear solver {self.method!r}")
        if not 0.0 < self.tol < 1.0:
            raise ValueError("solver tolerance must lie in (0, 1)")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.preconditioner not in ("dct", "jacobi", "none"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")


@dataclass
class MomentumState:
    u: VectorField  # m/s, cell centered
    p: ScalarField  # Pa
    face_velocity: FaceField  # face-normal velocity, m/s

    def volumetric_flux(self) -> FaceField:
        """Face flux per unit depth [m^2/s]: normal velocity times face length."""
        g = self.u.grid
        return FaceField(g, self.face_velocity.x * g.dy, self.face_velocity.y * g.dx)


@dataclass
class ProjectionResult:
    u: VectorField
    p: ScalarField
    face_velocity: FaceField
    iterations: int
    residual: float


def _periodic_flags(bcs) -> tuple[bool, bool]:
    if bcs is None:
        return False, False
    first = bcs[0] if isinstance(bcs, (list, tuple)) else bcs
    return first.left.kind == "periodic", first.bottom.kind == "periodic"


def momentum_predictor(state: MomentumState, rho_old: ScalarField, rho_new: ScalarField, mu: ScalarField,
                       css: VectorField, dt: float, scheme: WenoScheme,
                       mass_flux: FaceField | None = None) -> VectorField:
    """Explicit conservative update of rho*u without the pressure gradient.

    ``mass_flux`` is the face mass flux per unit area that was used to move
    the density from ``rho_old`` to ``rho_new``; if omitted it is built from
    the linearly interpolated old density. The convected velocity is WENO
    reconstructed and upwinded by the face velocity sign. ``state.u`` ghosts
    must be current. The returned field has ghosts refreshed from
    ``state.u.bcs``.
    """
    u = state.u
    grid = u.grid
    fv = state.face_velocity
    if mass_flux is None:
        mass_flux = interpolate_to_faces(rho_old).scaled(fv)
    mom = np.empty((2, grid.nx, grid.ny))
    for c in range(2):
        comp = u.component(c)
        face_u = upwind_face_values(comp, fv, scheme)
        conv = divergence(face_u.scaled(mass_flux)).interior
        visc = laplacian(comp, mu).interior
        mom[c] = rho_old.interior * comp.interior + dt * (-conv + visc + css.interior[c])
    out = VectorField(grid, np.zeros_like(u.data), u.bcs)
    ix, iy = grid.interior
    out.data[:, ix, iy] = mom / rho_new.interior
    if not np.all(np.isfinite(out.data[:, ix, iy])):
        bad = np.argwhere(~np.isfinite(out.data[:, ix, iy]))
        raise NonFiniteFieldError(f"momentum predictor produced non-finite velocity at {bad[:3].tolist()}")
    if out.bcs is not None:
        out.apply_bc()
    return out


class _PoissonOperator:
    """Matrix-free ``-div(beta_f grad p)`` on interior cells with zero-flux walls."""

    def __init__(self, grid, beta: FaceField, periodic_x: bool, periodic_y: bool):
        self.grid = grid
        self.bx = beta.x
        self.by = beta.y
        self.px = periodic_x
        self.py = periodic_y
        self.shape = (grid.nx, grid.ny)
        if not periodic_x:
            self.bx = self.bx.copy()
            self.bx[0, :] = 0.0
            self.bx[-1, :] = 0.0
        if not periodic_y:
            self.by = self.by.copy()
            self.by[:, 0] = 0.0
            self.by[:, -1] = 0.0
        g = grid
        self.diag = (self.bx[:-1, :] + self.bx[1:, :]) / g.dx ** 2 + (self.by[:, :-1] + self.by[:, 1:]) / g.dy ** 2

    def face_gradient(self, p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        g = self.grid
        gx = np.zeros((g.nx + 1, g.ny))
        gy = np.zeros((g.nx, g.ny + 1))
        gx[1:-1, :] = (p[1:, :] - p[:-1, :]) / g.dx
        gy[:, 1:-1] = (p[:, 1:] - p[:, :-1]) / g.dy
        if self.px:
            gx[0, :] = gx[-1, :] = (p[0, :] - p[-1, :]) / g.dx
        if self.py:
            gy[:, 0] = gy[:, -1] = (p[:, 0] - p[:, -1]) / g.dy
        return gx, gy

    def apply(self, p: np.ndarray) -> np.ndarray:
        g = self.grid
        gx, gy = self.face_gradient(p)
        fx = self.bx * gx
        fy = self.by * gy
        return -((fx[1:, :] - fx[:-1, :]) / g.dx + (fy[:, 1:] - fy[:, :-1]) / g.dy)


class _DCTPreconditioner:
    """Exact inverse of the constant-coefficient Neumann Laplacian via DCT-II."""

    def __init__(self, grid, beta_mean: float):
        kx = np.arange(grid.nx)
        ky = np.arange(grid.ny)
        lx = (2.0 - 2.0 * np.cos(np.pi * kx / grid.nx)) / grid.dx ** 2
        ly = (2.0 - 2.0 * np.cos(np.pi * ky / grid.ny)) / grid.dy ** 2
        eig = beta_mean * (lx[:, None] + ly[None, :])
        eig[0, 0] = np.inf  # drop the constant mode
        self.inv = 1.0 / eig
        self.shape = (grid.nx, grid.ny)

    def apply(self, r: np.ndarray) -> np.ndarray:
        rh = fft.dctn(r.reshape(self.shape), type=2, norm="ortho")
        return fft.idctn(rh * self.inv, type=2, norm="ortho")


def solve_pressure(rhs: np.ndarray, beta: FaceField, cfg: LinearSolverConfig, guess: np.ndarray | None = None,
                   periodic: tuple[bool, bool] = (False, False)) -> tuple[np.ndarray, int, float]:
    """Solve ``div(beta grad p) = rhs`` with zero-mean gauge; returns (p, iterations, relative residual)."""
    grid = beta.grid
    op = _PoissonOperator(grid, beta, *periodic)
    b = -(rhs - rhs.mean())
    n = rhs.size
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(rhs), 0, 0.0
    A = LinearOperator((n, n), matvec=lambda v: op.apply(v.reshape(op.shape)).ravel(), dtype=float)
    precond = cfg.preconditioner
    if precond == "dct" and any(periodic):
        precond = "jacobi"
    if precond == "dct":
        beta_mean = 0.5 * (float(np.mean(beta.x)) + float(np.mean(beta.y)))
        pc = _DCTPreconditioner(grid, beta_mean)
        M = LinearOperator((n, n), matvec=lambda v: pc.apply(v).ravel(), dtype=float)
    elif precond == "jacobi":
        inv_diag = 1.0 / op.diag.ravel()
        M = LinearOperator((n, n), matvec=lambda v: inv_diag * v, dtype=float)
    else:
        M = None
    x0 = None if guess is None else (guess - guess.mean()).ravel()
    count = [0]

    def _cb(_):
        count[0] += 1

    solver = cg if cfg.method == "cg" else bicgstab
    x, info = solver(A, b.ravel(), x0=x0, rtol=cfg.tol, atol=0.0, maxiter=cfg.max_iter, M=M, callback=_cb)
    p = x.reshape(op.shape)
    p -= p.mean()
    res = float(np.linalg.norm(b - op.apply(p))) / bnorm
    if info != 0 or not np.isfinite(res):
        raise PressureSolverError("pressure solve did not converge", res, count[0])
    return p, count[0], res


def pressure_projection(u_star: VectorField, rho: ScalarField, dt: float, cfg: LinearSolverConfig,
                        p_guess: ScalarField | None = None,
                        face_force: FaceField | None = None) -> ProjectionResult:
    """Project the predicted velocity onto discretely divergence-free face velocities.

    Solves ``div(dt/rho_f grad p) = div(u*_f)`` where ``u*_f`` is the linear
    face interpolation of ``u_star`` (zero normal velocity on walls) plus
    ``dt face_force / rho_f``, and ``rho_f`` the arithmetic face density.
    Because the force and the pressure gradient live on the same faces, a
    force that is a discrete face gradient is absorbed by ``p`` exactly.
    The cell correction averages ``face_force - grad_f p`` from the two
    adjacent faces. ``u_star`` ghosts must be current.
    """
    grid = u_star.grid
    if np.any(rho.interior <= 0):
        raise ValueError("density must be positive")
    px, py = _periodic_flags(u_star.bcs)
    fx = interpolate_to_faces(u_star.component(0)).x
    fy = interpolate_to_faces(u_star.component(1)).y
    rho_f = interpolate_to_faces(rho)
    if face_force is not None:
        fx = fx + dt * face_force.x / rho_f.x
        fy = fy + dt * face_force.y / rho_f.y
    uf_star = FaceField(grid, fx, fy).zero_walls(px, py)
    beta = FaceField(grid, dt / rho_f.x, dt / rho_f.y)
    rhs = divergence(uf_star).interior
    guess = None if p_guess is None else p_guess.interior
    p, iters, res = solve_pressure(rhs, beta, cfg, guess, (px, py))

    op = _PoissonOperator(grid, beta, px, py)
    gx, gy = op.face_gradient(p)
    face_velocity = FaceField(grid, uf_star.x - op.bx * gx, uf_star.y - op.by * gy)
    if face_force is not None:
        ff = FaceField(grid, face_force.x.copy(), face_force.y.copy()).zero_walls(px, py)
        gx = gx - ff.x
        gy = gy - ff.y

    # face gradients are zero on walls, so the boundary cells see a one-sided average
    cell_gx = 0.5 * (gx[:-1, :] + gx[1:, :])
    cell_gy = 0.5 * (gy[:, :-1] + gy[:, 1:])
    u = u_star.copy()
    ix, iy = grid.interior
    u.data[0, ix, iy] -= dt * cell_gx / rho.interior
    u.data[1, ix, iy] -= dt * cell_gy / rho.interior
    if u.bcs is not None:
        u.apply_bc()
    p_field = ScalarField.zeros(grid, p_guess.bcs if p_guess is not None else None)
    p_field.interior = p
    if p_field.bcs is not None:
        p_field.apply_bc()
    return ProjectionResult(u, p_field, face_velocity, iters, res)


def cell_pressure_gradient(p: ScalarField) -> np.ndarray:
    """Average of the two adjacent face gradients (zero on walls), as used for the cell correction."""
    grid = p.grid
    a = p.interior
    gx = np.zeros((grid.nx + 1, grid.ny))
    gy = np.zeros((grid.nx, grid.ny + 1))
    gx[1:-1] = (a[1:] - a[:-1]) / grid.dx
    gy[:, 1:-1] = (a[:, 1:] - a[:, :-1]) / grid.dy
    return np.stack([0.5 * (gx[:-1] + gx[1:]), 0.5 * (gy[:, :-1] + gy[:, 1:])])


def stable_dt(grid, u_max: tuple[float, float], nu_max: float, rho_sum: float, sigma_max: float, cfl: float,
              conduction_limit: float = math.inf) -> float:
    """``cfl * min(convective, viscous, capillary)`` capped by the conduction limit.

    The conduction limit is already the exact explicit stability bound and is
    not scaled by ``cfl``.
    """
    rate = u_max[0] / grid.dx + u_max[1] / grid.dy
    dt_conv = math.inf if rate == 0 else 1.0 / rate
    dt_visc = math.inf if nu_max <= 0 else 1.0 / (2.0 * nu_max * (1.0 / grid.dx ** 2 + 1.0 / grid.dy ** 2))
    h = min(grid.dx, grid.dy)
    dt_cap = math.inf if sigma_max <= 0 else math.sqrt(rho_sum * h ** 3 / (4.0 * math.pi * sigma_max))
    return min(cfl * min(dt_conv, dt_visc, dt_cap), conduction_limit)


def compute_dt(state: MomentumState, alpha: ScalarField, mixture, sigma_max: float, cfl: float,
               dt_floor: float = 1e-12, dt_max: float = math.inf) -> float:
    from .thermo import conduction_dt_limit, face_conductivity, mixture_property

    fv = state.face_velocity
    ui = state.u.interior
    ux = max(float(np.max(np.abs(fv.x))), float(np.max(np.abs(ui[0]))))
    uy = max(float(np.max(np.abs(fv.y))), float(np.max(np.abs(ui[1]))))
    rho_cp = mixture_property(alpha, "rho_cp", mixture).interior
    cond = conduction_dt_limit(rho_cp, face_conductivity(alpha, mixture))
    dt = stable_dt(state.u.grid, (ux, uy), mixture.max_kinematic_viscosity(),
                   mixture.phase1.rho + mixture.phase2.rho, sigma_max, cfl, cond)
    dt = min(dt, dt_max)
    if not dt >= dt_floor:
        raise TimeStepUnderflow(f"time step {dt:.3e} s below floor {dt_floor:.3e} s")
    return dt


def kinetic_energy(u: VectorField, rho: ScalarField) -> float:
    ui = u.interior
    return 0.5 * float(np.sum(rho.interior * (ui[0] ** 2 + ui[1] ** 2))) * u.grid.cell_volume


def momentum(u: VectorField, rho: ScalarField) -> np.ndarray:
    return np.sum(rho.interior * u.interior, axis=(1, 2)) * u.grid.cell_volume
