"""Cell- and face-centered field containers and second-order FV operators.

Arrays are indexed ``[i, j]`` with ``i`` along x. Cell fields carry
``grid.n_ghost`` ghost layers; face fields hold only the ``(nx+1, ny)``
x-faces and ``(nx, ny+1)`` y-faces of the physical domain.

Operators that produce cell fields from cell fields evaluate on every cell
that has a full stencil, so the result is also valid in the ghost layers
except the outermost one. That lets operators be chained (normal ->
curvature) without refreshing boundaries in between.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import Grid, apply_boundary


class PhysicsConfigurationError(ValueError):
    pass


class NonFiniteFieldError(FloatingPointError):
    pass


@dataclass
class ScalarField:
    grid: Grid
    data: np.ndarray
    bcs: object = None

    @classmethod
    def zeros(cls, grid: Grid, bcs=None) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape), bcs)

    @classmethod
    def full(cls, grid: Grid, value: float, bcs=None) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)), bcs)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable, bcs=None) -> "ScalarField":
        """Sample ``func(x, y)`` at all cell centers, ghosts included."""
        X, Y = grid.mesh(ghosts=True)
        return cls(grid, np.asarray(func(X, Y), dtype=float) + np.zeros(grid.shape), bcs)

    @property
    def interior(self) -> np.ndarray:
        return self.data[self.grid.interior]

    @interior.setter
    def interior(self, values):
        self.data[self.grid.interior] = values

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.data.copy(), self.bcs)

    def apply_bc(self, bcs=None) -> "ScalarField":
        return apply_boundary(self, bcs)

    def check_finite(self, name: str = "field") -> "ScalarField":
        if not np.all(np.isfinite(self.interior)):
            raise NonFiniteFieldError(f"non-finite values in {name}")
        return self

    def integral(self) -> float:
        return float(np.sum(self.interior)) * self.grid.cell_volume


@dataclass
class VectorField:
    grid: Grid
    data: np.ndarray  # shape (2, *grid.shape)
    bcs: object = None

    @classmethod
    def zeros(cls, grid: Grid, bcs=None) -> "VectorField":
        return cls(grid, np.zeros((2,) + grid.shape), bcs)

    @classmethod
    def from_function(cls, grid: Grid, func: Callable, bcs=None) -> "VectorField":
        X, Y = grid.mesh(ghosts=True)
        fx, fy = func(X, Y)
        data = np.zeros((2,) + grid.shape)
        data[0] += fx
        data[1] += fy
        return cls(grid, data, bcs)

    @property
    def x(self) -> np.ndarray:
        return self.data[0]

    @property
    def y(self) -> np.ndarray:
        return self.data[1]

    @property
    def interior(self) -> np.ndarray:
        ix, iy = self.grid.interior
        return self.data[:, ix, iy]

    def component(self, c: int) -> ScalarField:
        """Scalar view of one component (shares memory)."""
        return ScalarField(self.grid, self.data[c])

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.hypot(self.data[0], self.data[1]))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.data.copy(), self.bcs)

    def apply_bc(self, bcs=None) -> "VectorField":
        return apply_boundary(self, bcs)

    def check_finite(self, name: str = "vector field") -> "VectorField":
        if not np.all(np.isfinite(self.interior)):
            raise NonFiniteFieldError(f"non-finite values in {name}")
        return self


@dataclass
class FaceField:
    """Face-normal values: ``x`` on x-faces (nx+1, ny), ``y`` on y-faces (nx, ny+1)."""

    grid: Grid
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid) -> "FaceField":
        return cls(grid, np.zeros((grid.nx + 1, grid.ny)), np.zeros((grid.nx, grid.ny + 1)))

    @property
    def size(self) -> int:
        return self.x.size + self.y.size

    def copy(self) -> "FaceField":
        return FaceField(self.grid, self.x.copy(), self.y.copy())

    def __add__(self, other: "FaceField") -> "FaceField":
        return FaceField(self.grid, self.x + other.x, self.y + other.y)

    def __sub__(self, other: "FaceField") -> "FaceField":
        return FaceField(self.grid, self.x - other.x, self.y - other.y)

    def scaled(self, factor) -> "FaceField":
        if isinstance(factor, FaceField):
            return FaceField(self.grid, self.x * factor.x, self.y * factor.y)
        return FaceField(self.grid, self.x * factor, self.y * factor)

    def zero_walls(self, periodic_x: bool = False, periodic_y: bool = False) -> "FaceField":
        if not periodic_x:
            self.x[0, :] = 0.0
            self.x[-1, :] = 0.0
        if not periodic_y:
            self.y[:, 0] = 0.0
            self.y[:, -1] = 0.0
        return self

    def boundary_net_outflow(self) -> float:
        """Net outward integral over the domain boundary (values times face length)."""
        g = self.grid
        return float((np.sum(self.x[-1]) - np.sum(self.x[0])) * g.dy
                     + (np.sum(self.y[:, -1]) - np.sum(self.y[:, 0])) * g.dx)

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.x)), np.max(np.abs(self.y))))


def xface_neighbors(a: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Cells to the left and right of every x-face, each shaped (nx+1, ny)."""
    g, nx, ny = grid.n_ghost, grid.nx, grid.ny
    return a[g - 1:g + nx, g:g + ny], a[g:g + nx + 1, g:g + ny]


def yface_neighbors(a: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Cells below and above every y-face, each shaped (nx, ny+1)."""
    g, nx, ny = grid.n_ghost, grid.nx, grid.ny
    return a[g:g + nx, g - 1:g + ny], a[g:g + nx, g:g + ny + 1]


def _central(a: np.ndarray, dx: float, dy: float) -> tuple[np.ndarray, np.ndarray]:
    gx = np.zeros_like(a)
    gy = np.zeros_like(a)
    gx[1:-1, 1:-1] = (a[2:, 1:-1] - a[:-2, 1:-1]) / (2.0 * dx)
    gy[1:-1, 1:-1] = (a[1:-1, 2:] - a[1:-1, :-2]) / (2.0 * dy)
    return gx, gy


def gradient(s: ScalarField) -> VectorField:
    """Central-difference cell gradient, exact for linear fields."""
    gx, gy = _central(s.data, s.grid.dx, s.grid.dy)
    return VectorField(s.grid, np.stack([gx, gy]))


def face_gradient(s: ScalarField) -> FaceField:
    """Compact normal derivative on every face."""
    g = s.grid
    l, r = xface_neighbors(s.data, g)
    b, t = yface_neighbors(s.data, g)
    return FaceField(g, (r - l) / g.dx, (t - b) / g.dy)


def divergence(v) -> ScalarField:
    """Discrete divergence.

    A VectorField is averaged to faces (central stencil); a FaceField is
    treated as face-normal components, so the cell value is the net outflow
    divided by the cell volume and the domain sum telescopes to the boundary.
    """
    grid = v.grid
    if isinstance(v, FaceField):
        out = ScalarField.zeros(grid)
        out.interior = (v.x[1:, :] - v.x[:-1, :]) / grid.dx + (v.y[:, 1:] - v.y[:, :-1]) / grid.dy
        return out
    dvx, _ = _central(v.data[0], grid.dx, grid.dy)
    _, dvy = _central(v.data[1], grid.dx, grid.dy)
    return ScalarField(grid, dvx + dvy)


def interpolate_to_faces(s: ScalarField, mode: str = "linear") -> FaceField:
    g = s.grid
    l, r = xface_neighbors(s.data, g)
    b, t = yface_neighbors(s.data, g)
    if mode == "linear":
        return FaceField(g, 0.5 * (l + r), 0.5 * (b + t))
    if mode == "harmonic":
        if np.any(l == 0) or np.any(r == 0) or np.any(b == 0) or np.any(t == 0):
            raise PhysicsConfigurationError("harmonic face average of a field containing zeros")
        return FaceField(g, 2.0 * l * r / (l + r), 2.0 * b * t / (b + t))
    raise ValueError(f"unknown interpolation mode {mode!r}")


def laplacian(s: ScalarField, coeff=1.0) -> ScalarField:
    """Conservative ``div(coeff grad s)`` with compact face fluxes.

    ``coeff`` may be a number, a cell ScalarField (averaged harmonically to
    faces) or a FaceField of face coefficients.
    """
    if isinstance(coeff, ScalarField):
        if np.any(coeff.interior <= 0):
            raise PhysicsConfigurationError("diffusion coefficient must be positive")
        cf = interpolate_to_faces(coeff, "harmonic")
    elif isinstance(coeff, FaceField):
        if np.any(coeff.x <= 0) or np.any(coeff.y <= 0):
            raise PhysicsConfigurationError("diffusion coefficient must be positive")
        cf = coeff
    else:
        if not coeff > 0:
            raise PhysicsConfigurationError("diffusion coefficient must be positive")
        cf = float(coeff)
    return divergence(face_gradient(s).scaled(cf))
