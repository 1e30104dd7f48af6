"""Uniform structured 2D grid with ghost layers and per-side boundary conditions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

SIDES = ("left", "right", "bottom", "top")
BC_KINDS = ("dirichlet", "neumann", "zero_gradient", "no_slip", "periodic")


class ConfigurationError(ValueError):
    """Raised for inconsistent grid or boundary-condition setup."""


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    dx: float
    dy: float
    origin: tuple[float, float] = (0.0, 0.0)
    n_ghost: int = 3

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ConfigurationError(f"grid needs at least 4x4 cells, got {self.nx}x{self.ny}")
        if not (self.dx > 0 and self.dy > 0):
            raise ConfigurationError("cell sizes must be positive")
        if self.n_ghost < 1:
            raise ConfigurationError("n_ghost must be >= 1")

    @property
    def shape(self) -> tuple[int, int]:
        """Padded array shape, ghosts included."""
        return (self.nx + 2 * self.n_ghost, self.ny + 2 * self.n_ghost)

    @property
    def interior(self) -> tuple[slice, slice]:
        g = self.n_ghost
        return (slice(g, g + self.nx), slice(g, g + self.ny))

    @property
    def extent(self) -> tuple[float, float]:
        return (self.nx * self.dx, self.ny * self.dy)

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy

    @property
    def x_centers(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y_centers(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.dy

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (self.origin[0] + (i + 0.5) * self.dx, self.origin[1] + (j + 0.5) * self.dy)

    def mesh(self, ghosts: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as (X, Y) arrays indexed [i, j]."""
        if ghosts:
            g = self.n_ghost
            x = self.origin[0] + (np.arange(-g, self.nx + g) + 0.5) * self.dx
            y = self.origin[1] + (np.arange(-g, self.ny + g) + 0.5) * self.dy
        else:
            x, y = self.x_centers, self.y_centers
        return np.meshgrid(x, y, indexing="ij")

    @property
    def n_faces(self) -> int:
        return (self.nx + 1) * self.ny + self.nx * (self.ny + 1)


def build_grid(nx: int, ny: int, extent: tuple[float, float], n_ghost: int = 3,
               origin: tuple[float, float] = (0.0, 0.0)) -> Grid:
    lx, ly = extent
    if not (lx > 0 and ly > 0):
        raise ConfigurationError(f"domain extent must be positive, got {extent}")
    if n_ghost < 1:
        raise ConfigurationError("n_ghost must be >= 1")
    return Grid(int(nx), int(ny), lx / nx, ly / ny, tuple(origin), int(n_ghost))


@dataclass(frozen=True)
class BoundaryCondition:
    """One side's condition.

    ``value`` is the face value for ``dirichlet``; ``gradient`` is the
    derivative along the coordinate axis (d/dx or d/dy, not the outward
    normal) for ``neumann``. ``no_slip`` is a homogeneous Dirichlet condition
    on every component.
    """

    kind: str
    value: float = 0.0
    gradient: float = 0.0

    def __post_init__(self):
        if self.kind not in BC_KINDS:
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")


@dataclass(frozen=True)
class BCSet:
    left: BoundaryCondition
    right: BoundaryCondition
    bottom: BoundaryCondition
    top: BoundaryCondition

    def __post_init__(self):
        for a, b in (("left", "right"), ("bottom", "top")):
            pa = getattr(self, a).kind == "periodic"
            pb = getattr(self, b).kind == "periodic"
            if pa != pb:
                raise ConfigurationError(f"periodic condition on {a} requires periodic on {b}")

    @classmethod
    def from_mapping(cls, bcs: Mapping[str, BoundaryCondition]) -> "BCSet":
        missing = [s for s in SIDES if s not in bcs]
        if missing:
            raise ConfigurationError(f"no boundary condition registered for side(s) {missing}")
        extra = set(bcs) - set(SIDES)
        if extra:
            raise ConfigurationError(f"unknown side(s) {sorted(extra)}")
        return cls(**{s: bcs[s] for s in SIDES})

    @classmethod
    def uniform(cls, bc: BoundaryCondition) -> "BCSet":
        return cls(bc, bc, bc, bc)

    def side(self, name: str) -> BoundaryCondition:
        if name not in SIDES:
            raise ConfigurationError(f"unregistered side {name!r}")
        return getattr(self, name)


def _fill_side(a: np.ndarray, grid: Grid, side: str, bc: BoundaryCondition):
    # a is one padded component indexed [i, j]; work on a view whose first axis is the side normal
    g = grid.n_ghost
    if side in ("left", "right"):
        view, n, h, tang = a, grid.nx, grid.dx, slice(g, g + grid.ny)
    else:
        view, n, h, tang = a.T, grid.ny, grid.dy, slice(None)
    low = side in ("left", "bottom")
    kind = bc.kind
    for k in range(1, g + 1):
        if low:
            ghost, mirror, wrap = g - k, g + k - 1, g + n - k
        else:
            ghost, mirror, wrap = g + n + k - 1, g + n - k, g + k - 1
        if kind == "periodic":
            view[ghost, tang] = view[wrap, tang]
        elif kind == "zero_gradient":
            view[ghost, tang] = view[mirror, tang]
        elif kind == "no_slip":
            view[ghost, tang] = -view[mirror, tang]
        elif kind == "dirichlet":
            view[ghost, tang] = 2.0 * bc.value - view[mirror, tang]
        else:
            step = (2 * k - 1) * h * bc.gradient
            view[ghost, tang] = view[mirror, tang] - step if low else view[mirror, tang] + step


def _as_bcset(bcs) -> BCSet:
    if isinstance(bcs, BCSet):
        return bcs
    return BCSet.from_mapping(bcs)


def apply_boundary(field, bcs=None):
    """Fill ghost layers of a ScalarField or VectorField in place and return it.

    ``bcs`` is a BCSet (or side mapping) applied to every component, or a
    sequence of them, one per vector component. Left/right ghosts are filled
    on interior rows first; bottom/top then fill the full padded width so
    corners come from the x-ghost columns.
    """
    if bcs is None:
        bcs = field.bcs
    if bcs is None:
        raise ConfigurationError("field has no boundary conditions registered")
    data = field.data
    comps = [data] if data.ndim == 2 else [data[c] for c in range(data.shape[0])]
    if isinstance(bcs, (list, tuple)):
        if len(bcs) != len(comps):
            raise ConfigurationError(f"expected {len(comps)} component BC sets, got {len(bcs)}")
        sets = [_as_bcset(b) for b in bcs]
    else:
        sets = [_as_bcset(bcs)] * len(comps)
    for comp, bcset in zip(comps, sets):
        for side in SIDES:
            _fill_side(comp, field.grid, side, bcset.side(side))
    return field
