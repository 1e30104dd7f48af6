"""WENO-JS face reconstruction on uniform grids.

Coefficient tables (candidate stencils, optimal linear weights, smoothness
indicator quadratic forms) are derived once per order from cell-average
polynomial reconstruction and stored on the scheme object.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import FaceField, ScalarField, divergence

SUPPORTED_ORDERS = (1, 3, 5)


@dataclass(frozen=True)
class WenoScheme:
    """Left-biased tables for reconstruction at the right face of cell 0.

    ``stencils[k]`` holds the ``r`` coefficients of candidate ``k`` acting on
    window offsets ``k .. k + r - 1`` (window index 0 is the leftmost of the
    ``2r - 1`` cells). ``smoothness[k]`` is the ``r x r`` matrix of the
    quadratic form giving beta_k.

    With ``grid_scaled_epsilon`` the regularization is the squared cell size
    of the reconstruction direction instead of ``epsilon``; the third-order
    scheme needs this to keep its design order at smooth extrema.
    """

    order: int
    stencils: np.ndarray
    linear_weights: np.ndarray
    smoothness: np.ndarray
    epsilon: float = 1e-6
    grid_scaled_epsilon: bool = False

    def effective_epsilon(self, h: float | None) -> float:
        if self.grid_scaled_epsilon and h is not None:
            return h * h
        return self.epsilon

    @property
    def r(self) -> int:
        return (self.order + 1) // 2

    @property
    def width(self) -> int:
        return 2 * self.r - 1


def _cell_moments(cells: np.ndarray, degree: int) -> np.ndarray:
    # A[c, d] = integral of x**d over [c - 1/2, c + 1/2]
    d = np.arange(degree + 1)
    hi = (cells[:, None] + 0.5) ** (d + 1)
    lo = (cells[:, None] - 0.5) ** (d + 1)
    return (hi - lo) / (d + 1)


def _reconstruction_polynomial(cells: np.ndarray) -> np.ndarray:
    """Monomial coefficients (rows = degree) of the polynomial matching unit cell averages."""
    A = _cell_moments(cells.astype(float), len(cells) - 1)
    return np.linalg.solve(A, np.eye(len(cells)))


def _eval_at(coeffs: np.ndarray, x: float) -> np.ndarray:
    powers = x ** np.arange(coeffs.shape[0])
    return powers @ coeffs


def _smoothness_matrix(coeffs: np.ndarray) -> np.ndarray:
    """Sum over derivative orders l >= 1 of the integral of (p^(l))^2 over the cell [-1/2, 1/2]."""
    deg = coeffs.shape[0] - 1
    B = np.zeros((coeffs.shape[1], coeffs.shape[1]))
    for l in range(1, deg + 1):
        # derivative coefficient rows: d^l/dx^l x^d = d!/(d-l)! x^(d-l)
        D = np.zeros((deg + 1 - l, coeffs.shape[1]))
        for d in range(l, deg + 1):
            fac = np.prod(np.arange(d - l + 1, d + 1, dtype=float))
            D[d - l] = fac * coeffs[d]
        m = D.shape[0]
        P = np.array([[((0.5) ** (a + b + 1) - (-0.5) ** (a + b + 1)) / (a + b + 1)
                       for b in range(m)] for a in range(m)])
        B += D.T @ P @ D
    return B


@lru_cache(maxsize=None)
def build_scheme(order: int, epsilon: float = 1e-6, grid_scaled_epsilon: bool | None = None) -> WenoScheme:
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported WENO order {order}; choose from {SUPPORTED_ORDERS}")
    r = (order + 1) // 2
    width = 2 * r - 1
    offsets = np.arange(width) - (r - 1)  # window cells relative to cell 0
    stencils = np.zeros((r, r))
    smooth = np.zeros((r, r, r))
    for k in range(r):
        cells = offsets[k:k + r]
        coeffs = _reconstruction_polynomial(cells)
        stencils[k] = _eval_at(coeffs, 0.5)
        smooth[k] = _smoothness_matrix(coeffs)
    full = _eval_at(_reconstruction_polynomial(offsets), 0.5)
    # big-stencil coefficients as a combination of the candidates
    M = np.zeros((width, r))
    for k in range(r):
        M[k:k + r, k] = stencils[k]
    weights = np.linalg.lstsq(M, full, rcond=None)[0]
    weights = weights / weights.sum()
    for arr in (stencils, weights, smooth):
        arr.setflags(write=False)
    if grid_scaled_epsilon is None:
        grid_scaled_epsilon = order == 3
    return WenoScheme(order, stencils, weights, smooth, epsilon, grid_scaled_epsilon)


def smoothness_indicators(window: np.ndarray, scheme: WenoScheme) -> np.ndarray:
    r = scheme.r
    window = np.asarray(window, dtype=float)
    betas = np.empty((r,) + window.shape[1:])
    for k in range(r):
        v = window[k:k + r]
        betas[k] = np.sum(v * np.tensordot(scheme.smoothness[k], v, axes=1), axis=0)
    return betas


def nonlinear_weights(window: np.ndarray, scheme: WenoScheme, h: float | None = None) -> np.ndarray:
    """WENO-JS weights for window(s) shaped (width, ...); returns (r, ...)."""
    r = scheme.r
    if r == 1:
        return np.ones((1,) + window.shape[1:])
    eps = scheme.effective_epsilon(h)
    betas = smoothness_indicators(window, scheme)
    alphas = []
    for k in range(r):
        alphas.append(scheme.linear_weights[k] / (eps + betas[k]) ** 2)
    alphas = np.array(alphas)
    return alphas / alphas.sum(axis=0)


def _reconstruct_left(window, scheme: WenoScheme, h: float | None = None):
    r = scheme.r
    if r == 1:
        return window[0]
    w = nonlinear_weights(window, scheme, h)
    out = 0.0
    for k in range(r):
        cand = np.tensordot(scheme.stencils[k], window[k:k + r], axes=1)
        out = out + w[k] * cand
    return out


def reconstruct_face(values, upwind_sign: float, scheme: WenoScheme, h: float | None = None):
    """Face value from a window of ``scheme.width`` cell averages.

    For ``upwind_sign >= 0`` the window is ``i-r+1 .. i+r-1`` and the value is
    at the right face of the center cell. For a negative sign the window is
    ``i-r+2 .. i+r`` and the right-biased value at the left face of the
    center cell's right neighbor is returned, i.e. the same face seen from
    the other side. Extra trailing axes are reconstructed elementwise.
    """
    window = np.asarray(values, dtype=float)
    if window.shape[0] != scheme.width:
        raise ValueError(f"window length {window.shape[0]} != {scheme.width}")
    if upwind_sign >= 0:
        return _reconstruct_left(window, scheme, h)
    return _reconstruct_left(window[::-1], scheme, h)


def face_values(a: np.ndarray, grid, axis: int, scheme: WenoScheme) -> tuple[np.ndarray, np.ndarray]:
    """Left- and right-biased reconstructions on all faces normal to ``axis``.

    Returns arrays shaped like the FaceField component for that axis.
    """
    left_win, right_win = _face_windows(a, grid, axis, scheme)
    h = grid.dx if axis == 0 else grid.dy
    left = _reconstruct_left(left_win, scheme, h)
    right = _reconstruct_left(right_win, scheme, h)
    if axis == 1:
        left, right = left.T, right.T
    return left, right


def _face_windows(a: np.ndarray, grid, axis: int, scheme: WenoScheme) -> tuple[np.ndarray, np.ndarray]:
    # stencil windows (width, faces, tangential) for the left- and right-biased values
    g, nx, ny = grid.n_ghost, grid.nx, grid.ny
    r = scheme.r
    if g < r:
        raise ValueError(f"need at least {r} ghost layers for order {scheme.order}")
    n = nx if axis == 0 else ny
    view = a if axis == 0 else a.T
    tang = slice(g, g + (ny if axis == 0 else nx))
    # face f (0..n) sits between padded rows g+f-1 and g+f
    left_win = np.array([view[g - 1 - (r - 1) + m: g + n - (r - 1) + m, tang] for m in range(2 * r - 1)])
    right_win = np.array([view[g + (r - 1) - m: g + n + 1 + (r - 1) - m, tang] for m in range(2 * r - 1)])
    return left_win, right_win


def upwind_face_values(phi: ScalarField, face_velocity: FaceField, scheme: WenoScheme) -> FaceField:
    """Reconstructed phi on each face, upwinded by the sign of the face velocity.

    Only the upwind-biased window is reconstructed per face.
    """
    grid = phi.grid
    out = []
    for axis, u in ((0, face_velocity.x), (1, face_velocity.y)):
        left_win, right_win = _face_windows(phi.data, grid, axis, scheme)
        up = u >= 0 if axis == 0 else (u >= 0).T
        win = np.where(up, left_win, right_win)
        val = _reconstruct_left(win, scheme, grid.dx if axis == 0 else grid.dy)
        out.append(val if axis == 0 else val.T)
    return FaceField(grid, out[0], out[1])


def convective_flux(phi: ScalarField, face_velocity: FaceField, scheme: WenoScheme) -> ScalarField:
    """Divergence of the convective flux ``u phi`` with WENO face values."""
    fv = upwind_face_values(phi, face_velocity, scheme)
    return divergence(fv.scaled(face_velocity))
