"""Bounded, conservative phase-fraction transport.

The update is a flux-corrected transport step: a first-order upwind flux
that is bounded by construction, plus an antidiffusive correction (central
advective flux and a counter-gradient compression flux) limited with
Zalesak's multidimensional limiter against local bounds clipped to [0, 1].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .fields import FaceField, ScalarField, divergence, xface_neighbors, yface_neighbors

log = logging.getLogger(__name__)

_TINY = 1e-300


class CFLViolation(RuntimeError):
    """The requested step exceeds the advective stability bound; retry with a smaller dt."""

    def __init__(self, courant: float, limit: float):
        super().__init__(f"outflow Courant number {courant:.3g} exceeds {limit}")
        self.courant = courant
        self.limit = limit


@dataclass
class PhaseFraction:
    alpha: ScalarField
    c_alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.c_alpha <= 2.0:
            raise ValueError(f"compression factor must lie in [0, 2], got {self.c_alpha}")

    @property
    def complement(self) -> ScalarField:
        """Fraction of the other phase."""
        return ScalarField(self.alpha.grid, 1.0 - self.alpha.data, self.alpha.bcs)

    def mass(self) -> float:
        return self.alpha.integral()


@dataclass
class AlphaStep:
    phase: PhaseFraction
    flux: FaceField  # limited alpha flux per unit face area
    min_pre_clip: float
    max_pre_clip: float
    clipped_mass: float


def _periodic(alpha: ScalarField) -> tuple[bool, bool]:
    bcs = alpha.bcs
    if bcs is None:
        return False, False
    return bcs.left.kind == "periodic", bcs.bottom.kind == "periodic"


def outflow_courant(face_velocity: FaceField, dt: float) -> float:
    g = face_velocity.grid
    ux, uy = face_velocity.x, face_velocity.y
    out = (np.maximum(ux[1:, :], 0.0) - np.minimum(ux[:-1, :], 0.0)) / g.dx \
        + (np.maximum(uy[:, 1:], 0.0) - np.minimum(uy[:, :-1], 0.0)) / g.dy
    return float(np.max(out)) * dt


def upwind_flux(alpha: ScalarField, face_velocity: FaceField) -> FaceField:
    g = alpha.grid
    l, r = xface_neighbors(alpha.data, g)
    b, t = yface_neighbors(alpha.data, g)
    ux, uy = face_velocity.x, face_velocity.y
    return FaceField(g, ux * np.where(ux >= 0, l, r), uy * np.where(uy >= 0, b, t))


def central_flux(alpha: ScalarField, face_velocity: FaceField) -> FaceField:
    g = alpha.grid
    l, r = xface_neighbors(alpha.data, g)
    b, t = yface_neighbors(alpha.data, g)
    return FaceField(g, face_velocity.x * 0.5 * (l + r), face_velocity.y * 0.5 * (b + t))


def face_unit_normal(alpha: ScalarField) -> FaceField:
    """Face-normal component of grad(alpha)/|grad(alpha)| on every face.

    The normal derivative is compact; the tangential one averages the
    central differences of the two adjacent cells.
    """
    g = alpha.grid
    a = alpha.data
    gx_c = np.zeros_like(a)
    gy_c = np.zeros_like(a)
    gx_c[1:-1, :] = (a[2:, :] - a[:-2, :]) / (2.0 * g.dx)
    gy_c[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * g.dy)
    l, r = xface_neighbors(a, g)
    gyl, gyr = xface_neighbors(gy_c, g)
    nx_num = (r - l) / g.dx
    nx_den = np.sqrt(nx_num ** 2 + (0.5 * (gyl + gyr)) ** 2)
    b, t = yface_neighbors(a, g)
    gxb, gxt = yface_neighbors(gx_c, g)
    ny_num = (t - b) / g.dy
    ny_den = np.sqrt(ny_num ** 2 + (0.5 * (gxb + gxt)) ** 2)
    nfx = np.where(nx_den > _TINY, nx_num / np.maximum(nx_den, _TINY), 0.0)
    nfy = np.where(ny_den > _TINY, ny_num / np.maximum(ny_den, _TINY), 0.0)
    return FaceField(g, nfx, nfy)


def interface_compression_flux(alpha: ScalarField, face_velocity: FaceField, c_alpha: float) -> FaceField:
    """Counter-diffusive flux ``c_alpha |u_n| n_f [alpha (1 - alpha)]_f`` per unit face area.

    The face weight is the mean of alpha(1 - alpha) over the two adjacent
    cells, so the flux vanishes wherever both neighbors are pure phase.
    """
    if not 0.0 <= c_alpha <= 2.0:
        raise ValueError(f"compression factor must lie in [0, 2], got {c_alpha}")
    g = alpha.grid
    if c_alpha == 0.0:
        return FaceField.zeros(g)
    w = alpha.data * (1.0 - alpha.data)
    wl, wr = xface_neighbors(w, g)
    wb, wt = yface_neighbors(w, g)
    n = face_unit_normal(alpha)
    fx = c_alpha * np.abs(face_velocity.x) * n.x * 0.5 * (wl + wr)
    fy = c_alpha * np.abs(face_velocity.y) * n.y * 0.5 * (wb + wt)
    return FaceField(g, fx, fy)


def _pad1(a: np.ndarray, periodic_x: bool, periodic_y: bool, fill: float) -> np.ndarray:
    out = np.full((a.shape[0] + 2, a.shape[1] + 2), fill)
    out[1:-1, 1:-1] = a
    if periodic_x:
        out[0, 1:-1] = a[-1, :]
        out[-1, 1:-1] = a[0, :]
    if periodic_y:
        out[1:-1, 0] = a[:, -1]
        out[1:-1, -1] = a[:, 0]
    return out


def fct_limit(low_order_flux: FaceField, high_order_flux: FaceField, alpha: ScalarField, dt: float,
              lower: float = 0.0, upper: float = 1.0) -> FaceField:
    """Zalesak-limited flux ``F_low + C (F_high - F_low)``, with C in [0, 1] per face.

    Local bounds are the extrema of the old and low-order solutions over
    each cell and its four face neighbors, intersected with [lower, upper].
    """
    g = alpha.grid
    px, py = _periodic(alpha)
    a_old = alpha.interior
    a_low = a_old - dt * divergence(low_order_flux).interior
    A = high_order_flux - low_order_flux

    both = np.stack([a_old, a_low])
    hi = _pad1(both.max(axis=0), px, py, -np.inf)
    lo = _pad1(both.min(axis=0), px, py, np.inf)
    a_max = np.maximum.reduce([hi[1:-1, 1:-1], hi[:-2, 1:-1], hi[2:, 1:-1], hi[1:-1, :-2], hi[1:-1, 2:]])
    a_min = np.minimum.reduce([lo[1:-1, 1:-1], lo[:-2, 1:-1], lo[2:, 1:-1], lo[1:-1, :-2], lo[1:-1, 2:]])
    a_max = np.minimum(a_max, upper)
    a_min = np.maximum(a_min, lower)

    ax, ay = A.x, A.y
    incoming = (np.maximum(ax[:-1, :], 0.0) - np.minimum(ax[1:, :], 0.0)) / g.dx \
        + (np.maximum(ay[:, :-1], 0.0) - np.minimum(ay[:, 1:], 0.0)) / g.dy
    outgoing = (np.maximum(ax[1:, :], 0.0) - np.minimum(ax[:-1, :], 0.0)) / g.dx \
        + (np.maximum(ay[:, 1:], 0.0) - np.minimum(ay[:, :-1], 0.0)) / g.dy
    p_plus = dt * incoming
    p_minus = dt * outgoing
    q_plus = np.maximum(a_max - a_low, 0.0)
    q_minus = np.maximum(a_low - a_min, 0.0)
    # ratio only where it is below one, so tiny p cannot overflow
    r_plus = np.where(p_plus > q_plus, q_plus / np.where(p_plus > q_plus, p_plus, 1.0), 1.0)
    r_minus = np.where(p_minus > q_minus, q_minus / np.where(p_minus > q_minus, p_minus, 1.0), 1.0)
    rp = _pad1(r_plus, px, py, 1.0)
    rm = _pad1(r_minus, px, py, 1.0)

    # x-face f lies between padded cells f and f+1 of the one-layer padding
    rp_l, rp_r = rp[:-1, 1:-1], rp[1:, 1:-1]
    rm_l, rm_r = rm[:-1, 1:-1], rm[1:, 1:-1]
    cx = np.where(ax >= 0, np.minimum(rp_r, rm_l), np.minimum(rp_l, rm_r))
    rp_b, rp_t = rp[1:-1, :-1], rp[1:-1, 1:]
    rm_b, rm_t = rm[1:-1, :-1], rm[1:-1, 1:]
    cy = np.where(ay >= 0, np.minimum(rp_t, rm_b), np.minimum(rp_b, rm_t))
    return FaceField(g, low_order_flux.x + cx * ax, low_order_flux.y + cy * ay)


def conservative_clip(alpha: ScalarField) -> float:
    """Clip interior alpha to [0, 1] and put the removed amount back on interface cells.

    The correction is spread in proportion to alpha(1 - alpha), so it only
    touches mixed cells. Returns the redistributed volume (signed).
    """
    a = alpha.interior
    clipped = np.clip(a, 0.0, 1.0)
    removed = float(np.sum(a - clipped))
    if removed == 0.0:
        return 0.0
    w = clipped * (1.0 - clipped)
    wsum = float(np.sum(w))
    if wsum > 0.0:
        clipped = clipped + removed * w / wsum
        clipped = np.clip(clipped, 0.0, 1.0)
    else:
        log.warning("no mixed cells to receive clipped volume %.3e", removed)
    alpha.interior = clipped
    return removed * alpha.grid.cell_volume


def advect_alpha(phase: PhaseFraction, face_velocity: FaceField, dt: float,
                 compression_velocity: FaceField | None = None, max_courant: float = 0.5) -> AlphaStep:
    """One FCT step of d(alpha)/dt + div(u alpha) = 0.

    ``face_velocity`` must be discretely divergence-free and carry zero
    normal velocity on walls. ``compression_velocity`` overrides the speed
    used by the compression flux (defaults to the advecting velocity).
    Ghosts of ``phase.alpha`` must be current on entry; they are refreshed
    on the returned field.
    """
    alpha = phase.alpha
    courant = outflow_courant(face_velocity, dt)
    if courant > max_courant:
        raise CFLViolation(courant, max_courant)
    low = upwind_flux(alpha, face_velocity)
    high = central_flux(alpha, face_velocity)
    comp_u = face_velocity if compression_velocity is None else compression_velocity
    high = high + interface_compression_flux(alpha, comp_u, phase.c_alpha)
    flux = fct_limit(low, high, alpha, dt)
    new = alpha.copy()
    new.interior = alpha.interior - dt * divergence(flux).interior
    amin, amax = float(new.interior.min()), float(new.interior.max())
    clipped = conservative_clip(new)
    if new.bcs is not None:
        new.apply_bc()
    return AlphaStep(PhaseFraction(new, phase.c_alpha), flux, amin, amax, clipped)
