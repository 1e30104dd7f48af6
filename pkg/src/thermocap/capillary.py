"""Continuum-surface-stress capillary force.

The force density acting on the fluid is the divergence of the surface
stress ``sigma * delta_s * (I - n n)`` with ``delta_s = |grad alpha|`` and
``n = grad alpha / delta_s``. Expanding the divergence gives a tangential
(Marangoni) part ``delta_s (I - n n) grad sigma`` and a normal part
``sigma kappa n delta_s`` with ``kappa = -div n``. For a droplet with
alpha = 1 inside, ``n`` points inward, ``kappa > 0`` and the normal force
points into the droplet.

The surface tension coefficient is evaluated cell-wise first and then
differentiated as an ordinary field, so any scalar driver (temperature,
concentration) enters through the same gradient operator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (FaceField, ScalarField, VectorField, divergence, gradient, xface_neighbors,
                     yface_neighbors)


class SurfaceTensionRangeError(ValueError):
    """The linear surface tension model went negative on the simulated range."""


@dataclass(frozen=True)
class SurfaceTensionModel:
    sigma0: float  # N/m at T_ref
    sigma_T: float  # N/(m K), signed
    T_ref: float  # K

    def __post_init__(self):
        if self.sigma0 < 0:
            raise SurfaceTensionRangeError(f"sigma0 must be non-negative, got {self.sigma0}")

    def sigma(self, T):
        return self.sigma0 + self.sigma_T * (np.asarray(T) - self.T_ref)

    def check_range(self, T_min: float, T_max: float) -> None:
        lo = min(self.sigma(T_min), self.sigma(T_max))
        if lo < 0:
            raise SurfaceTensionRangeError(
                f"surface tension becomes negative ({lo:.4g} N/m) for T in [{T_min}, {T_max}] K")


@dataclass
class InterfaceGeometry:
    delta_s: ScalarField
    normal: VectorField
    kappa: ScalarField
    delta_cut: float


def default_delta_cut(grid) -> float:
    return 1e-8 / min(grid.dx, grid.dy)


def interface_delta(alpha: ScalarField) -> ScalarField:
    """|grad alpha| with central differences."""
    return gradient(alpha).magnitude()


def interface_normal(alpha: ScalarField, delta_s: ScalarField, delta_cut: float | None = None) -> VectorField:
    if delta_cut is None:
        delta_cut = default_delta_cut(alpha.grid)
    grad = gradient(alpha)
    mask = delta_s.data > delta_cut
    safe = np.where(mask, delta_s.data, 1.0)
    return VectorField(alpha.grid, np.where(mask, grad.data / safe, 0.0))


def smooth_normal(normal: VectorField) -> VectorField:
    """One pass of 3x3 cell averaging followed by renormalization."""
    n = normal.data
    out = np.zeros_like(n)
    acc = np.zeros_like(n[:, 1:-1, 1:-1])
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            acc += n[:, 1 + di:n.shape[1] - 1 + di, 1 + dj:n.shape[2] - 1 + dj]
    mag = np.hypot(acc[0], acc[1])
    valid = (mag > 0) & (np.hypot(n[0, 1:-1, 1:-1], n[1, 1:-1, 1:-1]) > 0)
    out[:, 1:-1, 1:-1] = np.where(valid, acc / np.where(valid, mag, 1.0), 0.0)
    return VectorField(normal.grid, out)


def curvature(normal: VectorField, smooth: bool = True) -> ScalarField:
    """kappa = -div(n). Only meaningful inside the interface band."""
    n = smooth_normal(normal) if smooth else normal
    k = divergence(n)
    k.data *= -1.0
    return k


def smooth_alpha(alpha: ScalarField, passes: int) -> ScalarField:
    """``passes`` applications of the 3x3 binomial filter (1-2-1 in each direction).

    Ghosts are refreshed from ``alpha.bcs`` after every pass when present;
    without boundary conditions each pass shrinks the valid ghost depth by one.
    """
    out = alpha.copy()
    for _ in range(passes):
        d = out.data
        o = d.copy()
        o[1:-1, 1:-1] = (4.0 * d[1:-1, 1:-1]
                         + 2.0 * (d[2:, 1:-1] + d[:-2, 1:-1] + d[1:-1, 2:] + d[1:-1, :-2])
                         + d[2:, 2:] + d[:-2, :-2] + d[2:, :-2] + d[:-2, 2:]) / 16.0
        out.data = o
        if out.bcs is not None:
            out.apply_bc()
    return out


def interface_geometry(alpha: ScalarField, delta_cut: float | None = None, smooth: bool = True,
                       alpha_smoothing: int = 2) -> InterfaceGeometry:
    """delta_s and n from alpha itself; kappa from a filtered copy of alpha.

    Curvature from a sharp (one-cell) volume-fraction jump is dominated by
    staircase noise, so ``alpha_smoothing`` binomial filter passes are
    applied before the normals whose negative divergence gives kappa.
    kappa is kept on the band of the filtered field, slightly wider than
    that of delta_s.
    """
    if delta_cut is None:
        delta_cut = default_delta_cut(alpha.grid)
    delta_s = interface_delta(alpha)
    normal = interface_normal(alpha, delta_s, delta_cut)
    if alpha_smoothing:
        soft = smooth_alpha(alpha, alpha_smoothing)
        soft_delta = interface_delta(soft)
        kappa = curvature(interface_normal(soft, soft_delta, delta_cut), smooth)
        kappa.data[soft_delta.data <= delta_cut] = 0.0
    else:
        kappa = curvature(normal, smooth)
        kappa.data[delta_s.data <= delta_cut] = 0.0
    return InterfaceGeometry(delta_s, normal, kappa, delta_cut)


def sigma_field(T: ScalarField, model: SurfaceTensionModel) -> ScalarField:
    """Cell-wise surface tension coefficient, ghosts included."""
    s = ScalarField(T.grid, model.sigma(T.data))
    smin = float(s.interior.min())
    if smin < 0:
        raise SurfaceTensionRangeError(f"surface tension negative ({smin:.4g} N/m) somewhere in the domain")
    return s


def tangential_part(sigma: ScalarField, geometry: InterfaceGeometry) -> VectorField:
    """Marangoni term delta_s (I - n n) grad(sigma) at cell centers."""
    d = geometry.delta_s.data
    n = geometry.normal.data
    gs = gradient(sigma).data
    n_dot = n[0] * gs[0] + n[1] * gs[1]
    mask = d > geometry.delta_cut
    return VectorField(sigma.grid, np.where(mask, d * (gs - n * n_dot), 0.0))


def normal_part(sigma: ScalarField, geometry: InterfaceGeometry) -> VectorField:
    """Capillary term sigma kappa n delta_s at cell centers."""
    d = geometry.delta_s.data
    mask = d > geometry.delta_cut
    f = sigma.data * geometry.kappa.data * d * geometry.normal.data
    return VectorField(sigma.grid, np.where(mask, f, 0.0))


def css_force_split(sigma: ScalarField, geometry: InterfaceGeometry) -> VectorField:
    """Tangential plus normal decomposition evaluated at cell centers."""
    t = tangential_part(sigma, geometry)
    t.data += normal_part(sigma, geometry).data
    return t


def css_force(alpha: ScalarField, T: ScalarField, model: SurfaceTensionModel,
              geometry: InterfaceGeometry | None = None) -> VectorField:
    """Split-form force density on the fluid [N/m^3]."""
    if geometry is None:
        geometry = interface_geometry(alpha)
    return css_force_split(sigma_field(T, model), geometry)


def face_stress(alpha: ScalarField, sigma: ScalarField, delta_cut: float | None = None):
    """Surface stress ``sigma |g| (I - n n)`` on faces, with g = grad(alpha) at the face.

    Returns ``(row_x, row_y)`` FaceFields: ``row_x`` carries S_xx on x-faces and
    S_xy on y-faces, ``row_y`` carries S_yx on x-faces and S_yy on y-faces.
    """
    grid = alpha.grid
    if delta_cut is None:
        delta_cut = default_delta_cut(grid)
    a = alpha.data
    gx_c = np.zeros_like(a)
    gy_c = np.zeros_like(a)
    gx_c[1:-1, :] = (a[2:, :] - a[:-2, :]) / (2.0 * grid.dx)
    gy_c[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * grid.dy)

    l, r = xface_neighbors(a, grid)
    gyl, gyr = xface_neighbors(gy_c, grid)
    sl, sr = xface_neighbors(sigma.data, grid)
    xgx = (r - l) / grid.dx
    xgy = 0.5 * (gyl + gyr)
    xmag = np.hypot(xgx, xgy)
    xm = xmag > delta_cut
    xinv = np.where(xm, 1.0 / np.where(xm, xmag, 1.0), 0.0)
    xs = 0.5 * (sl + sr) * xinv
    s_xx_x = xs * xgy * xgy
    s_yx_x = -xs * xgx * xgy

    b, t = yface_neighbors(a, grid)
    gxb, gxt = yface_neighbors(gx_c, grid)
    sb, st = yface_neighbors(sigma.data, grid)
    ygy = (t - b) / grid.dy
    ygx = 0.5 * (gxb + gxt)
    ymag = np.hypot(ygx, ygy)
    ym = ymag > delta_cut
    yinv = np.where(ym, 1.0 / np.where(ym, ymag, 1.0), 0.0)
    ys = 0.5 * (sb + st) * yinv
    s_xy_y = -ys * ygx * ygy
    s_yy_y = ys * ygx * ygx
    return FaceField(grid, s_xx_x, s_xy_y), FaceField(grid, s_yx_x, s_yy_y)


def css_force_divergence_form(alpha: ScalarField, sigma: ScalarField,
                              geometry: InterfaceGeometry | None = None,
                              delta_cut: float | None = None) -> VectorField:
    """Force density as the discrete divergence of the face surface stress.

    Interior faces cancel pairwise, so the domain sum of the force equals
    the boundary stress integral and vanishes for an interface away from
    the walls. ``geometry`` is only consulted for its cutoff.
    """
    if delta_cut is None and geometry is not None:
        delta_cut = geometry.delta_cut
    row_x, row_y = face_stress(alpha, sigma, delta_cut)
    out = VectorField.zeros(alpha.grid)
    out.data[0] = divergence(row_x).data
    out.data[1] = divergence(row_y).data
    return out


def _face_gradients(a: np.ndarray, grid):
    """Gradient vectors on x-faces and y-faces: compact normal part, averaged tangential part."""
    gx_c = np.zeros_like(a)
    gy_c = np.zeros_like(a)
    gx_c[1:-1, :] = (a[2:, :] - a[:-2, :]) / (2.0 * grid.dx)
    gy_c[:, 1:-1] = (a[:, 2:] - a[:, :-2]) / (2.0 * grid.dy)
    l, r = xface_neighbors(a, grid)
    gyl, gyr = xface_neighbors(gy_c, grid)
    b, t = yface_neighbors(a, grid)
    gxb, gxt = yface_neighbors(gx_c, grid)
    return ((r - l) / grid.dx, 0.5 * (gyl + gyr)), (0.5 * (gxb + gxt), (t - b) / grid.dy)


def _band_average(k: np.ndarray, w: np.ndarray, grid):
    # weighted face average of a band quantity; faces with no weight get zero
    kl, kr = xface_neighbors(k, grid)
    wl, wr = xface_neighbors(w, grid)
    kb, kt = yface_neighbors(k, grid)
    wb, wt = yface_neighbors(w, grid)
    sx = wl + wr
    sy = wb + wt
    fx = np.where(sx > 0, (wl * kl + wr * kr) / np.where(sx > 0, sx, 1.0), 0.0)
    fy = np.where(sy > 0, (wb * kb + wt * kt) / np.where(sy > 0, sy, 1.0), 0.0)
    return fx, fy


def balanced_face_force(alpha: ScalarField, sigma: ScalarField,
                        geometry: InterfaceGeometry | None = None) -> FaceField:
    """Face-normal force density of the split form, evaluated on faces.

    The normal term is ``sigma_f kappa_f (d alpha/dn)_f`` with the same
    compact difference the pressure gradient uses, so a pressure field
    ``sigma kappa alpha`` cancels it exactly when kappa is uniform. The
    Marangoni term ``|g| grad(sigma) - g (g . grad(sigma)) / |g|`` uses face
    gradients of alpha and sigma. kappa is averaged to faces with weights
    |grad alpha|.
    """
    grid = alpha.grid
    if geometry is None:
        geometry = interface_geometry(alpha)
    cut = geometry.delta_cut
    (axx, axy), (ayx, ayy) = _face_gradients(alpha.data, grid)
    (sxx, sxy), (syx, syy) = _face_gradients(sigma.data, grid)
    weight = np.where(geometry.kappa.data != 0.0, np.maximum(geometry.delta_s.data, cut), 0.0)
    kfx, kfy = _band_average(geometry.kappa.data, weight, grid)
    sl, sr = xface_neighbors(sigma.data, grid)
    sb, st = yface_neighbors(sigma.data, grid)

    def _tangential(gn, gt, sn, st_):
        mag = np.hypot(gn, gt)
        m = mag > cut
        proj = (gn * sn + gt * st_) / np.where(m, mag, 1.0)
        return np.where(m, mag * sn - gn * proj, 0.0)

    fx = 0.5 * (sl + sr) * kfx * axx + _tangential(axx, axy, sxx, sxy)
    fy = 0.5 * (sb + st) * kfy * ayy + _tangential(ayy, ayx, syy, syx)
    return FaceField(grid, fx, fy)
