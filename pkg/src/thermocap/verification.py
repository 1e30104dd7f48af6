"""Manufactured-solution studies, analytic oracles and the benchmark regression runs."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .case import CaseConfig, Diagnostics, build_droplet_case, extract_diagnostics
from .fields import FaceField, ScalarField
from .grid import BCSet, BoundaryCondition, build_grid
from .simulation import SimState, advance_adaptive
from .weno import WenoScheme, build_scheme, convective_flux


@dataclass
class ConvergenceStudy:
    """Error norms over a grid sequence with pairwise observed orders.

    ``observed_order`` is the order of the finest pair. A study whose errors
    are all zero (data the scheme reproduces exactly) is ``degenerate`` and
    carries no order; non-monotone decay marks it ``failed``.
    """

    sizes: list[int]
    errors: list[float]
    label: str = ""
    pair_orders: list[float] = field(init=False)
    degenerate: bool = field(init=False)
    failed: bool = field(init=False)

    def __post_init__(self):
        if len(self.sizes) < 3 or len(self.sizes) != len(self.errors):
            raise ValueError("a convergence study needs at least 3 grid levels with one error each")
        if list(self.sizes) != sorted(set(self.sizes)):
            raise ValueError("grid sizes must be strictly increasing")
        self.degenerate = all(e == 0.0 for e in self.errors)
        if not self.degenerate and any(not e > 0.0 for e in self.errors):
            raise ValueError(f"errors must be strictly positive, got {self.errors}")
        if self.degenerate:
            self.pair_orders = []
            self.failed = False
            return
        self.pair_orders = [math.log(self.errors[k] / self.errors[k + 1]) / math.log(self.sizes[k + 1] / self.sizes[k])
                            for k in range(len(self.sizes) - 1)]
        self.failed = any(self.errors[k + 1] >= self.errors[k] for k in range(len(self.errors) - 1))

    @property
    def observed_order(self) -> float | None:
        return self.pair_orders[-1] if self.pair_orders else None

    @property
    def fitted_order(self) -> float | None:
        """Least-squares slope of log(error) against log(1/N) over all levels."""
        if self.degenerate:
            return None
        slope = np.polyfit(np.log(self.sizes), np.log(self.errors), 1)[0]
        return float(-slope)

    def meets(self, design_order: float, slack: float = 0.5) -> bool:
        return (not self.failed) and self.observed_order is not None and self.observed_order >= design_order - slack


def _sin_cell_averages(x_lo: np.ndarray, h: float, shift: float) -> np.ndarray:
    # exact averages of sin(2 pi (x - shift)) over [x_lo, x_lo + h]
    k = 2.0 * np.pi
    return (np.cos(k * (x_lo - shift)) - np.cos(k * (x_lo + h - shift))) / (k * h)


def _advect_periodic(n: int, scheme: WenoScheme, profile: str, t_end: float, courant: float,
                     n_coarse: int) -> float:
    """L1 error of 1D periodic advection at unit speed on [0, 1], SSP-RK3 in time.

    The time step shrinks like h**(order/3) relative to the coarsest grid so
    that the third-order time error stays below the spatial error.
    """
    ny = 4  # uniform in y; the smallest grid the solver accepts
    grid = build_grid(n, ny, (1.0, ny / n), max(3, scheme.r))
    per = BCSet.uniform(BoundaryCondition("periodic"))
    h = grid.dx
    x_lo = np.arange(n) * h
    if profile == "sin":
        init = _sin_cell_averages(x_lo, h, 0.0)
        exact = _sin_cell_averages(x_lo, h, t_end)
    elif profile == "constant":
        init = np.full(n, 0.7)
        exact = init.copy()
    else:
        raise ValueError(f"unknown profile {profile!r}")
    u = FaceField(grid, np.ones((n + 1, ny)), np.zeros((n, ny + 1)))
    phi = ScalarField.zeros(grid, per)
    phi.interior = init[:, None]
    phi.apply_bc()

    dt = courant * h * (n_coarse / n) ** (max(scheme.order, 3) / 3.0 - 1.0)
    steps = int(math.ceil(t_end / dt - 1e-12))
    dt = t_end / steps

    def rate(f: ScalarField) -> np.ndarray:
        return -convective_flux(f, u, scheme).interior

    def stage(base: np.ndarray, *terms) -> ScalarField:
        f = ScalarField.zeros(grid, per)
        f.interior = base + sum(terms)
        return f.apply_bc()

    for _ in range(steps):
        q0 = phi.interior
        s1 = stage(q0, dt * rate(phi))
        s2 = stage(0.75 * q0, 0.25 * s1.interior, 0.25 * dt * rate(s1))
        phi = stage(q0 / 3.0, 2.0 / 3.0 * s2.interior, 2.0 / 3.0 * dt * rate(s2))
    return float(np.mean(np.abs(phi.interior[:, 0] - exact)))


def mms_advection_order(scheme: WenoScheme | int, sizes=(32, 64, 128), profile: str = "sin",
                        t_end: float = 0.5, courant: float = 0.4) -> ConvergenceStudy:
    """Observed order of the convective flux for smooth periodic transport."""
    if isinstance(scheme, int):
        scheme = build_scheme(scheme)
    sizes = list(sizes)
    errors = [_advect_periodic(n, scheme, profile, t_end, courant, sizes[0]) for n in sizes]
    if profile == "constant":
        # round-off level counts as exact reproduction
        errors = [0.0 if e < 1e-13 else e for e in errors]
    return ConvergenceStudy(sizes, errors, label=f"order-{scheme.order} {profile}")


@dataclass
class LaplaceResult:
    pressure_jump_error: float  # relative to sigma/a, or absolute Pa when sigma = 0
    max_spurious_velocity: float
    pressure_jump: float
    expected: float
    steps: int

    def __iter__(self):
        yield self.pressure_jump_error
        yield self.max_spurious_velocity


def capillary_time(rho_mean: float, radius: float, sigma: float) -> float:
    """Oscillation time scale sqrt(rho a^3 / sigma) of a capillary droplet."""
    return math.sqrt(rho_mean * radius ** 3 / sigma)


def laplace_droplet_test(resolution: int, sigma: float = 0.1, radius: float = 1.44e-3,
                         capillary_times: float = 2.0, steps: int | None = None, **overrides) -> LaplaceResult:
    """Static droplet with uniform surface tension; pressure jump against sigma / a (2D).

    The run ends after ``capillary_times`` capillary time scales, or after
    ``steps`` steps when given. Matching the physical time matters when
    comparing resolutions: the capillary time-step limit scales like
    h**1.5, so a fixed step count covers less physical time on the finer
    grid and catches it earlier in the decay of the start-up transient.
    The jump is the mean pressure of cells within a/2 of the center minus
    the mean over cells farther than 1.5 a from it.
    """
    cfg = CaseConfig(nx=resolution, ny=resolution, radius=radius, sigma0=sigma, sigma_T=0.0, grad_T=0.0)
    grid, state, models = build_droplet_case(cfg, **overrides)
    if steps is None:
        rho_mean = 0.5 * (models.mixture.phase1.rho + models.mixture.phase2.rho)
        end = capillary_times * capillary_time(rho_mean, radius, sigma) if sigma > 0 else 1e-3
        while state.time < end * (1.0 - 1e-14):
            state = advance_adaptive(state, models, end)
    else:
        for _ in range(steps):
            state = advance_adaptive(state, models, math.inf)
    X, Y = grid.mesh()
    c = 0.5 * cfg.length
    r = np.hypot(X - c, Y - c)
    p = state.p.interior
    jump = float(np.mean(p[r < 0.5 * radius]) - np.mean(p[r > 1.5 * radius]))
    expected = sigma / radius
    err = abs(jump - expected) / expected if expected > 0 else abs(jump)
    ui = state.u.interior
    return LaplaceResult(err, float(np.max(np.hypot(ui[0], ui[1]))), jump, expected, state.step)


# ---------------------------------------------------------------- benchmark


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


@dataclass
class BenchmarkRun:
    config: CaseConfig
    diagnostics: Diagnostics
    final: SimState
    wall_seconds: float
    alpha_min_pre_clip: float
    alpha_max_pre_clip: float

    def mass_drift(self) -> float:
        m = self.diagnostics.series("mass")
        return float(abs(m[-1] - m[0]) / m[0])


def run_benchmark(cfg: CaseConfig | None = None, sample_every: int = 50, **overrides) -> BenchmarkRun:
    """March the droplet case to its end time, sampling diagnostics every ``sample_every`` steps."""
    cfg = (cfg or CaseConfig()).with_overrides(**overrides).validate()
    t0 = time.perf_counter()
    _, state, models = build_droplet_case(cfg)
    diags = Diagnostics()
    diags.append(extract_diagnostics(state, models))
    lo, hi = 0.0, 1.0
    while state.time < cfg.end_time * (1.0 - 1e-14):
        state = advance_adaptive(state, models, cfg.end_time)
        lo = min(lo, state.info.alpha_min_pre_clip)
        hi = max(hi, state.info.alpha_max_pre_clip)
        if state.step % sample_every == 0:
            diags.append(extract_diagnostics(state, models))
    if diags.samples[-1].step != state.step:
        diags.append(extract_diagnostics(state, models))
    return BenchmarkRun(cfg, diags, state, time.perf_counter() - t0, lo, hi)


def rises_monotonically(t: np.ndarray, y: np.ndarray, transient: float, tol: float) -> bool:
    """Non-decreasing after ``transient`` (up to ``tol``) with a net rise."""
    keep = t >= transient
    ys = y[keep]
    if ys.size < 2:
        return False
    return bool(np.all(np.diff(ys) >= -tol) and ys[-1] > ys[0])


def structural_checks(run: BenchmarkRun, time_budget: float = 900.0, max_width: float = 4.0,
                      direction: int = 1) -> list[Check]:
    """Direction, vortex parity, conservation, boundedness, sharpness and runtime of one run."""
    cfg = run.config
    d = run.diagnostics
    t = d.series("time")
    cy = d.series("centroid_y")
    a = cfg.radius
    last = d.samples[-1]
    checks = []
    ys = direction * cy
    mono = rises_monotonically(t, ys, 0.1 * cfg.end_time, 1e-6 * a)
    word = "upward" if direction > 0 else "downward"
    checks.append(Check(f"{word} migration", mono,
                        f"centroid_y {cy[0] / a:.4f}a -> {cy[-1] / a:.4f}a, monotone after 10% of the run: {mono}"))
    wl, wr = last.vorticity_left, last.vorticity_right
    checks.append(Check("counter-rotating vortices", wl * wr < 0,
                        f"half-domain circulation left {wl:.3e}, right {wr:.3e} m^2/s"))
    drift = run.mass_drift()
    checks.append(Check("mass drift", drift <= 1e-10, f"relative drift {drift:.2e} (limit 1e-10)"))
    bounded = run.alpha_min_pre_clip >= -1e-12 and run.alpha_max_pre_clip <= 1 + 1e-12
    checks.append(Check("alpha bounded pre-clip", bounded,
                        f"min {run.alpha_min_pre_clip:.3e}, max-1 {run.alpha_max_pre_clip - 1:.3e}"))
    w = last.transition_width
    checks.append(Check("interface sharpness", w is not None and w <= max_width,
                        f"diagonal 0.05-0.95 width {w} cells (limit {max_width})"))
    checks.append(Check("runtime", run.wall_seconds <= time_budget,
                        f"{run.wall_seconds:.1f} s (budget {time_budget:.0f} s)"))
    return checks


@dataclass
class Report:
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        return "\n".join(f"{'PASS' if c.passed else 'FAIL'}  {c.name}: {c.detail}" for c in self.checks) + "\n"

    def write(self, output_dir: str | Path, runs: dict[str, BenchmarkRun] | None = None) -> Path:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(self.text(), encoding="utf-8")
        for label, run in (runs or {}).items():
            with open(out / f"{label}_diagnostics.csv", "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["t", "centroid_y", "max_u", "mass", "transition_width"])
                for s in run.diagnostics.samples:
                    w.writerow([repr(s.time), repr(s.centroid_y), repr(s.max_velocity), repr(s.mass),
                                "" if s.transition_width is None else repr(s.transition_width)])
        return out / "report.txt"


def benchmark_regression(cfg: CaseConfig | None = None, output_dir: str | Path | None = None,
                         time_budget: float = 900.0, ablations: bool = False, ablation_resolution: int = 50,
                         **overrides) -> Report:
    """Nominal run with structural assertions, optionally followed by the sigma_T ablations."""
    cfg = (cfg or CaseConfig()).with_overrides(**overrides).validate()
    runs = {"nominal": run_benchmark(cfg)}
    report = Report(structural_checks(runs["nominal"], time_budget))
    if ablations:
        report.checks += ablation_checks(cfg, ablation_resolution, runs)
    if output_dir is not None:
        report.write(output_dir, runs)
    return report


def ablation_checks(cfg: CaseConfig, resolution: int = 50, runs: dict | None = None) -> list[Check]:
    """sigma_T = 0 must not migrate; reversing sigma_T must reverse the migration."""
    runs = {} if runs is None else runs
    base = cfg.with_overrides(nx=resolution, ny=resolution)
    a = cfg.radius
    zero = runs["zero"] = run_benchmark(base, sigma_T=0.0)
    plus = runs["base"] = run_benchmark(base)
    minus = runs["flipped"] = run_benchmark(base, sigma_T=-cfg.sigma_T)
    y0 = 0.5 * base.length
    dz = zero.diagnostics.samples[-1].centroid_y - y0
    dp = plus.diagnostics.samples[-1].centroid_y - y0
    dm = minus.diagnostics.samples[-1].centroid_y - y0
    return [Check("no migration without Marangoni", abs(dz) <= 0.02 * a,
                  f"|dy| = {abs(dz) / a:.2e} a (limit 0.02 a)"),
            Check("sigma_T flip reverses migration", dp * dm < 0 and abs(dp) > 0.02 * a and abs(dm) > 0.02 * a,
                  f"dy = {dp / a:+.4f} a for sigma_T={base.sigma_T}, {dm / a:+.4f} a for sigma_T={-base.sigma_T}")]
