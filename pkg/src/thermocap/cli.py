"""Command-line runner for the droplet case: config parsing, time loop, VTK/CSV output."""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import io
import logging
import os
import sys
import tempfile
import time
import types
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .capillary import SurfaceTensionModel, interface_delta, sigma_field
from .case import (CaseConfig, CaseConfigError, Diagnostics, DiagnosticsSample, build_droplet_case,
                   diagonal_profile, extract_diagnostics)
from .fields import NonFiniteFieldError, PhysicsConfigurationError
from .flow import PressureSolverError, TimeStepUnderflow
from .grid import ConfigurationError
from .simulation import SimState, advance_adaptive
from .thermo import DiffusionLimitExceeded
from .vof import CFLViolation

log = logging.getLogger("thermocap")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_SOLVER = 4

# section -> {key in file: CaseConfig field}
CONFIG_LAYOUT: dict[str, dict[str, str]] = {
    "grid": {"nx": "nx", "ny": "ny", "radius": "radius", "domain_radii": "domain_radii",
             "subsamples": "subsamples"},
    "phase1": {"rho": "rho1", "mu": "mu1", "cp": "cp1", "lambda": "lambda1"},
    "phase2": {"rho": "rho2", "mu": "mu2", "cp": "cp2", "lambda": "lambda2"},
    "surface_tension": {"sigma0": "sigma0", "sigma_T": "sigma_T", "T_ref": "T_ref"},
    "thermal": {"T_bottom": "T_bottom", "grad_T": "grad_T"},
    "time": {"end_time": "end_time", "cfl": "cfl", "dt_floor": "dt_floor"},
    "numerics": {"weno_order": "weno_order", "c_alpha": "c_alpha",
                 "curvature_smoothing": "curvature_smoothing"},
    "solver": {"method": "solver_method", "tol": "solver_tol", "max_iter": "solver_max_iter",
               "preconditioner": "preconditioner"},
    "output": {"write_every": "write_every", "diagnostics_every": "diagnostics_every"},
}

_FIELD_TYPES = typing.get_type_hints(CaseConfig)


def _coerce(name: str, raw: str):
    kind = _FIELD_TYPES[name]
    optional = False
    if isinstance(kind, types.UnionType) or typing.get_origin(kind) is typing.Union:
        args = [a for a in typing.get_args(kind) if a is not type(None)]
        optional = True
        kind = args[0]
    text = raw.strip()
    if optional and text.lower() in ("", "none", "auto"):
        return None
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return text


def parse_config_text(text: str, source: str = "<string>") -> CaseConfig:
    """Parse the sectioned key = value format; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # keys are case-sensitive (sigma_T, T_ref)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise CaseConfigError(f"{source}: {exc}") from exc
    values = {}
    errors = []
    for section in parser.sections():
        layout = CONFIG_LAYOUT.get(section)
        if layout is None:
            errors.append(f"[{section}]: unknown section")
            continue
        for key, raw in parser.items(section):
            name = layout.get(key)
            if name is None:
                errors.append(f"[{section}] {key}: unknown key")
                continue
            try:
                values[name] = _coerce(name, raw)
            except ValueError:
                errors.append(f"[{section}] {key}: cannot parse {raw!r} as {_FIELD_TYPES[name]}")
    if errors:
        raise CaseConfigError(f"{source}: " + "; ".join(errors))
    return CaseConfig().with_overrides(**values)


def load_config(path: str | os.PathLike) -> CaseConfig:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise CaseConfigError(f"cannot read config {p}: {exc}") from exc
    return parse_config_text(text, str(p))


def format_config(cfg: CaseConfig) -> str:
    """Inverse of ``parse_config_text``."""
    lines = []
    for section, layout in CONFIG_LAYOUT.items():
        lines.append(f"[{section}]")
        for key, name in layout.items():
            v = getattr(cfg, name)
            lines.append(f"{key} = {'auto' if v is None else _fmt(v) if isinstance(v, float) else v}")
        lines.append("")
    return "\n".join(lines)


def _fmt(x: float) -> str:
    return repr(float(x))


def _atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- VTK


def node_velocity(state: SimState) -> np.ndarray:
    """Cell velocities averaged to grid nodes, shape (2, nx+1, ny+1).

    Each node averages its four surrounding cells, ghosts included, so the
    no-slip ghost mirroring yields zero velocity on the walls.
    """
    g = state.grid
    gh = g.n_ghost
    d = state.u.data[:, gh - 1:gh + g.nx + 1, gh - 1:gh + g.ny + 1]
    return 0.25 * (d[:, :-1, :-1] + d[:, 1:, :-1] + d[:, :-1, 1:] + d[:, 1:, 1:])


def _vtk_scalar(name: str, a: np.ndarray) -> list[str]:
    out = [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    out.extend(f"{v:.17g}" for v in a.T.ravel())
    return out


def write_vtk(state: SimState, path: str | os.PathLike, surface: SurfaceTensionModel) -> Path:
    """Legacy ASCII STRUCTURED_POINTS file: cell scalars plus node velocity vectors."""
    if not str(path):
        raise ValueError("write_vtk needs a non-empty path")
    path = Path(path)
    g = state.grid
    sigma = sigma_field(state.T, surface)
    delta = interface_delta(state.alpha)
    lines = ["# vtk DataFile Version 3.0",
             f"thermocap t={state.time:.17g} step={state.step}",
             "ASCII",
             "DATASET STRUCTURED_POINTS",
             f"DIMENSIONS {g.nx + 1} {g.ny + 1} 1",
             f"ORIGIN {g.origin[0]:.17g} {g.origin[1]:.17g} 0",
             f"SPACING {g.dx:.17g} {g.dy:.17g} 1",
             f"CELL_DATA {g.nx * g.ny}"]
    for name, f in (("alpha", state.alpha), ("T", state.T), ("p", state.p), ("sigma", sigma),
                    ("delta_s", delta)):
        lines += _vtk_scalar(name, f.interior)
    uv = node_velocity(state)
    lines.append(f"POINT_DATA {(g.nx + 1) * (g.ny + 1)}")
    lines.append("VECTORS velocity double")
    lines.extend(f"{u:.17g} {v:.17g} 0" for u, v in zip(uv[0].T.ravel(), uv[1].T.ravel()))
    try:
        _atomic_write(path, "\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write VTK file {path}: {exc}") from exc
    return path


def read_vtk(path: str | os.PathLike) -> dict[str, np.ndarray]:
    """Minimal reader for files produced by ``write_vtk``; arrays are indexed [i, j]."""
    tokens = Path(path).read_text(encoding="utf-8").split("\n")
    dims = None
    out: dict[str, np.ndarray] = {}
    k = 0
    while k < len(tokens):
        line = tokens[k].strip()
        if line.startswith("DIMENSIONS"):
            dims = tuple(int(v) for v in line.split()[1:3])
        elif line.startswith("SCALARS"):
            name = line.split()[1]
            n = (dims[0] - 1) * (dims[1] - 1)
            vals = np.array([float(v) for v in tokens[k + 2:k + 2 + n]])
            out[name] = vals.reshape(dims[1] - 1, dims[0] - 1).T
            k += 1 + n
        elif line.startswith("VECTORS"):
            name = line.split()[1]
            n = dims[0] * dims[1]
            vals = np.array([[float(v) for v in t.split()] for t in tokens[k + 1:k + 1 + n]])
            out[name] = np.stack([vals[:, c].reshape(dims[1], dims[0]).T for c in range(3)])
            k += n
        k += 1
    return out


# ---------------------------------------------------------------- CSV

DIAGNOSTICS_COLUMNS = ("t", "mass", "max_u", "centroid_y", "kinetic_energy", "transition_width",
                       "step", "centroid_x", "vorticity_left", "vorticity_right")


def _cell(v) -> str:
    # repr is locale independent and round-trips doubles
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_diagnostics_csv(series: Diagnostics | list[DiagnosticsSample], path: str | os.PathLike) -> Path:
    samples = series.samples if isinstance(series, Diagnostics) else list(series)
    if not samples:
        raise ValueError("no diagnostics samples to write")
    path = Path(path)
    rows = [DIAGNOSTICS_COLUMNS]
    for s in samples:
        rows.append(tuple(_cell(v) for v in (s.time, s.mass, s.max_velocity, s.centroid_y, s.kinetic_energy,
                                             s.transition_width, s.step, s.centroid_x, s.vorticity_left,
                                             s.vorticity_right)))
    _atomic_write(path, _csv_text(rows))
    return path


def write_profile_csv(profiles: list[tuple[float, np.ndarray, np.ndarray]], path: str | os.PathLike) -> Path:
    """Diagonal alpha profiles sharing one arclength axis: columns s, alpha@t0, alpha@t1, ..."""
    if not profiles:
        raise ValueError("no profiles to write")
    s = profiles[0][1]
    header = ("s",) + tuple(f"alpha_t={t!r}" for t, _, _ in profiles)
    rows = [header]
    for k in range(s.size):
        rows.append((_cell(s[k]),) + tuple(_cell(v[k]) for _, _, v in profiles))
    _atomic_write(Path(path), _csv_text(rows))
    return Path(path)


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------- run


@dataclass
class RunManifest:
    config: CaseConfig | None = None
    version: str = __version__
    stage_seconds: dict[str, float] = field(default_factory=dict)
    steps: int = 0
    time: float = 0.0
    last_good_step: int = 0
    termination: str = "not started"
    exit_code: int = EXIT_OK
    mass_drift: float | None = None
    rejected_steps: int = 0

    def add_time(self, stage: str, seconds: float) -> None:
        self.stage_seconds[stage] = self.stage_seconds.get(stage, 0.0) + seconds

    def to_text(self) -> str:
        lines = [f"solver_version = {self.version}",
                 f"termination = {self.termination}",
                 f"exit_code = {self.exit_code}",
                 f"steps = {self.steps}",
                 f"last_good_step = {self.last_good_step}",
                 f"time = {self.time!r}",
                 f"average_dt = {(self.time / self.steps) if self.steps else 0.0!r}",
                 f"rejected_steps = {self.rejected_steps}",
                 f"mass_drift = {'' if self.mass_drift is None else repr(self.mass_drift)}"]
        for stage, sec in self.stage_seconds.items():
            lines.append(f"wall_seconds.{stage} = {sec:.3f}")
        if self.config is not None:
            for f in dataclasses.fields(self.config):
                lines.append(f"config.{f.name} = {getattr(self.config, f.name)!r}")
        return "\n".join(lines) + "\n"

    def write(self, path: Path) -> None:
        _atomic_write(path, self.to_text())


def run_case(cfg: CaseConfig, output_dir: str | os.PathLike) -> RunManifest:
    """Build the case and march to ``cfg.end_time``; exceptions propagate, the manifest is always written."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=cfg, termination="running")
    try:
        _march(cfg, out, manifest)
    finally:
        manifest.write(out / "manifest.txt")
    return manifest


def _march(cfg: CaseConfig, out: Path, manifest: RunManifest) -> None:
    t0 = time.perf_counter()
    grid, state, models = build_droplet_case(cfg)
    manifest.add_time("build", time.perf_counter() - t0)

    diags = Diagnostics()
    profiles = []
    mass0 = state.alpha.integral()

    def sample(st: SimState) -> DiagnosticsSample:
        t = time.perf_counter()
        d = extract_diagnostics(st, models)
        if not diags.samples or diags.samples[-1].step != d.step:
            diags.append(d)
        manifest.add_time("diagnostics", time.perf_counter() - t)
        return d

    def dump(st: SimState) -> None:
        t = time.perf_counter()
        write_vtk(st, out / f"state_{st.step:07d}.vtk", models.surface)
        manifest.add_time("output", time.perf_counter() - t)

    sample(state)
    profiles.append((state.time, *diagonal_profile(state.alpha)))
    dump(state)
    last_dump = state.step
    try:
        loop_start = time.perf_counter()
        aside = manifest.stage_seconds.get("diagnostics", 0.0) + manifest.stage_seconds.get("output", 0.0)
        while state.time < cfg.end_time * (1.0 - 1e-14):
            state = advance_adaptive(state, models, cfg.end_time)
            manifest.steps = state.step
            manifest.last_good_step = state.step
            manifest.time = state.time
            manifest.rejected_steps += state.info.rejected
            if state.step % cfg.diagnostics_every == 0:
                d = sample(state)
                log.info("step %d t=%.5e dt=%.3e max|u|=%.3e centroid_y=%.6e", d.step, d.time, state.info.dt,
                         d.max_velocity, d.centroid_y)
            if cfg.write_every and state.step % cfg.write_every == 0:
                dump(state)
                last_dump = state.step
        aside = manifest.stage_seconds.get("diagnostics", 0.0) + manifest.stage_seconds.get("output", 0.0) - aside
        manifest.add_time("time_loop", time.perf_counter() - loop_start - aside)
        manifest.termination = "end_time reached"
    finally:
        # whatever happened, keep the last good state on disk
        manifest.mass_drift = (state.alpha.integral() - mass0) / mass0 if mass0 else 0.0
        sample(state)
        if state.step != last_dump:
            dump(state)
        profiles.append((state.time, *diagonal_profile(state.alpha)))
        write_diagnostics_csv(diags, out / "diagnostics.csv")
        write_profile_csv(profiles if state.step else profiles[:1], out / "diagonal_profile.csv")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermocap",
                                description="Run the thermocapillary droplet migration case.")
    p.add_argument("--case", type=Path, help="sectioned key = value case file (defaults are the benchmark)")
    p.add_argument("--output-dir", type=Path, default=Path("output"), help="directory for VTK, CSV and manifest")
    p.add_argument("--end-time", type=float, help="override [time] end_time [s]")
    p.add_argument("--cfl", type=float, help="override [time] cfl")
    p.add_argument("--weno-order", type=int, help="override [numerics] weno_order (1, 3 or 5)")
    p.add_argument("--write-every", type=int, help="override [output] write_every (steps; 0 = first/last only)")
    p.add_argument("--quiet", action="store_true", help="only warnings and errors on stderr")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    overrides = {k: v for k, v in (("end_time", args.end_time), ("cfl", args.cfl),
                                   ("weno_order", args.weno_order), ("write_every", args.write_every))
                 if v is not None}
    try:
        cfg = load_config(args.case) if args.case else CaseConfig()
        cfg = cfg.with_overrides(**overrides).validate()
    except (CaseConfigError, ConfigurationError, PhysicsConfigurationError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG

    try:
        manifest = run_case(cfg, args.output_dir)
    except (CaseConfigError, ConfigurationError, PhysicsConfigurationError) as exc:
        return _fail(args.output_dir, EXIT_CONFIG, f"configuration error: {exc}")
    except PressureSolverError as exc:
        return _fail(args.output_dir, EXIT_SOLVER, f"solver failure: {exc}")
    except (NonFiniteFieldError, TimeStepUnderflow, CFLViolation, DiffusionLimitExceeded,
            FloatingPointError) as exc:
        return _fail(args.output_dir, EXIT_NUMERIC, f"numeric abort: {exc}")
    log.info("finished %d steps to t=%.6g s; relative mass drift %.3e", manifest.steps, manifest.time,
             manifest.mass_drift)
    return EXIT_OK


def _fail(output_dir: Path, code: int, reason: str) -> int:
    log.error(reason)
    path = Path(output_dir) / "manifest.txt"
    # run_case already wrote the manifest; amend the outcome fields
    try:
        text = path.read_text(encoding="utf-8")
        lines = [ln for ln in text.splitlines() if not ln.startswith(("termination =", "exit_code ="))]
        _atomic_write(path, f"termination = {reason}\nexit_code = {code}\n" + "\n".join(lines) + "\n")
    except OSError:
        pass
    return code


if __name__ == "__main__":
    sys.exit(main())
