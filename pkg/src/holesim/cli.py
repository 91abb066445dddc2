"""Config-driven experiment runner and deterministic result serialization.

One YAML (or JSON) config file fully determines a run; identical configs
produce byte-identical data files on one platform. Data files carry no
timestamps: wall-clock timing goes to a separate ``run_meta.json``. Time
series are CSV with a header row, structured reports are JSON with sorted
keys, and metric/residual grids use a self-describing ``grid-field`` text
format (header keys, then row-major values).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .background_recover import (
    coordinate_projectors,
    localization_index,
    localized_basis,
    recover_background,
    sample_form,
    translate_basis,
)
from .errors import (
    ConfigError,
    DegenerateForm,
    DomainError,
    GridMismatch,
    HolesimError,
    InsufficientDisplacement,
    InvalidMeasure,
    NonInvertibleDiffeo,
    NormViolation,
    NumericalBlowup,
    ResolutionError,
    SignatureError,
    SupportViolation,
    UnderdeterminedFit,
    ZeroNormError,
)
from .evolve import EvolutionConfig, Potential, evolve
from .grid import Grid, inner_product
from .harmonic import MetricField, harmonic_residual
from .hole_experiment import (
    HoleExperimentConfig,
    HoleReport,
    Region,
    run_baseline,
    run_hole,
    sweep,
)
from .diffeo import identity_map, make_bump_displacement, make_translation_ramp
from .observable import density_matrix

__all__ = [
    "RunConfig",
    "ResultBundle",
    "load_config",
    "execute",
    "write_bundle",
    "read_metric_field",
    "write_metric_field",
    "main",
]

EXPERIMENTS = ("baseline", "hole", "sweep", "recover-background", "check-harmonic")
THREADS_ENV = "HOLESIM_THREADS"

EXIT_CODES = {
    ConfigError: 2,
    GridMismatch: 3,
    ResolutionError: 4,
    ZeroNormError: 4,
    NumericalBlowup: 5,
    NormViolation: 5,
    DomainError: 6,
    NonInvertibleDiffeo: 7,
    SupportViolation: 8,
    InsufficientDisplacement: 8,
    DegenerateForm: 9,
    InvalidMeasure: 9,
    SignatureError: 10,
    UnderdeterminedFit: 11,
}

# Documented defaults: the committed weak-coupling scenario plus the
# standard sweep, recovery, and harmonic settings.
DEFAULTS = {
    "formats": ["csv", "json"],
    "grid": {"points": 1024, "extent": 40.0},
    "packet": {"center": -1.0, "width": 1.0, "momentum": 0.0},
    "potentials": {
        "left_position": -2.5,
        "right_position": 2.5,
        "coupling": 0.1,
        "softening": 1.0,
    },
    "evolution": {"dt": 0.02, "t_end": 4.0, "mass": 4.0, "snapshot_stride": 20},
    "diffeo": {
        "kind": "translation_ramp",
        "shift": 17.5,
        "t0": 0.8,
        "t1": 1.6,
        "center": 0.0,
        "radius": 5.0,
        "peak_shift": 1.0,
        "two_sided": False,
    },
    "support": {"lower": -9.0, "upper": 7.0},
    "sweep": {"parameter": "coupling", "values": [0.0, 0.05, 0.1, 0.2]},
    "recover": {
        "points": 256,
        "extent": 40.0,
        "n": 32,
        "translation_cells": 24,
        "oracle": "static",
    },
    "harmonic": {"metric_file": None},
}

_SECTIONS_BY_KIND = {
    "baseline": ("grid", "packet", "potentials", "evolution", "support"),
    "hole": ("grid", "packet", "potentials", "evolution", "diffeo", "support"),
    "sweep": ("grid", "packet", "potentials", "evolution", "diffeo", "support", "sweep"),
    "recover-background": ("recover",),
    "check-harmonic": ("harmonic",),
}


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Validated run description with all nested objects constructed."""

    experiment: str
    output_dir: Path
    formats: tuple[str, ...]
    echo: dict
    hole_config: HoleExperimentConfig | None = None
    two_sided: bool = False
    sweep_parameter: str | None = None
    sweep_values: tuple[float, ...] = ()
    recover: dict | None = None
    metric_path: Path | None = None


@dataclass(frozen=True, eq=False)
class ResultBundle:
    """Machine-readable results of one run.

    ``data`` is the JSON report; ``files`` maps extra file names to fully
    rendered text payloads (CSV tables, grid fields). Every numeric entry
    must be finite and the JSON report must round-trip losslessly.
    """

    experiment: str
    data: dict
    files: dict[str, str] = field(default_factory=dict)
    wall_time_s: float = 0.0

    def __post_init__(self):
        _check_finite(self.data, "data")
        if json.loads(json.dumps(self.data)) != self.data:
            raise DomainError("result data does not round-trip through JSON")


def _check_finite(node, path):
    if isinstance(node, bool) or node is None or isinstance(node, (str, int)):
        return
    if isinstance(node, float):
        if not math.isfinite(node):
            raise DomainError(f"non-finite value at {path}")
        return
    if isinstance(node, dict):
        for key, value in node.items():
            _check_finite(value, f"{path}.{key}")
        return
    if isinstance(node, (list, tuple)):
        for i, value in enumerate(node):
            _check_finite(value, f"{path}[{i}]")
        return
    raise DomainError(f"non-serializable value of type {type(node).__name__} at {path}")


def _as_float_list(value):
    if isinstance(value, (int, float)):
        return [float(value)]
    return [float(v) for v in value]


def _merge_section(name, user, errors):
    base = dict(DEFAULTS[name])
    if user is None:
        return base
    if not isinstance(user, dict):
        errors.append(f"{name}: expected a mapping, got {type(user).__name__}")
        return base
    for key, value in user.items():
        if key not in base:
            errors.append(f"{name}.{key}: unknown key")
        else:
            base[key] = value
    return base


def load_config(path) -> RunConfig:
    """Parse and fully validate a run config.

    All validation problems are aggregated into one ConfigError instead of
    stopping at the first; nested object constructors act as the
    validators for their sections.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"])
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"config parse error in {path}: {exc}"])
    if not isinstance(raw, dict):
        raise ConfigError([f"config root must be a mapping, got {type(raw).__name__}"])

    errors: list[str] = []
    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        errors.append(f"experiment: must be one of {EXPERIMENTS}, got {experiment!r}")
        raise ConfigError(errors)

    known_top = {"experiment", "output_dir", "formats", *DEFAULTS.keys()}
    for key in raw:
        if key not in known_top:
            errors.append(f"{key}: unknown top-level key")

    output_dir = Path(raw.get("output_dir", f"results/{experiment}"))
    formats = raw.get("formats", DEFAULTS["formats"])
    if not isinstance(formats, list) or not set(formats) <= {"csv", "json"}:
        errors.append(f"formats: must be a sublist of ['csv', 'json'], got {formats!r}")
        formats = DEFAULTS["formats"]

    sections = {
        name: _merge_section(name, raw.get(name), errors)
        for name in DEFAULTS
        if name != "formats"
    }
    echo = {
        "experiment": experiment,
        "output_dir": str(output_dir),
        "formats": sorted(formats),
    }
    needed = _SECTIONS_BY_KIND[experiment]
    for name in needed:
        echo[name] = sections[name]

    hole_config = None
    two_sided = False
    sweep_parameter = None
    sweep_values: tuple[float, ...] = ()
    recover = None
    metric_path = None

    if experiment in ("baseline", "hole", "sweep"):
        hole_config = _build_hole_config(sections, experiment, errors)
        two_sided = bool(sections["diffeo"].get("two_sided", False))
    if experiment == "sweep":
        parameter = sections["sweep"].get("parameter")
        if parameter not in ("coupling", "displacement", "mass"):
            errors.append(f"sweep.parameter: unknown parameter {parameter!r}")
        else:
            sweep_parameter = parameter
        try:
            sweep_values = tuple(_as_float_list(sections["sweep"].get("values", [])))
            if not sweep_values:
                errors.append("sweep.values: need at least one value")
        except (TypeError, ValueError) as exc:
            errors.append(f"sweep.values: {exc}")
    if experiment == "recover-background":
        recover = _validate_recover(sections["recover"], errors)
    if experiment == "check-harmonic":
        metric_file = sections["harmonic"].get("metric_file")
        if not metric_file:
            errors.append("harmonic.metric_file: required for check-harmonic runs")
        else:
            metric_path = Path(metric_file)
            if not metric_path.is_file():
                errors.append(f"harmonic.metric_file: no such file {metric_path}")

    if errors:
        raise ConfigError(errors)
    return RunConfig(
        experiment=experiment,
        output_dir=output_dir,
        formats=tuple(sorted(formats)),
        echo=echo,
        hole_config=hole_config,
        two_sided=two_sided,
        sweep_parameter=sweep_parameter,
        sweep_values=sweep_values,
        recover=recover,
        metric_path=metric_path,
    )


def _build_grid(section, errors, prefix="grid"):
    try:
        return Grid(tuple(int(p) for p in _as_float_list(section["points"])),
                    tuple(_as_float_list(section["extent"])))
    except (HolesimError, ValueError, TypeError) as exc:
        errors.append(f"{prefix}: {exc}")
        return None


def _build_hole_config(sections, experiment, errors) -> HoleExperimentConfig | None:
    grid = _build_grid(sections["grid"], errors)
    evolution = None
    try:
        ev = sections["evolution"]
        evolution = EvolutionConfig(
            dt=float(ev["dt"]),
            t_end=float(ev["t_end"]),
            mass=float(ev["mass"]),
            snapshot_stride=int(ev["snapshot_stride"]),
        )
        if evolution.dt <= 0:
            errors.append("evolution.dt: must be positive for runs")
            evolution = None
    except (HolesimError, ValueError, TypeError, KeyError) as exc:
        errors.append(f"evolution: {exc}")
    diffeo = identity_map(grid.dim if grid else 1)
    if experiment in ("hole", "sweep") and grid is not None:
        diffeo = _build_diffeo(sections["diffeo"], grid, errors)
    if grid is None or evolution is None or diffeo is None:
        return None
    try:
        pot = sections["potentials"]
        softening = pot.get("softening")
        return HoleExperimentConfig(
            grid=grid,
            packet_center=tuple(_as_float_list(sections["packet"]["center"])),
            packet_width=float(sections["packet"]["width"]),
            packet_momentum=tuple(_as_float_list(sections["packet"]["momentum"])),
            source_left=tuple(_as_float_list(pot["left_position"])),
            source_right=tuple(_as_float_list(pot["right_position"])),
            coupling=float(pot["coupling"]),
            softening=None if softening is None else float(softening),
            evolution=evolution,
            diffeo=diffeo,
            support=Region(
                tuple(_as_float_list(sections["support"]["lower"])),
                tuple(_as_float_list(sections["support"]["upper"])),
            ),
        )
    except (HolesimError, ValueError, TypeError, KeyError) as exc:
        errors.append(f"experiment config: {exc}")
        return None


def _build_diffeo(section, grid, errors):
    kind = section.get("kind")
    try:
        if kind == "identity":
            return identity_map(grid.dim)
        if kind == "translation_ramp":
            return make_translation_ramp(
                tuple(_as_float_list(section["shift"])),
                float(section["t0"]),
                float(section["t1"]),
                extent=grid.extent,
            )
        if kind == "bump_displacement":
            return make_bump_displacement(
                tuple(_as_float_list(section["center"])),
                float(section["radius"]),
                tuple(_as_float_list(section["peak_shift"])),
                float(section["t0"]),
                float(section["t1"]),
            )
        errors.append(f"diffeo.kind: unknown kind {kind!r}")
    except (HolesimError, ValueError, TypeError, KeyError) as exc:
        errors.append(f"diffeo: {exc}")
    return None


def _validate_recover(section, errors):
    out = dict(section)
    try:
        out["points"] = int(section["points"])
        out["extent"] = float(section["extent"])
        out["n"] = int(section["n"])
        out["translation_cells"] = int(section["translation_cells"])
        if out["oracle"] not in ("static", "evolved"):
            errors.append(f"recover.oracle: must be 'static' or 'evolved', got {section['oracle']!r}")
        if out["n"] < 2 or out["points"] % out["n"] != 0:
            errors.append(f"recover.n: {out['n']} must be >= 2 and divide points {out['points']}")
    except (ValueError, TypeError, KeyError) as exc:
        errors.append(f"recover: {exc}")
        return None
    return out


# --- result rendering -------------------------------------------------------


def _fmt(value) -> str:
    """Shortest representation that round-trips the float exactly."""
    return repr(float(value))


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v)
                             for v in row))
    return "\n".join(lines) + "\n"


def _theta_csv(times, thetas) -> str:
    rows = [
        (t, z.real, z.imag, abs(z), float(np.angle(z)))
        for t, z in zip(times, thetas)
    ]
    return render_csv(("t", "re_theta", "im_theta", "abs_theta", "arg_theta"), rows)


def _theta_block(times, thetas) -> dict:
    return {
        "times": [float(t) for t in times],
        "re": [float(z.real) for z in thetas],
        "im": [float(z.imag) for z in thetas],
        "abs": [float(abs(z)) for z in thetas],
        "arg": [float(np.angle(z)) for z in thetas],
    }


def _matrix_block(matrix) -> dict:
    m = np.asarray(matrix)
    return {
        "re": [[float(v) for v in row] for row in m.real],
        "im": [[float(v) for v in row] for row in m.imag],
    }


def _diagnostics_block(report: HoleReport) -> dict:
    diag = dict(report.diagnostics)
    out = {
        "max_mass_outside_support": float(diag["max_mass_outside_support"]),
        "softening": float(diag["softening"]),
    }
    if "max_pushforward_norm_drift" in diag:
        out["max_pushforward_norm_drift"] = float(diag["max_pushforward_norm_drift"])
    if diag.get("overlap_mass_after_ramp"):
        out["overlap_mass_after_ramp"] = {
            _fmt(t): float(m) for t, m in diag["overlap_mass_after_ramp"].items()
        }
    if diag.get("transformed_source_final") is not None:
        out["transformed_source_final"] = [float(v) for v in diag["transformed_source_final"]]
    return out


# --- experiment pipelines ---------------------------------------------------


def _execute_baseline(config: RunConfig) -> ResultBundle:
    report = run_baseline(config.hole_config)
    final = report.final_theta_baseline
    data = {
        "experiment": "baseline",
        "version": __version__,
        "config": config.echo,
        "theta_baseline": _theta_block(report.times, report.theta_baseline),
        "final": {
            "abs_theta": abs(final),
            "arg_theta": float(np.angle(final)),
            "density_matrix": _matrix_block(density_matrix(final).entries),
        },
        "diagnostics": _diagnostics_block(report),
    }
    files = {"theta_baseline.csv": _theta_csv(report.times, report.theta_baseline)}
    return ResultBundle("baseline", data, files)


def _execute_hole(config: RunConfig) -> ResultBundle:
    report = run_hole(config.hole_config, two_sided=config.two_sided)
    final_b = report.final_theta_baseline
    final_h = report.final_theta_hole
    data = {
        "experiment": "hole",
        "version": __version__,
        "config": config.echo,
        "two_sided": report.two_sided,
        "theta_baseline": _theta_block(report.times, report.theta_baseline),
        "theta_hole": _theta_block(report.times, report.theta_hole),
        "contrast": float(report.contrast),
        "final": {
            "abs_theta_baseline": abs(final_b),
            "arg_theta_baseline": float(np.angle(final_b)),
            "abs_theta_hole": abs(final_h),
            "arg_theta_hole": float(np.angle(final_h)),
            "density_matrix_baseline": _matrix_block(density_matrix(final_b).entries),
            "density_matrix_hole": _matrix_block(density_matrix(final_h).entries),
        },
        "diagnostics": _diagnostics_block(report),
    }
    files = {
        "theta_baseline.csv": _theta_csv(report.times, report.theta_baseline),
        "theta_hole.csv": _theta_csv(report.times, report.theta_hole),
    }
    return ResultBundle("hole", data, files)


def _execute_sweep(config: RunConfig) -> ResultBundle:
    threads = int(os.environ.get(THREADS_ENV, "1") or "1")
    values = config.sweep_values
    if threads > 1:
        def job(value):
            return sweep(config.hole_config, config.sweep_parameter, [value])[0]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            entries = list(pool.map(job, values))
    else:
        entries = sweep(config.hole_config, config.sweep_parameter, values)
    rows = []
    per_value = []
    for entry in entries:
        if entry.report is None:
            rows.append((entry.value, "", "", "", "", f"error:{entry.error}"))
            per_value.append({"value": entry.value, "error": entry.error})
            continue
        fb, fh = entry.report.final_theta_baseline, entry.report.final_theta_hole
        rows.append((entry.value, abs(fb), float(np.angle(fb)), abs(fh),
                     entry.report.contrast, "ok"))
        per_value.append({
            "value": entry.value,
            "abs_theta_baseline": abs(fb),
            "arg_theta_baseline": float(np.angle(fb)),
            "abs_theta_hole": abs(fh),
            "arg_theta_hole": float(np.angle(fh)),
            "contrast": entry.report.contrast,
        })
    data = {
        "experiment": "sweep",
        "version": __version__,
        "config": config.echo,
        "parameter": config.sweep_parameter,
        "entries": per_value,
    }
    files = {
        "sweep.csv": render_csv(
            ("value", "abs_theta_baseline", "arg_theta_baseline", "abs_theta_hole",
             "contrast", "status"),
            rows,
        )
    }
    return ResultBundle("sweep", data, files)


def _execute_recover(config: RunConfig) -> ResultBundle:
    settings = config.recover
    grid = Grid(settings["points"], settings["extent"])
    basis_g = localized_basis(grid, settings["n"])
    basis_eta = translate_basis(basis_g, settings["translation_cells"])
    if settings["oracle"] == "static":
        oracle = inner_product
    else:
        pot = DEFAULTS["potentials"]
        ev = DEFAULTS["evolution"]
        branch = Potential.point_mass(grid, (pot["left_position"],), pot["coupling"],
                                      pot["softening"])
        free = Potential.tabulated(grid, np.zeros(grid.shape))
        evo = EvolutionConfig(dt=ev["dt"], t_end=0.2, mass=ev["mass"],
                              snapshot_stride=10**9)
        evolved_g = [evolve(e, branch, evo).final_state for e in basis_g]
        evolved_eta = [evolve(f, free, evo).final_state for f in basis_eta]
        lookup = {id(e): ge for e, ge in zip(basis_g, evolved_g)}
        lookup.update({id(f): fe for f, fe in zip(basis_eta, evolved_eta)})

        def oracle(e, f):
            return inner_product(lookup[id(e)], lookup[id(f)])

    sample = sample_form(basis_g, basis_eta, oracle)
    background = recover_background(sample, coordinate_projectors(settings["n"]))
    indices = [localization_index(p) for p in background.recovered_projectors]
    stride = settings["points"] // settings["n"]
    data = {
        "experiment": "recover-background",
        "version": __version__,
        "config": config.echo,
        "form_matrix": _matrix_block(sample.matrix),
        "condition_number": float(sample.condition_number),
        "unitary": _matrix_block(background.unitary),
        "localization_indices": indices,
        "localization_cells": [int(i * stride) for i in indices],
        "planted_translation_cells": settings["translation_cells"],
    }
    return ResultBundle("recover-background", data)


def _execute_harmonic(config: RunConfig) -> ResultBundle:
    metric = read_metric_field(config.metric_path)
    residual = harmonic_residual(metric)
    per_index = [float(np.max(np.abs(residual[..., nu]))) for nu in range(metric.dim)]
    data = {
        "experiment": "check-harmonic",
        "version": __version__,
        "config": config.echo,
        "grid_shape": list(metric.grid_shape),
        "spacings": [float(h) for h in metric.spacings],
        "max_abs_residual": max(per_index),
        "max_abs_residual_per_index": per_index,
    }
    files = {
        "residual.gridfield": render_grid_field(
            "residual", tuple(metric.spacings), residual
        )
    }
    return ResultBundle("check-harmonic", data, files)


_PIPELINES = {
    "baseline": _execute_baseline,
    "hole": _execute_hole,
    "sweep": _execute_sweep,
    "recover-background": _execute_recover,
    "check-harmonic": _execute_harmonic,
}


def execute(config: RunConfig) -> ResultBundle:
    """Dispatch a validated config to its pipeline; deterministic output."""
    start = time.perf_counter()
    bundle = _PIPELINES[config.experiment](config)
    return dataclasses.replace(bundle, wall_time_s=time.perf_counter() - start)


def write_bundle(bundle: ResultBundle, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write result.json, any extra files, and run_meta.json (timing only).

    Data files are byte-deterministic; run_meta.json holds the wall clock
    and is the one file excluded from that guarantee.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out_dir / "result.json"
        path.write_text(json.dumps(bundle.data, sort_keys=True, indent=2) + "\n")
        written.append(path)
    for name, payload in sorted(bundle.files.items()):
        if name.endswith(".csv") and "csv" not in formats:
            continue
        path = out_dir / name
        path.write_text(payload)
        written.append(path)
    meta = out_dir / "run_meta.json"
    meta.write_text(json.dumps(
        {"experiment": bundle.experiment, "version": __version__,
         "wall_time_s": bundle.wall_time_s},
        sort_keys=True, indent=2) + "\n")
    written.append(meta)
    return written


# --- grid-field text format ---------------------------------------------


def render_grid_field(kind: str, spacings: tuple[float, ...], values: np.ndarray) -> str:
    """Self-describing text format: header keys, then row-major rows of the
    trailing components per grid point."""
    values = np.asarray(values)
    grid_shape = values.shape[: len(spacings)]
    comp_shape = values.shape[len(spacings):]
    lines = [
        "# holesim grid-field v1",
        f"kind: {kind}",
        f"axes: {len(spacings)}",
        "shape: " + " ".join(str(n) for n in grid_shape),
        "spacing: " + " ".join(_fmt(h) for h in spacings),
        "components: " + " ".join(str(n) for n in comp_shape),
        "data:",
    ]
    flat = values.reshape(int(np.prod(grid_shape)), -1)
    for row in flat:
        lines.append(" ".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _parse_grid_field(text: str, path) -> tuple[str, tuple[float, ...], np.ndarray]:
    header: dict[str, str] = {}
    lines = text.splitlines()
    data_start = None
    for i, line in enumerate(lines):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped == "data:":
            data_start = i + 1
            break
        if ":" not in stripped:
            raise ConfigError([f"{path}: malformed header line {i + 1}: {line!r}"])
        key, _, value = stripped.partition(":")
        header[key.strip()] = value.strip()
    required = {"kind", "axes", "shape", "spacing", "components"}
    missing = required - header.keys()
    if data_start is None or missing:
        raise ConfigError([f"{path}: missing header entries {sorted(missing)} or data section"])
    try:
        axes = int(header["axes"])
        shape = tuple(int(v) for v in header["shape"].split())
        spacings = tuple(float(v) for v in header["spacing"].split())
        comps = tuple(int(v) for v in header["components"].split())
        values = np.loadtxt(lines[data_start:], ndmin=2)
    except (ValueError, TypeError) as exc:
        raise ConfigError([f"{path}: cannot parse grid field: {exc}"])
    if len(shape) != axes or len(spacings) != axes:
        raise ConfigError([f"{path}: shape/spacing do not match axes={axes}"])
    expected = (int(np.prod(shape)), int(np.prod(comps)))
    if values.shape != expected:
        raise ConfigError([f"{path}: data shape {values.shape}, expected {expected}"])
    return header["kind"], spacings, values.reshape(*shape, *comps)


def write_metric_field(path, metric: MetricField) -> None:
    """Store a metric as a grid field of upper-triangle components."""
    d = metric.dim
    iu = np.triu_indices(d)
    tri = metric.components[..., iu[0], iu[1]]
    Path(path).write_text(render_grid_field("metric", tuple(metric.spacings), tri))


def read_metric_field(path) -> MetricField:
    """Load a metric grid field; symmetry is exact by construction since
    the format stores the upper triangle only."""
    kind, spacings, tri = _parse_grid_field(Path(path).read_text(), path)
    if kind != "metric":
        raise ConfigError([f"{path}: expected kind 'metric', got {kind!r}"])
    d = len(spacings)
    expected = d * (d + 1) // 2
    if tri.shape[-1] != expected:
        raise ConfigError(
            [f"{path}: {tri.shape[-1]} components per point, expected {expected}"]
        )
    full = np.zeros((*tri.shape[:-1], d, d))
    iu = np.triu_indices(d)
    full[..., iu[0], iu[1]] = tri
    full[..., iu[1], iu[0]] = tri
    return MetricField(spacings, full)


# --- command-line entry points -------------------------------------------


def _add_config_arg(parser):
    parser.add_argument("--config", required=True, help="path to the run config file")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holesim",
        description="Config-driven decoherence and background-recovery experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_config_arg(sub.add_parser("run", help="execute any experiment config"))
    _add_config_arg(sub.add_parser("validate", help="validate a config and exit"))
    _add_config_arg(sub.add_parser("sweep", help="execute a sweep config"))
    _add_config_arg(sub.add_parser("recover-background",
                                   help="execute a background recovery config"))
    _add_config_arg(sub.add_parser("check-harmonic",
                                   help="execute a harmonic residual config"))
    sub.add_parser("version", help="print the package version")
    return parser


_COMMAND_KINDS = {
    "sweep": "sweep",
    "recover-background": "recover-background",
    "check-harmonic": "check-harmonic",
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return 0
    try:
        config = load_config(args.config)
        expected = _COMMAND_KINDS.get(args.command)
        if expected and config.experiment != expected:
            raise ConfigError(
                [f"experiment: command {args.command!r} needs kind {expected!r},"
                 f" config says {config.experiment!r}"]
            )
        if args.command == "validate":
            print(f"OK: {config.experiment} config with output_dir={config.output_dir}")
            return 0
        bundle = execute(config)
        written = write_bundle(bundle, config.output_dir, config.formats)
        for path in written:
            print(path)
        return 0
    except ConfigError as exc:
        for message in exc.messages:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_CODES[ConfigError]
    except HolesimError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(type(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
