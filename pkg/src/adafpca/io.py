"""File formats: curve records, configs, scenarios, fits, truths, reports.

Curves travel as newline-delimited JSON records preceded by one header
record; everything else is a single JSON document with a ``schema_version``
field.  Floats are serialized with the shortest round-tripping decimal
representation, so parse-then-serialize is bit-exact.  Unknown config keys
are errors, never warnings.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import numpy as np

from .data_model import Curve, DesignType, FunctionalSample, Grid
from .errors import ParseError
from .pipeline import FitConfig, FitResult
from .simulator import (
    DesignKind,
    DesignSpec,
    MfbmSpec,
    constant_fn,
    piecewise_linear_fn,
)

SCHEMA_VERSION = 1


def dumps(obj) -> str:
    """Deterministic JSON encoding (sorted keys, compact separators)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


_dumps = dumps


def _check_header(obj: dict, kind: str, where: str):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected a JSON object")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ParseError(f"{where}: unsupported schema_version {obj.get('schema_version')!r}")
    if obj.get("kind") != kind:
        raise ParseError(f"{where}: expected kind {kind!r}, got {obj.get('kind')!r}")


# ---------------------------------------------------------------- curves


def write_curves(sample: FunctionalSample, path) -> None:
    """Write a sample as one header line plus one JSON record per curve."""
    lines = [
        _dumps(
            {
                "schema_version": SCHEMA_VERSION,
                "kind": "curves",
                "design": sample.design.value,
                "domain_length": sample.domain_length,
            }
        )
    ]
    for c in sample:
        lines.append(_dumps({"id": c.id, "t": list(c.times), "y": list(c.values)}))
    Path(path).write_text("\n".join(lines) + "\n")


def read_curves(path) -> FunctionalSample:
    """Parse a curve file; malformed records name the offending line."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError(f"{path}: empty curve file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:1: invalid JSON ({err.msg})") from err
    _check_header(header, "curves", f"{path}:1")
    try:
        design = DesignType(header.get("design", "independent"))
    except ValueError as err:
        raise ParseError(f"{path}:1: unknown design {header.get('design')!r}") from err
    curves = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as err:
            raise ParseError(f"{path}:{lineno}: invalid JSON ({err.msg})") from err
        try:
            curves.append(Curve(id=int(rec["id"]), times=rec["t"], values=rec["y"]))
        except (KeyError, TypeError, ValueError) as err:
            raise ParseError(f"{path}:{lineno}: bad curve record ({err})") from err
    try:
        return FunctionalSample(
            curves=tuple(curves),
            design=design,
            domain_length=float(header.get("domain_length", 1.0)),
        )
    except ValueError as err:
        raise ParseError(f"{path}: inconsistent sample ({err})") from err


# ---------------------------------------------------------------- config


_CONFIG_KEYS = {f.name for f in dataclasses.fields(FitConfig)}


def write_config(config: FitConfig, path) -> None:
    payload = {"schema_version": SCHEMA_VERSION, "kind": "config"}
    payload.update(dataclasses.asdict(config))
    payload["baseline_h"] = list(config.baseline_h)
    Path(path).write_text(_dumps(payload) + "\n")


def read_config(path) -> FitConfig:
    """Parse a flat config; unknown keys are errors for reproducibility."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:{err.lineno}: invalid JSON ({err.msg})") from err
    _check_header(obj, "config", str(path))
    payload = {k: v for k, v in obj.items() if k not in ("schema_version", "kind")}
    unknown = sorted(set(payload) - _CONFIG_KEYS)
    if unknown:
        raise ParseError(f"{path}: unknown config keys {unknown}")
    if "baseline_h" in payload:
        payload["baseline_h"] = tuple(payload["baseline_h"])
    try:
        return FitConfig(**payload)
    except (TypeError, ValueError) as err:
        raise ParseError(f"{path}: invalid config ({err})") from err


# ---------------------------------------------------------------- scenario


def _parse_fn(value, name: str, where: str):
    if isinstance(value, (int, float)):
        return constant_fn(float(value))
    if isinstance(value, dict) and set(value) == {"t", "v"}:
        try:
            return piecewise_linear_fn(value["t"], value["v"])
        except ValueError as err:
            raise ParseError(f"{where}: bad table for {name} ({err})") from err
    raise ParseError(
        f"{where}: {name} must be a number or a {{'t': [...], 'v': [...]}} table"
    )


_SCENARIO_KEYS = {
    "schema_version",
    "kind",
    "preset",
    "H",
    "L",
    "m2",
    "mu",
    "sigma",
    "sigma0",
    "A0",
    "design",
}


def read_scenario(path) -> tuple[MfbmSpec, DesignSpec]:
    """Parse a scenario file into a process spec and a design spec.

    The ``fbm`` preset needs only ``H`` (plus the design); the ``custom``
    preset takes every function either as a constant or as a piecewise-linear
    table.
    """
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:{err.lineno}: invalid JSON ({err.msg})") from err
    _check_header(obj, "scenario", str(path))
    unknown = sorted(set(obj) - _SCENARIO_KEYS)
    if unknown:
        raise ParseError(f"{path}: unknown scenario keys {unknown}")
    preset = obj.get("preset", "custom")
    if preset not in ("fbm", "custom"):
        raise ParseError(f"{path}: unknown preset {preset!r}")
    if "H" not in obj or "design" not in obj:
        raise ParseError(f"{path}: scenario requires 'H' and 'design'")

    where = str(path)
    h_fn = _parse_fn(obj["H"], "H", where)
    l_fn = _parse_fn(obj.get("L", 1.0), "L", where)
    mu_fn = _parse_fn(obj.get("mu", 0.0), "mu", where)
    sigma_fn = _parse_fn(obj.get("sigma", 1.0), "sigma", where)
    m2 = obj.get("m2")
    m2_fn = None if m2 is None else _parse_fn(m2, "m2", where)
    try:
        spec = MfbmSpec(
            H=h_fn,
            L=l_fn,
            mu=mu_fn,
            sigma=sigma_fn,
            sigma0=float(obj.get("sigma0", 0.25)),
            A0=float(obj.get("A0", 1.0 if m2_fn is not None else 0.0)),
            m2_target=m2_fn,
        )
    except ValueError as err:
        raise ParseError(f"{path}: invalid process spec ({err})") from err

    design = obj["design"]
    if not isinstance(design, dict):
        raise ParseError(f"{path}: design must be an object")
    try:
        kind = DesignKind(design.get("kind", "independent"))
        dspec = DesignSpec(
            kind=kind,
            n_curves=int(design["n"]),
            mean_points=int(design["m"]),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise ParseError(f"{path}: invalid design ({err})") from err
    return spec, dspec


# ---------------------------------------------------------------- grids / eigen payloads


def _grid_payload(grid: Grid) -> dict:
    return {"points": list(grid.points), "quad_weights": list(grid.quad_weights)}


def _grid_from_payload(payload, where: str) -> Grid:
    try:
        return Grid(points=payload["points"], quad_weights=payload["quad_weights"])
    except (KeyError, TypeError, ValueError) as err:
        raise ParseError(f"{where}: bad grid ({err})") from err


# ---------------------------------------------------------------- truth


def write_truth(eigenvalues, eigenfunctions, grid: Grid, path) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "truth",
        "grid": _grid_payload(grid),
        "eigenvalues": [float(v) for v in eigenvalues],
        "eigenfunctions": [list(map(float, f)) for f in eigenfunctions],
    }
    Path(path).write_text(_dumps(payload) + "\n")


def read_truth(path) -> tuple[np.ndarray, np.ndarray, Grid]:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:{err.lineno}: invalid JSON ({err.msg})") from err
    _check_header(obj, "truth", str(path))
    grid = _grid_from_payload(obj.get("grid", {}), str(path))
    try:
        lam = np.asarray(obj["eigenvalues"], dtype=float)
        psi = np.asarray(obj["eigenfunctions"], dtype=float)
    except (KeyError, TypeError, ValueError) as err:
        raise ParseError(f"{path}: bad truth payload ({err})") from err
    if psi.ndim != 2 or psi.shape[1] != len(grid):
        raise ParseError(f"{path}: eigenfunction shape does not match the grid")
    return lam, psi, grid


# ---------------------------------------------------------------- fit results


def _selection_payload(selection) -> dict:
    return {
        "grid": list(selection.grid.values),
        "feasible": [bool(v) for v in selection.feasible],
        "lambda_traces": selection.lambda_traces.tolist(),
        "psi_traces": selection.psi_traces.tolist(),
        "h_lambda_raw": list(selection.h_lambda),
        "h_psi_raw": list(selection.h_psi),
        "h_lambda_inflated": list(selection.h_lambda_inflated),
        "h_psi_inflated": list(selection.h_psi_inflated),
    }


def write_fit_result(result: FitResult, path) -> None:
    """Serialize the parts of a fit needed for evaluation and diagnostics."""
    baselines = {
        repr(float(h)): {
            "eigenvalues": list(map(float, eig.eigenvalues)),
            "eigenfunctions": [list(map(float, f)) for f in eig.eigenfunctions],
        }
        for h, eig in result.baselines.items()
    }
    config_payload = dataclasses.asdict(result.config)
    config_payload["baseline_h"] = list(result.config.baseline_h)
    payload = {
        "schema_version": SCHEMA_VERSION,
        "kind": "fit",
        "n_curves": result.n_curves,
        "mean_obs": result.mean_obs,
        "grid": _grid_payload(result.grid),
        "config": config_payload,
        "presmooth_bandwidth": result.presmooth_bandwidth,
        "regularity": {
            "H": list(map(float, result.regularity.H)),
            "L": list(map(float, result.regularity.L)),
            "delta_star": result.regularity.delta_star,
            "gamma": result.regularity.gamma,
        },
        "noise_b_used": result.moments.b_used,
        "h_star_run1": result.h_star_run1,
        "selection_run1": _selection_payload(result.selection_run1),
        "selection_run2": _selection_payload(result.selection_run2),
        "preliminary_eigenvalues": list(map(float, result.preliminary.raw_eigenvalues)),
        "h_lambda_final": list(map(float, result.h_lambda_final)),
        "h_psi_final": list(map(float, result.h_psi_final)),
        "final_eigenvalues": list(map(float, result.final_eigenvalues)),
        "final_raw_eigenvalues": list(map(float, result.final_raw_eigenvalues)),
        "final_eigenfunctions": [list(map(float, f)) for f in result.final_eigenfunctions],
        "eigenvalues_monotone": result.eigenvalues_monotone,
        "baselines": baselines,
        "timings": {k: float(v) for k, v in result.timings.items()},
    }
    Path(path).write_text(_dumps(payload) + "\n")


def read_fit_payload(path) -> dict:
    """Load a fit file as a dict (evaluation does not need live objects)."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:{err.lineno}: invalid JSON ({err.msg})") from err
    _check_header(obj, "fit", str(path))
    return obj


# ---------------------------------------------------------------- reports


def write_report(report: dict, path) -> None:
    Path(path).write_text(_dumps(report) + "\n")


def read_report(path, kind: str) -> dict:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}:{err.lineno}: invalid JSON ({err.msg})") from err
    _check_header(obj, kind, str(path))
    return obj
