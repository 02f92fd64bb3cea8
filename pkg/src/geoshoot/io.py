"""File formats: template and result JSON, trajectory/sweep CSV, manifests.

Every JSON document carries a schema tag.  Readers reject tags they do
not know instead of guessing; documents without a tag are read as the
current version so hand-written files stay usable.
"""

from __future__ import annotations

import csv
import dataclasses
import enum
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import DIVERGED, SweepGrid
from .errors import ConfigurationError
from .shapes import LandmarkTemplate
from .shooting import MatchResult, ShootingConfig

__all__ = [
    "TEMPLATE_SCHEMA",
    "RESULT_SCHEMA",
    "MANIFEST_SCHEMA",
    "RunManifest",
    "save_template",
    "load_template",
    "template_to_dict",
    "template_from_dict",
    "match_result_to_dict",
    "save_match_result",
    "write_residual_csv",
    "write_trajectory_csv",
    "write_sweep_csv",
    "config_echo",
    "sha256_digest",
    "write_manifest",
]

TEMPLATE_SCHEMA = "geoshoot.template/1"
RESULT_SCHEMA = "geoshoot.match-result/1"
MANIFEST_SCHEMA = "geoshoot.manifest/1"


def _plain(value):
    """Recursively convert dataclasses/enums/arrays to JSON-ready values."""
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _plain(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _check_schema(doc: dict, expected: str, path) -> None:
    tag = doc.get("schema")
    if tag is not None and tag != expected:
        raise ConfigurationError(
            f"{path}: unknown schema {tag!r} (this tool reads {expected!r})"
        )


def template_to_dict(t: LandmarkTemplate) -> dict:
    return {
        "schema": TEMPLATE_SCHEMA,
        "label": t.label,
        "points": t.points.tolist(),
    }


def template_from_dict(doc: dict, path="<memory>") -> LandmarkTemplate:
    _check_schema(doc, TEMPLATE_SCHEMA, path)
    try:
        points = doc["points"]
    except KeyError:
        raise ConfigurationError(f"{path}: template JSON lacks 'points'") from None
    return LandmarkTemplate(np.asarray(points, dtype=float), doc.get("label", ""))


def save_template(t: LandmarkTemplate, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(template_to_dict(t), indent=2) + "\n")
    return path


def load_template(path) -> LandmarkTemplate:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read template {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: template JSON must be an object")
    return template_from_dict(doc, path)


def match_result_to_dict(result: MatchResult, cfg: ShootingConfig | None = None) -> dict:
    doc = {
        "schema": RESULT_SCHEMA,
        "p0": result.p0.tolist(),
        "H": result.hamiltonian,
        "iterations": result.iterations,
        "converged": result.converged,
        "residual_history": list(result.residual_history),
        "final_residual": result.final_residual,
        "final_label": result.final_template.label,
    }
    if result.diagnosis is not None:
        doc["diagnosis"] = result.diagnosis
    if result.warnings:
        doc["warnings"] = list(result.warnings)
    if cfg is not None:
        doc["config"] = config_echo(cfg)
    return doc


def save_match_result(
    result: MatchResult, path, cfg: ShootingConfig | None = None
) -> Path:
    path = Path(path)
    path.write_text(json.dumps(match_result_to_dict(result, cfg), indent=2) + "\n")
    return path


def write_residual_csv(history, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "stopping_norm"])
        for k, value in enumerate(history, start=1):
            writer.writerow([k, f"{value:.17g}"])
    return path


def write_trajectory_csv(frames, path) -> Path:
    """One row per (frame, landmark): t, i, qx, qy, px, py."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "i", "qx", "qy", "px", "py"])
        for t, state in frames:
            for i in range(state.q.shape[0]):
                writer.writerow(
                    [f"{t:.17g}", i]
                    + [f"{v:.17g}" for v in (*state.q[i], *state.p[i])]
                )
    return path


def write_sweep_csv(grid: SweepGrid, matrix: np.ndarray, path) -> Path:
    """Row-major cells as alpha2, h, iterations, converged.

    Diverged cells leave the iterations column empty rather than
    carrying the in-memory sentinel into the file.
    """
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["alpha2", "h", "iterations", "converged"])
        for i, alpha2 in enumerate(grid.alpha2_values):
            for j, h in enumerate(grid.h_values):
                cell = int(matrix[i, j])
                diverged = cell == DIVERGED
                writer.writerow(
                    [
                        f"{alpha2:g}",
                        f"{h:g}",
                        "" if diverged else cell,
                        str(not diverged).lower(),
                    ]
                )
    return path


def config_echo(cfg: ShootingConfig) -> dict:
    """Every knob of a run, flattened to JSON-ready values."""
    return _plain(cfg)


def sha256_digest(path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record; every CLI run writes exactly one.

    ``inputs`` maps input paths to SHA-256 digests, ``config`` echoes
    every knob, ``extras`` holds per-command facts (e.g. which shape
    generator and parameters produced a template).
    """

    command: str
    version: str
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    outcome: str = ""
    extras: dict = field(default_factory=dict)


def write_manifest(manifest: RunManifest, path) -> Path:
    path = Path(path)
    doc = {"schema": MANIFEST_SCHEMA, **_plain(manifest)}
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path
