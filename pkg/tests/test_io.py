"""Serialization round trips and file format pins."""

import csv
import json

import numpy as np
import pytest

from geoshoot import (
    ConfigurationError,
    EvolveConfig,
    KernelFamily,
    ParticleState,
    RunManifest,
    ShootingConfig,
    SweepGrid,
    circle,
    heart4,
    load_template,
    match,
    match_result_to_dict,
    save_match_result,
    save_template,
    write_manifest,
    write_sweep_csv,
    write_trajectory_csv,
)
from geoshoot.analysis import DIVERGED
from geoshoot.io import (
    MANIFEST_SCHEMA,
    RESULT_SCHEMA,
    TEMPLATE_SCHEMA,
    config_echo,
    sha256_digest,
    template_from_dict,
    write_residual_csv,
)


def test_template_round_trip(tmp_path):
    original = heart4(n=16, label="h16")
    path = save_template(original, tmp_path / "h.json")
    loaded = load_template(path)
    assert loaded.label == "h16"
    np.testing.assert_array_equal(loaded.points, original.points)
    doc = json.loads(path.read_text())
    assert doc["schema"] == TEMPLATE_SCHEMA


def test_loader_rejects_unknown_schema(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"schema": "geoshoot.template/99", "points": [[0, 0]]}))
    with pytest.raises(ConfigurationError, match="unknown schema"):
        load_template(path)


def test_loader_accepts_untagged_documents():
    t = template_from_dict({"points": [[0.0, 0.0], [1.0, 0.0]], "label": "bare"})
    assert t.label == "bare"
    assert t.n == 2


def test_loader_reports_missing_points(tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"schema": TEMPLATE_SCHEMA, "label": "no-points"}))
    with pytest.raises(ConfigurationError, match="points"):
        load_template(path)


def test_loader_reports_bad_json_and_missing_file(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError, match="not valid JSON"):
        load_template(bad)
    with pytest.raises(ConfigurationError, match="cannot read"):
        load_template(tmp_path / "absent.json")
    top_level_list = tmp_path / "list.json"
    top_level_list.write_text("[1, 2]")
    with pytest.raises(ConfigurationError, match="must be an object"):
        load_template(top_level_list)


def _small_result():
    ref = circle(1.0, n=6)
    tgt = circle(1.2, n=6)
    cfg = ShootingConfig(h=0.5, epsilon=1e-5, evolve=EvolveConfig(steps=30))
    return match(ref, tgt, cfg), cfg


def test_match_result_document_keys(tmp_path):
    result, cfg = _small_result()
    path = save_match_result(result, tmp_path / "r.json", cfg)
    doc = json.loads(path.read_text())
    assert doc["schema"] == RESULT_SCHEMA
    assert doc["converged"] is True
    assert doc["iterations"] == result.iterations
    assert len(doc["residual_history"]) == result.iterations
    assert np.asarray(doc["p0"]).shape == (6, 2)
    assert doc["H"] == result.hamiltonian
    assert doc["final_label"] == "circle(r=1)>circle(r=1.2)"
    assert "diagnosis" not in doc
    assert doc["config"]["h"] == 0.5
    assert doc["config"]["system"]["kernel"]["family"] == "conical"


def test_failed_result_document_carries_diagnosis():
    result, cfg = _small_result()
    capped = match(
        circle(1.0, n=6), heart4(n=6),
        ShootingConfig(h=0.1, epsilon=1e-9, max_iter=2, evolve=EvolveConfig(steps=30)),
    )
    doc = match_result_to_dict(capped)
    assert doc["converged"] is False
    assert "cap" in doc["diagnosis"]
    assert "config" not in doc


def test_residual_csv_layout(tmp_path):
    path = write_residual_csv([0.5, 0.25, 0.125], tmp_path / "r.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iteration", "stopping_norm"]
    assert rows[1] == ["1", "0.5"]
    assert [r[0] for r in rows[1:]] == ["1", "2", "3"]


def test_trajectory_csv_layout(tmp_path):
    state = ParticleState(np.array([[1.0, 2.0]]), np.array([[3.0, 4.0]]))
    frames = [(0.0, state), (0.5, state)]
    path = write_trajectory_csv(frames, tmp_path / "t.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "i", "qx", "qy", "px", "py"]
    assert rows[1] == ["0", "0", "1", "2", "3", "4"]
    assert rows[2][0] == "0.5"
    assert len(rows) == 3


def test_sweep_csv_blanks_diverged_cells(tmp_path):
    grid = SweepGrid(alpha2_values=(0.5, 1.0), h_values=(0.4, 1.5), n_landmarks=8)
    matrix = np.array([[12, DIVERGED], [9, 4]])
    path = write_sweep_csv(grid, matrix, tmp_path / "s.csv")
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["alpha2", "h", "iterations", "converged"]
    assert rows[1] == ["0.5", "0.4", "12", "true"]
    assert rows[2] == ["0.5", "1.5", "", "false"]
    assert rows[4] == ["1", "1.5", "4", "true"]


def test_config_echo_is_json_ready():
    cfg = ShootingConfig(h=0.3, evolve=EvolveConfig(steps=50))
    echo = config_echo(cfg)
    json.dumps(echo)
    assert echo["stop_rule"] == "residual"
    assert echo["evolve"]["steps"] == 50
    assert echo["system"]["sigma2"] == 0.0


def test_manifest_document(tmp_path):
    data = tmp_path / "input.json"
    data.write_text("{}")
    manifest = RunManifest(
        command="geoshoot match --h 0.3",
        version="0.1.0",
        config={"h": 0.3, "family": KernelFamily.CONICAL},
        inputs={str(data): sha256_digest(data)},
        wall_time_s=1.25,
        outcome="converged",
        extras={"note": np.float64(2.0)},
    )
    path = write_manifest(manifest, tmp_path / "m.json")
    doc = json.loads(path.read_text())
    assert doc["schema"] == MANIFEST_SCHEMA
    assert doc["command"].startswith("geoshoot match")
    assert doc["config"]["family"] == "conical"
    assert doc["extras"]["note"] == 2.0
    assert list(doc["inputs"].values()) == [sha256_digest(data)]


def test_sha256_digest_matches_known_value(tmp_path):
    path = tmp_path / "x"
    path.write_bytes(b"abc")
    assert sha256_digest(path) == (
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    )
