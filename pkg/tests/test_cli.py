"""End-to-end CLI runs over the replay fixtures."""

import json

import pytest

from sitquery.cli import main
from sitquery.datapoints import read_jsonl, write_jsonl

GEN_FLAGS = [
    "--batch-size", "5", "--max-iterations", "2", "--num-clusters", "3",
    "--target-size", "10",
]


def run(argv):
    return main([str(a) for a in argv])


def read_lines(path):
    return [json.loads(line) for line in path.read_text().splitlines()]


def test_generate_writes_run_dir(tmp_path, fixtures_dir, monkeypatch):
    monkeypatch.setenv("SITQUERY_CHAT_API_KEY", "sk-super-secret-key")
    out = tmp_path / "run"
    rc = run(["generate", "--scene", fixtures_dir / "house.json",
              "--transcript", fixtures_dir / "transcript_clean.jsonl",
              "-o", out] + GEN_FLAGS)
    assert rc == 0
    datapoints = read_jsonl(out / "datapoints.jsonl")
    assert len(datapoints) == 10
    assert datapoints[0].id == "dp-00001"
    assert len(read_lines(out / "embeddings.jsonl")) == 10
    run_log = json.loads((out / "run_log.json").read_text())
    assert len(run_log["batches"]) == 2
    assert run_log["aborted_reason"] is None

    snapshot = json.loads((out / "config_snapshot.json").read_text())
    assert snapshot["command"] == "generate"
    assert snapshot["config"]["batch_size"] == 5
    assert snapshot["config"]["tau"] == pytest.approx(0.90)
    assert snapshot["kernel_backend"] in ("cython", "python")
    # Credentials live in the environment only; nothing in the run
    # directory may contain them.
    for artifact in out.iterdir():
        assert "sk-super-secret-key" not in artifact.read_text()


def test_generate_aborts_with_exit_1(tmp_path, fixtures_dir):
    short = tmp_path / "short.jsonl"
    first = (fixtures_dir / "transcript_clean.jsonl").read_text().splitlines()[0]
    short.write_text(first + "\n")
    out = tmp_path / "run"
    rc = run(["generate", "--scene", fixtures_dir / "house.json",
              "--transcript", short, "-o", out] + GEN_FLAGS)
    assert rc == 1
    # Partial results are still written.
    assert len(read_jsonl(out / "datapoints.jsonl")) == 5
    run_log = json.loads((out / "run_log.json").read_text())
    assert "TranscriptExhausted" in run_log["aborted_reason"]


def test_generate_config_file_merging(tmp_path, fixtures_dir):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"batch_size": 5, "tau": 0.5, "max_regen": 1}))
    out = tmp_path / "run"
    rc = run(["generate", "--scene", fixtures_dir / "house.json",
              "--transcript", fixtures_dir / "transcript_clean.jsonl",
              "--config", config, "-o", out,
              "--tau", "0.8", "--max-iterations", "2", "--num-clusters", "3",
              "--target-size", "10"])
    assert rc == 0
    snapshot = json.loads((out / "config_snapshot.json").read_text())
    assert snapshot["config"]["batch_size"] == 5      # from config file
    assert snapshot["config"]["tau"] == pytest.approx(0.8)  # flag beats file
    assert snapshot["config"]["max_regen"] == 1


def test_generate_unknown_config_key(tmp_path, fixtures_dir):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"bogus_knob": 1}))
    rc = run(["generate", "--scene", fixtures_dir / "house.json",
              "--transcript", fixtures_dir / "transcript_clean.jsonl",
              "--config", config, "-o", tmp_path / "run"])
    assert rc == 1


def make_dataset(tmp_path, dp_factory, include_bad=False):
    dps = [
        dp_factory("Is the living room prepared for a movie night?",
                   [("tv", "ON"), ("curtains", "CLOSED")], dp_id="dp-1"),
        dp_factory("Is the bathroom ready for a shower?",
                   [("lightswitch", "ON"), ("towels", "PRESENT"),
                    ("soap", "PRESENT")], dp_id="dp-2"),
    ]
    if include_bad:
        dps.append(dp_factory("Is the sofa comfortable?",
                              [("sofa", "PRESENT")], dp_id="dp-3"))
    path = tmp_path / "datapoints.jsonl"
    write_jsonl(dps, path)
    return path, dps


def test_validate_report_and_strict_exit(tmp_path, fixtures_dir, dp_factory):
    data, _ = make_dataset(tmp_path, dp_factory, include_bad=True)
    out = tmp_path / "out"
    rc = run(["validate", "--scene", fixtures_dir / "house.json",
              "--datapoints", data, "-o", out])
    assert rc == 0
    report = json.loads((out / "validation.json").read_text())
    assert report["total"] == 3
    assert report["rejected"] == 1
    by_id = {row["id"]: row for row in report["results"]}
    assert by_id["dp-1"]["accepted"] is True
    assert by_id["dp-3"]["accepted"] is False
    assert any("sofa" in reason for reason in by_id["dp-3"]["reasons"])

    rc = run(["validate", "--scene", fixtures_dir / "house.json",
              "--datapoints", data, "-o", out, "--strict"])
    assert rc == 1


def test_decompose_outputs(tmp_path, fixtures_dir, dp_factory):
    data, _ = make_dataset(tmp_path, dp_factory)
    out = tmp_path / "out"
    rc = run(["decompose", "--datapoints", data, "-o", out, "--genericize"])
    assert rc == 0
    consensus = read_lines(out / "consensus_queries.jsonl")
    assert len(consensus) == 5
    assert consensus[0] == {"parent_id": "dp-1", "class": "tv", "state": "ON",
                            "text": "Is the tv On?"}
    generic = read_lines(out / "genericized_queries.jsonl")
    assert generic[0]["text"] == "Is this place prepared for a movie night?"


def test_evaluate_with_predictions_and_groundtruth(tmp_path, fixtures_dir,
                                                   dp_factory, capsys):
    data, _ = make_dataset(tmp_path, dp_factory)
    predictions = tmp_path / "predictions.jsonl"
    rows = [
        {"datapoint_id": "dp-1", "unit_id": "room", "level": "room", "answer": "Yes"},
        {"datapoint_id": "dp-1", "unit_id": "cq-0", "level": "object", "answer": "No"},
        {"datapoint_id": "dp-1", "unit_id": "cq-1", "level": "object", "answer": "No"},
        {"datapoint_id": "dp-2", "unit_id": "room", "level": "room", "answer": "No"},
        {"datapoint_id": "dp-2", "unit_id": "cq-0", "level": "object", "answer": "Yes"},
        {"datapoint_id": "dp-2", "unit_id": "cq-1", "level": "object", "answer": "Yes"},
        {"datapoint_id": "dp-2", "unit_id": "cq-2", "level": "object", "answer": "Yes"},
    ]
    predictions.write_text("".join(json.dumps(r) + "\n" for r in rows))
    groundtruth = tmp_path / "groundtruth.jsonl"
    gt_rows = [
        {"task_id": "dp-1:room", "label": "Yes"},
        {"task_id": "dp-2:room", "label": "Yes"},  # disagrees with prediction
        {"task_id": "dp-2:cq-0", "label": "Yes"},
    ]
    groundtruth.write_text("".join(json.dumps(r) + "\n" for r in gt_rows))
    out = tmp_path / "out"
    rc = run(["evaluate", "--scene", fixtures_dir / "house.json",
              "--datapoints", data, "--predictions", predictions,
              "--groundtruth", groundtruth, "-o", out])
    assert rc == 0
    payload = json.loads((out / "evaluation.json").read_text())
    assert payload["joint"]["joint_success_percent"] == pytest.approx(100.0)
    assert payload["room"]["agreement_percent"] == pytest.approx(50.0)
    assert payload["object"]["agreement_percent"] == pytest.approx(80.0)
    against = payload["against_groundtruth"]
    assert against["pairs"] == 3
    assert against["agreement_percent"] == pytest.approx(100.0 * 2 / 3, abs=0.01)
    printed = capsys.readouterr().out
    assert "joint over 2 datapoints" in printed


def test_evaluate_requires_predictions(tmp_path, fixtures_dir, dp_factory):
    data, _ = make_dataset(tmp_path, dp_factory)
    rc = run(["evaluate", "--scene", fixtures_dir / "house.json",
              "--datapoints", data, "-o", tmp_path / "out"])
    assert rc == 1


def test_analyze_writes_report(tmp_path, fixtures_dir, dp_factory, capsys):
    data, _ = make_dataset(tmp_path, dp_factory)
    out = tmp_path / "out"
    rc = run(["analyze", "--scene", fixtures_dir / "house.json",
              "--datapoints", data, "-o", out])
    assert rc == 0
    report = json.loads((out / "analysis.json").read_text())
    assert report["datapoints"] == 2
    assert report["room_categories"]["counts"]["room"] == 2
    assert "analyzed 2 datapoints" in capsys.readouterr().out


def test_export_embeddings_dimension(tmp_path, fixtures_dir, dp_factory):
    data, _ = make_dataset(tmp_path, dp_factory)
    out = tmp_path / "out"
    rc = run(["export-embeddings", "--datapoints", data, "-o", out,
              "--dimension", "64"])
    assert rc == 0
    rows = read_lines(out / "embeddings.jsonl")
    assert [row["id"] for row in rows] == ["dp-1", "dp-2"]
    assert all(len(row["vector"]) == 64 for row in rows)


def test_annotate_serve_needs_task_source(tmp_path):
    rc = run(["annotate-serve", "-o", tmp_path / "out"])
    assert rc == 1


def test_exit_codes_for_bad_invocations(tmp_path, fixtures_dir):
    assert run([]) == 2  # no subcommand
    # Missing input file surfaces as a domain error, not a traceback.
    rc = run(["validate", "--scene", fixtures_dir / "house.json",
              "--datapoints", tmp_path / "missing.jsonl", "-o", tmp_path / "out"])
    assert rc == 1
    with pytest.raises(SystemExit) as exc:
        run(["generate", "--scene", fixtures_dir / "house.json",
             "--embedder", "nonsense"])
    assert exc.value.code == 2
