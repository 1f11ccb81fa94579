import json

import pytest

from teamtris.cli import main


@pytest.fixture
def tiny_config_file(tmp_path):
    from teamtris.config import load_preset

    config = load_preset("base").to_json()
    config["sessionId"] = "cli-test"
    config["harness"]["feedbackTargetPerAgent"] = 8
    config["harness"]["checkpointFeedbackCounts"] = [0]
    config["harness"]["evalGames"] = 4
    config["harness"]["evalMaxTurns"] = 40
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    return path


def test_baseline_command(tiny_config_file, capsys):
    rc = main(["baseline", "--config", str(tiny_config_file),
               "--games", "5", "--seed", "3"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["games"] == 5 and doc["medianLines"] >= 0


def test_headless_then_replay_verify(tiny_config_file, tmp_path, capsys):
    out_csv = tmp_path / "metrics.csv"
    rc = main(["headless", "--config", str(tiny_config_file),
               "--episodes", "8", "--seed", "2", "--out", str(out_csv)])
    assert rc == 0
    assert out_csv.exists()
    log = tmp_path / "cli-test-seed2.jsonl"
    assert log.exists()
    capsys.readouterr()

    rc = main(["replay", "--log", str(log), "--verify"])
    out = capsys.readouterr().out
    assert rc == 0 and "ok" in out

    rc = main(["replay", "--log", str(log)])
    doc = json.loads(capsys.readouterr().out)
    assert doc["events"] > 0 and "SessionEnd" in doc["kinds"]


def test_replay_detects_tampering(tiny_config_file, tmp_path, capsys):
    out_csv = tmp_path / "metrics.csv"
    main(["headless", "--config", str(tiny_config_file),
          "--episodes", "8", "--seed", "2", "--out", str(out_csv)])
    log = tmp_path / "cli-test-seed2.jsonl"
    lines = log.read_text().splitlines()
    doc = json.loads(lines[10])
    doc["tick"] += 1
    lines[10] = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    log.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    rc = main(["replay", "--log", str(log), "--verify"])
    assert rc == 1
    assert "mismatch" in capsys.readouterr().out


def test_preset_names_accepted(capsys):
    rc = main(["baseline", "--config", "base", "--games", "2", "--seed", "1"])
    assert rc == 0


def test_bad_config_reports_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"boardsPerPlayer": 99, "topology": {
        "players": [], "agents": []}}))
    rc = main(["baseline", "--config", str(bad), "--games", "2", "--seed", "1"])
    assert rc == 2
    assert "error" in capsys.readouterr().err
