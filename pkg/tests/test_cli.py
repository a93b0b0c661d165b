"""End-to-end command line checks on tiny workloads."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from whentopost.cli import main
from whentopost.data_io import read_profile_csv, read_report_csv

FIXTURE = Path(__file__).resolve().parent.parent / "fixtures" / "replay_small"

SMALL_SIM = [
    "simulate",
    "--scenario", "one-follower-hawkes",
    "--policy", "redqueen",
    "--policy", "uniform",
    "--q", "4.0",
    "--seeds", "0-2",
    "--feed-events", "40",
]


def run_ok(args):
    result = CliRunner().invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output + result.stderr
    return result


def test_simulate_writes_report_and_echoes_json(tmp_path):
    out = tmp_path / "report.csv"
    result = run_ok(SMALL_SIM + ["--out", str(out)])
    payload = json.loads(result.output)
    assert payload["written"] == str(out)
    assert payload["rows"] == 6  # 3 seeds x 2 policies
    reports = read_report_csv(out)
    assert len(reports) == 6
    assert sorted(set(r.policy for r in reports)) == ["redqueen", "uniform"]


def test_simulate_reruns_byte_identical(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    run_ok(SMALL_SIM + ["--out", str(out1)])
    run_ok(SMALL_SIM + ["--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_rejects_budget_with_q(tmp_path):
    result = CliRunner().invoke(
        main, SMALL_SIM + ["--budget", "5", "--out", str(tmp_path / "r.csv")]
    )
    assert result.exit_code == 2
    err = json.loads(result.stderr)
    assert "exactly one" in err["message"]


def test_simulate_rejects_bad_seed_range(tmp_path):
    result = CliRunner().invoke(
        main, SMALL_SIM + ["--seeds", "5-2", "--out", str(tmp_path / "r.csv")]
    )
    assert result.exit_code == 2
    err = json.loads(result.stderr)
    assert err["error"] == "ValueError"


def test_config_file_matches_explicit_flags(tmp_path):
    out_flags = tmp_path / "flags.csv"
    out_config = tmp_path / "config.csv"
    run_ok(SMALL_SIM + ["--out", str(out_flags)])
    config = {
        "simulate": {
            "scenario": "one-follower-hawkes",
            "policies": ["redqueen", "uniform"],
            "q": 4.0,
            "seeds": "0-2",
            "feed_events": 40,
        }
    }
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(config), encoding="utf-8")
    run_ok(["--config", str(cfg_path), "simulate", "--out", str(out_config)])
    assert out_flags.read_bytes() == out_config.read_bytes()


def test_config_rejects_non_object(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text("[1, 2]", encoding="utf-8")
    result = CliRunner().invoke(main, ["--config", str(cfg_path), "simulate",
                                       "--scenario", "one-follower-hawkes",
                                       "--out", str(tmp_path / "r.csv")])
    assert result.exit_code == 2
    assert json.loads(result.stderr)["error"] == "ConfigError"


def test_tune_q_converges_on_small_scenario():
    result = run_ok([
        "tune-q",
        "--scenario", "one-follower-hawkes",
        "--target", "5",
        "--tol", "0.2",
        "--seeds", "0-3",
        "--feed-events", "40",
    ])
    payload = json.loads(result.output)
    assert payload["converged"] is True
    assert abs(payload["mean_posts"] - 5.0) <= 0.2 * 5.0
    assert payload["q"] > 0
    assert payload["realized_budget"] == payload["mean_posts"]


def test_tune_q_unreachable_target_exits_3():
    result = CliRunner().invoke(main, [
        "tune-q",
        "--scenario", "one-follower-hawkes",
        "--target", "100000",
        "--seeds", "0",
        "--feed-events", "30",
    ])
    assert result.exit_code == 3
    payload = json.loads(result.output)
    assert payload["converged"] is False


def test_replay_normalizes_true_posts_to_one(tmp_path):
    out = tmp_path / "replay.csv"
    summary = tmp_path / "summary.csv"
    result = run_ok([
        "replay",
        "--manifest", str(FIXTURE / "manifest.txt"),
        "--seeds", "0-2",
        "--out", str(out),
        "--summary", str(summary),
    ])
    payload = json.loads(result.output)
    assert payload["rows"] == 6
    reports = read_report_csv(out)
    for r in reports:
        if r.policy == "true-posts":
            assert r.normalized_position == 1.0
            assert r.normalized_time_at_top == 1.0
            assert r.posts == 4
    lines = summary.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("run,policy,metric")
    assert len(lines) == 1 + 2 * 2  # 2 policies x 2 metrics


def test_replay_reruns_byte_identical(tmp_path):
    args = [
        "replay",
        "--manifest", str(FIXTURE / "manifest.txt"),
        "--seeds", "0-1",
        "--q", "1000.0",
    ]
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    run_ok(args + ["--out", str(out1)])
    run_ok(args + ["--out", str(out2)])
    assert out1.read_bytes() == out2.read_bytes()


def test_replay_missing_manifest_is_usage_error(tmp_path):
    result = CliRunner().invoke(main, [
        "replay", "--manifest", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "r.csv"),
    ])
    assert result.exit_code == 2


def test_estimate_significance_profiles_all_sources(tmp_path):
    out = tmp_path / "profile.csv"
    result = run_ok([
        "estimate-significance",
        "--events", str(FIXTURE / "events.jsonl"),
        "--epoch", "345600.0",
        "--granularity", "weekday",
        "--out", str(out),
    ])
    payload = json.loads(result.output)
    assert payload["followers"] == 4  # alice, local1, local2, wire
    profile = read_profile_csv(out)
    assert profile.granularity == "weekday"
    assert set(profile.values) == {"alice", "local1", "local2", "wire"}
    # fixture events all land on the epoch's first day
    for values in profile.values.values():
        assert values[0] == 1.0


def test_estimate_significance_follower_filter(tmp_path):
    out = tmp_path / "profile.csv"
    run_ok([
        "estimate-significance",
        "--events", str(FIXTURE / "events.jsonl"),
        "--epoch", "0.0",
        "--follower", "wire",
        "--laplace", "0.0",
        "--out", str(out),
    ])
    profile = read_profile_csv(out)
    assert set(profile.values) == {"wire"}
    assert profile.laplace == 0.0
