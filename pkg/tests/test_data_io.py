"""Log, graph, manifest, report and profile serialization round trips."""

import json
import math

import numpy as np
import pytest

from whentopost.data_io import (
    DataFormatError,
    REPORT_HEADER,
    build_replay_dataset,
    load_events,
    load_manifest,
    load_network,
    load_trajectory,
    read_profile_csv,
    read_report_csv,
    save_events,
    save_trajectory,
    write_profile_csv,
    write_report_csv,
)
from whentopost.feed_sim import trajectory_from_posts
from whentopost.metrics import MetricsReport
from whentopost.point_process import EventStream
from whentopost.significance import SignificanceProfile


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def test_load_events_empty_file(tmp_path):
    p = tmp_path / "events.jsonl"
    p.write_text("", encoding="utf-8")
    assert len(load_events(p)) == 0


def test_load_events_preserves_sorted_input(tmp_path):
    p = tmp_path / "events.jsonl"
    write_lines(p, [
        '{"t": 1.0, "src": "a"}',
        '{"t": 2.5, "src": "b"}',
        '{"t": 3.0, "src": "a"}',
    ])
    stream = load_events(p)
    assert np.array_equal(stream.times, [1.0, 2.5, 3.0])
    assert list(stream.sources) == ["a", "b", "a"]


def test_load_events_sorts_shuffled_input_with_warning(tmp_path):
    p = tmp_path / "events.jsonl"
    write_lines(p, [
        '{"t": 3.0, "src": "a"}',
        '{"t": 1.0, "src": "b"}',
        '{"t": 2.0, "src": "c"}',
    ])
    with pytest.warns(UserWarning, match="out of order"):
        stream = load_events(p)
    assert np.array_equal(stream.times, [1.0, 2.0, 3.0])
    assert list(stream.sources) == ["b", "c", "a"]


def test_load_events_nudges_ties_with_warning(tmp_path):
    p = tmp_path / "events.jsonl"
    write_lines(p, [
        '{"t": 1.0, "src": "a"}',
        '{"t": 1.0, "src": "b"}',
    ])
    with pytest.warns(UserWarning, match="nudged"):
        stream = load_events(p)
    assert len(stream) == 2
    assert stream.times[1] == np.nextafter(1.0, math.inf)


def test_load_events_reports_bad_line_number(tmp_path):
    p = tmp_path / "events.jsonl"
    write_lines(p, [
        '{"t": 1.0, "src": "a"}',
        'not json at all',
    ])
    with pytest.raises(DataFormatError, match=":2:"):
        load_events(p)
    write_lines(p, ['{"src": "missing-t"}'])
    with pytest.raises(DataFormatError, match=":1:"):
        load_events(p)


def test_events_round_trip_bytes(tmp_path):
    rng = np.random.default_rng(0)
    stream = EventStream(
        np.sort(rng.uniform(0, 1000, size=50)),
        np.asarray([f"u{i % 7}" for i in range(50)], dtype=object),
    )
    p1 = tmp_path / "a.jsonl"
    p2 = tmp_path / "b.jsonl"
    save_events(stream, p1)
    save_events(load_events(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_load_network_empty_and_dedup(tmp_path):
    p = tmp_path / "net.csv"
    p.write_text("", encoding="utf-8")
    net = load_network(p)
    assert net.followers("anyone") == []
    write_lines(p, ["b,f1", "b,f2", "b,f1", "c,f1"])
    net = load_network(p)
    assert net.followers("b") == ["f1", "f2"]
    assert net.followees("f1") == ["b", "c"]


def test_load_network_rejects_malformed(tmp_path):
    p = tmp_path / "net.csv"
    write_lines(p, ["b,f1", "only-one-field"])
    with pytest.raises(DataFormatError, match=":2:"):
        load_network(p)


def test_manifest_parses_and_resolves_paths(tmp_path):
    m = tmp_path / "manifest.txt"
    write_lines(m, [
        "# replay fixture",
        "events = events.jsonl",
        "network = net.csv",
        "epoch = 1000.0",
        "t0 = 0.0",
        "tf = 3600.0",
        "broadcaster = b",
    ])
    manifest = load_manifest(m)
    assert manifest.events_path == (tmp_path / "events.jsonl").resolve()
    assert manifest.network_path == (tmp_path / "net.csv").resolve()
    assert manifest.epoch == 1000.0
    assert manifest.broadcaster == "b"


def test_manifest_missing_keys_and_bad_values(tmp_path):
    m = tmp_path / "manifest.txt"
    write_lines(m, ["events = e.jsonl"])
    with pytest.raises(DataFormatError, match="missing"):
        load_manifest(m)
    write_lines(m, [
        "events = e", "network = n", "epoch = soon", "t0 = 0", "tf = 1", "broadcaster = b",
    ])
    with pytest.raises(DataFormatError):
        load_manifest(m)
    write_lines(m, [
        "events = e", "network = n", "epoch = 0", "t0 = 5", "tf = 1", "broadcaster = b",
    ])
    with pytest.raises(DataFormatError, match="window"):
        load_manifest(m)


def small_log():
    times = np.arange(1.0, 13.0)
    sources = np.asarray(
        ["b", "x", "y", "b", "x", "z", "y", "x", "b", "z", "x", "y"], dtype=object
    )
    return EventStream(times, sources)


def small_network():
    from whentopost.feed_sim import Network

    return Network.from_edges([
        ("b", "f1"), ("x", "f1"), ("y", "f1"),
        ("b", "f2"), ("z", "f2"),
        ("b", "f3"),
    ])


def test_build_replay_dataset_unions_followee_events():
    dataset = build_replay_dataset(small_log(), small_network(), "b", 0.0, 0.0, 12.0)
    assert dataset.follower_ids == ["f1", "f2", "f3"]
    feeds = dict(zip(dataset.follower_ids, dataset.feeds))
    # f1 follows x and y (besides b): their events only, in time order
    assert np.array_equal(feeds["f1"].times, [2.0, 3.0, 5.0, 7.0, 8.0, 11.0, 12.0])
    assert np.array_equal(feeds["f2"].times, [6.0, 10.0])
    # f3 follows only the broadcaster: empty feed
    assert len(feeds["f3"]) == 0
    assert np.array_equal(dataset.true_posts.times, [1.0, 4.0, 9.0])


def test_build_replay_dataset_excludes_broadcaster_everywhere():
    dataset = build_replay_dataset(small_log(), small_network(), "b", 0.0, 0.0, 12.0)
    for feed in dataset.feeds:
        assert "b" not in set(feed.sources)


def test_build_replay_dataset_followee_cap():
    from whentopost.feed_sim import Network

    edges = [("b", "f1"), ("b", "f2"), ("x", "f2")]
    edges += [(f"fan{k}", "f1") for k in range(3)]  # f1 follows 4 total
    net = Network.from_edges(edges)
    dataset = build_replay_dataset(small_log(), net, "b", 0.0, 0.0, 12.0, max_followees=3)
    assert dataset.follower_ids == ["f2"]
    with pytest.raises(DataFormatError, match="no retained"):
        build_replay_dataset(small_log(), net, "b", 0.0, 0.0, 12.0, max_followees=1)


def test_build_replay_dataset_window_clips_events():
    dataset = build_replay_dataset(small_log(), small_network(), "b", 0.0, 2.0, 8.0)
    assert np.array_equal(dataset.true_posts.times, [4.0])
    feeds = dict(zip(dataset.follower_ids, dataset.feeds))
    assert np.array_equal(feeds["f1"].times, [3.0, 5.0, 7.0, 8.0])


def sample_reports():
    return [
        MetricsReport("runB", 1, "p2", 4, 2.5, 0.5, None, None),
        MetricsReport("runA", 0, "p1", 3, 10.0, 4.0, 0.5, 1.0),
        MetricsReport("runA", 1, "p1", 2, 11.0, 3.0, None, 0.25),
    ]


def test_report_csv_round_trip_and_order(tmp_path):
    p = tmp_path / "report.csv"
    write_report_csv(sample_reports(), p)
    lines = p.read_text(encoding="utf-8").splitlines()
    assert lines[0] == REPORT_HEADER
    assert len(lines) == 4
    # sorted by (run, policy, seed)
    assert lines[1].startswith("runA,0,")
    assert lines[2].startswith("runA,1,")
    assert lines[3].startswith("runB,1,")
    # empty cells encode missing normalization
    assert lines[3].endswith(",,")
    back = read_report_csv(p)
    assert back == sorted(sample_reports(), key=lambda r: (r.run, r.policy, r.seed))


def test_report_csv_empty_is_header_only(tmp_path):
    p = tmp_path / "report.csv"
    write_report_csv([], p)
    assert p.read_text(encoding="utf-8") == REPORT_HEADER + "\n"
    assert read_report_csv(p) == []


def test_report_csv_write_is_deterministic(tmp_path):
    p1 = tmp_path / "r1.csv"
    p2 = tmp_path / "r2.csv"
    write_report_csv(sample_reports(), p1)
    write_report_csv(list(reversed(sample_reports())), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_report_csv_rejects_foreign_header(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("a,b,c\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match="header"):
        read_report_csv(p)


def test_profile_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    raw = rng.uniform(0.0, 1.0, size=(2, 7))
    raw[:, 0] = 1.0  # peak pinned at 1 as the estimator guarantees
    profile = SignificanceProfile(
        "weekday", epoch=123.5, laplace=0.5,
        values={"f1": raw[0], "f2": raw[1]},
    )
    p = tmp_path / "profile.csv"
    write_profile_csv(profile, p)
    text = p.read_text(encoding="utf-8")
    assert "# normalization = max" in text
    assert "not probabilities" in text
    back = read_profile_csv(p)
    assert back.granularity == "weekday"
    assert back.epoch == 123.5
    assert back.laplace == 0.5
    for fid in ("f1", "f2"):
        assert np.array_equal(back.values[fid], profile.values[fid])


def test_profile_csv_requires_metadata(tmp_path):
    p = tmp_path / "profile.csv"
    p.write_text("follower_id,bucket_index,value\nf,0,1.0\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match="metadata"):
        read_profile_csv(p)


def test_trajectory_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    feeds = [
        EventStream.from_times(np.sort(rng.uniform(0, 10, size=12)), "x"),
        EventStream.from_times(np.sort(rng.uniform(0, 10, size=5)), "y"),
    ]
    traj = trajectory_from_posts(feeds, np.sort(rng.uniform(0, 10, size=3)), 0.0, 10.0)
    p = tmp_path / "trajectory.json"
    save_trajectory(traj, p)
    back = load_trajectory(p)
    assert back.t0 == traj.t0 and back.tf == traj.tf
    assert np.array_equal(back.own_posts, traj.own_posts)
    for j in range(2):
        assert np.array_equal(back.feeds[j].times, traj.feeds[j].times)
        assert np.array_equal(back.rank_times[j], traj.rank_times[j])
        assert np.array_equal(back.rank_values[j], traj.rank_values[j])
    # saving the loaded copy reproduces the file exactly
    p2 = tmp_path / "again.json"
    save_trajectory(back, p2)
    assert p.read_bytes() == p2.read_bytes()
