"""Trace serialization: JSONL round trips bit-exactly, parse errors carry
line numbers, and verify_trace catches tampered rewards, broken running
sums, and step gaps."""

from __future__ import annotations

import dataclasses

import pytest

from toolsched.env import GreedyPolicy
from toolsched.trace import TraceError, read_trace, verify_trace, write_trace

from conftest import run_episode


@pytest.fixture()
def records(bundled_cfg):
    env, _ = run_episode(bundled_cfg, GreedyPolicy(), episode_index=1,
                         shield_on=True, record_trace=True)
    recs = env.trace_records
    assert len(recs) > 5
    return recs


def test_round_trip_is_bit_exact(records, tmp_path):
    path = tmp_path / "episode.jsonl"
    write_trace(path, records)
    back = list(read_trace(path))
    assert back == records


def test_self_produced_trace_verifies_clean(records):
    assert verify_trace(records) == []


def test_empty_trace(tmp_path):
    path = tmp_path / "empty.jsonl"
    write_trace(path, [])
    assert path.read_text() == ""
    assert list(read_trace(path)) == []
    assert verify_trace([]) == []


def test_blank_lines_are_skipped(records, tmp_path):
    path = tmp_path / "gappy.jsonl"
    lines = [r.to_json_line() for r in records]
    path.write_text(lines[0] + "\n\n" + "\n".join(lines[1:]) + "\n")
    assert list(read_trace(path)) == records


def test_invalid_json_reports_the_line_number(records, tmp_path):
    path = tmp_path / "broken.jsonl"
    lines = [r.to_json_line() for r in records]
    lines[2] = lines[2][:-8]                       # truncate mid-object
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(TraceError, match="line 3"):
        list(read_trace(path))


def test_missing_field_is_rejected(records, tmp_path):
    import json
    path = tmp_path / "missing.jsonl"
    data = json.loads(records[0].to_json_line())
    del data["reward"]
    path.write_text(json.dumps(data) + "\n")
    with pytest.raises(TraceError, match="missing fields.*reward"):
        list(read_trace(path))


def test_unknown_field_is_rejected(records, tmp_path):
    import json
    path = tmp_path / "extra.jsonl"
    data = json.loads(records[0].to_json_line())
    data["altitude"] = 3.0
    path.write_text(json.dumps(data) + "\n")
    with pytest.raises(TraceError, match="unknown fields.*altitude"):
        list(read_trace(path))


def test_non_object_line_is_rejected(tmp_path):
    path = tmp_path / "scalar.jsonl"
    path.write_text("[1, 2, 3]\n")
    with pytest.raises(TraceError, match="line 1.*JSON object"):
        list(read_trace(path))


def test_verify_catches_a_tampered_reward(records):
    tampered = list(records)
    tampered[4] = dataclasses.replace(tampered[4],
                                      reward=tampered[4].reward + 1e-9)
    problems = verify_trace(tampered)
    assert any("component sum" in p for p in problems)


def test_verify_catches_a_broken_running_sum(records):
    tampered = list(records)
    tampered[3] = dataclasses.replace(
        tampered[3], cumulative_return=tampered[3].cumulative_return + 0.5)
    problems = verify_trace(tampered)
    assert any("running sum" in p for p in problems)


def test_verify_catches_a_step_gap(records):
    gapped = records[:3] + records[4:]
    problems = verify_trace(gapped)
    assert any("expected step index 3" in p for p in problems)
