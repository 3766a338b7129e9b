"""Step-level episode traces: JSONL serialization and replay verification.

One line per step. Floats are written with Python's shortest-round-trip repr
(what json emits), so every finite float64 survives write -> read bit-exactly.
Replay recomputes each line's reward from its logged components and the running
return from the rewards; a self-produced trace must verify with zero mismatches.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Iterator

__all__ = ["TraceError", "TraceRecord", "write_trace", "read_trace", "verify_trace"]


class TraceError(ValueError):
    """A trace file is malformed or fails replay verification."""


@dataclass(frozen=True)
class TraceRecord:
    step: int
    pos_believed: tuple[float, float]
    pos_true: tuple[float, float]
    drift_norm: float
    velocity: tuple[float, float]            # executed (clamped) command
    proposed_activate: bool
    final_activate: bool
    overridden: bool
    predicted_call_cost: float | None
    server_index: int | None
    charge_flight: float
    charge_transmission: float
    charge_compute: float
    reward_progress: float
    reward_time: float
    reward_energy: float
    reward_shield: float
    reward_waste: float
    reward_terminal: float
    reward: float
    cumulative_return: float
    guidance_left: int
    cause: str                               # Running / Goal / Depleted / Timeout

    def to_json_line(self) -> str:
        data = asdict(self)
        data["pos_believed"] = list(self.pos_believed)
        data["pos_true"] = list(self.pos_true)
        data["velocity"] = list(self.velocity)
        return json.dumps(data, sort_keys=True)


_FIELD_NAMES = {f.name for f in fields(TraceRecord)}


def _record_from_dict(data: dict, line_no: int) -> TraceRecord:
    if not isinstance(data, dict):
        raise TraceError(f"line {line_no}: expected a JSON object")
    missing = _FIELD_NAMES - data.keys()
    if missing:
        raise TraceError(f"line {line_no}: missing fields {sorted(missing)}")
    extra = data.keys() - _FIELD_NAMES
    if extra:
        raise TraceError(f"line {line_no}: unknown fields {sorted(extra)}")
    try:
        return TraceRecord(
            step=int(data["step"]),
            pos_believed=(float(data["pos_believed"][0]), float(data["pos_believed"][1])),
            pos_true=(float(data["pos_true"][0]), float(data["pos_true"][1])),
            drift_norm=float(data["drift_norm"]),
            velocity=(float(data["velocity"][0]), float(data["velocity"][1])),
            proposed_activate=bool(data["proposed_activate"]),
            final_activate=bool(data["final_activate"]),
            overridden=bool(data["overridden"]),
            predicted_call_cost=(None if data["predicted_call_cost"] is None
                                 else float(data["predicted_call_cost"])),
            server_index=(None if data["server_index"] is None
                          else int(data["server_index"])),
            charge_flight=float(data["charge_flight"]),
            charge_transmission=float(data["charge_transmission"]),
            charge_compute=float(data["charge_compute"]),
            reward_progress=float(data["reward_progress"]),
            reward_time=float(data["reward_time"]),
            reward_energy=float(data["reward_energy"]),
            reward_shield=float(data["reward_shield"]),
            reward_waste=float(data["reward_waste"]),
            reward_terminal=float(data["reward_terminal"]),
            reward=float(data["reward"]),
            cumulative_return=float(data["cumulative_return"]),
            guidance_left=int(data["guidance_left"]),
            cause=str(data["cause"]),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise TraceError(f"line {line_no}: malformed record: {exc}") from exc


def write_trace(path: str | Path, records: Iterable[TraceRecord]) -> None:
    """Write one JSONL line per step; an empty episode produces an empty file."""
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(record.to_json_line())
            fh.write("\n")


def read_trace(path: str | Path) -> Iterator[TraceRecord]:
    """Stream records from a JSONL trace, raising TraceError with the line number."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {line_no}: invalid JSON: {exc}") from exc
            yield _record_from_dict(data, line_no)


def verify_trace(records: Iterable[TraceRecord]) -> list[str]:
    """Recompute reward sums and the running return; return mismatch descriptions.

    The env computes reward as the left-to-right sum
    progress + time + energy + shield + waste + terminal and the cumulative
    return as the running sum of rewards, so both recomputations must match
    bit-exactly on a self-produced trace.
    """
    problems: list[str] = []
    cumulative = 0.0
    expected_step = None
    for record in records:
        if expected_step is not None and record.step != expected_step:
            problems.append(f"step {record.step}: expected step index {expected_step}")
        expected_step = record.step + 1
        recomputed = (record.reward_progress + record.reward_time + record.reward_energy
                      + record.reward_shield + record.reward_waste + record.reward_terminal)
        if recomputed != record.reward:
            problems.append(
                f"step {record.step}: reward {record.reward!r} != component sum {recomputed!r}")
        cumulative = cumulative + record.reward
        if cumulative != record.cumulative_return:
            problems.append(
                f"step {record.step}: cumulative_return {record.cumulative_return!r} "
                f"!= running sum {cumulative!r}")
    return problems
