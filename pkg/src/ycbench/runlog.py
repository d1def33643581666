"""Append-only run log: one JSON record per line, gap-free sequence numbers.

Record types:
  header    seed, config, session id, initial world hash, client roster
  turn      the rendered turn-start observation (digest included)
  command   one agent or forced command with its full result
  event     one engine digest entry (completion, failure, payroll, ...)
  ledger    one ledger entry as it lands
  telemetry per-turn counters and agent-supplied token/cost figures
  end       outcome, final funds, final snapshot hash

Replaying header + turn + command records through a fresh engine
reproduces the final snapshot byte for byte; everything else is derived.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable

from . import commands
from .config import BenchConfig
from .model import WorldState, state_hash
from .worldgen import generate_world

LOG_SCHEMA = "ycbench.log.v1"


class LogError(Exception):
    pass


def encode_record(record: dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class RunLogWriter:
    """Sequential writer; safe to reopen an existing log and continue."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.next_seq = 0
        if self.path.exists():
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        self.next_seq = json.loads(line)["seq"] + 1
        self._fh = self.path.open("a", encoding="utf-8")

    def append(self, record: dict[str, Any]) -> int:
        seq = self.next_seq
        self._fh.write(encode_record({"seq": seq, **record}) + "\n")
        self._fh.flush()
        self.next_seq += 1
        return seq

    def close(self) -> None:
        self._fh.close()


def read_log(path: str | Path) -> list[dict[str, Any]]:
    records = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    if not records:
        raise LogError(f"{path}: empty run log")
    for i, record in enumerate(records):
        if record.get("seq") != i:
            raise LogError(f"{path}: sequence gap at record {i} (seq={record.get('seq')})")
    if records[0].get("type") != "header":
        raise LogError(f"{path}: first record is not a header")
    return records


def replay(records: Iterable[dict[str, Any]]) -> WorldState:
    """Rebuild the final world by re-executing the logged command stream."""
    records = list(records)
    header = records[0]
    if header.get("type") != "header":
        raise LogError("replay needs a header record first")
    config = BenchConfig.from_dict(header["config"])
    state = generate_world(header["seed"], config)
    if header.get("world_hash") and state_hash(state) != header["world_hash"]:
        raise LogError("replayed initial world does not match the logged hash")
    for record in records[1:]:
        kind = record.get("type")
        if kind == "turn":
            commands.render_status(state)
        elif kind == "command":
            try:
                cmd = commands.parse(record["line"])
            except commands.ParseError:
                continue  # the original run rejected it identically
            if cmd.is_scratchpad:
                continue  # scratchpad lives outside the world state
            commands.execute(state, cmd)
    return state


def verify_replay(path: str | Path, expected_hash: str | None = None) -> str:
    """Replay a log file and check it reaches the recorded final hash.

    Finished logs carry the hash in their end record; for a truncated or
    still-running log pass the hash of the state it should land on (for
    example the live snapshot's).
    """
    records = read_log(path)
    end = records[-1]
    if expected_hash is None:
        if end.get("type") != "end":
            raise LogError(f"{path}: log has no end record (truncated run?)")
        expected_hash = end["final_hash"]
    state = replay(records)
    got = state_hash(state)
    if got != expected_hash:
        raise LogError(f"{path}: replay hash {got} != expected {expected_hash}")
    return got
