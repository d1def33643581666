"""Persistent session: world snapshot, scratchpad, and run log on disk.

One session is one directory:

    config.json    seed + config + session id (written once)
    snapshot.json  checksummed world snapshot (atomic replace on write)
    run.log        append-only record stream (see runlog)
    scratchpad.md  agent notes, injected into the system prompt
    meta.json      turn counters
    lock           advisory single-writer lock

The CLI opens a session per invocation, so every command round-trips
through disk; the in-process harness keeps the state hot and can defer
snapshot writes to turn boundaries (the log still captures everything).
"""

from __future__ import annotations

import fcntl
import hashlib
import json
import os
from pathlib import Path
from typing import Any

from . import commands
from .commands import Command, CommandResult
from .config import BenchConfig
from .model import WorldState, deserialize_state, serialize_state, state_hash
from .runlog import LOG_SCHEMA, RunLogWriter
from .worldgen import generate_world

SNAPSHOT_SCHEMA = "ycbench.snapshot.v1"
SESSION_ENV_VAR = "YC_SESSION_DIR"


class SessionError(Exception):
    pass


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def write_snapshot(path: Path, state: WorldState) -> str:
    body = serialize_state(state)
    checksum = hashlib.sha256(body.encode()).hexdigest()
    doc = {"schema": SNAPSHOT_SCHEMA, "checksum": checksum, "state": json.loads(body)}
    _atomic_write(path, json.dumps(doc, sort_keys=True, separators=(",", ":")))
    return checksum


def read_snapshot(path: Path) -> WorldState:
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("schema") != SNAPSHOT_SCHEMA:
        raise SessionError(f"{path}: unsupported snapshot schema {doc.get('schema')!r}")
    body = json.dumps(doc["state"], sort_keys=True, separators=(",", ":"))
    checksum = hashlib.sha256(body.encode()).hexdigest()
    if checksum != doc.get("checksum"):
        raise SessionError(
            f"{path}: snapshot checksum mismatch (file corrupt); "
            "rebuild it by replaying run.log with 'yc-bench replay'"
        )
    return deserialize_state(body)


class Session:
    """Single-writer handle on a session directory."""

    def __init__(self, root: str | Path, state: WorldState, writer: RunLogWriter,
                 meta: dict[str, Any], persist_each_command: bool = True):
        self.root = Path(root)
        self.state = state
        self.writer = writer
        self.meta = meta
        self.persist_each_command = persist_each_command
        self._lock_fh = (self.root / "lock").open("w")
        try:
            fcntl.flock(self._lock_fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError:
            self._lock_fh.close()
            raise SessionError(f"{self.root}: session is locked by another writer") from None

    # -- lifecycle -------------------------------------------------------

    @classmethod
    def open_or_create(
        cls,
        root: str | Path,
        seed: int | None = None,
        config: BenchConfig | None = None,
        session_id: str | None = None,
        persist_each_command: bool = True,
    ) -> "Session":
        root = Path(root)
        snap = root / "snapshot.json"
        if snap.exists():
            state = read_snapshot(snap)
            meta = json.loads((root / "meta.json").read_text(encoding="utf-8"))
            writer = RunLogWriter(root / "run.log")
            return cls(root, state, writer, meta, persist_each_command)
        if seed is None or config is None:
            raise SessionError(f"{root}: no session here; create one with a seed and config")
        root.mkdir(parents=True, exist_ok=True)
        state = generate_world(seed, config)
        if session_id is None:
            fingerprint = hashlib.sha256(config.canonical_json().encode()).hexdigest()[:8]
            session_id = f"session-{seed}-{fingerprint}"
        (root / "config.json").write_text(
            json.dumps(
                {"session_id": session_id, "seed": seed, "config": config.to_dict()},
                sort_keys=True,
                indent=2,
            ),
            encoding="utf-8",
        )
        write_snapshot(snap, state)
        meta = {"session_id": session_id, "turn": 0}
        _atomic_write(root / "meta.json", json.dumps(meta, sort_keys=True))
        (root / "scratchpad.md").write_text("", encoding="utf-8")
        writer = RunLogWriter(root / "run.log")
        writer.append(
            {
                "type": "header",
                "schema": LOG_SCHEMA,
                "session_id": session_id,
                "seed": seed,
                "config": config.to_dict(),
                "world_hash": state_hash(state),
                "clients": [c.id for c in state.clients],
                "created_at": state.clock.timestamp.strftime("%Y-%m-%dT%H:%M"),
            }
        )
        writer.append({"type": "ledger", "turn": 0, "entry": state.ledger[0].to_dict()})
        return cls(root, state, writer, meta, persist_each_command)

    @classmethod
    def open(cls, root: str | Path, persist_each_command: bool = True) -> "Session":
        return cls.open_or_create(root, persist_each_command=persist_each_command)

    def close(self) -> None:
        self.save_snapshot()
        self.writer.close()
        fcntl.flock(self._lock_fh, fcntl.LOCK_UN)
        self._lock_fh.close()

    def save_snapshot(self) -> str:
        checksum = write_snapshot(self.root / "snapshot.json", self.state)
        _atomic_write(self.root / "meta.json", json.dumps(self.meta, sort_keys=True))
        return checksum

    # -- scratchpad ------------------------------------------------------

    @property
    def scratchpad_path(self) -> Path:
        return self.root / "scratchpad.md"

    def read_scratchpad(self) -> str:
        if not self.scratchpad_path.exists():
            return ""
        return self.scratchpad_path.read_text(encoding="utf-8")

    def _scratchpad_result(self, content: str) -> CommandResult:
        cap = self.state.config.scratchpad_cap_bytes
        size = len(content.encode("utf-8"))
        if size > cap:
            return CommandResult(
                ok=False,
                error={
                    "code": "over_cap",
                    "message": f"scratchpad would be {size} bytes; the cap is {cap}. "
                    "Compress your notes and retry.",
                },
            )
        _atomic_write(self.scratchpad_path, content)
        return CommandResult(ok=True, payload={"bytes": size, "cap": cap})

    def _run_scratchpad(self, cmd: Command) -> CommandResult:
        if self.state.outcome is not None:
            return CommandResult(
                ok=False,
                error={"code": "episode_over", "message": f"episode already ended ({self.state.outcome})"},
            )
        content = cmd.args["content"]
        if cmd.path == ("scratchpad", "write"):
            return self._scratchpad_result(content)
        existing = self.read_scratchpad()
        merged = content if not existing else existing + "\n" + content
        return self._scratchpad_result(merged)

    # -- command execution -----------------------------------------------

    def execute_line(self, line: str, turn: int | None = None, forced: bool = False) -> CommandResult:
        turn = self.meta["turn"] if turn is None else turn
        try:
            cmd = commands.parse(line)
        except commands.ParseError as exc:
            result = CommandResult(ok=False, error={"code": "parse_error", "message": exc.message})
            self._log_command(line, turn, forced, result)
            return result
        if cmd.is_scratchpad:
            result = self._run_scratchpad(cmd)
            self._log_command(line, turn, forced, result)
            return result
        ledger_before = len(self.state.ledger)
        events_before = len(self.state.event_log)
        result = commands.execute(self.state, cmd)
        for entry in self.state.ledger[ledger_before:]:
            self.writer.append({"type": "ledger", "turn": turn, "entry": entry.to_dict()})
        for entry in self.state.event_log[events_before:]:
            self.writer.append({"type": "event", "turn": turn, "event": entry})
        self._log_command(line, turn, forced, result)
        if self.persist_each_command:
            self.save_snapshot()
        return result

    def _log_command(self, line: str, turn: int, forced: bool, result: CommandResult) -> None:
        self.writer.append(
            {
                "type": "command",
                "turn": turn,
                "line": line,
                "forced": forced,
                "result": result.to_dict(),
            }
        )

    def render_turn(self) -> dict[str, Any]:
        """Start a new turn: render (and drain) the status observation."""
        self.meta["turn"] += 1
        obs = commands.render_status(self.state).to_dict()
        self.writer.append({"type": "turn", "turn": self.meta["turn"], "status": obs})
        if self.persist_each_command:
            self.save_snapshot()
        return obs

    def log_telemetry(self, record: dict[str, Any]) -> None:
        self.writer.append({"type": "telemetry", **record})

    def finish(self) -> dict[str, Any]:
        """Write the end record; returns it."""
        record = {
            "type": "end",
            "outcome": self.state.outcome or "incomplete",
            "final_funds": self.state.funds,
            "turns": self.meta["turn"],
            "final_hash": state_hash(self.state),
            "ended_at": self.state.clock.timestamp.strftime("%Y-%m-%dT%H:%M"),
        }
        self.writer.append(record)
        self.save_snapshot()
        return record


def resolve_session_root(flag_value: str | None) -> Path:
    """Session dir from --session flag or the environment, flag winning."""
    if flag_value:
        return Path(flag_value)
    env = os.environ.get(SESSION_ENV_VAR)
    if env:
        return Path(env)
    raise SessionError(f"no session selected; pass --session or set {SESSION_ENV_VAR}")
