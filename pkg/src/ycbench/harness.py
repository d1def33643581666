"""Episode runner: builds turn envelopes, talks to an agent, enforces
auto-advance, and records telemetry.

A turn is one envelope exchange. Wire agents get exactly one envelope and
answer with one command batch; built-in policies receive an ``execute``
callback instead so they can react to a result (the greedy baseline reads
its market browse before accepting) while still counting as one turn.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import socket
import subprocess
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Protocol

from . import commands
from .config import BenchConfig
from .model import Domain, state_hash
from .session import Session

WIRE_SCHEMA = "ycbench.wire.v1"

ExecuteFn = Callable[[str], dict[str, Any]]


def load_system_prompt() -> str:
    return resources.files("ycbench").joinpath("prompts/system_prompt.md").read_text("utf-8")


def build_system_prompt(base: str, scratchpad: str) -> str:
    """Inject the scratchpad; it appears exactly once, at the end."""
    body = scratchpad.strip() or "(empty)"
    return f"{base.rstrip()}\n\n## Scratchpad\n\n{body}\n"


def truncate_history(history: list[dict[str, Any]], k: int) -> list[dict[str, Any]]:
    """Most recent k turn pairs; older turns are dropped, not summarized."""
    if k < 1:
        raise ValueError("context window must be at least 1 turn")
    return history[-k:]


@dataclass
class TurnEnvelope:
    turn: int
    system_prompt: str
    history: list[dict[str, Any]]
    status: dict[str, Any]

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": WIRE_SCHEMA,
            "type": "turn",
            "turn": self.turn,
            "system_prompt": self.system_prompt,
            "history": self.history,
            "status": self.status,
        }


class Agent(Protocol):
    def turn(self, envelope: TurnEnvelope, execute: ExecuteFn) -> dict[str, Any] | None:
        """Play one turn; optionally return telemetry (tokens, cost)."""

    def finish(self, summary: dict[str, Any]) -> None:
        ...


# -- built-in policies ---------------------------------------------------


class SilentAgent:
    """Issues nothing; exists to exercise the auto-advance path."""

    def turn(self, envelope: TurnEnvelope, execute: ExecuteFn) -> None:
        return None

    def finish(self, summary: dict[str, Any]) -> None:
        return None


class GreedyBaseline:
    """Accept the top-reward accessible task, staff everyone, advance.

    Never inspects, never reads client history, never writes the
    scratchpad; skips gate-violating tasks using the browse annotations.
    The plain browse page is mostly locked premium tasks early on, so
    when it shows nothing accessible the policy pages through the
    per-domain views before giving up and just advancing the clock.
    """

    def __init__(self, employees: int = 8):
        self.employee_ids = [f"Emp_{i}" for i in range(1, employees + 1)]

    @staticmethod
    def _accessible(result: dict[str, Any]) -> list[dict[str, Any]]:
        rows = (result.get("payload") or {}).get("tasks", []) if result.get("ok") else []
        return [row for row in rows if row.get("accessible")]

    def turn(self, envelope: TurnEnvelope, execute: ExecuteFn) -> None:
        rows = self._accessible(execute("market browse"))
        if not rows:
            for domain in Domain:
                rows.extend(self._accessible(execute(f"market browse --domain {domain.value}")))
        if not rows:
            execute("sim resume")
            return None
        pick = max(rows, key=lambda row: (row["reward_cents"], row["id"]))
        task_id = pick["id"]
        execute(f"task accept --task-id {task_id}")
        execute(f"task assign --task-id {task_id} --employees {','.join(self.employee_ids)}")
        execute(f"task dispatch --task-id {task_id}")
        execute("sim resume")
        return None

    def finish(self, summary: dict[str, Any]) -> None:
        return None


BUILTIN_AGENTS = {"greedy": GreedyBaseline, "silent": SilentAgent}


def make_builtin(name: str, config: BenchConfig) -> Agent:
    if name not in BUILTIN_AGENTS:
        raise ValueError(f"unknown builtin agent {name!r}; one of {sorted(BUILTIN_AGENTS)}")
    if name == "greedy":
        return GreedyBaseline(employees=config.employees)
    return BUILTIN_AGENTS[name]()


# -- wire transports -----------------------------------------------------


class TransportError(Exception):
    pass


class _LineChannel:
    """Newline-delimited JSON over a readable/writable fd pair."""

    def __init__(self, read_fd: int, write, timeout: float):
        self.read_fd = read_fd
        self.write = write
        self.timeout = timeout
        self._buffer = b""

    def send(self, message: dict[str, Any]) -> None:
        self.write(json.dumps(message, sort_keys=True) + "\n")

    def receive(self) -> dict[str, Any] | None:
        deadline = time.monotonic() + self.timeout
        while b"\n" not in self._buffer:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            ready, _, _ = select.select([self.read_fd], [], [], remaining)
            if not ready:
                return None
            chunk = os.read(self.read_fd, 65536)
            if not chunk:
                return None  # EOF
            self._buffer += chunk
        line, _, self._buffer = self._buffer.partition(b"\n")
        return json.loads(line.decode("utf-8"))


class WireAgent:
    """One envelope out, one command batch in, per turn."""

    def __init__(self, channel: _LineChannel):
        self.channel = channel

    def turn(self, envelope: TurnEnvelope, execute: ExecuteFn) -> dict[str, Any] | None:
        self.channel.send(envelope.to_dict())
        reply = self.channel.receive()
        if reply is None:
            return {"error": "transport timeout or closed; playing an empty turn"}
        if reply.get("type") != "commands" or not isinstance(reply.get("commands"), list):
            return {"error": f"malformed reply of type {reply.get('type')!r}"}
        for line in reply["commands"]:
            if isinstance(line, str):
                execute(line)
        telemetry = reply.get("telemetry")
        return telemetry if isinstance(telemetry, dict) else None

    def finish(self, summary: dict[str, Any]) -> None:
        try:
            self.channel.send({"schema": WIRE_SCHEMA, "type": "end", **summary})
        except (OSError, ValueError):
            pass


class StdioAgent(WireAgent):
    """Child process speaking the wire protocol on stdin/stdout."""

    def __init__(self, command: str | list[str], timeout: float = 120.0):
        argv = shlex.split(command) if isinstance(command, str) else command
        self.process = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=False, bufsize=0
        )
        channel = _LineChannel(
            self.process.stdout.fileno(),
            lambda text: (self.process.stdin.write(text.encode("utf-8")), self.process.stdin.flush()),
            timeout,
        )
        super().__init__(channel)

    def finish(self, summary: dict[str, Any]) -> None:
        super().finish(summary)
        try:
            self.process.stdin.close()
        except OSError:
            pass
        try:
            self.process.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self.process.kill()


class SocketAgent(WireAgent):
    """Agent already listening on a local TCP port."""

    def __init__(self, host: str, port: int, timeout: float = 120.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self.sock.setblocking(True)
        channel = _LineChannel(
            self.sock.fileno(), lambda text: self.sock.sendall(text.encode("utf-8")), timeout
        )
        super().__init__(channel)

    def finish(self, summary: dict[str, Any]) -> None:
        super().finish(summary)
        self.sock.close()


# -- episode loop --------------------------------------------------------


@dataclass
class TurnTelemetry:
    turn: int
    commands: int
    forced: bool
    tokens_in: int | None = None
    tokens_out: int | None = None
    cost_usd: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "turn": self.turn,
            "commands": self.commands,
            "forced": self.forced,
            "tokens_in": self.tokens_in,
            "tokens_out": self.tokens_out,
            "cost_usd": self.cost_usd,
        }


@dataclass
class EpisodeReport:
    outcome: str
    final_funds: int
    turn_count: int
    seed: int
    final_hash: str
    session: str
    turns: list[TurnTelemetry] = field(default_factory=list)

    @property
    def total_cost_usd(self) -> float | None:
        costs = [t.cost_usd for t in self.turns if t.cost_usd is not None]
        return round(sum(costs), 6) if costs else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "outcome": self.outcome,
            "final_funds": self.final_funds,
            "turn_count": self.turn_count,
            "seed": self.seed,
            "final_hash": self.final_hash,
            "session": self.session,
            "total_cost_usd": self.total_cost_usd,
            "turns": [t.to_dict() for t in self.turns],
        }

    def canonical_json(self) -> str:
        """Seed-determined content only: no filesystem paths, no wall clock."""
        doc = self.to_dict()
        doc.pop("session")
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def run_episode(
    session_root: str | Path,
    seed: int,
    config: BenchConfig,
    agent: Agent,
    context_window: int | None = None,
    max_turns: int | None = None,
    persist_snapshots: bool = False,
) -> EpisodeReport:
    """Drive one full episode; returns the report (also logged to the session)."""
    session = Session.open_or_create(
        session_root, seed=seed, config=config, persist_each_command=persist_snapshots
    )
    window = context_window or config.context_window
    base_prompt = load_system_prompt()
    history: list[dict[str, Any]] = []
    telemetry: list[TurnTelemetry] = []
    idle_streak = 0
    try:
        while session.state.outcome is None and (max_turns is None or session.meta["turn"] < max_turns):
            status = session.render_turn()
            turn_no = session.meta["turn"]
            envelope = TurnEnvelope(
                turn=turn_no,
                system_prompt=build_system_prompt(base_prompt, session.read_scratchpad()),
                history=truncate_history(history, window),
                status=status,
            )
            executed: list[tuple[str, dict[str, Any]]] = []
            resumed = False

            def execute(line: str) -> dict[str, Any]:
                nonlocal resumed
                if len(executed) >= config.max_commands_per_turn:
                    dropped = commands.CommandResult(
                        ok=False,
                        error={
                            "code": "command_cap",
                            "message": f"turn command cap ({config.max_commands_per_turn}) reached; "
                            "command dropped",
                        },
                    )
                    session._log_command(line, turn_no, False, dropped)
                    return dropped.to_dict()
                result = session.execute_line(line, turn=turn_no).to_dict()
                executed.append((line, result))
                if result["ok"] and _is_resume(line):
                    resumed = True
                return result

            started = time.perf_counter()
            agent_meta = agent.turn(envelope, execute)
            wall_ms = int((time.perf_counter() - started) * 1000)

            forced = False
            if not resumed:
                idle_streak += 1
            else:
                idle_streak = 0
            if session.state.outcome is None and idle_streak >= config.auto_advance_turns:
                forced = True
                result = session.execute_line("sim resume", turn=turn_no, forced=True).to_dict()
                executed.append(("sim resume", result))
                idle_streak = 0

            history.append(
                {
                    "turn": turn_no,
                    "commands": [line for line, _ in executed],
                    "results": [result for _, result in executed],
                }
            )
            agent_meta = agent_meta or {}
            record = TurnTelemetry(
                turn=turn_no,
                commands=len(executed) - (1 if forced else 0),
                forced=forced,
                tokens_in=agent_meta.get("tokens_in"),
                tokens_out=agent_meta.get("tokens_out"),
                cost_usd=agent_meta.get("cost_usd"),
            )
            telemetry.append(record)
            session.log_telemetry(
                {"turn": turn_no, **record.to_dict(), "wall_ms": wall_ms, "agent": agent_meta or None}
            )
        outcome = session.state.outcome or "incomplete"
        end = session.finish()
        report = EpisodeReport(
            outcome=outcome,
            final_funds=session.state.funds,
            turn_count=session.meta["turn"],
            seed=seed,
            final_hash=end["final_hash"],
            session=str(Path(session_root)),
            turns=telemetry,
        )
        agent.finish({"outcome": outcome, "final_funds": session.state.funds})
        return report
    finally:
        session.close()


def _is_resume(line: str) -> bool:
    try:
        return commands.parse(line).path == ("sim", "resume")
    except commands.ParseError:
        return False


# -- wire conformance ----------------------------------------------------


def check_wire_conformance(agent: Agent, turns: int = 3) -> list[str]:
    """Exercise an agent transport against scripted envelopes; returns problems.

    Drives synthetic turns (no world behind them) and checks the agent
    answers each envelope with string command lines only.
    """
    problems: list[str] = []
    for turn in range(1, turns + 1):
        batch: list[str] = []

        def execute(line: str) -> dict[str, Any]:
            if not isinstance(line, str):
                problems.append(f"turn {turn}: non-string command {line!r}")
                return {"ok": False, "payload": None, "error": {"code": "bad_line", "message": ""}}
            batch.append(line)
            return {"ok": True, "payload": {"echo": line}, "error": None}

        envelope = TurnEnvelope(
            turn=turn,
            system_prompt=build_system_prompt(load_system_prompt(), ""),
            history=[],
            status={
                "timestamp": "2025-01-06T09:00",
                "funds": 20_000_000,
                "funds_display": "$200,000.00",
                "monthly_payroll": 4_000_000,
                "runway_months": 5.0,
                "active_task_count": 0,
                "events": [],
            },
        )
        meta = agent.turn(envelope, execute)
        if meta is not None and not isinstance(meta, dict):
            problems.append(f"turn {turn}: telemetry is not an object: {meta!r}")
    agent.finish({"outcome": "horizon", "final_funds": 20_000_000})
    return problems
