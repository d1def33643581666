"""Core state types for the startup simulation.

Conventions shared by every module:

- money is signed integer cents, summed exactly (no floats on the ledger);
- the clock has one-minute resolution; work accrual is computed analytically
  over intervals, never by stepping minutes;
- ``adversarial`` and ``scope_creep_factor`` on clients are hidden state:
  they live in the world snapshot but must never appear in any observation.

The snapshot format is canonical JSON (sorted keys, compact separators) under
a versioned schema tag, so identical histories serialize byte-identically.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Iterable

from .config import BenchConfig

STATE_SCHEMA = "ycbench.state.v1"

# Guard for float products that should land on an integer (e.g. 800 * 0.9).
_CEIL_EPS = 1e-9


class Domain(str, Enum):
    TRAINING = "training"
    INFERENCE = "inference"
    RESEARCH = "research"
    DATA_ENGINEERING = "data-engineering"


DOMAINS: tuple[Domain, ...] = tuple(Domain)


class TaskStatus(str, Enum):
    MARKET = "market"
    ACCEPTED = "accepted"
    DISPATCHED = "dispatched"
    COMPLETED = "completed"
    FAILED = "failed"
    CANCELLED = "cancelled"


ACTIVE_STATUSES = (TaskStatus.ACCEPTED, TaskStatus.DISPATCHED)


def round_half_up(x: float) -> int:
    """Round to nearest integer, halves away from zero; exact for money math."""
    if x >= 0:
        return math.floor(x + 0.5)
    return -math.floor(-x + 0.5)


def ceil_units(x: float) -> int:
    """Ceiling with a tolerance for float products a hair above an integer."""
    return math.ceil(x - _CEIL_EPS)


def fmt_money(cents: int) -> str:
    sign = "-" if cents < 0 else ""
    c = abs(cents)
    return f"{sign}${c // 100:,}.{c % 100:02d}"


def fmt_minute(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%dT%H:%M")


def parse_minute(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M")


@dataclass
class SimClock:
    timestamp: datetime
    horizon_end: datetime
    business_start_hour: int = 9
    business_end_hour: int = 18

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp": fmt_minute(self.timestamp),
            "horizon_end": fmt_minute(self.horizon_end),
            "business_start_hour": self.business_start_hour,
            "business_end_hour": self.business_end_hour,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "SimClock":
        return cls(
            timestamp=parse_minute(d["timestamp"]),
            horizon_end=parse_minute(d["horizon_end"]),
            business_start_hour=d["business_start_hour"],
            business_end_hour=d["business_end_hour"],
        )


@dataclass
class EmployeeProfile:
    id: str
    tier: str
    monthly_salary: int  # cents
    rates: dict[Domain, float]  # units per hour, in [1, rate_cap]
    rate_cap: float = 10.0
    tasks_completed: int = 0

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "tier": self.tier,
            "monthly_salary": self.monthly_salary,
            "rates": {d.value: r for d, r in self.rates.items()},
            "rate_cap": self.rate_cap,
            "tasks_completed": self.tasks_completed,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "EmployeeProfile":
        return cls(
            id=d["id"],
            tier=d["tier"],
            monthly_salary=d["monthly_salary"],
            rates={Domain(k): v for k, v in d["rates"].items()},
            rate_cap=d["rate_cap"],
            tasks_completed=d["tasks_completed"],
        )


@dataclass
class ClientProfile:
    id: str
    trust: float = 0.0
    adversarial: bool = False  # hidden: never rendered into observations
    scope_creep_factor: float = 1.0  # hidden
    completions: int = 0
    failures: int = 0
    record: list[dict[str, Any]] = field(default_factory=list)  # per-task outcomes

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "trust": self.trust,
            "adversarial": self.adversarial,
            "scope_creep_factor": self.scope_creep_factor,
            "completions": self.completions,
            "failures": self.failures,
            "record": self.record,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ClientProfile":
        return cls(
            id=d["id"],
            trust=d["trust"],
            adversarial=d["adversarial"],
            scope_creep_factor=d["scope_creep_factor"],
            completions=d["completions"],
            failures=d["failures"],
            record=list(d["record"]),
        )


def _work_to_dict(work: dict[Domain, Any] | None) -> dict[str, Any] | None:
    if work is None:
        return None
    return {d.value: q for d, q in work.items()}


def _work_from_dict(d: dict[str, Any] | None) -> dict[Domain, Any] | None:
    if d is None:
        return None
    return {Domain(k): v for k, v in d.items()}


@dataclass
class TaskRecord:
    id: str
    serial: int
    client_id: str
    domain_work: dict[Domain, int]  # advertised units per domain
    advertised_reward: int  # cents
    required_prestige: int  # 1..10
    required_trust: float  # 0 = ungated
    status: TaskStatus = TaskStatus.MARKET
    effective_work: dict[Domain, int] | None = None  # fixed at acceptance
    progress: dict[Domain, float] = field(default_factory=dict)
    accepted_at: datetime | None = None
    deadline: datetime | None = None
    assignees: list[str] = field(default_factory=list)  # kept sorted
    checkpoint_version: int = 0
    max_split: int = 0  # worst employee split observed while dispatched

    @property
    def domains(self) -> list[Domain]:
        return list(self.domain_work.keys())

    def overall_fraction(self) -> float:
        """Completed fraction: the least-finished domain bounds the task."""
        if not self.effective_work:
            return 0.0
        return min(
            (self.progress.get(d, 0.0) / q if q else 1.0)
            for d, q in self.effective_work.items()
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "serial": self.serial,
            "client_id": self.client_id,
            "domain_work": _work_to_dict(self.domain_work),
            "advertised_reward": self.advertised_reward,
            "required_prestige": self.required_prestige,
            "required_trust": self.required_trust,
            "status": self.status.value,
            "effective_work": _work_to_dict(self.effective_work),
            "progress": _work_to_dict(self.progress),
            "accepted_at": fmt_minute(self.accepted_at) if self.accepted_at else None,
            "deadline": fmt_minute(self.deadline) if self.deadline else None,
            "assignees": list(self.assignees),
            "checkpoint_version": self.checkpoint_version,
            "max_split": self.max_split,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "TaskRecord":
        return cls(
            id=d["id"],
            serial=d["serial"],
            client_id=d["client_id"],
            domain_work=_work_from_dict(d["domain_work"]),
            advertised_reward=d["advertised_reward"],
            required_prestige=d["required_prestige"],
            required_trust=d["required_trust"],
            status=TaskStatus(d["status"]),
            effective_work=_work_from_dict(d["effective_work"]),
            progress=_work_from_dict(d["progress"]) or {},
            accepted_at=parse_minute(d["accepted_at"]) if d["accepted_at"] else None,
            deadline=parse_minute(d["deadline"]) if d["deadline"] else None,
            assignees=list(d["assignees"]),
            checkpoint_version=d["checkpoint_version"],
            max_split=d["max_split"],
        )


class LedgerKind(str, Enum):
    INITIAL_CAPITAL = "initial_capital"
    TASK_REWARD = "task_reward"
    FAILURE_PENALTY = "failure_penalty"
    PAYROLL = "payroll"


@dataclass
class LedgerEntry:
    at: datetime
    kind: LedgerKind
    amount: int  # cents, signed
    reference: str  # task id or month id

    def to_dict(self) -> dict[str, Any]:
        return {
            "at": fmt_minute(self.at),
            "kind": self.kind.value,
            "amount": self.amount,
            "reference": self.reference,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "LedgerEntry":
        return cls(parse_minute(d["at"]), LedgerKind(d["kind"]), d["amount"], d["reference"])


# Event queue entries are plain tuples so the heap serializes verbatim:
# (at, priority, task_id, fraction, seq, kind, reference, version)
EVENT_PRIORITY = {"payroll": 0, "deadline": 1, "checkpoint": 2, "horizon_end": 3, "forced_advance": 4}
CHECKPOINT_FRACTIONS = (0.25, 0.5, 0.75, 1.0)

EventTuple = tuple[datetime, int, str, float, int, str, str, int]


def event_to_dict(evt: EventTuple) -> dict[str, Any]:
    at, prio, tid, frac, seq, kind, ref, version = evt
    return {
        "at": fmt_minute(at),
        "priority": prio,
        "task_id": tid,
        "fraction": frac,
        "seq": seq,
        "kind": kind,
        "reference": ref,
        "version": version,
    }


def event_from_dict(d: dict[str, Any]) -> EventTuple:
    return (
        parse_minute(d["at"]),
        d["priority"],
        d["task_id"],
        d["fraction"],
        d["seq"],
        d["kind"],
        d["reference"],
        d["version"],
    )


RNG_STREAMS = ("roster", "clients", "market", "adversary")


def seeded_streams(seed: int) -> dict[str, random.Random]:
    """One independent generator per concern, so adding a consumer to one
    stream never perturbs draws on another."""
    streams = {}
    for name in RNG_STREAMS:
        digest = hashlib.sha256(f"{seed}:{name}".encode()).digest()
        streams[name] = random.Random(int.from_bytes(digest[:8], "big"))
    return streams


def _rng_state_to_json(state: tuple) -> list:
    version, internal, gauss_next = state
    return [version, list(internal), gauss_next]


def _rng_state_from_json(data: list) -> tuple:
    version, internal, gauss_next = data
    return (version, tuple(internal), gauss_next)


@dataclass
class WorldState:
    config: BenchConfig
    seed: int
    clock: SimClock
    funds: int  # cents; always equals the ledger sum
    roster: list[EmployeeProfile]
    clients: list[ClientProfile]
    market: list[TaskRecord]
    book: list[TaskRecord]
    prestige: dict[Domain, float]
    ledger: list[LedgerEntry]
    events: list[EventTuple]  # heap array, serialized verbatim
    event_seq: int
    rng: dict[str, random.Random]
    event_log: list[dict[str, Any]] = field(default_factory=list)  # digest since last observation
    next_task_serial: int = 1
    outcome: str | None = None  # None while active, else "bankrupt" | "horizon"

    # -- lookups ---------------------------------------------------------

    def find_task(self, task_id: str) -> TaskRecord | None:
        for t in self.market:
            if t.id == task_id:
                return t
        for t in self.book:
            if t.id == task_id:
                return t
        return None

    def find_employee(self, emp_id: str) -> EmployeeProfile | None:
        for e in self.roster:
            if e.id == emp_id:
                return e
        return None

    def find_client(self, client_id: str) -> ClientProfile | None:
        for c in self.clients:
            if c.id == client_id:
                return c
        return None

    def active_tasks(self) -> list[TaskRecord]:
        return [t for t in self.book if t.status in ACTIVE_STATUSES]

    def dispatched_tasks(self) -> list[TaskRecord]:
        return [t for t in self.book if t.status is TaskStatus.DISPATCHED]

    def monthly_payroll(self) -> int:
        return sum(e.monthly_salary for e in self.roster)

    # -- serialization ---------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        return {
            "schema": STATE_SCHEMA,
            "config": self.config.to_dict(),
            "seed": self.seed,
            "clock": self.clock.to_dict(),
            "funds": self.funds,
            "roster": [e.to_dict() for e in self.roster],
            "clients": [c.to_dict() for c in self.clients],
            "market": [t.to_dict() for t in self.market],
            "book": [t.to_dict() for t in self.book],
            "prestige": {d.value: p for d, p in self.prestige.items()},
            "ledger": [e.to_dict() for e in self.ledger],
            "events": [event_to_dict(e) for e in self.events],
            "event_seq": self.event_seq,
            "rng": {name: _rng_state_to_json(r.getstate()) for name, r in self.rng.items()},
            "event_log": self.event_log,
            "next_task_serial": self.next_task_serial,
            "outcome": self.outcome,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "WorldState":
        if d.get("schema") != STATE_SCHEMA:
            raise ValueError(f"unsupported state schema: {d.get('schema')!r}")
        rng = {}
        for name, data in d["rng"].items():
            r = random.Random()
            r.setstate(_rng_state_from_json(data))
            rng[name] = r
        return cls(
            config=BenchConfig.from_dict(d["config"]),
            seed=d["seed"],
            clock=SimClock.from_dict(d["clock"]),
            funds=d["funds"],
            roster=[EmployeeProfile.from_dict(e) for e in d["roster"]],
            clients=[ClientProfile.from_dict(c) for c in d["clients"]],
            market=[TaskRecord.from_dict(t) for t in d["market"]],
            book=[TaskRecord.from_dict(t) for t in d["book"]],
            prestige={Domain(k): v for k, v in d["prestige"].items()},
            ledger=[LedgerEntry.from_dict(e) for e in d["ledger"]],
            events=[event_from_dict(e) for e in d["events"]],
            event_seq=d["event_seq"],
            rng=rng,
            event_log=list(d["event_log"]),
            next_task_serial=d["next_task_serial"],
            outcome=d["outcome"],
        )


def serialize_state(state: WorldState) -> str:
    return json.dumps(state.to_dict(), sort_keys=True, separators=(",", ":"))


def deserialize_state(text: str) -> WorldState:
    return WorldState.from_dict(json.loads(text))


def state_hash(state: WorldState) -> str:
    return hashlib.sha256(serialize_state(state).encode()).hexdigest()


def copy_state(state: WorldState) -> WorldState:
    """Immutable-snapshot stand-in: a full round-trip copy."""
    return deserialize_state(serialize_state(state))


def funds_from_ledger(ledger: Iterable[LedgerEntry]) -> int:
    entries = list(ledger)
    if not entries or entries[0].kind is not LedgerKind.INITIAL_CAPITAL:
        raise ValueError("ledger must start with an initial_capital entry")
    return sum(e.amount for e in entries)


def validate(state: WorldState) -> list[str]:
    """Return a description of every broken invariant; empty list means healthy.

    Used as a global check by the test suites; never raises.
    """
    cfg = state.config
    out: list[str] = []

    if state.clock.timestamp > state.clock.horizon_end:
        out.append("clock: timestamp past horizon_end")

    if len(state.roster) != cfg.employees:
        out.append(f"roster: size {len(state.roster)} != configured {cfg.employees}")
    for e in state.roster:
        for d, r in e.rates.items():
            if not (1.0 - 1e-9 <= r <= e.rate_cap + 1e-9):
                out.append(f"employee {e.id}: rate[{d.value}]={r} outside [1, {e.rate_cap}]")
        if e.monthly_salary <= 0:
            out.append(f"employee {e.id}: non-positive salary")

    for c in state.clients:
        if not (0.0 <= c.trust <= cfg.trust_max + 1e-9):
            out.append(f"client {c.id}: trust={c.trust} outside [0, {cfg.trust_max}]")
        if not c.adversarial and c.scope_creep_factor != 1.0:
            out.append(f"client {c.id}: non-adversarial creep factor {c.scope_creep_factor}")
        if c.adversarial and c.scope_creep_factor < cfg.scope_creep_floor:
            out.append(f"client {c.id}: creep factor below floor")

    for d in DOMAINS:
        p = state.prestige.get(d)
        if p is None:
            out.append(f"prestige: missing domain {d.value}")
        elif not (cfg.prestige_min - 1e-9 <= p <= cfg.prestige_max + 1e-9):
            out.append(f"prestige[{d.value}]={p} outside [{cfg.prestige_min}, {cfg.prestige_max}]")

    for t in state.market:
        if t.status is not TaskStatus.MARKET:
            out.append(f"task {t.id}: non-market status in market pool")
        if t.accepted_at is not None or t.deadline is not None:
            out.append(f"task {t.id}: market task carries acceptance fields")
    for t in state.book:
        if t.status is TaskStatus.MARKET:
            out.append(f"task {t.id}: market status in book")
        if t.accepted_at is None or t.deadline is None:
            out.append(f"task {t.id}: booked task missing acceptance fields")
        if t.effective_work is None:
            out.append(f"task {t.id}: booked task missing effective work")
        else:
            for d, q in t.effective_work.items():
                if t.progress.get(d, 0.0) > q + 1e-6:
                    out.append(f"task {t.id}: progress exceeds effective work in {d.value}")
        if t.status is TaskStatus.DISPATCHED and not t.assignees:
            # Dispatch requires assignees; reassignment may empty them later,
            # which is allowed (the task simply accrues nothing).
            pass

    try:
        total = funds_from_ledger(state.ledger)
        if total != state.funds:
            out.append(f"ledger: sum {total} != funds {state.funds}")
    except ValueError as exc:
        out.append(f"ledger: {exc}")

    last = None
    for evt in sorted(state.events):
        if last is not None and evt[:4] < last[:4]:
            out.append("events: ordering key regression")
        last = evt

    return out
