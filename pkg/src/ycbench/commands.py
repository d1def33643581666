"""Agent-facing command grammar, execution, and observation rendering.

Observe commands are pure: they read the world and never mutate it. The
one deliberate exception lives outside this rule: ``render_status`` is the
turn-boundary observation and clears the event digest it returns. Hidden
client fields (which clients inflate work, and by how much) are never
written into any payload or error message here.
"""

from __future__ import annotations

import difflib
import math
import shlex
from dataclasses import dataclass, field
from typing import Any, Callable

from . import engine
from .engine import EngineError
from .model import (
    Domain,
    TaskRecord,
    TaskStatus,
    WorldState,
    fmt_minute,
    fmt_money,
)

GRAMMAR_VERSION = "ycbench.commands.v1"

# flag spec: name -> (required, value kind); kinds: str, int, ids
COMMAND_SPECS: dict[tuple[str, str], dict[str, tuple[bool, str]]] = {
    ("company", "status"): {},
    ("employee", "list"): {},
    ("market", "browse"): {
        "--domain": (False, "str"),
        "--reward-min-cents": (False, "int"),
        "--limit": (False, "int"),
    },
    ("task", "list"): {"--status": (False, "str")},
    ("task", "inspect"): {"--task-id": (True, "str")},
    ("client", "list"): {},
    ("client", "history"): {},
    ("finance", "ledger"): {},
    ("task", "accept"): {"--task-id": (True, "str")},
    ("task", "assign"): {"--task-id": (True, "str"), "--employees": (True, "ids")},
    ("task", "dispatch"): {"--task-id": (True, "str")},
    ("task", "cancel"): {"--task-id": (True, "str"), "--reason": (True, "str")},
    ("sim", "resume"): {},
    ("scratchpad", "write"): {"--content": (True, "str")},
    ("scratchpad", "append"): {"--content": (True, "str")},
}

OBSERVE_PATHS = {
    ("company", "status"),
    ("employee", "list"),
    ("market", "browse"),
    ("task", "list"),
    ("task", "inspect"),
    ("client", "list"),
    ("client", "history"),
    ("finance", "ledger"),
}


class ParseError(Exception):
    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


@dataclass
class Command:
    path: tuple[str, str]
    args: dict[str, Any] = field(default_factory=dict)

    @property
    def is_observe(self) -> bool:
        return self.path in OBSERVE_PATHS

    @property
    def is_scratchpad(self) -> bool:
        return self.path[0] == "scratchpad"


@dataclass
class CommandResult:
    ok: bool
    payload: dict[str, Any] | None = None
    error: dict[str, str] | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"ok": self.ok, "payload": self.payload, "error": self.error}


def _flag_key(flag: str) -> str:
    return flag.lstrip("-").replace("-", "_")


def parse(line: str) -> Command:
    try:
        tokens = shlex.split(line)
    except ValueError as exc:
        raise ParseError(f"cannot tokenize command: {exc}") from None
    if tokens and tokens[0] == "yc-bench":
        tokens = tokens[1:]
    if len(tokens) < 2:
        raise ParseError("expected a two-word command, e.g. 'company status'")
    path = (tokens[0], tokens[1])
    if path not in COMMAND_SPECS:
        guess = difflib.get_close_matches(" ".join(path), [" ".join(p) for p in COMMAND_SPECS], n=1)
        hint = f"; did you mean '{guess[0]}'?" if guess else ""
        raise ParseError(f"unknown command '{path[0]} {path[1]}'{hint}")
    spec = COMMAND_SPECS[path]
    args: dict[str, Any] = {}
    rest = tokens[2:]
    i = 0
    while i < len(rest):
        flag = rest[i]
        if flag not in spec:
            raise ParseError(f"unknown flag {flag!r} for '{path[0]} {path[1]}'")
        key = _flag_key(flag)
        if key in args:
            raise ParseError(f"duplicate flag {flag!r}")
        if i + 1 >= len(rest):
            raise ParseError(f"flag {flag!r} expects a value")
        raw = rest[i + 1]
        kind = spec[flag][1]
        if kind == "int":
            try:
                args[key] = int(raw)
            except ValueError:
                raise ParseError(f"flag {flag!r} expects an integer, got {raw!r}") from None
        elif kind == "ids":
            args[key] = [p.strip() for p in raw.split(",") if p.strip()]
        else:
            args[key] = raw
        i += 2
    for flag, (required, _) in spec.items():
        if required and _flag_key(flag) not in args:
            raise ParseError(f"'{path[0]} {path[1]}' requires the {flag} flag")
    return Command(path=path, args=args)


def format_command(cmd: Command) -> str:
    parts = list(cmd.path)
    for flag, (_, kind) in COMMAND_SPECS[cmd.path].items():
        key = _flag_key(flag)
        if key not in cmd.args:
            continue
        value = cmd.args[key]
        if kind == "ids":
            rendered = ",".join(value)
        else:
            rendered = str(value)
        parts.extend([flag, shlex.quote(rendered) if rendered else "''"])
    return " ".join(parts)


# -- observation payloads ------------------------------------------------


@dataclass
class StatusObservation:
    timestamp: str
    funds: int
    monthly_payroll: int
    runway_months: float | None
    active_task_count: int
    events: list[dict[str, Any]]

    def to_dict(self) -> dict[str, Any]:
        return {
            "timestamp": self.timestamp,
            "funds": self.funds,
            "funds_display": fmt_money(self.funds),
            "monthly_payroll": self.monthly_payroll,
            "runway_months": self.runway_months,
            "active_task_count": self.active_task_count,
            "events": self.events,
        }


def _runway_months(state: WorldState) -> float | None:
    payroll = state.monthly_payroll()
    if payroll <= 0:
        return None  # infinite runway sentinel; unreachable with a paid roster
    return round(state.funds / payroll, 2)


def render_status(state: WorldState) -> StatusObservation:
    """The turn-start observation; drains the event digest."""
    obs = StatusObservation(
        timestamp=fmt_minute(state.clock.timestamp),
        funds=state.funds,
        monthly_payroll=state.monthly_payroll(),
        runway_months=_runway_months(state),
        active_task_count=len(state.active_tasks()),
        events=list(state.event_log),
    )
    state.event_log = []
    return obs


def _estimate_deadline_days(state: WorldState, task: TaskRecord) -> int:
    cfg = state.config
    total = sum(task.domain_work.values())
    return max(cfg.deadline_min_days, -(-total // cfg.deadline_qty_per_day))


def _is_accessible(state: WorldState, task: TaskRecord) -> bool:
    client = state.find_client(task.client_id)
    if client.trust + 1e-9 < task.required_trust:
        return False
    return all(state.prestige[d] + 1e-9 >= task.required_prestige for d in task.domain_work)


def _market_row(state: WorldState, task: TaskRecord) -> dict[str, Any]:
    return {
        "id": task.id,
        "client": task.client_id,
        "domains": {d.value: q for d, q in task.domain_work.items()},
        "reward_cents": task.advertised_reward,
        "reward_display": fmt_money(task.advertised_reward),
        "required_prestige": task.required_prestige,
        "required_trust": task.required_trust,
        "est_deadline_days": _estimate_deadline_days(state, task),
        "accessible": _is_accessible(state, task),
    }


def _percent_complete(task: TaskRecord) -> float:
    return round(task.overall_fraction() * 100, 1)


def _book_row(task: TaskRecord) -> dict[str, Any]:
    return {
        "id": task.id,
        "client": task.client_id,
        "status": task.status.value,
        "domains": [d.value for d in task.domain_work],
        "percent_complete": _percent_complete(task),
        "deadline": fmt_minute(task.deadline) if task.deadline else None,
        "assignees": list(task.assignees),
    }


def _inspect_payload(state: WorldState, task: TaskRecord) -> dict[str, Any]:
    if task.status is TaskStatus.MARKET:
        doc = _market_row(state, task)
        doc["status"] = task.status.value
        doc["work_required"] = {d.value: q for d, q in task.domain_work.items()}
        return doc
    return {
        "id": task.id,
        "client": task.client_id,
        "status": task.status.value,
        "reward_cents": task.advertised_reward,
        "reward_display": fmt_money(task.advertised_reward),
        "required_prestige": task.required_prestige,
        "required_trust": task.required_trust,
        "work_advertised": {d.value: q for d, q in task.domain_work.items()},
        "work_required": {d.value: q for d, q in (task.effective_work or {}).items()},
        "work_completed": {d.value: round(q, 2) for d, q in task.progress.items()},
        "percent_complete": _percent_complete(task),
        "accepted_at": fmt_minute(task.accepted_at) if task.accepted_at else None,
        "deadline": fmt_minute(task.deadline) if task.deadline else None,
        "assignees": list(task.assignees),
    }


# -- handlers ------------------------------------------------------------


def _company_status(state: WorldState, cmd: Command) -> dict[str, Any]:
    return {
        "timestamp": fmt_minute(state.clock.timestamp),
        "funds": state.funds,
        "funds_display": fmt_money(state.funds),
        "monthly_payroll": state.monthly_payroll(),
        "monthly_payroll_display": fmt_money(state.monthly_payroll()),
        "runway_months": _runway_months(state),
        "active_task_count": len(state.active_tasks()),
        "prestige": {d.value: p for d, p in state.prestige.items()},
        "outcome": state.outcome,
    }


def _employee_list(state: WorldState, cmd: Command) -> dict[str, Any]:
    rows = []
    for emp in state.roster:
        rows.append(
            {
                "id": emp.id,
                "tier": emp.tier,
                "monthly_salary": emp.monthly_salary,
                "monthly_salary_display": fmt_money(emp.monthly_salary),
                "rates": {d.value: r for d, r in emp.rates.items()},
                "tasks_completed": emp.tasks_completed,
                "active_assignments": engine.dispatched_count(state, emp.id),
            }
        )
    return {"employees": rows}


def _market_browse(state: WorldState, cmd: Command) -> dict[str, Any]:
    domain = cmd.args.get("domain")
    if domain is not None:
        try:
            domain = Domain(domain)
        except ValueError:
            raise EngineError(
                "bad_argument", f"unknown domain {cmd.args['domain']!r}; "
                f"one of {', '.join(d.value for d in Domain)}"
            ) from None
    floor = cmd.args.get("reward_min_cents")
    rows = [
        t
        for t in state.market
        if (domain is None or domain in t.domain_work)
        and (floor is None or t.advertised_reward >= floor)
    ]
    rows.sort(key=lambda t: (-t.advertised_reward, t.serial))
    limit = state.config.browse_limit
    if cmd.args.get("limit") is not None:
        limit = max(1, min(cmd.args["limit"], limit))
    shown = rows[:limit]
    return {
        "tasks": [_market_row(state, t) for t in shown],
        "shown": len(shown),
        "matching": len(rows),
        "pool": len(state.market),
    }


def _task_list(state: WorldState, cmd: Command) -> dict[str, Any]:
    wanted = cmd.args.get("status")
    if wanted is not None:
        try:
            wanted = TaskStatus(wanted)
        except ValueError:
            raise EngineError(
                "bad_argument", f"unknown status {cmd.args['status']!r}; "
                f"one of {', '.join(s.value for s in TaskStatus)}"
            ) from None
    rows = [t for t in state.book if wanted is None or t.status is wanted]
    rows.sort(key=lambda t: t.serial)
    return {"tasks": [_book_row(t) for t in rows], "count": len(rows)}


def _task_inspect(state: WorldState, cmd: Command) -> dict[str, Any]:
    task = state.find_task(cmd.args["task_id"])
    if task is None:
        raise EngineError("unknown_task", f"no task named {cmd.args['task_id']!r}")
    return {"task": _inspect_payload(state, task)}


def _client_list(state: WorldState, cmd: Command) -> dict[str, Any]:
    rows = [
        {"id": c.id, "trust": round(c.trust, 2), "trust_tier": math.floor(c.trust + 1e-9)}
        for c in state.clients
    ]
    return {"clients": rows}


def _client_history(state: WorldState, cmd: Command) -> dict[str, Any]:
    rows = [
        {
            "id": c.id,
            "completions": c.completions,
            "failures": c.failures,
            "record": list(c.record),
        }
        for c in state.clients
    ]
    return {"clients": rows}


def _finance_ledger(state: WorldState, cmd: Command) -> dict[str, Any]:
    entries = []
    for e in state.ledger:
        d = e.to_dict()
        d["amount_display"] = fmt_money(e.amount)
        entries.append(d)
    return {"entries": entries, "count": len(entries), "total": state.funds}


def _task_accept(state: WorldState, cmd: Command) -> dict[str, Any]:
    task = engine.accept_task(state, cmd.args["task_id"])
    return {"task": _inspect_payload(state, task)}


def _task_assign(state: WorldState, cmd: Command) -> dict[str, Any]:
    task = engine.assign_task(state, cmd.args["task_id"], cmd.args["employees"])
    return {"task_id": task.id, "status": task.status.value, "assignees": list(task.assignees)}


def _task_dispatch(state: WorldState, cmd: Command) -> dict[str, Any]:
    task = engine.dispatch_task(state, cmd.args["task_id"])
    return {
        "task_id": task.id,
        "status": task.status.value,
        "assignees": list(task.assignees),
        "started_at": fmt_minute(state.clock.timestamp),
    }


def _task_cancel(state: WorldState, cmd: Command) -> dict[str, Any]:
    task = engine.cancel_task(state, cmd.args["task_id"], cmd.args["reason"])
    return {"task_id": task.id, "status": task.status.value, "reason": cmd.args["reason"]}


def _sim_resume(state: WorldState, cmd: Command) -> dict[str, Any]:
    digest = engine.resume(state)
    return {
        "advanced_to": fmt_minute(state.clock.timestamp),
        "events": digest,
        "outcome": state.outcome,
    }


HANDLERS: dict[tuple[str, str], Callable[[WorldState, Command], dict[str, Any]]] = {
    ("company", "status"): _company_status,
    ("employee", "list"): _employee_list,
    ("market", "browse"): _market_browse,
    ("task", "list"): _task_list,
    ("task", "inspect"): _task_inspect,
    ("client", "list"): _client_list,
    ("client", "history"): _client_history,
    ("finance", "ledger"): _finance_ledger,
    ("task", "accept"): _task_accept,
    ("task", "assign"): _task_assign,
    ("task", "dispatch"): _task_dispatch,
    ("task", "cancel"): _task_cancel,
    ("sim", "resume"): _sim_resume,
}


def execute(state: WorldState, cmd: Command) -> CommandResult:
    """Run one world command; engine rejections become error results."""
    if cmd.is_scratchpad:
        raise ValueError("scratchpad commands are session-level; route them via Session")
    handler = HANDLERS[cmd.path]
    try:
        return CommandResult(ok=True, payload=handler(state, cmd))
    except EngineError as exc:
        return CommandResult(ok=False, error={"code": exc.code, "message": exc.message})


def execute_line(state: WorldState, line: str) -> CommandResult:
    """Parse-and-execute convenience; parse failures become error results."""
    try:
        cmd = parse(line)
    except ParseError as exc:
        return CommandResult(ok=False, error={"code": "parse_error", "message": exc.message})
    return execute(state, cmd)
