"""The transition function: command effects, event-driven time, economics.

One rule everywhere: state changes happen either inside a command handler
or inside exactly one popped event, never in between. Work accrues
analytically over the interval between the current clock and the event
being processed, so the order of operations is fully reproducible.
"""

from __future__ import annotations

import heapq
import math
from datetime import timedelta
from fractions import Fraction
from statistics import fmean
from typing import Any

from .model import (
    ACTIVE_STATUSES,
    CHECKPOINT_FRACTIONS,
    EVENT_PRIORITY,
    Domain,
    EmployeeProfile,
    LedgerEntry,
    LedgerKind,
    TaskRecord,
    TaskStatus,
    WorldState,
    ceil_units,
    fmt_minute,
    fmt_money,
)
from .worktime import add_business_hours, business_hours_between
from .worldgen import next_payroll_at, payroll_event, replenish_market

RATE_RESOLUTION = 2
_GATE_EPS = 1e-9  # float-noise guard for trust/prestige threshold comparisons
_DONE_EPS = 1e-6  # units; progress within this of the requirement counts as done


class EngineError(Exception):
    """A rejected command or impossible transition; never hidden-field leaking."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


def fmt_duration(minutes: int) -> str:
    minutes = max(0, minutes)
    days, rem = divmod(minutes, 1440)
    hours, mins = divmod(rem, 60)
    if days:
        return f"{days}d {hours}h"
    if hours:
        return f"{hours}h {mins}m"
    return f"{mins}m"


def _money_round(x: Fraction) -> int:
    return math.floor(x + Fraction(1, 2))


def dispatched_count(state: WorldState, emp_id: str) -> int:
    return sum(1 for t in state.dispatched_tasks() if emp_id in t.assignees)


def effective_rate(employee: EmployeeProfile, domain: Domain, active_task_count: int) -> float:
    """Throughput on one task: the base rate split across concurrent tasks."""
    if active_task_count < 1:
        raise EngineError("no_active_tasks", "effective rate undefined for zero active tasks")
    return employee.rates[domain] / active_task_count


def task_rate(state: WorldState, task: TaskRecord, domain: Domain) -> float:
    """Combined units-per-hour all assignees contribute to one task domain."""
    total = 0.0
    for emp_id in task.assignees:
        emp = state.find_employee(emp_id)
        n = dispatched_count(state, emp_id)
        total += effective_rate(emp, domain, max(n, 1))
    return total


def _log_event(state: WorldState, kind: str, text: str, **fields: Any) -> None:
    entry = {"at": fmt_minute(state.clock.timestamp), "kind": kind, "text": text}
    entry.update(fields)
    state.event_log.append(entry)


# -- work accrual --------------------------------------------------------


def accrue_work(state: WorldState, start, end) -> None:
    """Advance every dispatched task by its assignees' business-hour output."""
    cfg = state.config
    hours = business_hours_between(start, end, cfg.business_start_hour, cfg.business_end_hour)
    for task in state.dispatched_tasks():
        if task.assignees:
            split = max(dispatched_count(state, e) for e in task.assignees)
            task.max_split = max(task.max_split, split)
        if hours <= 0 or not task.assignees:
            continue
        for domain, required in task.effective_work.items():
            rate = task_rate(state, task, domain)
            done = task.progress.get(domain, 0.0) + rate * hours
            task.progress[domain] = min(float(required), done)


def _is_complete(task: TaskRecord) -> bool:
    return all(
        task.progress.get(d, 0.0) >= q - _DONE_EPS for d, q in (task.effective_work or {}).items()
    )


# -- checkpoint scheduling -----------------------------------------------


def _schedule_checkpoints(state: WorldState, task: TaskRecord) -> None:
    if task.status is not TaskStatus.DISPATCHED or not task.assignees:
        return
    cfg = state.config
    done_fraction = task.overall_fraction()
    rates = {d: task_rate(state, task, d) for d in task.effective_work}
    for fraction in CHECKPOINT_FRACTIONS:
        if fraction <= done_fraction + 1e-9:
            continue
        hours_needed = 0.0
        for domain, required in task.effective_work.items():
            missing = fraction * required - task.progress.get(domain, 0.0)
            if missing > 0:
                hours_needed = max(hours_needed, missing / rates[domain])
        at = add_business_hours(
            state.clock.timestamp, hours_needed, cfg.business_start_hour, cfg.business_end_hour
        )
        evt = (
            at,
            EVENT_PRIORITY["checkpoint"],
            task.id,
            fraction,
            state.event_seq,
            "checkpoint",
            task.id,
            task.checkpoint_version,
        )
        state.event_seq += 1
        heapq.heappush(state.events, evt)


def reschedule_checkpoints(state: WorldState) -> None:
    """Drop every pending checkpoint and rebuild from current rates.

    Called whenever assignment topology changes; version tags make any
    event popped out of an older schedule a no-op.
    """
    state.events = [e for e in state.events if e[5] != "checkpoint"]
    heapq.heapify(state.events)
    for task in state.dispatched_tasks():
        task.checkpoint_version += 1
        _schedule_checkpoints(state, task)


# -- command-facing operations -------------------------------------------


def _require_active(state: WorldState) -> None:
    if state.outcome is not None:
        raise EngineError("episode_over", f"episode already ended ({state.outcome})")


def _find_booked(state: WorldState, task_id: str) -> TaskRecord:
    task = state.find_task(task_id)
    if task is None:
        raise EngineError("unknown_task", f"no task named {task_id!r}")
    return task


def accept_task(state: WorldState, task_id: str) -> TaskRecord:
    _require_active(state)
    cfg = state.config
    task = _find_booked(state, task_id)
    if task.status is not TaskStatus.MARKET:
        raise EngineError("bad_status", f"{task_id} is not on the market (status {task.status.value})")
    for domain in task.domain_work:
        have = state.prestige[domain]
        if have + _GATE_EPS < task.required_prestige:
            raise EngineError(
                "prestige_gate",
                f"{task_id} requires prestige {task.required_prestige} in {domain.value}; "
                f"company has {have:g}",
            )
    client = state.find_client(task.client_id)
    if client.trust + _GATE_EPS < task.required_trust:
        raise EngineError(
            "trust_gate",
            f"{task_id} requires trust {task.required_trust:g} with {client.id}; "
            f"current trust is {client.trust:g}",
        )
    reduction = 1.0 - cfg.trust_work_reduction * client.trust / cfg.trust_max
    task.effective_work = {
        d: ceil_units(q * reduction * client.scope_creep_factor) for d, q in task.domain_work.items()
    }
    task.progress = {d: 0.0 for d in task.domain_work}
    total_advertised = sum(task.domain_work.values())
    days = max(cfg.deadline_min_days, -(-total_advertised // cfg.deadline_qty_per_day))
    task.accepted_at = state.clock.timestamp
    task.deadline = state.clock.timestamp + timedelta(days=days)
    task.status = TaskStatus.ACCEPTED
    state.market.remove(task)
    state.book.append(task)
    evt = (
        task.deadline,
        EVENT_PRIORITY["deadline"],
        task.id,
        0.0,
        state.event_seq,
        "deadline",
        task.id,
        0,
    )
    state.event_seq += 1
    heapq.heappush(state.events, evt)
    return task


def assign_task(state: WorldState, task_id: str, employee_ids: list[str]) -> TaskRecord:
    _require_active(state)
    task = _find_booked(state, task_id)
    if task.status not in ACTIVE_STATUSES:
        raise EngineError("bad_status", f"{task_id} is not assignable (status {task.status.value})")
    for emp_id in employee_ids:
        if state.find_employee(emp_id) is None:
            raise EngineError("unknown_employee", f"no employee named {emp_id!r}")
    new = sorted(set(employee_ids))
    if new == task.assignees:
        return task
    touched = set(task.assignees) | set(new)
    task.assignees = new
    if task.status is TaskStatus.DISPATCHED or any(dispatched_count(state, e) for e in touched):
        reschedule_checkpoints(state)
    if task.status is TaskStatus.DISPATCHED and task.assignees:
        task.max_split = max(task.max_split, max(dispatched_count(state, e) for e in task.assignees))
    return task


def dispatch_task(state: WorldState, task_id: str) -> TaskRecord:
    _require_active(state)
    task = _find_booked(state, task_id)
    if task.status is not TaskStatus.ACCEPTED:
        raise EngineError("bad_status", f"{task_id} is not dispatchable (status {task.status.value})")
    if not task.assignees:
        raise EngineError("no_assignees", f"{task_id} has no assigned employees")
    task.status = TaskStatus.DISPATCHED
    reschedule_checkpoints(state)
    task.max_split = max(task.max_split, max(dispatched_count(state, e) for e in task.assignees))
    return task


def cancel_task(state: WorldState, task_id: str, reason: str) -> TaskRecord:
    _require_active(state)
    cfg = state.config
    task = _find_booked(state, task_id)
    if task.status not in ACTIVE_STATUSES:
        raise EngineError("bad_status", f"{task_id} cannot be cancelled (status {task.status.value})")
    was_dispatched = task.status is TaskStatus.DISPATCHED
    task.status = TaskStatus.CANCELLED
    penalty = cfg.cancel_penalty_factor * cfg.prestige_gain
    for domain in task.domain_work:
        state.prestige[domain] = max(cfg.prestige_min, state.prestige[domain] - penalty)
    if was_dispatched:
        reschedule_checkpoints(state)
    return task


# -- event processing ----------------------------------------------------


def _mean_prestige(state: WorldState, task: TaskRecord) -> float:
    return fmean(state.prestige[d] for d in task.effective_work)


def payout_amount(state: WorldState, task: TaskRecord) -> int:
    cfg = state.config
    prestige = _mean_prestige(state, task)
    scale = (
        Fraction(str(cfg.reward_scale))
        * Fraction(prestige - cfg.prestige_min)
        / Fraction(cfg.prestige_max - cfg.prestige_min)
    )
    return _money_round(Fraction(task.advertised_reward) * (1 + scale))


def _complete_task(state: WorldState, task: TaskRecord) -> None:
    cfg = state.config
    now = state.clock.timestamp
    for domain, required in task.effective_work.items():
        task.progress[domain] = float(required)
    payout = payout_amount(state, task)
    state.ledger.append(LedgerEntry(now, LedgerKind.TASK_REWARD, payout, task.id))
    state.funds += payout
    for domain in task.effective_work:
        state.prestige[domain] = min(cfg.prestige_max, state.prestige[domain] + cfg.prestige_gain)
    client = state.find_client(task.client_id)
    client.trust = min(cfg.trust_max, client.trust + cfg.trust_max / cfg.trust_build_rate)
    client.completions += 1
    client.record.append({"task": task.id, "at": fmt_minute(now), "outcome": "completed"})
    for other in state.clients:
        if other.id != client.id:
            other.trust = max(0.0, other.trust - cfg.focus_pressure)
    bump = 1 + Fraction(str(cfg.salary_bump_rate))
    bumped = []
    for emp_id in task.assignees:
        emp = state.find_employee(emp_id)
        emp.monthly_salary = math.ceil(emp.monthly_salary * bump)
        for domain in task.effective_work:
            emp.rates[domain] = min(
                emp.rate_cap, round(emp.rates[domain] * (1 + cfg.productivity_boost_rate), RATE_RESOLUTION)
            )
        emp.tasks_completed += 1
        bumped.append(emp_id)
    task.status = TaskStatus.COMPLETED
    margin = int((task.deadline - now).total_seconds()) // 60
    _log_event(
        state,
        "completion",
        f"{task.id} completed for {client.id}: +{fmt_money(payout)}, "
        f"{fmt_duration(margin)} before deadline",
        task=task.id,
        client=client.id,
        payout=payout,
        funds=state.funds,
        margin_minutes=margin,
        required_trust=task.required_trust,
        domains=[d.value for d in task.effective_work],
    )
    if bumped:
        _log_event(
            state,
            "salary_bump",
            f"salary bump for {', '.join(bumped)}; monthly payroll now "
            f"{fmt_money(state.monthly_payroll())}",
            employees=bumped,
            monthly_payroll=state.monthly_payroll(),
        )
    reschedule_checkpoints(state)


def _bankrupt(state: WorldState) -> None:
    state.outcome = "bankrupt"
    _log_event(
        state,
        "bankruptcy",
        f"funds fell to {fmt_money(state.funds)}; the company is bankrupt",
        funds=state.funds,
    )


def _fail_task(state: WorldState, task: TaskRecord) -> None:
    cfg = state.config
    now = state.clock.timestamp
    penalty = _money_round(Fraction(str(cfg.fail_penalty_rate)) * task.advertised_reward)
    state.ledger.append(LedgerEntry(now, LedgerKind.FAILURE_PENALTY, -penalty, task.id))
    state.funds -= penalty
    for domain in task.domain_work:
        state.prestige[domain] = max(cfg.prestige_min, state.prestige[domain] - cfg.prestige_gain)
    client = state.find_client(task.client_id)
    client.failures += 1
    client.record.append({"task": task.id, "at": fmt_minute(now), "outcome": "failed"})
    if cfg.failure_trust_penalty:
        client.trust = max(0.0, client.trust - cfg.failure_trust_penalty)
    task.status = TaskStatus.FAILED
    rates = {}
    for emp_id in task.assignees:
        emp = state.find_employee(emp_id)
        rates[emp_id] = {d.value: emp.rates[d] for d in task.effective_work}
    done_pct = round(task.overall_fraction() * 100, 1)
    _log_event(
        state,
        "failure",
        f"{task.id} missed its deadline at {done_pct}% done; "
        f"penalty -{fmt_money(penalty)} to {client.id}",
        task=task.id,
        client=client.id,
        penalty=penalty,
        funds=state.funds,
        progress={d.value: round(q, 2) for d, q in task.progress.items()},
        effective_work={d.value: q for d, q in task.effective_work.items()},
        assignees=list(task.assignees),
        assignee_rates=rates,
        accepted_at=fmt_minute(task.accepted_at),
        deadline=fmt_minute(task.deadline),
        max_split=task.max_split,
        required_trust=task.required_trust,
    )
    if state.funds < 0:
        _bankrupt(state)
    else:
        reschedule_checkpoints(state)


def _apply_payroll(state: WorldState, month_ref: str) -> None:
    cfg = state.config
    now = state.clock.timestamp
    amount = state.monthly_payroll()
    state.ledger.append(LedgerEntry(now, LedgerKind.PAYROLL, -amount, month_ref))
    state.funds -= amount
    _log_event(
        state,
        "payroll",
        f"monthly payroll -{fmt_money(amount)}; funds {fmt_money(state.funds)}",
        month=month_ref,
        amount=amount,
        funds=state.funds,
    )
    if state.funds < 0:
        _bankrupt(state)
    else:
        evt = payroll_event(next_payroll_at(now, cfg), state.event_seq)
        state.event_seq += 1
        heapq.heappush(state.events, evt)


def _pop_live_event(state: WorldState):
    while state.events:
        evt = heapq.heappop(state.events)
        kind, task_id, version = evt[5], evt[2], evt[7]
        if kind == "checkpoint":
            task = state.find_task(task_id)
            if (
                task is None
                or task.status is not TaskStatus.DISPATCHED
                or version != task.checkpoint_version
            ):
                continue
        elif kind == "deadline":
            task = state.find_task(task_id)
            if task is None or task.status not in ACTIVE_STATUSES:
                continue
        return evt
    raise EngineError("no_events", "event queue is empty")


def resume(state: WorldState) -> list[dict[str, Any]]:
    """Advance to the next live event, apply it, and return the digest entries."""
    _require_active(state)
    digest_start = len(state.event_log)
    evt = _pop_live_event(state)
    at, _, task_id, fraction, _, kind, ref, _ = evt
    previous = state.clock.timestamp
    accrue_work(state, previous, at)
    day = previous.date()
    while day < at.date():
        day += timedelta(days=1)
        replenish_market(state)
    state.clock.timestamp = at
    if kind == "payroll":
        _apply_payroll(state, ref)
    elif kind == "horizon_end":
        state.outcome = "horizon"
        _log_event(
            state,
            "horizon",
            f"simulation horizon reached; final funds {fmt_money(state.funds)}",
            funds=state.funds,
        )
    elif kind == "deadline":
        task = state.find_task(task_id)
        if _is_complete(task):
            _complete_task(state, task)
        else:
            _fail_task(state, task)
    elif kind == "checkpoint":
        task = state.find_task(task_id)
        if _is_complete(task):
            _complete_task(state, task)
        else:
            remaining = int((task.deadline - at).total_seconds()) // 60
            _log_event(
                state,
                "checkpoint",
                f"{task.id} reached {int(fraction * 100)}% "
                f"({fmt_duration(remaining)} to deadline)",
                task=task.id,
                fraction=fraction,
                progress={d.value: round(q, 2) for d, q in task.progress.items()},
                deadline=fmt_minute(task.deadline),
            )
    return state.event_log[digest_start:]
