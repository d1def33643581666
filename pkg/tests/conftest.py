"""Shared fixtures: hand-built worlds small enough to verify by hand."""

from __future__ import annotations

from datetime import datetime, timedelta

import pytest

from ycbench.config import BenchConfig
from ycbench.model import (
    ClientProfile,
    Domain,
    EmployeeProfile,
    LedgerEntry,
    LedgerKind,
    SimClock,
    TaskRecord,
    WorldState,
)
from ycbench.worldgen import horizon_event, next_payroll_at, payroll_event, seeded_streams

MONDAY = datetime(2025, 1, 6, 9, 0)  # first Monday of 2025, opening bell


def make_employee(emp_id, rate, salary_cents=400_000, tier="junior", cap=10.0):
    """Employee with the same rate in every domain unless given a dict."""
    if not isinstance(rate, dict):
        rate = {d: float(rate) for d in Domain}
    else:
        rate = {d: float(rate.get(d, 1.0)) for d in Domain}
    return EmployeeProfile(id=emp_id, tier=tier, monthly_salary=salary_cents, rates=rate, rate_cap=cap)


def make_task(serial, client_id, work, reward_cents=500_000, prestige=1, trust=0.0):
    if not isinstance(work, dict):
        work = {Domain.TRAINING: int(work)}
    return TaskRecord(
        id=f"Task-{serial}",
        serial=serial,
        client_id=client_id,
        domain_work=work,
        advertised_reward=reward_cents,
        required_prestige=prestige,
        required_trust=trust,
    )


def make_state(
    employees=None,
    clients=None,
    tasks=None,
    funds=20_000_000,
    config=None,
    start=MONDAY,
    with_payroll=False,
):
    """A minimal but fully valid world; events hold just the horizon (plus payroll on request)."""
    config = config or BenchConfig()
    employees = employees if employees is not None else [make_employee("Emp_1", 4.0)]
    clients = clients if clients is not None else [ClientProfile(id="Acme Data")]
    tasks = tasks if tasks is not None else []
    horizon_end = start + timedelta(days=config.horizon_days)
    events = [horizon_event(horizon_end, 0)]
    seq = 1
    if with_payroll:
        events.append(payroll_event(next_payroll_at(start, config), seq))
        seq += 1
    events.sort()
    return WorldState(
        config=config,
        seed=0,
        clock=SimClock(
            timestamp=start,
            horizon_end=horizon_end,
            business_start_hour=config.business_start_hour,
            business_end_hour=config.business_end_hour,
        ),
        funds=funds,
        roster=employees,
        clients=clients,
        market=tasks,
        book=[],
        prestige={d: config.prestige_min for d in Domain},
        ledger=[LedgerEntry(start, LedgerKind.INITIAL_CAPITAL, funds, "seed")],
        events=events,
        event_seq=seq,
        rng=seeded_streams(0),
        next_task_serial=1000,
    )


@pytest.fixture
def default_config():
    return BenchConfig()


@pytest.fixture
def world(default_config):
    from ycbench.worldgen import generate_world

    return generate_world(42, default_config)
