"""Transition rules: accrual, gates, money, events, failure handling."""

import heapq
from datetime import datetime, timedelta

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MONDAY, make_employee, make_state, make_task
from oracles import assert_engine_matches_stepper

from ycbench.config import BenchConfig
from ycbench.engine import (
    EngineError,
    accept_task,
    accrue_work,
    assign_task,
    cancel_task,
    dispatch_task,
    effective_rate,
    fmt_duration,
    payout_amount,
    resume,
    task_rate,
)
from ycbench.model import (
    ClientProfile,
    Domain,
    LedgerKind,
    TaskStatus,
    funds_from_ledger,
    validate,
)
from ycbench.worldgen import generate_world

FRIDAY_5PM = datetime(2025, 1, 10, 17, 0)


def launch(state, task_id, employees):
    accept_task(state, task_id)
    assign_task(state, task_id, employees)
    return dispatch_task(state, task_id)


def drain(state):
    while state.outcome is None:
        resume(state)


def test_fmt_duration():
    assert fmt_duration(17) == "17m"
    assert fmt_duration(135) == "2h 15m"
    assert fmt_duration(9540) == "6d 15h"
    assert fmt_duration(-3) == "0m"


def test_full_day_accrual():
    state = make_state(tasks=[make_task(1, "Acme Data", 100)])
    task = launch(state, "Task-1", ["Emp_1"])
    accrue_work(state, MONDAY, MONDAY + timedelta(hours=9))
    assert task.progress[Domain.TRAINING] == pytest.approx(36.0)


def test_weekend_gap_accrual():
    state = make_state(tasks=[make_task(1, "Acme Data", 100)], start=FRIDAY_5PM)
    task = launch(state, "Task-1", ["Emp_1"])
    accrue_work(state, FRIDAY_5PM, datetime(2025, 1, 13, 10, 0))
    assert task.progress[Domain.TRAINING] == pytest.approx(8.0)  # 1h Friday + 1h Monday


def test_rate_splits_across_concurrent_tasks():
    state = make_state(tasks=[make_task(1, "Acme Data", 100), make_task(2, "Acme Data", 100)])
    a = launch(state, "Task-1", ["Emp_1"])
    b = launch(state, "Task-2", ["Emp_1"])
    assert task_rate(state, a, Domain.TRAINING) == pytest.approx(2.0)
    accrue_work(state, MONDAY, MONDAY + timedelta(hours=1))
    assert a.progress[Domain.TRAINING] == pytest.approx(2.0)
    assert b.progress[Domain.TRAINING] == pytest.approx(2.0)
    assert a.max_split == 2 and b.max_split == 2


def test_task_rate_sums_assignees():
    roster = [make_employee("Emp_1", 3.0), make_employee("Emp_2", 5.0)]
    state = make_state(employees=roster, tasks=[make_task(1, "Acme Data", 100)])
    task = launch(state, "Task-1", ["Emp_1", "Emp_2"])
    assert task_rate(state, task, Domain.TRAINING) == pytest.approx(8.0)


def test_effective_rate_needs_active_task():
    emp = make_employee("Emp_1", 4.0)
    with pytest.raises(EngineError) as err:
        effective_rate(emp, Domain.TRAINING, 0)
    assert err.value.code == "no_active_tasks"


def test_prestige_gate_blocks_accept():
    state = make_state(tasks=[make_task(1, "Acme Data", 100, prestige=3)])
    with pytest.raises(EngineError) as err:
        accept_task(state, "Task-1")
    assert err.value.code == "prestige_gate"
    assert "prestige 3" in err.value.message
    assert "company has 1" in err.value.message


def test_trust_gate_blocks_accept():
    state = make_state(tasks=[make_task(1, "Acme Data", 100, trust=2.0)])
    with pytest.raises(EngineError) as err:
        accept_task(state, "Task-1")
    assert err.value.code == "trust_gate"
    assert "Acme Data" in err.value.message


@pytest.mark.parametrize(
    "trust,creep,expected",
    [(0.0, 1.0, 800), (5.0, 1.0, 400), (0.0, 3.0, 2400), (2.5, 3.0, 1800)],
)
def test_effective_work_scaling(trust, creep, expected):
    client = ClientProfile(id="Acme Data", trust=trust, scope_creep_factor=creep)
    state = make_state(clients=[client], tasks=[make_task(1, "Acme Data", 800)])
    task = accept_task(state, "Task-1")
    assert task.effective_work[Domain.TRAINING] == expected
    assert task.domain_work[Domain.TRAINING] == 800  # advertised figure untouched


@pytest.mark.parametrize(
    "work,days",
    [
        (800, 7),
        ({Domain.TRAINING: 900, Domain.INFERENCE: 600}, 10),
        (1050, 7),
        (1051, 8),
    ],
)
def test_deadline_days_rule(work, days):
    state = make_state(tasks=[make_task(1, "Acme Data", work)])
    task = accept_task(state, "Task-1")
    assert task.deadline == MONDAY + timedelta(days=days)


def test_accept_moves_task_and_schedules_deadline():
    state = make_state(tasks=[make_task(1, "Acme Data", 100)])
    task = accept_task(state, "Task-1")
    assert task.status is TaskStatus.ACCEPTED
    assert task in state.book and task not in state.market
    assert task.accepted_at == MONDAY
    deadlines = [e for e in state.events if e[5] == "deadline"]
    assert len(deadlines) == 1
    assert deadlines[0][0] == task.deadline
    assert deadlines[0][7] == 0
    with pytest.raises(EngineError) as err:
        accept_task(state, "Task-1")
    assert err.value.code == "bad_status"


def test_accept_unknown_task():
    state = make_state()
    with pytest.raises(EngineError) as err:
        accept_task(state, "Task-404")
    assert err.value.code == "unknown_task"


def test_assign_sorts_and_dedupes():
    roster = [make_employee("Emp_1", 4.0), make_employee("Emp_2", 4.0)]
    state = make_state(employees=roster, tasks=[make_task(1, "Acme Data", 100)])
    accept_task(state, "Task-1")
    task = assign_task(state, "Task-1", ["Emp_2", "Emp_1", "Emp_2"])
    assert task.assignees == ["Emp_1", "Emp_2"]
    with pytest.raises(EngineError) as err:
        assign_task(state, "Task-1", ["Emp_9"])
    assert err.value.code == "unknown_employee"


def test_repeat_assign_keeps_checkpoint_schedule():
    roster = [make_employee("Emp_1", 4.0), make_employee("Emp_2", 4.0)]
    state = make_state(employees=roster, tasks=[make_task(1, "Acme Data", 100)])
    accept_task(state, "Task-1")
    assign_task(state, "Task-1", ["Emp_1"])
    task = dispatch_task(state, "Task-1")
    version = task.checkpoint_version
    assign_task(state, "Task-1", ["Emp_1"])
    assert task.checkpoint_version == version
    assign_task(state, "Task-1", ["Emp_2"])
    assert task.checkpoint_version == version + 1


def test_dispatch_needs_assignees():
    state = make_state(tasks=[make_task(1, "Acme Data", 100)])
    accept_task(state, "Task-1")
    with pytest.raises(EngineError) as err:
        dispatch_task(state, "Task-1")
    assert err.value.code == "no_assignees"
    assign_task(state, "Task-1", ["Emp_1"])
    dispatch_task(state, "Task-1")
    checkpoints = [e for e in state.events if e[5] == "checkpoint"]
    assert [e[3] for e in sorted(checkpoints)] == [0.25, 0.5, 0.75, 1.0]


def test_cancel_costs_prestige_not_money():
    state = make_state(tasks=[make_task(1, "Acme Data", 100)])
    state.prestige[Domain.TRAINING] = 2.0
    accept_task(state, "Task-1")
    funds, entries = state.funds, len(state.ledger)
    task = cancel_task(state, "Task-1", reason="scope change")
    assert task.status is TaskStatus.CANCELLED
    assert state.prestige[Domain.TRAINING] == pytest.approx(1.625)
    assert state.funds == funds and len(state.ledger) == entries
    with pytest.raises(EngineError) as err:
        cancel_task(state, "Task-1", reason="again")
    assert err.value.code == "bad_status"


def test_cancel_prestige_floor():
    state = make_state(tasks=[make_task(1, "Acme Data", 100)])
    accept_task(state, "Task-1")
    cancel_task(state, "Task-1", reason="never mind")
    assert state.prestige[Domain.TRAINING] == 1.0


@pytest.mark.parametrize("prestige,expected", [(1.0, 500_000), (10.0, 650_000), (5.5, 575_000)])
def test_payout_scales_with_prestige(prestige, expected):
    state = make_state(tasks=[make_task(1, "Acme Data", 100, reward_cents=500_000)])
    task = accept_task(state, "Task-1")
    for d in Domain:
        state.prestige[d] = prestige
    assert payout_amount(state, task) == expected


def test_payout_uses_mean_over_task_domains():
    work = {Domain.TRAINING: 50, Domain.INFERENCE: 50}
    state = make_state(tasks=[make_task(1, "Acme Data", work, reward_cents=500_000)])
    task = accept_task(state, "Task-1")
    state.prestige[Domain.TRAINING] = 10.0
    state.prestige[Domain.INFERENCE] = 1.0
    assert payout_amount(state, task) == 575_000  # mean prestige 5.5


def test_completion_effects_end_to_end():
    roster = [make_employee("Emp_1", 4.0, salary_cents=333_333)]
    clients = [ClientProfile(id="Acme Data"), ClientProfile(id="Nimbus Labs", trust=2.0)]
    state = make_state(employees=roster, clients=clients,
                       tasks=[make_task(1, "Acme Data", 36, reward_cents=500_000)])
    launch(state, "Task-1", ["Emp_1"])

    digest = resume(state)  # 25% checkpoint
    assert state.clock.timestamp == datetime(2025, 1, 6, 11, 15)
    assert digest[0]["kind"] == "checkpoint"
    assert digest[0]["fraction"] == 0.25
    assert digest[0]["progress"] == {"training": 9.0}

    resume(state)  # 50%
    resume(state)  # 75%
    digest = resume(state)  # 100% checkpoint completes the task
    assert state.clock.timestamp == datetime(2025, 1, 6, 18, 0)
    completion = digest[0]
    assert completion["kind"] == "completion"
    assert completion["payout"] == 500_000
    assert completion["margin_minutes"] == 9540
    assert "6d 15h before deadline" in completion["text"]

    task = state.find_task("Task-1")
    assert task.status is TaskStatus.COMPLETED
    assert task.progress[Domain.TRAINING] == 36.0
    assert state.funds == 20_500_000
    assert [e.amount for e in state.ledger if e.kind is LedgerKind.TASK_REWARD] == [500_000]
    assert state.prestige[Domain.TRAINING] == pytest.approx(1.25)
    assert state.prestige[Domain.INFERENCE] == pytest.approx(1.0)

    acme, nimbus = state.clients
    assert acme.trust == pytest.approx(1.0)
    assert acme.completions == 1
    assert acme.record[-1]["outcome"] == "completed"
    assert nimbus.trust == pytest.approx(1.7)  # focus pressure on the idle client

    emp = state.roster[0]
    assert emp.monthly_salary == 336_667  # ceil(333333 * 1.01)
    assert emp.rates[Domain.TRAINING] == pytest.approx(4.08)
    assert emp.rates[Domain.INFERENCE] == pytest.approx(4.0)
    assert emp.tasks_completed == 1


def test_trust_saturates_at_cap():
    state = make_state(
        tasks=[make_task(i, "Acme Data", 9, reward_cents=100_000) for i in range(1, 8)]
    )
    client = state.clients[0]
    for i in range(1, 8):
        launch(state, f"Task-{i}", ["Emp_1"])
        while state.find_task(f"Task-{i}").status is not TaskStatus.COMPLETED:
            resume(state)
        assert client.trust == pytest.approx(min(5.0, float(i)))
    assert client.trust == 5.0


def test_productivity_boost_respects_cap():
    roster = [make_employee("Emp_1", 9.95)]
    state = make_state(employees=roster, tasks=[make_task(1, "Acme Data", 9)])
    launch(state, "Task-1", ["Emp_1"])
    while state.find_task("Task-1").status is not TaskStatus.COMPLETED:
        resume(state)
    assert roster[0].rates[Domain.TRAINING] == 10.0  # round(9.95 * 1.02, 2) capped


def test_failure_effects_end_to_end():
    roster = [make_employee("Emp_1", 0.1)]
    state = make_state(employees=roster,
                       tasks=[make_task(1, "Acme Data", 800, reward_cents=800_000)],
                       config=BenchConfig(market_size=0))
    state.prestige[Domain.TRAINING] = 1.1
    launch(state, "Task-1", ["Emp_1"])
    digest = resume(state)  # nothing else is queued before the deadline
    failure = digest[0]
    assert failure["kind"] == "failure"
    assert failure["penalty"] == 280_000  # 35% of the advertised reward
    assert failure["max_split"] == 1
    assert failure["assignee_rates"] == {"Emp_1": {"training": 0.1}}
    assert state.clock.timestamp == MONDAY + timedelta(days=7)
    task = state.find_task("Task-1")
    assert task.status is TaskStatus.FAILED
    assert task.progress[Domain.TRAINING] == pytest.approx(4.5)  # 45 business hours at 0.1/h
    assert state.funds == 20_000_000 - 280_000
    assert state.prestige[Domain.TRAINING] == pytest.approx(1.0)  # floored below 1.1 - 0.25
    client = state.clients[0]
    assert client.failures == 1
    assert client.trust == 0.0
    assert client.record[-1]["outcome"] == "failed"


def test_bankruptcy_only_below_zero():
    def run(funds):
        state = make_state(employees=[make_employee("Emp_1", 0.1)],
                           tasks=[make_task(1, "Acme Data", 800, reward_cents=800_000)],
                           funds=funds, config=BenchConfig(market_size=0))
        launch(state, "Task-1", ["Emp_1"])
        resume(state)
        return state

    surviving = run(280_000)
    assert surviving.funds == 0
    assert surviving.outcome is None

    broke = run(279_999)
    assert broke.funds == -1
    assert broke.outcome == "bankrupt"
    assert broke.event_log[-1]["kind"] == "bankruptcy"
    with pytest.raises(EngineError) as err:
        resume(broke)
    assert err.value.code == "episode_over"


def test_payroll_deducts_and_reschedules():
    roster = [make_employee("Emp_1", 4.0, salary_cents=400_000),
              make_employee("Emp_2", 4.0, salary_cents=250_000)]
    state = make_state(employees=roster, with_payroll=True)
    digest = resume(state)
    assert state.clock.timestamp == datetime(2025, 2, 3, 9, 0)
    entry = digest[0]
    assert entry["kind"] == "payroll"
    assert entry["month"] == "2025-02"
    assert entry["amount"] == 650_000
    assert state.funds == 20_000_000 - 650_000
    ledger = state.ledger[-1]
    assert ledger.kind is LedgerKind.PAYROLL
    assert ledger.amount == -650_000 and ledger.reference == "2025-02"
    upcoming = [e for e in state.events if e[5] == "payroll"]
    assert len(upcoming) == 1
    assert upcoming[0][0] == datetime(2025, 3, 3, 9, 0)  # March 1st is a Saturday


def test_payroll_bankruptcy_boundary():
    state = make_state(employees=[make_employee("Emp_1", 4.0, salary_cents=400_000)],
                       funds=400_000, with_payroll=True)
    resume(state)
    assert state.funds == 0
    assert state.outcome is None


def test_reassignment_invalidates_old_checkpoints():
    roster = [make_employee("Emp_1", 4.0), make_employee("Emp_2", 2.0)]
    state = make_state(employees=roster, tasks=[make_task(1, "Acme Data", 40)])
    launch(state, "Task-1", ["Emp_1"])  # 10h estimate, first checkpoint 11:30
    assign_task(state, "Task-1", ["Emp_2"])  # 20h estimate, first checkpoint 14:00
    digest = resume(state)
    assert state.clock.timestamp == datetime(2025, 1, 6, 14, 0)
    assert digest[0]["fraction"] == 0.25
    assert digest[0]["progress"] == {"training": 10.0}


def test_resume_with_empty_queue():
    state = make_state()
    state.events.clear()
    with pytest.raises(EngineError) as err:
        resume(state)
    assert err.value.code == "no_events"


def test_commands_rejected_after_horizon():
    state = make_state(tasks=[make_task(1, "Acme Data", 100)])
    drain(state)
    assert state.outcome == "horizon"
    with pytest.raises(EngineError) as err:
        accept_task(state, "Task-1")
    assert err.value.code == "episode_over"


@pytest.mark.parametrize("seed", range(60))
def test_engine_matches_minute_stepper(seed):
    assert_engine_matches_stepper(seed, shared=False)


@pytest.mark.parametrize("seed", range(45))
def test_engine_matches_minute_stepper_with_shared_staff(seed):
    assert_engine_matches_stepper(1000 + seed, shared=True)


@given(seed=st.integers(min_value=0, max_value=10**6),
       moves=st.lists(st.integers(min_value=0, max_value=5), max_size=30))
@settings(max_examples=40, deadline=None)
def test_invariants_survive_random_play(seed, moves):
    import random as pyrandom

    cfg = BenchConfig(market_size=15, client_count=4, employees=3)
    state = generate_world(seed, cfg)
    chooser = pyrandom.Random(seed ^ 0xBEEF)
    for move in moves:
        if state.outcome is not None:
            break
        try:
            if move == 0 and state.market:
                accept_task(state, chooser.choice(state.market).id)
            elif move == 1 and state.book:
                task = chooser.choice(state.book)
                crew = chooser.sample([e.id for e in state.roster],
                                      chooser.randint(1, len(state.roster)))
                assign_task(state, task.id, crew)
            elif move == 2 and state.book:
                dispatch_task(state, chooser.choice(state.book).id)
            elif move == 3 and state.book:
                cancel_task(state, chooser.choice(state.book).id, reason="fuzz")
            elif move in (4, 5):
                resume(state)
        except EngineError:
            pass
    assert validate(state) == []
    assert state.funds == funds_from_ledger(state.ledger)
    for emp in state.roster:
        assert all(0 < r <= emp.rate_cap for r in emp.rates.values())
    for d, p in state.prestige.items():
        assert 1.0 <= p <= 10.0
    for client in state.clients:
        assert 0.0 <= client.trust <= 5.0
