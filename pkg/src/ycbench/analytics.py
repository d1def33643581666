"""Run-log statistics: everything is recomputed from the record stream.

The one privileged input is the set of work-inflating client ids (read
from a world snapshot, never from observations); without it the stats
that need attribution are left as None and failures are classified over
the staffing-only causes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean, stdev
from typing import Any, Iterable

from .config import BenchConfig
from .model import parse_minute
from .session import read_snapshot
from .worktime import business_hours_between

FAILURE_CAUSES = ("adversarial", "incapable_assignment", "overcommitment", "other")


@dataclass
class RunStats:
    label: str
    seed: int
    outcome: str
    turns: int
    final_funds: int
    bankrupt: bool
    monthly_trajectory: list[dict[str, Any]]
    revenue: int
    accepted: int
    adversarial_accepted: int | None
    adversarial_acceptance_ratio: float | None
    completions: int
    trust_gated_completions: int
    trust_gated_completion_ratio: float | None
    final_trust: dict[str, float]
    failure_causes: dict[str, int]
    scratchpad_writes_per_100_turns: float
    inspect_accept_ratio: float
    avg_concurrent_tasks: float
    commands_per_turn: float
    episode_cost_usd: float | None
    revenue_per_cost_dollar: float | None

    def to_dict(self) -> dict[str, Any]:
        return dict(self.__dict__)


def privileged_client_flags(snapshot_path: str | Path) -> set[str]:
    """Ids of clients that inflate accepted work, read from a snapshot."""
    state = read_snapshot(Path(snapshot_path))
    return {c.id for c in state.clients if c.adversarial}


def _command_records(records: list[dict[str, Any]]) -> list[dict[str, Any]]:
    return [r for r in records if r.get("type") == "command"]


def _event_records(records: list[dict[str, Any]], kind: str) -> list[dict[str, Any]]:
    return [r["event"] for r in records if r.get("type") == "event" and r["event"].get("kind") == kind]


def _path_of(line: str) -> tuple[str, ...]:
    parts = line.split()
    if parts and parts[0] == "yc-bench":
        parts = parts[1:]
    return tuple(parts[:2])


def compute_stats(
    records: list[dict[str, Any]],
    adversarial_clients: set[str] | None = None,
    label: str = "run",
) -> RunStats:
    header = records[0]
    config = BenchConfig.from_dict(header["config"])
    end = records[-1] if records[-1].get("type") == "end" else None
    turn_records = [r for r in records if r.get("type") == "turn"]
    turns = len(turn_records)
    cmds = _command_records(records)
    agent_cmds = [r for r in cmds if not r.get("forced")]

    accepts = [r for r in agent_cmds if _path_of(r["line"]) == ("task", "accept")]
    ok_accepts = [r for r in accepts if r["result"]["ok"]]
    accepted_clients = [r["result"]["payload"]["task"]["client"] for r in ok_accepts]
    inspects = [r for r in agent_cmds if _path_of(r["line"]) == ("task", "inspect")]
    scratch = [
        r
        for r in agent_cmds
        if _path_of(r["line"]) in (("scratchpad", "write"), ("scratchpad", "append"))
        and r["result"]["ok"]
    ]

    completions = _event_records(records, "completion")
    gated = [e for e in completions if e.get("required_trust", 0) > 0]
    failures = _event_records(records, "failure")
    payrolls = _event_records(records, "payroll")

    ledger_entries = [r["entry"] for r in records if r.get("type") == "ledger"]
    revenue = sum(e["amount"] for e in ledger_entries if e["kind"] == "task_reward")

    final_trust = _fold_trust(header, config, completions)

    adversarial_accepted = None
    adversarial_ratio = None
    if adversarial_clients is not None:
        adversarial_accepted = sum(1 for c in accepted_clients if c in adversarial_clients)
        adversarial_ratio = adversarial_accepted / len(ok_accepts) if ok_accepts else None

    causes = classify_failures(failures, config, adversarial_clients)

    telemetry = [r for r in records if r.get("type") == "telemetry"]
    costs = [r.get("cost_usd") for r in telemetry if r.get("cost_usd") is not None]
    episode_cost = round(sum(costs), 6) if costs else None
    revenue_per_cost = None
    if episode_cost:
        revenue_per_cost = round((revenue / 100) / episode_cost, 2)

    concurrency = [t["status"]["active_task_count"] for t in turn_records]
    final_funds = end["final_funds"] if end else header["config"]["initial_funds_cents"]
    outcome = end["outcome"] if end else "incomplete"

    return RunStats(
        label=label,
        seed=header["seed"],
        outcome=outcome,
        turns=turns,
        final_funds=final_funds,
        bankrupt=outcome == "bankrupt",
        monthly_trajectory=[{"month": p["month"], "funds": p["funds"]} for p in payrolls],
        revenue=revenue,
        accepted=len(ok_accepts),
        adversarial_accepted=adversarial_accepted,
        adversarial_acceptance_ratio=adversarial_ratio,
        completions=len(completions),
        trust_gated_completions=len(gated),
        trust_gated_completion_ratio=(len(gated) / len(completions)) if completions else None,
        final_trust=final_trust,
        failure_causes=causes,
        scratchpad_writes_per_100_turns=round(100 * len(scratch) / turns, 2) if turns else 0.0,
        inspect_accept_ratio=round(len(inspects) / len(accepts), 3) if accepts else 0.0,
        avg_concurrent_tasks=round(fmean(concurrency), 2) if concurrency else 0.0,
        commands_per_turn=round(len(agent_cmds) / turns, 3) if turns else 0.0,
        episode_cost_usd=episode_cost,
        revenue_per_cost_dollar=revenue_per_cost,
    )


def _fold_trust(
    header: dict[str, Any], config: BenchConfig, completions: list[dict[str, Any]]
) -> dict[str, float]:
    """Replay the trust dynamics from the completion stream alone."""
    trust = {cid: 0.0 for cid in header.get("clients", [])}
    gain = config.trust_max / config.trust_build_rate
    for event in completions:
        client = event["client"]
        trust.setdefault(client, 0.0)
        for cid in trust:
            if cid == client:
                trust[cid] = min(config.trust_max, trust[cid] + gain)
            else:
                trust[cid] = max(0.0, trust[cid] - config.focus_pressure)
    return {cid: round(v, 2) for cid, v in trust.items()}


def classify_failures(
    failures: list[dict[str, Any]],
    config: BenchConfig,
    adversarial_clients: set[str] | None = None,
) -> dict[str, int]:
    """Sort failed tasks into the three named causes (plus 'other').

    Precedence: inflated-client attribution first, then a capacity check
    with undivided rates over the acceptance-to-deadline business hours,
    then the same check at the worst split actually reached.
    """
    histogram = {cause: 0 for cause in FAILURE_CAUSES}
    if adversarial_clients is None:
        histogram.pop("adversarial")
    for event in failures:
        histogram[_classify_one(event, config, adversarial_clients)] += 1
    return histogram


def _classify_one(
    event: dict[str, Any], config: BenchConfig, adversarial_clients: set[str] | None
) -> str:
    if adversarial_clients is not None and event["client"] in adversarial_clients:
        return "adversarial"
    budget_hours = business_hours_between(
        parse_minute(event["accepted_at"]),
        parse_minute(event["deadline"]),
        config.business_start_hour,
        config.business_end_hour,
    )
    effective = event["effective_work"]
    rates = event.get("assignee_rates", {})

    def feasible(split: int) -> bool:
        for domain, required in effective.items():
            rate = sum(r.get(domain, 0.0) for r in rates.values()) / split
            if rate * budget_hours < required:
                return False
        return True

    if not feasible(1):
        return "incapable_assignment"
    if event.get("max_split", 1) > 1 and not feasible(event["max_split"]):
        return "overcommitment"
    return "other"


# -- aggregation ---------------------------------------------------------


def _mean_sigma(values: list[float]) -> tuple[float, float]:
    if not values:
        return 0.0, 0.0
    return fmean(values), stdev(values) if len(values) > 1 else 0.0


def aggregate(runs: list[RunStats]) -> list[dict[str, Any]]:
    """Per-label summary rows, sorted into a leaderboard by mean final funds."""
    if not runs:
        raise ValueError("no runs to aggregate")
    by_label: dict[str, list[RunStats]] = {}
    for run in runs:
        by_label.setdefault(run.label, []).append(run)
    rows = []
    for label, group in by_label.items():
        funds = [r.final_funds for r in group]
        mean_funds, sigma_funds = _mean_sigma(funds)
        costs = [r.episode_cost_usd for r in group if r.episode_cost_usd is not None]
        adv = [r.adversarial_acceptance_ratio for r in group if r.adversarial_acceptance_ratio is not None]
        gated = [r.trust_gated_completion_ratio for r in group if r.trust_gated_completion_ratio is not None]
        rows.append(
            {
                "label": label,
                "runs": len(group),
                "final_funds_mean": round(mean_funds, 2),
                "final_funds_sigma": round(sigma_funds, 2),
                "final_funds_min": min(funds),
                "final_funds_max": max(funds),
                "bankrupt": f"{sum(r.bankrupt for r in group)}/{len(group)}",
                "adversarial_ratio_mean": round(fmean(adv), 4) if adv else None,
                "trust_gated_ratio_mean": round(fmean(gated), 4) if gated else None,
                "sp_per_100_turns_mean": round(fmean([r.scratchpad_writes_per_100_turns for r in group]), 2),
                "inspect_accept_mean": round(fmean([r.inspect_accept_ratio for r in group]), 3),
                "avg_concurrent_mean": round(fmean([r.avg_concurrent_tasks for r in group]), 2),
                "commands_per_turn_mean": round(fmean([r.commands_per_turn for r in group]), 3),
                "cost_usd_mean": round(fmean(costs), 2) if costs else None,
            }
        )
    rows.sort(key=lambda row: -row["final_funds_mean"])
    return rows


# -- table emission ------------------------------------------------------


def _write_csv(path: Path, fieldnames: list[str], rows: Iterable[dict[str, Any]]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def write_tables(out_dir: str | Path, runs: list[RunStats]) -> list[Path]:
    """Emit one CSV per reported statistic family plus a JSON summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "leaderboard.csv"
    rows = aggregate(runs)
    _write_csv(path, list(rows[0].keys()), rows)
    written.append(path)

    path = out / "trajectory.csv"
    _write_csv(
        path,
        ["label", "seed", "month", "funds"],
        (
            {"label": r.label, "seed": r.seed, "month": p["month"], "funds": p["funds"]}
            for r in runs
            for p in r.monthly_trajectory
        ),
    )
    written.append(path)

    path = out / "final_trust.csv"
    _write_csv(
        path,
        ["label", "seed", "client", "trust"],
        (
            {"label": r.label, "seed": r.seed, "client": cid, "trust": trust}
            for r in runs
            for cid, trust in sorted(r.final_trust.items())
        ),
    )
    written.append(path)

    path = out / "failure_modes.csv"
    _write_csv(
        path,
        ["label", "seed", "cause", "count"],
        (
            {"label": r.label, "seed": r.seed, "cause": cause, "count": count}
            for r in runs
            for cause, count in sorted(r.failure_causes.items())
        ),
    )
    written.append(path)

    path = out / "behavioral.csv"
    _write_csv(
        path,
        [
            "label",
            "seed",
            "sp_per_100_turns",
            "inspect_accept_ratio",
            "avg_concurrent_tasks",
            "commands_per_turn",
            "adversarial_acceptance_ratio",
            "trust_gated_completion_ratio",
        ],
        (
            {
                "label": r.label,
                "seed": r.seed,
                "sp_per_100_turns": r.scratchpad_writes_per_100_turns,
                "inspect_accept_ratio": r.inspect_accept_ratio,
                "avg_concurrent_tasks": r.avg_concurrent_tasks,
                "commands_per_turn": r.commands_per_turn,
                "adversarial_acceptance_ratio": r.adversarial_acceptance_ratio,
                "trust_gated_completion_ratio": r.trust_gated_completion_ratio,
            }
            for r in runs
        ),
    )
    written.append(path)

    path = out / "cost.csv"
    _write_csv(
        path,
        ["label", "seed", "outcome", "final_funds", "revenue", "episode_cost_usd", "revenue_per_cost_dollar"],
        (
            {
                "label": r.label,
                "seed": r.seed,
                "outcome": r.outcome,
                "final_funds": r.final_funds,
                "revenue": r.revenue,
                "episode_cost_usd": r.episode_cost_usd,
                "revenue_per_cost_dollar": r.revenue_per_cost_dollar,
            }
            for r in runs
        ),
    )
    written.append(path)

    path = out / "summary.json"
    path.write_text(
        json.dumps(
            {"runs": [r.to_dict() for r in runs], "leaderboard": aggregate(runs)},
            indent=2,
            sort_keys=True,
        ),
        encoding="utf-8",
    )
    written.append(path)
    return written
