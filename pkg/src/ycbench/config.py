"""Benchmark configuration: every tunable of the simulation with its default value.

The ``default`` preset ships in ``presets/default.json``; a checksum test pins it.
Triangular distributions are stored as (min, mode, max).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from typing import Any


@dataclass(frozen=True)
class TierSpec:
    """One employee tier: roster share, monthly salary band ($), hourly rate band."""

    name: str
    share: float
    salary_min_dollars: int
    salary_max_dollars: int
    rate_min: float
    rate_max: float


DEFAULT_TIERS = (
    TierSpec("junior", 0.50, 2_000, 4_000, 1.0, 4.0),
    TierSpec("mid", 0.35, 6_000, 8_000, 4.0, 7.0),
    TierSpec("senior", 0.15, 10_000, 15_000, 7.0, 10.0),
)


@dataclass(frozen=True)
class BenchConfig:
    # -- simulation clock --
    horizon_days: int = 365
    start_year: int = 2025  # episode starts on the first Monday of this year, 09:00
    business_start_hour: int = 9
    business_end_hour: int = 18
    auto_advance_turns: int = 5

    # -- workforce --
    employees: int = 8
    initial_funds_cents: int = 20_000_000
    salary_bump_rate: float = 0.01  # per completed task, every assigned employee
    productivity_boost_rate: float = 0.02  # per completed task, task domains only
    rate_cap: float = 10.0
    tiers: tuple[TierSpec, ...] = DEFAULT_TIERS

    # -- market --
    market_size: int = 200
    browse_limit: int = 50
    client_count: int = 6

    # -- prestige --
    prestige_min: float = 1.0
    prestige_max: float = 10.0
    prestige_decay_per_day: float = 0.0
    reward_scale: float = 0.30  # payout multiplier reaches 1+scale at max prestige
    prestige_gain: float = 0.25  # gain per completion; cancel loses cancel_penalty_factor times this
    prestige_reward_bonus: float = 0.15  # advertised-reward markup per required level above 1
    required_prestige_dist: tuple[float, float, float] = (1.0, 1.0, 5.0)

    # -- deadlines & penalties --
    deadline_qty_per_day: int = 150
    deadline_min_days: int = 7
    fail_penalty_rate: float = 0.35  # of advertised reward
    cancel_penalty_factor: float = 1.5

    # -- client trust --
    trust_max: float = 5.0
    trust_build_rate: float = 5.0  # completions needed to reach trust_max
    trust_work_reduction: float = 0.50  # work removed at max trust
    trust_gated_fraction: float = 0.30
    focus_pressure: float = 0.3  # trust decay for every other client per completion
    gated_reward_bonus: float = 0.15  # reward markup per required trust level
    failure_trust_penalty: float = 0.0  # trust lost with the issuing client on failure

    # -- adversarial clients --
    adversarial_fraction: float = 0.35
    scope_creep_floor: float = 3.0
    scope_creep_span: float = 1.0  # creep factor uniform in [floor, floor+span]

    # -- task distributions --
    reward_dist_dollars: tuple[float, float, float] = (2_000.0, 5_000.0, 12_000.0)
    work_dist: tuple[float, float, float] = (400.0, 800.0, 1_500.0)
    domain_count: int = 1

    # -- agent memory & harness --
    context_window: int = 20
    max_commands_per_turn: int = 64
    scratchpad_cap_bytes: int = 16_384

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["tiers"] = [asdict(t) for t in self.tiers]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        kw = dict(d)
        if "tiers" in kw:
            kw["tiers"] = tuple(TierSpec(**t) for t in kw["tiers"])
        for name in ("reward_dist_dollars", "work_dist", "required_prestige_dist"):
            if name in kw:
                kw[name] = tuple(kw[name])
        return cls(**kw)

    def with_overrides(self, **kw: Any) -> "BenchConfig":
        return replace(self, **kw)

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))


def load_config(path: str) -> BenchConfig:
    with open(path, encoding="utf-8") as fh:
        return BenchConfig.from_dict(json.load(fh))


def load_preset(name: str = "default") -> BenchConfig:
    text = resources.files("ycbench").joinpath(f"presets/{name}.json").read_text("utf-8")
    return BenchConfig.from_dict(json.loads(text))
