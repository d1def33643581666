"""Deterministic initial-world generation: roster, clients, market pool.

All randomness flows through named streams so the draw order is frozen:
roster draws never move when client generation changes, and vice versa.
"""

from __future__ import annotations

import math
import random
from datetime import date, datetime, timedelta
from fractions import Fraction

from .config import BenchConfig, TierSpec
from .model import (
    DOMAINS,
    ClientProfile,
    Domain,
    EmployeeProfile,
    EVENT_PRIORITY,
    EventTuple,
    LedgerEntry,
    LedgerKind,
    SimClock,
    TaskRecord,
    TaskStatus,
    WorldState,
    round_half_up,
    seeded_streams,
)

# Fixed client name pool; adversarial flags are assigned by shuffled index,
# so the names themselves carry no signal.
CLIENT_NAMES = (
    "Acme Data",
    "BlueShift Analytics",
    "Equinox Systems",
    "Vanguard ML",
    "Helios Compute",
    "Nimbus Labs",
    "Orchard AI",
    "Quantus",
    "Ridgeline Robotics",
    "Summit Cloud",
    "Tessellate",
    "Umbra Networks",
    "Verdant Metrics",
    "Westbrook Digital",
    "Xenon Grid",
    "Yellowstone Data",
    "Zephyr Labs",
    "Aurora Stack",
    "Basalt Systems",
    "Cirrus Works",
    "Drift Analytics",
    "Ember ML",
    "Fjord Computing",
    "Granite Ops",
    "Harbor Intelligence",
    "Iris Automation",
    "Juniper Cloud",
    "Krypton Analytics",
    "Lumen Fabric",
    "Meridian Soft",
    "Northgate AI",
    "Opaline Systems",
)

RATE_RESOLUTION = 2  # productivity rates carry two decimals end to end


def sample_triangular(rng: random.Random, lo: float, mode: float, hi: float) -> float:
    """Inverse-CDF triangular draw; one uniform consumed per call."""
    if not (lo <= mode <= hi):
        raise ValueError(f"triangular parameters out of order: ({lo}, {mode}, {hi})")
    if hi == lo:
        return lo
    u = rng.random()
    cut = (mode - lo) / (hi - lo)
    if u < cut:
        return lo + math.sqrt(u * (hi - lo) * (mode - lo))
    return hi - math.sqrt((1.0 - u) * (hi - lo) * (hi - mode))


def apportion(shares: list[float], total: int) -> list[int]:
    """Largest-remainder apportionment of total across fractional shares."""
    quotas = [Fraction(str(s)) * total for s in shares]
    counts = [math.floor(q) for q in quotas]
    short = total - sum(counts)
    remainders = sorted(range(len(shares)), key=lambda i: (quotas[i] - counts[i], -i), reverse=True)
    for i in remainders[:short]:
        counts[i] += 1
    return counts


def tier_counts(config: BenchConfig) -> list[int]:
    return apportion([t.share for t in config.tiers], config.employees)


def generate_roster(rng: random.Random, config: BenchConfig) -> list[EmployeeProfile]:
    """Roster with tier quotas and per-domain spiky rates.

    Each domain rate is drawn on the tier's band with probability 0.5,
    otherwise on the full [1, rate_cap] band, so a senior can carry a
    junior-level rate in some domain.
    """
    counts = tier_counts(config)
    tiers: list[TierSpec] = []
    for tier, n in zip(config.tiers, counts):
        tiers.extend([tier] * n)
    roster = []
    for i, tier in enumerate(tiers, start=1):
        salary_dollars = round_half_up(rng.uniform(tier.salary_min_dollars, tier.salary_max_dollars))
        rates: dict[Domain, float] = {}
        for domain in DOMAINS:
            on_band = rng.random() < 0.5
            if on_band:
                raw = rng.uniform(tier.rate_min, tier.rate_max)
            else:
                raw = rng.uniform(1.0, config.rate_cap)
            rates[domain] = round(raw, RATE_RESOLUTION)
        roster.append(
            EmployeeProfile(
                id=f"Emp_{i}",
                tier=tier.name,
                monthly_salary=salary_dollars * 100,
                rates=rates,
                rate_cap=config.rate_cap,
            )
        )
    return roster


def adversarial_count(config: BenchConfig) -> int:
    return round_half_up(Fraction(str(config.adversarial_fraction)) * config.client_count)


def generate_clients(rng: random.Random, adversary_rng: random.Random, config: BenchConfig) -> list[ClientProfile]:
    if config.client_count > len(CLIENT_NAMES):
        raise ValueError(f"client_count {config.client_count} exceeds name pool {len(CLIENT_NAMES)}")
    indices = list(range(config.client_count))
    rng.shuffle(indices)
    flagged = set(indices[: adversarial_count(config)])
    clients = []
    for i in range(config.client_count):
        adversarial = i in flagged
        creep = 1.0
        if adversarial:
            creep = adversary_rng.uniform(
                config.scope_creep_floor, config.scope_creep_floor + config.scope_creep_span
            )
        clients.append(
            ClientProfile(
                id=CLIENT_NAMES[i],
                trust=0.0,
                adversarial=adversarial,
                scope_creep_factor=creep,
            )
        )
    return clients


def generate_task(
    rng: random.Random, config: BenchConfig, clients: list[ClientProfile], serial: int
) -> TaskRecord:
    """One market task; draw order: client, domains, work, prestige, gate, reward."""
    client = clients[rng.randrange(len(clients))]
    pool = list(DOMAINS)
    picked = []
    for _ in range(min(config.domain_count, len(pool))):
        picked.append(pool.pop(rng.randrange(len(pool))))
    picked.sort(key=list(DOMAINS).index)
    domain_work = {d: round_half_up(sample_triangular(rng, *config.work_dist)) for d in picked}
    required_prestige = round_half_up(sample_triangular(rng, *config.required_prestige_dist))
    required_prestige = max(1, min(int(config.prestige_max), required_prestige))
    gated = rng.random() < config.trust_gated_fraction
    required_trust = float(rng.randint(1, int(config.trust_max) - 1)) if gated else 0.0
    base_dollars = round_half_up(sample_triangular(rng, *config.reward_dist_dollars))
    mult = 1 + Fraction(str(config.prestige_reward_bonus)) * (required_prestige - 1)
    if gated:
        mult *= 1 + Fraction(str(config.gated_reward_bonus)) * int(required_trust)
    reward_cents = round_half_up(Fraction(base_dollars * 100) * mult)
    return TaskRecord(
        id=f"Task-{serial}",
        serial=serial,
        client_id=client.id,
        domain_work=domain_work,
        advertised_reward=reward_cents,
        required_prestige=required_prestige,
        required_trust=required_trust,
        status=TaskStatus.MARKET,
    )


def first_monday(year: int) -> date:
    d = date(year, 1, 1)
    return d + timedelta(days=(7 - d.weekday()) % 7)


def first_business_day(year: int, month: int) -> date:
    d = date(year, month, 1)
    while d.weekday() >= 5:
        d += timedelta(days=1)
    return d


def next_payroll_at(after: datetime, config: BenchConfig) -> datetime:
    """First monthly payroll instant strictly after the given time."""
    year, month = after.year, after.month
    while True:
        d = first_business_day(year, month)
        at = datetime(d.year, d.month, d.day, config.business_start_hour)
        if at > after:
            return at
        month += 1
        if month > 12:
            month, year = 1, year + 1


def payroll_event(at: datetime, seq: int) -> EventTuple:
    return (at, EVENT_PRIORITY["payroll"], "", 0.0, seq, "payroll", f"{at.year}-{at.month:02d}", 0)


def horizon_event(at: datetime, seq: int) -> EventTuple:
    return (at, EVENT_PRIORITY["horizon_end"], "", 0.0, seq, "horizon_end", "horizon", 0)


def generate_world(seed: int, config: BenchConfig) -> WorldState:
    streams = seeded_streams(seed)
    start_day = first_monday(config.start_year)
    start = datetime(start_day.year, start_day.month, start_day.day, config.business_start_hour)
    horizon_end = start + timedelta(days=config.horizon_days)
    clock = SimClock(
        timestamp=start,
        horizon_end=horizon_end,
        business_start_hour=config.business_start_hour,
        business_end_hour=config.business_end_hour,
    )
    roster = generate_roster(streams["roster"], config)
    clients = generate_clients(streams["clients"], streams["adversary"], config)
    market = [
        generate_task(streams["market"], config, clients, serial)
        for serial in range(1, config.market_size + 1)
    ]
    events = [payroll_event(next_payroll_at(start, config), 0), horizon_event(horizon_end, 1)]
    events.sort()
    return WorldState(
        config=config,
        seed=seed,
        clock=clock,
        funds=config.initial_funds_cents,
        roster=roster,
        clients=clients,
        market=market,
        book=[],
        prestige={d: config.prestige_min for d in DOMAINS},
        ledger=[LedgerEntry(start, LedgerKind.INITIAL_CAPITAL, config.initial_funds_cents, "seed")],
        events=events,
        event_seq=2,
        rng=streams,
        next_task_serial=config.market_size + 1,
    )


def replenish_market(state: WorldState) -> int:
    """Top the pool back up to market_size; returns how many tasks were added."""
    added = 0
    while len(state.market) < state.config.market_size:
        task = generate_task(state.rng["market"], state.config, state.clients, state.next_task_serial)
        state.next_task_serial += 1
        state.market.append(task)
        added += 1
    return added
