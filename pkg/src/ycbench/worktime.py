"""Business-hours arithmetic.

Work accrues only on weekdays between the business open and close hours.
Everything here is analytic (whole-day counting plus partial-day overlap),
so advancing the clock by months costs the same as by minutes.
"""

from __future__ import annotations

import math
from datetime import datetime, time, timedelta

MINUTES_PER_DAY = 24 * 60


def is_business_day(dt: datetime) -> bool:
    return dt.weekday() < 5


def _day_window_minutes(open_hour: int, close_hour: int) -> int:
    return (close_hour - open_hour) * 60


def _minutes_within_day(dt: datetime, open_hour: int, close_hour: int) -> int:
    """Business minutes elapsed on dt's own day, clamped to the window."""
    if not is_business_day(dt):
        return 0
    start = dt.replace(hour=open_hour, minute=0, second=0, microsecond=0)
    end = dt.replace(hour=close_hour, minute=0, second=0, microsecond=0)
    clamped = min(max(dt, start), end)
    return int((clamped - start).total_seconds()) // 60


def business_minutes_between(a: datetime, b: datetime, open_hour: int = 9, close_hour: int = 18) -> int:
    """Business minutes in [a, b); negative-free (returns 0 when b <= a)."""
    if b <= a:
        return 0
    day_a = a.replace(hour=0, minute=0, second=0, microsecond=0)
    day_b = b.replace(hour=0, minute=0, second=0, microsecond=0)
    window = _day_window_minutes(open_hour, close_hour)
    if day_a == day_b:
        return _minutes_within_day(b, open_hour, close_hour) - _minutes_within_day(a, open_hour, close_hour)
    # Whole days strictly between a's day and b's day.
    ndays = (day_b - day_a).days - 1
    full_weeks, rem = divmod(ndays, 7)
    weekdays = full_weeks * 5
    cursor = day_a + timedelta(days=1)
    for _ in range(rem):
        if cursor.weekday() < 5:
            weekdays += 1
        cursor += timedelta(days=1)
    total = weekdays * window
    if is_business_day(a):
        total += window - _minutes_within_day(a, open_hour, close_hour)
    total += _minutes_within_day(b, open_hour, close_hour)
    return total


def business_hours_between(a: datetime, b: datetime, open_hour: int = 9, close_hour: int = 18) -> float:
    return business_minutes_between(a, b, open_hour, close_hour) / 60.0


def add_business_minutes(start: datetime, minutes: int, open_hour: int = 9, close_hour: int = 18) -> datetime:
    """Earliest instant t with business_minutes_between(start, t) >= minutes."""
    if minutes <= 0:
        return start
    window = _day_window_minutes(open_hour, close_hour)
    day = start.replace(hour=0, minute=0, second=0, microsecond=0)
    remaining = minutes
    # Use up the remainder of the start day first.
    if is_business_day(start):
        avail = window - _minutes_within_day(start, open_hour, close_hour)
        if avail >= remaining:
            base = max(start, start.replace(hour=open_hour, minute=0, second=0, microsecond=0))
            return base + timedelta(minutes=remaining)
        remaining -= avail
    # Then whole business days.
    while True:
        day += timedelta(days=1)
        if day.weekday() >= 5:
            continue
        if remaining <= window:
            return day.replace(hour=open_hour) + timedelta(minutes=remaining)
        remaining -= window


def add_business_hours(start: datetime, hours: float, open_hour: int = 9, close_hour: int = 18) -> datetime:
    """Fractional-hour variant; lands on the next whole minute."""
    minutes = math.ceil(hours * 60 - 1e-6)
    return add_business_minutes(start, minutes, open_hour, close_hour)


def next_business_open(dt: datetime, open_hour: int = 9, close_hour: int = 18) -> datetime:
    """First business-open instant at or after dt (an open-hours dt is returned as-is)."""
    cursor = dt
    while True:
        if is_business_day(cursor):
            start = cursor.replace(hour=open_hour, minute=0, second=0, microsecond=0)
            end = cursor.replace(hour=close_hour, minute=0, second=0, microsecond=0)
            if cursor < start:
                return start
            if cursor < end:
                return cursor
        cursor = (cursor + timedelta(days=1)).replace(hour=0, minute=0, second=0, microsecond=0)
