"""Business-time arithmetic against a dumb minute-stepping oracle."""

from datetime import datetime, timedelta

from hypothesis import given, settings
from hypothesis import strategies as st

from ycbench.worktime import (
    add_business_hours,
    add_business_minutes,
    business_hours_between,
    business_minutes_between,
    is_business_day,
    next_business_open,
)


def minutes_oracle(start, end, open_h=9, close_h=18):
    # count minute-by-minute; slow and obviously correct
    total = 0
    t = start
    while t < end:
        if t.weekday() < 5 and open_h <= t.hour < close_h:
            total += 1
        t += timedelta(minutes=1)
    return total


def test_full_monday_is_540_minutes():
    start = datetime(2025, 1, 6, 9, 0)
    assert business_minutes_between(start, datetime(2025, 1, 6, 18, 0), 9, 18) == 540
    assert business_hours_between(start, datetime(2025, 1, 6, 18, 0), 9, 18) == 9.0


def test_weekend_gap_counts_only_open_edges():
    # Friday 17:00 -> Monday 10:00: one hour Friday + one hour Monday
    start = datetime(2025, 1, 10, 17, 0)
    end = datetime(2025, 1, 13, 10, 0)
    assert business_minutes_between(start, end, 9, 18) == 120


def test_weekend_interval_is_zero():
    start = datetime(2025, 1, 11, 0, 0)  # Saturday
    end = datetime(2025, 1, 13, 9, 0)  # Monday open
    assert business_minutes_between(start, end, 9, 18) == 0


def test_one_week_is_45_hours():
    start = datetime(2025, 1, 6, 9, 0)
    assert business_hours_between(start, start + timedelta(days=7), 9, 18) == 45.0


def test_before_open_and_after_close_clip():
    day = datetime(2025, 1, 7, 6, 30)
    assert business_minutes_between(day, day.replace(hour=23), 9, 18) == 540


@given(
    start=st.datetimes(min_value=datetime(2024, 12, 25), max_value=datetime(2025, 2, 10)),
    span=st.integers(min_value=0, max_value=60 * 24 * 12),
)
@settings(max_examples=60, deadline=None)
def test_matches_minute_oracle(start, span):
    start = start.replace(second=0, microsecond=0)
    end = start + timedelta(minutes=span)
    assert business_minutes_between(start, end, 9, 18) == minutes_oracle(start, end)


@given(
    start=st.datetimes(min_value=datetime(2025, 1, 1), max_value=datetime(2025, 3, 1)),
    quota=st.integers(min_value=1, max_value=5000),
)
@settings(max_examples=60, deadline=None)
def test_add_business_minutes_is_inverse(start, quota):
    start = start.replace(second=0, microsecond=0)
    end = add_business_minutes(start, quota, 9, 18)
    assert business_minutes_between(start, end, 9, 18) == quota
    # and it is the earliest such minute
    assert business_minutes_between(start, end - timedelta(minutes=1), 9, 18) < quota


def test_add_business_hours_rounds_up_to_the_minute():
    start = datetime(2025, 1, 6, 9, 0)
    end = add_business_hours(start, 0.5, 9, 18)
    assert end == datetime(2025, 1, 6, 9, 30)
    end = add_business_hours(start, 9.0, 9, 18)  # exactly one business day
    assert business_minutes_between(start, end, 9, 18) == 540


def test_add_zero_hours_is_identity_inside_business_time():
    start = datetime(2025, 1, 6, 11, 0)
    assert add_business_hours(start, 0.0, 9, 18) == start


def test_next_business_open_skips_weekend():
    sat = datetime(2025, 1, 11, 12, 0)
    assert next_business_open(sat, 9) == datetime(2025, 1, 13, 9, 0)
    assert is_business_day(datetime(2025, 1, 13))
    assert not is_business_day(datetime(2025, 1, 12))
