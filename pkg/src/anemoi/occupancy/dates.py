# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Timestamps, durations and 15-minute slots.

All instants handled by the package are naive :class:`datetime.datetime` objects in UTC.
"""

from __future__ import annotations

import datetime
import re

import aniso8601
from dateutil import parser as dateutil_parser

# aniso8601 range-check errors, keyed by class name
_REASONS = {
    "YearOutOfBoundsError": "invalid year",
    "MonthOutOfBoundsError": "invalid month",
    "WeekOutOfBoundsError": "invalid week",
    "DayOutOfBoundsError": "invalid day",
    "HoursOutOfBoundsError": "invalid hour",
    "MinutesOutOfBoundsError": "invalid minute",
    "SecondsOutOfBoundsError": "invalid second",
    "MidnightBoundsError": "invalid midnight",
    "LeapSecondError": "leap seconds are not supported",
}


class TimestampError(ValueError):
    """A timestamp that is not a valid ISO-8601 instant. ``reason`` is a short description."""

    def __init__(self, text, reason):
        super().__init__(f"{reason}: {text!r}")
        self.reason = reason


def _reason(error: ValueError) -> str:
    if type(error).__name__ in _REASONS:
        return _REASONS[type(error).__name__]
    # Errors raised by the datetime constructor, e.g. "month must be in 1..12"
    message = str(error).lower()
    for component in ("month", "day", "hour", "minute", "second", "year"):
        if message.startswith(component):
            return f"invalid {component}"
    return "invalid timestamp"


def _to_utc(date: datetime.datetime) -> datetime.datetime:
    if date.tzinfo is not None:
        date = date.astimezone(datetime.timezone.utc)
    return date.replace(tzinfo=None)


def parse_timestamp(text: str) -> datetime.datetime:
    """Parse an ISO-8601 date and time into a naive UTC datetime.

    Timestamps without an offset are taken to be UTC already.

    Parameters
    ----------
    text : str
        The timestamp, e.g. ``2019-03-04T10:07:12Z``.

    Returns
    -------
    datetime.datetime
        The instant, in UTC, without time zone information.

    Raises
    ------
    TimestampError
        If the text is not a valid ISO-8601 date-time. The ``reason`` attribute
        names the offending component, e.g. ``"invalid month"``.
    """
    text = text.strip()
    try:
        date = aniso8601.parse_datetime(text)
    except ValueError as e:
        raise TimestampError(text, _reason(e)) from e
    except NotImplementedError as e:
        raise TimestampError(text, "invalid timestamp") from e
    return _to_utc(date)


def parse_date(text: str) -> datetime.date:
    """Parse a calendar date such as ``2019-12-25``."""
    try:
        return dateutil_parser.isoparse(text.strip()).date()
    except ValueError as e:
        raise TimestampError(text, "invalid date") from e


def as_datetime(date) -> datetime.datetime:
    """Convert a date, a datetime or an ISO-8601 string to a naive UTC datetime."""

    if isinstance(date, datetime.datetime):
        return _to_utc(date)

    if isinstance(date, datetime.date):
        return datetime.datetime(date.year, date.month, date.day)

    if isinstance(date, str):
        if "T" in date:
            return parse_timestamp(date)
        return as_datetime(parse_date(date))

    raise ValueError(f"Invalid date type: {type(date)}")


def as_timedelta(frequency) -> datetime.timedelta:
    """Convert anything to a timedelta object.

    Parameters
    ----------
    frequency : int or str or datetime.timedelta
        The duration. If an integer, it is assumed to be in minutes. If a string, it can be in the format:

        - "15m" for 15 minutes
        - "1h" for 1 hour
        - "1d" for 1 day
        - "30s" for 30 seconds
        - "PT15M" for 15 minutes (ISO8601)

    Returns
    -------
    datetime.timedelta
        The timedelta object.

    Raises
    ------
    ValueError
        If the value cannot be converted.
    """

    if isinstance(frequency, datetime.timedelta):
        return frequency

    if isinstance(frequency, int):
        return datetime.timedelta(minutes=frequency)

    if not isinstance(frequency, str):
        raise ValueError(f"Cannot convert {frequency!r} to timedelta")

    if re.match(r"^\d+$", frequency):
        return datetime.timedelta(minutes=int(frequency))

    if re.match(r"^\d+[hdms]$", frequency, re.IGNORECASE):
        unit = frequency[-1].lower()
        v = int(frequency[:-1])
        unit = {"h": "hours", "d": "days", "s": "seconds", "m": "minutes"}[unit]
        return datetime.timedelta(**{unit: v})

    try:
        return aniso8601.parse_duration(frequency)
    except aniso8601.exceptions.ISOFormatError:
        pass

    raise ValueError(f"Cannot convert frequency {frequency} to timedelta")


SLOT = datetime.timedelta(minutes=15)


def floor_to_slot(date: datetime.datetime, slot: datetime.timedelta = SLOT) -> datetime.datetime:
    """Start of the slot containing ``date``. Slots are aligned on midnight."""
    midnight = date.replace(hour=0, minute=0, second=0, microsecond=0)
    offset = (date - midnight) // slot
    return midnight + offset * slot


def slot_range(first: datetime.datetime, last: datetime.datetime, slot: datetime.timedelta = SLOT):
    """Yield the starts of all slots from the one containing ``first`` to the one containing ``last``."""
    start = floor_to_slot(first, slot)
    end = floor_to_slot(last, slot)
    while start <= end:
        yield start
        start += slot


def is_slot_aligned(date: datetime.datetime, slot: datetime.timedelta = SLOT) -> bool:
    return floor_to_slot(date, slot) == date


def format_timestamp(date: datetime.datetime) -> str:
    """ISO-8601 UTC representation with second resolution, e.g. ``2019-03-04T10:00:00Z``."""
    return date.strftime("%Y-%m-%dT%H:%M:%SZ")
