# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Bay-level sensor events: reading the event CSV and cleaning the stream."""

from __future__ import annotations

import datetime
import io
import logging
from dataclasses import dataclass
from dataclasses import field
from typing import IO
from typing import Iterable
from typing import Optional

import pandas as pd

from ..dates import TimestampError
from ..dates import format_timestamp
from ..dates import parse_timestamp
from ..errors import DataError

LOG = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("bay_id", "segment_id", "timestamp", "status")
OPTIONAL_COLUMNS = ("duration_s", "overstay")

STATUSES = {"occupied": True, "unoccupied": False}

_SPARE = "__spare_"


@dataclass(frozen=True, order=True)
class SensorEvent:
    """One status report of a parking bay sensor."""

    bay_id: str
    segment_id: str
    timestamp: datetime.datetime
    occupied: bool
    duration_s: Optional[float] = None
    overstay: Optional[bool] = None

    @property
    def status(self) -> str:
        return "occupied" if self.occupied else "unoccupied"


@dataclass(frozen=True)
class Reject:
    """A row of the event file that could not be read."""

    line: int
    reason: str
    raw: str = ""


@dataclass
class RejectsReport:
    """Row-level problems found while reading an event file."""

    rejects: list = field(default_factory=list)

    def add(self, line, reason, raw=""):
        self.rejects.append(Reject(line, reason, raw))

    def __len__(self):
        return len(self.rejects)

    def __iter__(self):
        return iter(self.rejects)

    def write_csv(self, path) -> None:
        frame = pd.DataFrame([(r.line, r.reason, r.raw) for r in self.rejects], columns=["line", "reason", "raw"])
        frame.to_csv(path, index=False, lineterminator="\n")


def _parse_bool(text):
    text = text.strip().lower()
    if text in ("true", "1", "yes", "y"):
        return True
    if text in ("false", "0", "no", "n"):
        return False
    raise ValueError(text)


def _parse_row(row: dict) -> SensorEvent:
    for name in REQUIRED_COLUMNS:
        if row.get(name) is None or row[name].strip() == "":
            raise ValueError(f"missing column {name}")

    try:
        timestamp = parse_timestamp(row["timestamp"])
    except TimestampError as e:
        raise ValueError(e.reason)

    status = row["status"].strip().lower()
    if status not in STATUSES:
        raise ValueError(f"invalid status {row['status']!r}")

    duration = None
    if (row.get("duration_s") or "").strip():
        try:
            duration = float(row["duration_s"])
        except ValueError:
            raise ValueError(f"invalid duration {row['duration_s']!r}")

    overstay = None
    if (row.get("overstay") or "").strip():
        try:
            overstay = _parse_bool(row["overstay"])
        except ValueError:
            raise ValueError(f"invalid overstay flag {row['overstay']!r}")

    return SensorEvent(
        bay_id=row["bay_id"].strip(),
        segment_id=row["segment_id"].strip(),
        timestamp=timestamp,
        occupied=STATUSES[status],
        duration_s=duration,
        overstay=overstay,
    )


def parse_events(source: IO, rejects: RejectsReport | None = None) -> list[SensorEvent]:
    """Read sensor events from a CSV stream.

    The header must name at least ``bay_id,segment_id,timestamp,status``; ``duration_s`` and
    ``overstay`` are optional. Rows that cannot be read are skipped and recorded in ``rejects``
    with their line number (the header is line 1).

    Parameters
    ----------
    source : binary or text stream
        UTF-8 CSV content.
    rejects : RejectsReport, optional
        Collects the rows that were skipped.

    Returns
    -------
    list of SensorEvent
        One event per well-formed row, in file order.

    Raises
    ------
    DataError
        If the header lacks a required column.
    """
    if rejects is None:
        rejects = RejectsReport()

    content = source.read()
    if isinstance(content, bytes):
        content = content.decode("utf-8")
    if not content.strip():
        return []

    header = [str(h).strip() for h in pd.read_csv(io.StringIO(content), nrows=0, dtype=str).columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise DataError(f"Event file is missing column(s) {', '.join(missing)}")

    # spare columns catch rows with more fields than the header
    width = max(line.count(",") for line in content.splitlines()) + 1
    spare = [f"{_SPARE}{i}" for i in range(max(0, width - len(header)))]

    frame = pd.read_csv(
        io.StringIO(content),
        header=None,
        skiprows=1,
        names=header + spare,
        dtype=str,
        keep_default_na=False,
        skip_blank_lines=False,
    ).fillna("")

    events = []
    for index, row in enumerate(frame.to_dict("records")):
        line = index + 2
        values = [row[c] for c in header]
        extra = [row[c] for c in spare if row[c] != ""]
        if extra:
            rejects.add(line, "too many columns", ",".join(values + extra))
            continue
        if all(v.strip() == "" for v in values):
            continue
        try:
            events.append(_parse_row(row))
        except ValueError as e:
            rejects.add(line, str(e), ",".join(values))

    if rejects:
        LOG.warning("%s row(s) rejected while reading events", len(rejects))
    LOG.info("Read %s event(s)", len(events))
    return events


def write_events(events: Iterable[SensorEvent], path) -> None:
    rows = [
        (
            e.bay_id,
            e.segment_id,
            format_timestamp(e.timestamp),
            e.status,
            "" if e.duration_s is None else repr(e.duration_s),
            "" if e.overstay is None else str(e.overstay).lower(),
        )
        for e in events
    ]
    frame = pd.DataFrame(rows, columns=list(REQUIRED_COLUMNS + OPTIONAL_COLUMNS))
    frame.to_csv(path, index=False, lineterminator="\n")


def clean_events(events: Iterable[SensorEvent]) -> list[SensorEvent]:
    """Remove the obvious artefacts of communication failures from an event stream.

    - exact duplicate records are dropped;
    - events with a negative stay duration are dropped;
    - each bay's events are ordered by time;
    - consecutive reports of the same status for a bay are collapsed to the first one.

    The result is ordered by ``(segment_id, bay_id, timestamp)``. Cleaning is idempotent.
    """
    unique = set()
    kept = []
    for e in events:
        if e in unique:
            continue
        unique.add(e)
        if e.duration_s is not None and e.duration_s < 0:
            continue
        kept.append(e)

    # Python's sort is stable: simultaneous events keep their input order
    kept.sort(key=lambda e: (e.segment_id, e.bay_id, e.timestamp))

    result = []
    previous = None
    for e in kept:
        if previous is not None and previous.bay_id == e.bay_id and previous.segment_id == e.segment_id:
            if previous.occupied == e.occupied:
                continue
        result.append(e)
        previous = e

    LOG.debug("Cleaning kept %s of %s event(s)", len(result), len(kept))
    return result
