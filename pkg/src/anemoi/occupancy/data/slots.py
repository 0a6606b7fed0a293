# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Per-segment 15-minute occupancy slots."""

from __future__ import annotations

import datetime
import logging
from dataclasses import dataclass
from typing import Iterable
from typing import Mapping

import pandas as pd

from ..dates import SLOT
from ..dates import format_timestamp
from ..dates import is_slot_aligned
from ..dates import parse_timestamp
from ..errors import DataError
from .events import SensorEvent

LOG = logging.getLogger(__name__)

SLOT_COLUMNS = ("segment_id", "slot_start", "occupied_bays", "total_bays", "occupancy_ratio")


@dataclass(frozen=True)
class SegmentSlot:
    """Occupancy of one street segment during one 15-minute slot."""

    segment_id: str
    slot_start: datetime.datetime
    occupied_bays: int
    total_bays: int

    def __post_init__(self):
        if self.total_bays < 1:
            raise DataError(f"Segment {self.segment_id} has {self.total_bays} bays")
        if not (0 <= self.occupied_bays <= self.total_bays):
            raise DataError(
                f"Segment {self.segment_id} at {self.slot_start}: "
                f"{self.occupied_bays} occupied out of {self.total_bays}"
            )
        if not is_slot_aligned(self.slot_start):
            raise DataError(f"Slot start {self.slot_start} is not on a 15-minute boundary")

    @property
    def occupancy_ratio(self) -> float:
        return self.occupied_bays / self.total_bays


def _status_at_midpoints(group: pd.DataFrame, slot: pd.Timedelta, initial_status: bool) -> pd.Series:
    """Number of occupied reporting bays at the midpoint of every slot spanned by ``group``."""
    buckets = group["timestamp"].dt.floor(slot)
    starts = pd.date_range(buckets.min(), buckets.max(), freq=slot)

    grid = pd.MultiIndex.from_product(
        [sorted(group["bay_id"].unique()), starts + slot / 2],
        names=["bay_id", "midpoint"],
    ).to_frame(index=False)

    # last report at or before each midpoint, per bay
    merged = pd.merge_asof(
        grid.sort_values("midpoint", kind="stable"),
        group[["bay_id", "timestamp", "occupied"]],
        left_on="midpoint",
        right_on="timestamp",
        by="bay_id",
        direction="backward",
    )
    occupied = merged["occupied"].astype("boolean").fillna(initial_status).astype(bool)
    counts = occupied.groupby(merged["midpoint"]).sum()
    counts.index = counts.index - slot / 2
    return counts.reindex(starts, fill_value=0)


def aggregate_slots(
    events: Iterable[SensorEvent],
    bay_to_segment: Mapping[str, str],
    total_bays: Mapping[str, int],
    *,
    initial_status: bool = False,
    slot: datetime.timedelta = SLOT,
) -> list[SegmentSlot]:
    """Turn cleaned bay events into per-segment slot occupancy.

    For every segment, every slot between the slots of its first and last event is produced.
    A bay counts as occupied in a slot when its last status reported at or before the slot
    midpoint is "occupied"; bays with no report yet use ``initial_status``.

    Parameters
    ----------
    events : iterable of SensorEvent
        Cleaned events.
    bay_to_segment : mapping
        Segment of each bay.
    total_bays : mapping
        Number of bays of each segment.
    initial_status : bool, optional
        Status of a bay before its first event, by default unoccupied.

    Returns
    -------
    list of SegmentSlot
        Ordered by ``(segment_id, slot_start)``.

    Raises
    ------
    DataError
        If a bay has no segment, a segment has no (or zero) bays, or more bays report for a
        segment than it has.
    """
    frame = pd.DataFrame(
        [(e.bay_id, e.timestamp, e.occupied) for e in events],
        columns=["bay_id", "timestamp", "occupied"],
    )
    if frame.empty:
        return []

    frame["timestamp"] = pd.to_datetime(frame["timestamp"]).astype("datetime64[ns]")
    frame["segment_id"] = frame["bay_id"].map(dict(bay_to_segment))
    unmapped = sorted(frame.loc[frame["segment_id"].isna(), "bay_id"].unique())
    if unmapped:
        raise DataError(f"Bay {unmapped[0]!r} is not mapped to any segment")

    frame = frame.sort_values(["timestamp", "segment_id", "bay_id"], kind="stable")
    step = pd.Timedelta(slot)

    result = []
    segments = 0
    for segment, group in frame.groupby("segment_id", sort=True):
        segments += 1
        total = total_bays.get(segment)
        if total is None or total < 1:
            raise DataError(f"Segment {segment!r} has no bays (total_bays={total})")

        reporting = group["bay_id"].nunique()
        if reporting > total:
            raise DataError(f"Segment {segment!r} has {reporting} reporting bays but total_bays={total}")

        counts = _status_at_midpoints(group, step, initial_status)
        silent = total - reporting if initial_status else 0
        for start, occupied in counts.items():
            result.append(SegmentSlot(segment, start.to_pydatetime(), int(occupied) + silent, total))

    LOG.info("Aggregated %s slot(s) over %s segment(s)", len(result), segments)
    return result


def write_slots(slots: Iterable[SegmentSlot], path) -> None:
    rows = [
        (s.segment_id, format_timestamp(s.slot_start), s.occupied_bays, s.total_bays, repr(s.occupancy_ratio))
        for s in slots
    ]
    pd.DataFrame(rows, columns=list(SLOT_COLUMNS)).to_csv(path, index=False, lineterminator="\n")


def read_slots(path) -> list[SegmentSlot]:
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in SLOT_COLUMNS[:4] if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")

    slots = []
    for index, row in enumerate(frame.to_dict("records")):
        try:
            slots.append(
                SegmentSlot(
                    row["segment_id"],
                    parse_timestamp(row["slot_start"]),
                    int(row["occupied_bays"]),
                    int(row["total_bays"]),
                )
            )
        except ValueError as e:
            raise DataError(f"{path}, line {index + 2}: {e}") from e
    slots.sort(key=lambda s: (s.segment_id, s.slot_start))
    return slots
