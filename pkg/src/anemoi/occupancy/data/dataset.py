# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Supervised datasets: features of a slot and the classes of the three following slots."""

from __future__ import annotations

import datetime
import hashlib
import json
import logging
from collections import defaultdict
from dataclasses import dataclass
from dataclasses import field
from typing import Iterable
from typing import Optional
from typing import Sequence

import numpy as np

from ..dates import SLOT
from ..dates import format_timestamp
from ..dates import parse_timestamp
from ..errors import DataError
from ..errors import DomainError
from .classes import OccupancyClass
from .classes import discretize_ratio
from .context import WEATHER_TYPES
from .context import ContextTables
from .context import normalise_weather_type
from .slots import SegmentSlot

LOG = logging.getLogger(__name__)

DEFAULT_LAG_DEPTH = 4

WINDOWS = (1, 2, 3)

CATEGORIES = {
    "day_of_week": tuple(range(7)),
    "month": tuple(range(1, 13)),
    "weather_type": WEATHER_TYPES,
}


def check_window(window) -> int:
    """Prediction windows are numbered 1 (0-15 min ahead) to 3 (30-45 min ahead)."""
    if isinstance(window, str) and window.upper().startswith("PW"):
        window = window[2:]
    try:
        window = int(window)
    except (TypeError, ValueError):
        raise DataError(f"Invalid prediction window {window!r}")
    if window not in WINDOWS:
        raise DataError(f"Invalid prediction window {window!r}, expected one of {WINDOWS}")
    return window


@dataclass(frozen=True)
class FeatureVector:
    """Inputs available at the end of a slot."""

    current_ratio: float
    past_ratios: tuple
    hour: int
    day_of_week: int
    month: int
    is_holiday: bool
    weather_type: str
    temperature_c: float
    wind_kmh: float
    rainfall_mm: float

    def __post_init__(self):
        object.__setattr__(self, "past_ratios", tuple(float(r) for r in self.past_ratios))
        for r in (self.current_ratio,) + self.past_ratios:
            if not (0.0 <= r <= 1.0):
                raise DomainError(f"Occupancy ratio {r!r} is outside [0, 1]")
        if not (0 <= self.hour <= 23):
            raise DomainError(f"Invalid hour {self.hour}")
        if not (0 <= self.day_of_week <= 6):
            raise DomainError(f"Invalid day of week {self.day_of_week}")
        if not (1 <= self.month <= 12):
            raise DomainError(f"Invalid month {self.month}")
        if self.wind_kmh < 0 or self.rainfall_mm < 0:
            raise DomainError("Wind speed and rainfall must be nonnegative")
        if not isinstance(self.weather_type, str):
            raise DomainError(f"Invalid weather type {self.weather_type!r}")
        # values outside WEATHER_TYPES become "other"
        object.__setattr__(self, "weather_type", normalise_weather_type(self.weather_type))

    @property
    def lag_depth(self) -> int:
        return len(self.past_ratios)

    def value(self, name: str):
        """Raw value of a schema feature; ``past_ratio_k`` is the ratio k slots before."""
        if name.startswith("past_ratio_"):
            return self.past_ratios[int(name[len("past_ratio_") :]) - 1]
        return getattr(self, name)

    def as_dict(self) -> dict:
        return dict(
            current_ratio=self.current_ratio,
            past_ratios=list(self.past_ratios),
            hour=self.hour,
            day_of_week=self.day_of_week,
            month=self.month,
            is_holiday=self.is_holiday,
            weather_type=self.weather_type,
            temperature_c=self.temperature_c,
            wind_kmh=self.wind_kmh,
            rainfall_mm=self.rainfall_mm,
        )

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureVector":
        return cls(
            current_ratio=float(d["current_ratio"]),
            past_ratios=tuple(d["past_ratios"]),
            hour=int(d["hour"]),
            day_of_week=int(d["day_of_week"]),
            month=int(d["month"]),
            is_holiday=bool(d["is_holiday"]),
            weather_type=str(d["weather_type"]),
            temperature_c=float(d["temperature_c"]),
            wind_kmh=float(d["wind_kmh"]),
            rainfall_mm=float(d["rainfall_mm"]),
        )


@dataclass(frozen=True)
class LabeledExample:
    features: FeatureVector
    targets: tuple
    segment_id: str
    slot_start: datetime.datetime

    def target(self, window) -> OccupancyClass:
        return self.targets[check_window(window) - 1]


class FeatureSchema:
    """How the features are encoded: continuous features are min-max normalised with
    constants taken from a dataset, categorical features are one-hot encoded.
    """

    def __init__(self, lag_depth: int, minimum: dict, maximum: dict, categories: dict = CATEGORIES):
        self.lag_depth = int(lag_depth)
        self.categories = {k: tuple(v) for k, v in categories.items()}
        self.continuous = self.continuous_names(self.lag_depth)
        missing = [n for n in self.continuous if n not in minimum or n not in maximum]
        if missing:
            raise DataError(f"Schema has no normalisation constants for {missing}")
        self.minimum = {n: float(minimum[n]) for n in self.continuous}
        self.maximum = {n: float(maximum[n]) for n in self.continuous}

    @staticmethod
    def continuous_names(lag_depth) -> tuple:
        return (
            ("current_ratio",)
            + tuple(f"past_ratio_{k}" for k in range(1, lag_depth + 1))
            + ("hour", "temperature_c", "wind_kmh", "rainfall_mm")
        )

    @property
    def feature_names(self) -> tuple:
        """Every feature of a :class:`FeatureVector`, in schema order."""
        return (
            ("current_ratio",)
            + tuple(f"past_ratio_{k}" for k in range(1, self.lag_depth + 1))
            + ("hour", "day_of_week", "month", "is_holiday", "weather_type")
            + ("temperature_c", "wind_kmh", "rainfall_mm")
        )

    @property
    def width(self) -> int:
        """Width of an encoded feature vector."""
        return len(self.continuous) + 1 + sum(len(v) for v in self.categories.values())

    @classmethod
    def fit(cls, features: Iterable[FeatureVector], lag_depth: int) -> "FeatureSchema":
        """Normalisation constants from the observed minimum and maximum of each feature."""
        names = cls.continuous_names(lag_depth)
        columns = defaultdict(list)
        for fv in features:
            for name in names:
                columns[name].append(float(fv.value(name)))
        if not columns:
            raise DataError("Cannot fit a feature schema on an empty dataset")
        minimum = {n: min(columns[n]) for n in names}
        maximum = {n: max(columns[n]) for n in names}
        return cls(lag_depth, minimum, maximum)

    def as_dict(self) -> dict:
        return dict(
            lag_depth=self.lag_depth,
            continuous=list(self.continuous),
            minimum=self.minimum,
            maximum=self.maximum,
            categories={k: list(v) for k, v in self.categories.items()},
        )

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(d["lag_depth"], d["minimum"], d["maximum"], d.get("categories", CATEGORIES))

    def digest(self) -> str:
        text = json.dumps(self.as_dict(), sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def __eq__(self, other):
        return isinstance(other, FeatureSchema) and self.as_dict() == other.as_dict()

    def __repr__(self):
        return f"FeatureSchema(lag_depth={self.lag_depth}, width={self.width})"


@dataclass
class CoverageReport:
    """What happened to each candidate window during assembly."""

    candidates: int = 0
    kept: int = 0
    gaps: int = 0
    missing_context: int = 0

    def as_dict(self):
        return dict(candidates=self.candidates, kept=self.kept, gaps=self.gaps, missing_context=self.missing_context)


@dataclass
class Dataset:
    """Labelled examples ordered by ``(segment_id, slot_start)`` and their feature schema."""

    examples: list
    feature_schema: FeatureSchema
    coverage: Optional[CoverageReport] = field(default=None, compare=False)

    def __post_init__(self):
        self.examples = sorted(self.examples, key=lambda e: (e.segment_id, e.slot_start))

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    @property
    def lag_depth(self) -> int:
        return self.feature_schema.lag_depth

    @property
    def features(self) -> list:
        return [e.features for e in self.examples]

    def targets(self, window) -> np.ndarray:
        w = check_window(window) - 1
        return np.array([int(e.targets[w]) for e in self.examples], dtype=np.int64)

    def segments(self) -> list:
        return sorted({e.segment_id for e in self.examples})

    def subset(self, examples: Sequence[LabeledExample]) -> "Dataset":
        """Same schema, other examples."""
        return Dataset(list(examples), self.feature_schema)

    def refit(self) -> "Dataset":
        """Same examples, normalisation constants recomputed from them."""
        return Dataset(self.examples, FeatureSchema.fit(self.features, self.lag_depth))

    def with_schema(self, schema: FeatureSchema) -> "Dataset":
        return Dataset(self.examples, schema)

    def as_dict(self) -> dict:
        return dict(
            schema=self.feature_schema.as_dict(),
            examples=[
                dict(
                    segment_id=e.segment_id,
                    slot_start=format_timestamp(e.slot_start),
                    features=e.features.as_dict(),
                    targets=[int(t) for t in e.targets],
                )
                for e in self.examples
            ],
        )

    @classmethod
    def from_dict(cls, d: dict) -> "Dataset":
        try:
            schema = FeatureSchema.from_dict(d["schema"])
            examples = [
                LabeledExample(
                    FeatureVector.from_dict(e["features"]),
                    tuple(OccupancyClass(int(t)) for t in e["targets"]),
                    str(e["segment_id"]),
                    parse_timestamp(e["slot_start"]),
                )
                for e in d["examples"]
            ]
        except (KeyError, TypeError, ValueError) as e:
            raise DataError(f"Invalid dataset document: {e}") from e
        return cls(examples, schema)

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.as_dict(), f, indent=1)

    @classmethod
    def load(cls, path) -> "Dataset":
        try:
            with open(path) as f:
                return cls.from_dict(json.load(f))
        except FileNotFoundError:
            raise DataError(f"Dataset file not found: {path}")
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: invalid JSON ({e})") from e


def _contiguous(slots: Sequence[SegmentSlot], first: int, last: int, slot=SLOT) -> bool:
    return all(slots[i + 1].slot_start - slots[i].slot_start == slot for i in range(first, last))


def assemble_dataset(
    slots: Iterable[SegmentSlot],
    context: ContextTables,
    lag_depth: int = DEFAULT_LAG_DEPTH,
    *,
    slot=SLOT,
) -> Dataset:
    """Build labelled examples from slot series.

    An example is made for every slot ``t`` that has ``lag_depth`` contiguous slots of history
    and three contiguous slots after it. Its targets are the classes of the ratios at
    ``t+1``, ``t+2`` and ``t+3``. Windows spanning a gap in the series, and slots with no
    weather record, are dropped and counted in the coverage report attached to the result.

    Parameters
    ----------
    slots : iterable of SegmentSlot
        Slot series of one or more segments.
    context : ContextTables
        Weather and holidays.
    lag_depth : int, optional
        Number of past ratios, by default 4.

    Returns
    -------
    Dataset
        The examples and a schema fitted on them; ``dataset.coverage`` tells what was dropped.
    """
    if lag_depth < 0:
        raise DataError(f"Lag depth must be nonnegative, got {lag_depth}")

    by_segment = defaultdict(list)
    for s in slots:
        by_segment[s.segment_id].append(s)

    coverage = CoverageReport()
    examples = []
    for segment in sorted(by_segment):
        series = sorted(by_segment[segment], key=lambda s: s.slot_start)
        weather_of = context.weather_for([s.slot_start for s in series])
        for t in range(lag_depth, len(series) - 3):
            coverage.candidates += 1
            if not _contiguous(series, t - lag_depth, t + 3, slot):
                coverage.gaps += 1
                continue

            current = series[t]
            weather = weather_of[t]
            if weather is None:
                coverage.missing_context += 1
                continue

            features = FeatureVector(
                current_ratio=current.occupancy_ratio,
                past_ratios=tuple(series[t - k].occupancy_ratio for k in range(1, lag_depth + 1)),
                hour=current.slot_start.hour,
                day_of_week=current.slot_start.weekday(),
                month=current.slot_start.month,
                is_holiday=context.is_holiday(current.slot_start),
                weather_type=weather.weather_type,
                temperature_c=weather.temperature_c,
                wind_kmh=weather.wind_kmh,
                rainfall_mm=weather.rainfall_mm,
            )
            targets = tuple(discretize_ratio(series[t + k].occupancy_ratio) for k in (1, 2, 3))
            examples.append(LabeledExample(features, targets, segment, current.slot_start))

    coverage.kept = len(examples)
    LOG.info(
        "Assembled %s example(s) from %s candidate(s): %s dropped at gaps, %s without context",
        coverage.kept,
        coverage.candidates,
        coverage.gaps,
        coverage.missing_context,
    )

    if examples:
        schema = FeatureSchema.fit((e.features for e in examples), lag_depth)
    else:
        schema = FeatureSchema(
            lag_depth,
            {n: 0.0 for n in FeatureSchema.continuous_names(lag_depth)},
            {n: 0.0 for n in FeatureSchema.continuous_names(lag_depth)},
        )

    return Dataset(examples, schema, coverage)
