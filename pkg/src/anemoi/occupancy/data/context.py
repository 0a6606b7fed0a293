# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Weather and public holiday tables joined to the slots."""

from __future__ import annotations

import datetime
import logging
from dataclasses import dataclass
from typing import Iterable
from typing import Optional
from typing import Sequence

import pandas as pd

from ..dates import TimestampError
from ..dates import format_timestamp
from ..dates import parse_date
from ..dates import parse_timestamp
from ..errors import DataError

LOG = logging.getLogger(__name__)

WEATHER_TYPES = ("clear", "cloudy", "rain", "other")
WEATHER_COLUMNS = ("timestamp", "weather_type", "temperature_c", "wind_kmh", "rainfall_mm")

DEFAULT_TOLERANCE = datetime.timedelta(hours=1)


def normalise_weather_type(value: str) -> str:
    value = value.strip().lower()
    return value if value in WEATHER_TYPES else "other"


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: datetime.datetime
    weather_type: str
    temperature_c: float
    wind_kmh: float
    rainfall_mm: float


class ContextTables:
    """Weather observations and holiday dates.

    A slot takes the weather of the closest record at or before its start, provided that
    record is no older than ``tolerance``.
    """

    def __init__(self, weather: Iterable[WeatherRecord], holidays: Iterable[datetime.date] = (), tolerance=DEFAULT_TOLERANCE):
        self.weather = sorted(weather, key=lambda w: w.timestamp)
        self.holidays = frozenset(holidays)
        self.tolerance = tolerance
        self._records = pd.DataFrame(
            {
                "timestamp": pd.to_datetime([w.timestamp for w in self.weather]).astype("datetime64[ns]"),
                "record": range(len(self.weather)),
            }
        )

    def weather_for(self, instants: Sequence[datetime.datetime]) -> list[Optional[WeatherRecord]]:
        """Weather of each instant, or ``None`` where no record is recent enough."""
        if not len(instants) or not self.weather:
            return [None] * len(instants)

        wanted = pd.DataFrame({"when": pd.to_datetime(list(instants)).astype("datetime64[ns]")})
        wanted["order"] = range(len(wanted))
        merged = pd.merge_asof(
            wanted.sort_values("when", kind="stable"),
            self._records,
            left_on="when",
            right_on="timestamp",
            direction="backward",
            tolerance=pd.Timedelta(self.tolerance),
        ).sort_values("order")

        return [None if pd.isna(r) else self.weather[int(r)] for r in merged["record"]]

    def weather_at(self, when: datetime.datetime) -> Optional[WeatherRecord]:
        return self.weather_for([when])[0]

    def is_holiday(self, when: datetime.datetime) -> bool:
        return when.date() in self.holidays

    def __repr__(self):
        return f"ContextTables({len(self.weather)} weather records, {len(self.holidays)} holidays)"


def read_weather(path) -> list[WeatherRecord]:
    """Read ``timestamp,weather_type,temperature_c,wind_kmh,rainfall_mm`` records."""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    missing = [c for c in WEATHER_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing column(s) {', '.join(missing)}")

    records = []
    for index, row in enumerate(frame.to_dict("records")):
        try:
            wind = float(row["wind_kmh"])
            rain = float(row["rainfall_mm"])
            if wind < 0 or rain < 0:
                raise ValueError("negative wind or rainfall")
            records.append(
                WeatherRecord(
                    parse_timestamp(row["timestamp"]),
                    normalise_weather_type(row["weather_type"]),
                    float(row["temperature_c"]),
                    wind,
                    rain,
                )
            )
        except (ValueError, TimestampError) as e:
            raise DataError(f"{path}, line {index + 2}: {e}") from e
    return records


def write_weather(records: Iterable[WeatherRecord], path) -> None:
    rows = [
        (format_timestamp(w.timestamp), w.weather_type, repr(w.temperature_c), repr(w.wind_kmh), repr(w.rainfall_mm))
        for w in records
    ]
    pd.DataFrame(rows, columns=list(WEATHER_COLUMNS)).to_csv(path, index=False, lineterminator="\n")


def read_holidays(path) -> list[datetime.date]:
    """One ISO date per line; blank lines and ``#`` comments are ignored."""
    dates = []
    with open(path) as f:
        for n, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                dates.append(parse_date(line))
            except TimestampError as e:
                raise DataError(f"{path}, line {n}: {e}") from e
    return sorted(set(dates))


def write_holidays(dates: Iterable[datetime.date], path) -> None:
    with open(path, "w") as f:
        for d in sorted(set(dates)):
            f.write(d.isoformat() + "\n")
