# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Synthetic occupancy benchmark with known rules.

The ratio of each segment follows a daily profile (working days peak in the morning
and late afternoon, other days in the afternoon), shifted by a per-segment offset and
lowered during rain. Two rules are then imposed: lunchtime (12:00 to 14:00) on working
days, which exclude public holidays, is at least 90% occupied, and weekend or holiday
mornings (before 09:00) are at most 10% occupied. Finally an AR(1) Gaussian perturbation
is added and the ratio clipped to [0, 1].
"""

from __future__ import annotations

import datetime
import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from ..config import from_section
from ..dates import SLOT
from ..dates import as_datetime
from ..errors import ConfigError
from .classes import discretize_ratios
from .context import WEATHER_TYPES
from .context import ContextTables
from .context import WeatherRecord
from .slots import SegmentSlot

LOG = logging.getLogger(__name__)

SLOTS_PER_DAY = 96

LUNCH_FLOOR = 0.9
MORNING_CAP = 0.1

# Hourly weather regime transitions, rows and columns in WEATHER_TYPES order
WEATHER_TRANSITIONS = np.array(
    [
        [0.85, 0.10, 0.04, 0.01],
        [0.10, 0.75, 0.13, 0.02],
        [0.05, 0.20, 0.73, 0.02],
        [0.30, 0.30, 0.10, 0.30],
    ]
)


@dataclass(frozen=True)
class GeneratorConfig:
    segments: int = 4
    days: int = 28
    start: str = "2019-01-07"
    min_bays: int = 8
    max_bays: int = 24
    noise_scale: float = 0.08
    noise_autocorrelation: float = 0.6
    segment_spread: float = 0.08
    holiday_rate: float = 0.03
    lunch_surge: bool = True
    weekend_mornings: bool = True
    rain_dampening: bool = True
    rain_threshold_mm: float = 1.0
    rain_effect: float = -0.3

    def __post_init__(self):
        if self.segments < 1:
            raise ConfigError(f"generator.segments must be at least 1, got {self.segments}")
        if self.days < 1:
            raise ConfigError(f"generator.days must be at least 1, got {self.days}")
        if not (1 <= self.min_bays <= self.max_bays):
            raise ConfigError(f"Invalid bay range [{self.min_bays}, {self.max_bays}]")
        if self.noise_scale < 0 or self.segment_spread < 0:
            raise ConfigError("generator.noise_scale and generator.segment_spread must not be negative")
        if not (0.0 <= self.noise_autocorrelation < 1.0):
            raise ConfigError(f"generator.noise_autocorrelation must be in [0, 1), got {self.noise_autocorrelation}")
        if not (0.0 <= self.holiday_rate <= 1.0):
            raise ConfigError(f"generator.holiday_rate must be in [0, 1], got {self.holiday_rate}")

    @classmethod
    def from_config(cls, section) -> "GeneratorConfig":
        return from_section(cls, section, "generator")

    @property
    def first_day(self) -> datetime.datetime:
        try:
            start = as_datetime(str(self.start))
        except ValueError as e:
            raise ConfigError(f"Invalid generator.start {self.start!r}: {e}")
        return start.replace(hour=0, minute=0, second=0, microsecond=0)


def baseline_profile(hour: np.ndarray, working_day: np.ndarray) -> np.ndarray:
    """Expected ratio by time of day (in fractional hours), before any rule applies."""
    working = 0.15 + 0.45 * np.exp(-(((hour - 10.0) / 2.5) ** 2)) + 0.25 * np.exp(-(((hour - 17.0) / 2.0) ** 2))
    other = 0.10 + 0.45 * np.exp(-(((hour - 14.0) / 3.5) ** 2))
    return np.where(working_day, working, other)


def _weather(first: datetime.datetime, hours: int, rng: np.random.Generator) -> list:
    state = int(rng.integers(len(WEATHER_TYPES)))
    uniforms = rng.random(hours)
    rain = rng.gamma(1.5, 1.5, size=hours)
    temperature_noise = rng.normal(0.0, 1.5, size=hours)
    wind = np.abs(rng.normal(12.0, 6.0, size=hours))

    records = []
    for i in range(hours):
        when = first + datetime.timedelta(hours=i)
        state = int(np.searchsorted(np.cumsum(WEATHER_TRANSITIONS[state]), uniforms[i], side="right"))
        state = min(state, len(WEATHER_TYPES) - 1)
        weather_type = WEATHER_TYPES[state]
        day_of_year = when.timetuple().tm_yday
        seasonal = 12.0 + 8.0 * np.sin(2 * np.pi * (day_of_year - 110) / 365.0)
        diurnal = 4.0 * np.sin(2 * np.pi * (when.hour - 9) / 24.0)
        records.append(
            WeatherRecord(
                when,
                weather_type,
                round(float(seasonal + diurnal + temperature_noise[i]), 1),
                round(float(wind[i]), 1),
                round(float(rain[i]), 1) if weather_type == "rain" else 0.0,
            )
        )
    return records


def _holidays(first: datetime.datetime, days: int, rate: float, rng: np.random.Generator) -> list:
    draws = rng.random(days)
    result = []
    for i in range(days):
        day = (first + datetime.timedelta(days=i)).date()
        if day.weekday() < 5 and draws[i] < rate:
            result.append(day)
    return result


class _SlotColumns:
    """Context columns of the slot grid, readable by :meth:`Condition.mask`."""

    def __init__(self, **columns):
        self.columns = columns

    def __len__(self):
        return len(next(iter(self.columns.values())))

    def column(self, name):
        return self.columns[name]


def _ground_truth(config: GeneratorConfig, columns: _SlotColumns, classes: np.ndarray):
    # Local import: the rule engine itself depends on the data package
    from ..symbolic.rules import Condition
    from ..symbolic.rules import Rule
    from ..symbolic.rules import RuleBase

    weekdays = Condition("day_of_week", "in", [0, 1, 2, 3, 4])
    weekend = Condition("day_of_week", "in", [5, 6])
    before_nine = Condition("hour", "le", 8.5)

    candidates = []
    if config.lunch_surge:
        candidates.append(
            (
                "gt-lunch-surge",
                [weekdays, Condition("is_holiday", "eq", False), Condition("hour", "gt", 11.5), Condition("hour", "le", 13.5)],
            )
        )
    if config.weekend_mornings:
        candidates.append(("gt-weekend-morning", [weekend, before_nine]))
        candidates.append(("gt-holiday-morning", [Condition("is_holiday", "eq", True), before_nine]))
    if config.rain_dampening:
        candidates.append(("gt-rain", [Condition("rainfall_mm", "gt", config.rain_threshold_mm)]))
    candidates.append(("gt-default", []))

    remaining = np.ones(len(classes), dtype=bool)
    rules = []
    for rule_id, conditions in candidates:
        mask = remaining.copy()
        for c in conditions:
            mask &= c.mask(columns)
        counts = np.bincount(classes[mask], minlength=5).astype(np.float64)
        remaining &= ~mask
        if counts.sum() == 0 and conditions:
            continue
        rules.append(Rule(tuple(conditions), (counts + 1.0) / (counts.sum() + 5.0), max(int(counts.sum()), 1), rule_id))

    return RuleBase(tuple(rules), None, exclusive=False)


def generate_synthetic(config: GeneratorConfig, seed: int):
    """Generate a synthetic slot series with its context and the rules it was built from.

    The result is a pure function of ``(config, seed)``.

    Parameters
    ----------
    config : GeneratorConfig
        Size of the benchmark, noise and planted rules.
    seed : int
        Seed of all the random draws.

    Returns
    -------
    tuple
        The slots (ordered by segment then time), the :class:`ContextTables` and
        the ground-truth :class:`RuleBase`. The ground-truth rules describe the class
        of a slot from its own context and are read as a decision list.
    """
    first = config.first_day
    n = config.days * SLOTS_PER_DAY

    root = np.random.SeedSequence(seed)
    weather_seq, holiday_seq, *segment_seqs = root.spawn(2 + config.segments)

    weather = _weather(first, config.days * 24, np.random.default_rng(weather_seq))
    holidays = _holidays(first, config.days, config.holiday_rate, np.random.default_rng(holiday_seq))
    context = ContextTables(weather, holidays)

    index = np.arange(n)
    day = index // SLOTS_PER_DAY
    hour = (index % SLOTS_PER_DAY) // 4
    time_of_day = (index % SLOTS_PER_DAY) / 4.0
    day_of_week = (first.weekday() + day) % 7
    holiday_days = {(h - first.date()).days for h in holidays}
    is_holiday = np.isin(day, sorted(holiday_days))
    rainfall = np.array([weather[i // 4].rainfall_mm for i in index])

    working_day = (day_of_week < 5) & ~is_holiday
    profile = baseline_profile(time_of_day, working_day)
    if config.rain_dampening:
        profile = profile + config.rain_effect * (rainfall > config.rain_threshold_mm)

    lunch = working_day & (hour >= 12) & (hour < 14)
    morning = ~working_day & (hour < 9)

    starts = [first + int(i) * SLOT for i in index]
    a = config.noise_autocorrelation

    slots = []
    for k, seq in enumerate(segment_seqs):
        rng = np.random.default_rng(seq)
        total = int(rng.integers(config.min_bays, config.max_bays + 1))
        offset = rng.uniform(-config.segment_spread, config.segment_spread)
        shocks = rng.standard_normal(n)

        ratio = profile + offset
        if config.lunch_surge:
            ratio = np.where(lunch, np.maximum(ratio, LUNCH_FLOOR), ratio)
        if config.weekend_mornings:
            ratio = np.where(morning, np.minimum(ratio, MORNING_CAP), ratio)

        # AR(1) perturbation with stationary standard deviation noise_scale
        noise = lfilter([np.sqrt(1.0 - a * a) * config.noise_scale], [1.0, -a], shocks)
        ratio = np.clip(ratio + noise, 0.0, 1.0)

        occupied = np.minimum(np.floor(ratio * total + 0.5).astype(np.int64), total)
        segment = f"seg-{k:02d}"
        slots.extend(SegmentSlot(segment, starts[i], int(occupied[i]), total) for i in range(n))

    ratios = np.array([s.occupancy_ratio for s in slots])
    columns = _SlotColumns(
        hour=np.tile(hour.astype(np.float64), config.segments),
        day_of_week=np.tile(day_of_week, config.segments),
        is_holiday=np.tile(is_holiday, config.segments),
        rainfall_mm=np.tile(rainfall, config.segments),
    )
    ground_truth = _ground_truth(config, columns, discretize_ratios(ratios))

    LOG.info(
        "Generated %s slot(s) for %s segment(s) over %s day(s), %s holiday(s)",
        len(slots),
        config.segments,
        config.days,
        len(holidays),
    )
    return slots, context, ground_truth
