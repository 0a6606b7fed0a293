# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Features as seen by the rules: raw (not normalised) values, plus ``prev_occ``,
the class of the current ratio.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..data.classes import discretize_ratio
from ..data.classes import discretize_ratios
from ..data.dataset import CATEGORIES
from ..data.dataset import FeatureVector

CONTINUOUS = "continuous"
CATEGORICAL = "categorical"
BOOLEAN = "boolean"

DERIVED_CATEGORIES = {"prev_occ": tuple(range(5))}

_FIXED_KINDS = {
    "current_ratio": CONTINUOUS,
    "hour": CONTINUOUS,
    "temperature_c": CONTINUOUS,
    "wind_kmh": CONTINUOUS,
    "rainfall_mm": CONTINUOUS,
    "day_of_week": CATEGORICAL,
    "month": CATEGORICAL,
    "weather_type": CATEGORICAL,
    "prev_occ": CATEGORICAL,
    "is_holiday": BOOLEAN,
}


def feature_names(lag_depth: int) -> tuple:
    """Features the tree may split on, in schema order (ties between splits go to the first)."""
    return (
        ("current_ratio",)
        + tuple(f"past_ratio_{k}" for k in range(1, lag_depth + 1))
        + ("hour", "day_of_week", "month", "is_holiday", "weather_type")
        + ("temperature_c", "wind_kmh", "rainfall_mm", "prev_occ")
    )


def feature_kind(name: str) -> str:
    if name in _FIXED_KINDS:
        return _FIXED_KINDS[name]
    if name.startswith("past_ratio_") and name[len("past_ratio_") :].isdigit():
        return CONTINUOUS
    raise KeyError(name)


def is_known_feature(name: str) -> bool:
    try:
        feature_kind(name)
        return True
    except KeyError:
        return False


def feature_domain(name: str) -> tuple:
    """All the values a categorical feature can take."""
    if name in DERIVED_CATEGORIES:
        return DERIVED_CATEGORIES[name]
    return CATEGORIES[name]


def symbolic_value(fv: FeatureVector, name: str):
    if name == "prev_occ":
        return int(discretize_ratio(fv.current_ratio))
    return fv.value(name)


class FeatureTable:
    """Column view of a list of feature vectors, for vectorised rule and tree evaluation."""

    def __init__(self, features: Sequence[FeatureVector]):
        self.features = list(features)
        self._columns = {}

    def __len__(self):
        return len(self.features)

    def column(self, name: str) -> np.ndarray:
        if name not in self._columns:
            self._columns[name] = self._build(name)
        return self._columns[name]

    def _build(self, name):
        kind = feature_kind(name)
        if name == "prev_occ":
            return discretize_ratios([fv.current_ratio for fv in self.features])
        values = [fv.value(name) for fv in self.features]
        if kind == CONTINUOUS:
            return np.array(values, dtype=np.float64)
        if kind == BOOLEAN:
            return np.array(values, dtype=bool)
        if name == "weather_type":
            return np.array(values, dtype=object)
        return np.array(values, dtype=np.int64)
