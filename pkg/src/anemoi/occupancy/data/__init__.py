# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Sensor events, 15-minute segment slots, context tables and labelled datasets.

The synthetic generator lives in :mod:`anemoi.occupancy.data.synthetic` and is not
imported here, as it depends on the rule engine.
"""

from .classes import N_CLASSES
from .classes import ClassDistribution
from .classes import OccupancyClass
from .classes import discretize_ratio
from .context import ContextTables
from .context import WeatherRecord
from .dataset import Dataset
from .dataset import FeatureSchema
from .dataset import FeatureVector
from .dataset import LabeledExample
from .dataset import assemble_dataset
from .events import SensorEvent
from .events import clean_events
from .events import parse_events
from .slots import SegmentSlot
from .slots import aggregate_slots

__all__ = [
    "N_CLASSES",
    "ClassDistribution",
    "ContextTables",
    "Dataset",
    "FeatureSchema",
    "FeatureVector",
    "LabeledExample",
    "OccupancyClass",
    "SegmentSlot",
    "SensorEvent",
    "WeatherRecord",
    "aggregate_slots",
    "assemble_dataset",
    "clean_events",
    "discretize_ratio",
    "parse_events",
]
