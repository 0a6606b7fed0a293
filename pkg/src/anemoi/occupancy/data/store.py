# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Where the files of a run live, and loading them back.

Inputs named in the ``paths`` section of the configuration win; otherwise the files
written by ``generate`` or ``ingest`` under the output directory are used.
"""

from __future__ import annotations

import datetime
import logging
import os

from ..dates import as_timedelta
from ..errors import ConfigError
from ..errors import DataError
from .context import ContextTables
from .context import read_holidays
from .context import read_weather
from .dataset import Dataset
from .dataset import assemble_dataset
from .slots import read_slots

LOG = logging.getLogger(__name__)

DEFAULT_NAMES = {
    "slots": os.path.join("data", "slots.csv"),
    "weather": os.path.join("data", "weather.csv"),
    "holidays": os.path.join("data", "holidays.txt"),
    "dataset": "dataset.json",
}


def input_path(config, name: str) -> tuple[str, bool]:
    """Path of the input ``name`` and whether it was configured explicitly."""
    configured = (config.get("paths") or {}).get(name)
    if configured:
        return configured, True
    return os.path.join(config.paths.output, DEFAULT_NAMES[name]), False


def _require(path: str, what: str) -> str:
    if not os.path.exists(path):
        raise DataError(f"{what} not found: {path}")
    return path


def slot_length(config) -> datetime.timedelta:
    minutes = config.data.get("slot_minutes", 15)
    if not isinstance(minutes, int) or minutes < 1:
        raise ConfigError(f"data.slot_minutes must be a positive integer, got {minutes!r}")
    return datetime.timedelta(minutes=minutes)


def load_context(config) -> ContextTables:
    try:
        tolerance = as_timedelta(config.data.get("context_tolerance", "1h"))
    except ValueError as e:
        raise ConfigError(f"data.context_tolerance: {e}") from e

    path, _ = input_path(config, "weather")
    weather = read_weather(_require(path, "Weather file"))

    path, explicit = input_path(config, "holidays")
    holidays = []
    if explicit or os.path.exists(path):
        holidays = read_holidays(_require(path, "Holidays file"))

    return ContextTables(weather, holidays, tolerance)


def load_dataset(config) -> Dataset:
    """The labelled examples of a run.

    A saved dataset is used if there is one; otherwise it is assembled from the slot and
    weather files.

    Raises
    ------
    DataError
        If the inputs are missing, or the dataset lag depth is not the configured one.
    """
    lag_depth = config.data.lag_depth
    path, explicit = input_path(config, "dataset")
    if explicit or os.path.exists(path):
        dataset = Dataset.load(_require(path, "Dataset file"))
        LOG.info("Loaded %s example(s) from %s", len(dataset), path)
    else:
        slots_path, _ = input_path(config, "slots")
        slots = read_slots(_require(slots_path, "Slot file"))
        dataset = assemble_dataset(slots, load_context(config), lag_depth, slot=slot_length(config))

    if dataset.lag_depth != lag_depth:
        raise DataError(f"The dataset has {dataset.lag_depth} past ratios per example, the configuration {lag_depth}")
    return dataset
