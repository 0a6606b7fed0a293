# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import logging
import os
from collections import defaultdict

import pandas as pd

from ..data.dataset import assemble_dataset
from ..data.events import RejectsReport
from ..data.events import clean_events
from ..data.events import parse_events
from ..data.slots import aggregate_slots
from ..data.slots import write_slots
from ..data.store import input_path
from ..data.store import load_context
from ..data.store import slot_length
from ..errors import DataError
from ..provenance import write_manifest
from . import RunCommand

LOG = logging.getLogger(__name__)


def read_segments(path) -> dict:
    """``segment_id,total_bays`` rows."""
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    if not {"segment_id", "total_bays"} <= set(frame.columns):
        raise DataError(f"{path}: expected columns segment_id,total_bays")
    totals = {}
    for index, row in enumerate(frame.to_dict("records")):
        try:
            totals[row["segment_id"].strip()] = int(row["total_bays"])
        except ValueError as e:
            raise DataError(f"{path}, line {index + 2}: {e}") from e
    return totals


class Ingest(RunCommand):
    """Clean sensor events and aggregate them into 15-minute segment slots."""

    def add_arguments(self, command_parser):
        super().add_arguments(command_parser)
        command_parser.add_argument("--events", help="Sensor events CSV (default: paths.events)")
        command_parser.add_argument("--segments", help="segment_id,total_bays CSV (default: paths.segments)")

    def run(self, args):
        config = self.load_config(args)
        events_path = args.events or config.paths.get("events")
        if not events_path:
            raise DataError("No events file given (--events or paths.events)")
        if not os.path.exists(events_path):
            raise DataError(f"Events file not found: {events_path}")

        rejects = RejectsReport()
        with open(events_path, "rb") as f:
            events = clean_events(parse_events(f, rejects))
        if rejects:
            LOG.warning("%s row(s) of %s rejected", len(rejects), events_path)

        bay_to_segment = {e.bay_id: e.segment_id for e in events}
        segments_path = args.segments or config.paths.get("segments")
        if segments_path:
            total_bays = read_segments(segments_path)
        else:
            bays = defaultdict(set)
            for bay, segment in bay_to_segment.items():
                bays[segment].add(bay)
            total_bays = {segment: len(b) for segment, b in bays.items()}

        slots = aggregate_slots(
            events,
            bay_to_segment,
            total_bays,
            initial_status=bool(config.data.get("initial_status", False)),
            slot=slot_length(config),
        )

        files = [self.output(config, "data", "slots.csv"), self.output(config, "data", "rejects.csv")]
        write_slots(slots, files[0])
        rejects.write_csv(files[1])

        examples = None
        _, explicit = input_path(config, "weather")
        if explicit:
            dataset = assemble_dataset(slots, load_context(config), config.data.lag_depth, slot=slot_length(config))
            files.append(self.output(config, "dataset.json"))
            dataset.save(files[-1])
            examples = len(dataset)

        write_manifest(
            config.paths.output,
            files,
            seed=config.seed,
            config=config,
            extra=dict(command="ingest", events=len(events), rejects=len(rejects), examples=examples),
            name="ingest-manifest.json",
        )
        LOG.info("%s event(s) aggregated into %s slot(s)", len(events), len(slots))


command = Ingest
