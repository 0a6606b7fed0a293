# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import logging

from ..data.context import write_holidays
from ..data.context import write_weather
from ..data.dataset import assemble_dataset
from ..data.slots import write_slots
from ..data.store import slot_length
from ..provenance import write_manifest
from ..symbolic.rules import save_rules
from . import RunCommand

LOG = logging.getLogger(__name__)


class Generate(RunCommand):
    """Generate a synthetic benchmark with planted rules."""

    def run(self, args):
        from ..data.synthetic import GeneratorConfig
        from ..data.synthetic import generate_synthetic

        config = self.load_config(args)
        generator = GeneratorConfig.from_config(config.generator)
        slots, context, ground_truth = generate_synthetic(generator, config.seed)

        files = [
            self.output(config, "data", "slots.csv"),
            self.output(config, "data", "weather.csv"),
            self.output(config, "data", "holidays.txt"),
            self.output(config, "data", "ground_truth_rules.json"),
        ]
        write_slots(slots, files[0])
        write_weather(context.weather, files[1])
        write_holidays(context.holidays, files[2])
        save_rules(ground_truth, files[3])

        dataset = assemble_dataset(slots, context, config.data.lag_depth, slot=slot_length(config))
        files.append(self.output(config, "dataset.json"))
        dataset.save(files[-1])

        write_manifest(
            config.paths.output,
            files,
            seed=config.seed,
            config=config,
            extra=dict(command="generate", examples=len(dataset)),
            name="generate-manifest.json",
        )
        LOG.info("%s slot(s) and %s example(s) written to %s", len(slots), len(dataset), config.paths.output)


command = Generate
