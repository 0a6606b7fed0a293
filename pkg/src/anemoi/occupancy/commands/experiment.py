# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import logging

from ..data.store import load_dataset
from ..experiments.suite import SUITES
from ..experiments.suite import Experiment
from ..experiments.sweep import run_sweep
from ..provenance import write_manifest
from ..text import report_table
from ..text import sweep_table
from . import RunCommand

LOG = logging.getLogger(__name__)


class RunExperiment(RunCommand):
    """Run an experiment suite and write its report."""

    def add_arguments(self, command_parser):
        super().add_arguments(command_parser)
        command_parser.add_argument(
            "--suite",
            default="baseline",
            choices=SUITES + ("sweep",),
            help="Conditions to evaluate: full data (baseline), reduced training sets (scarcity), noisy data (noise), all of them, or a threshold sweep",
        )

    def run(self, args):
        config = self.load_config(args)
        run_experiment(self, config, args.suite)


def run_experiment(command, config, suite):
    experiment = Experiment.from_config(load_dataset(config), config)
    directory = command.output(config, "reports")

    if suite == "sweep":
        points = run_sweep(experiment, directory)
        print(sweep_table(points))
        files = [command.output(config, "reports", "sweep.csv")]
    else:
        reports = experiment.run(suite, directory)
        print(report_table(reports))
        files = [command.output(config, "reports", f"{suite}.csv"), command.output(config, "reports", f"{suite}-long.csv")]

    write_manifest(directory, files, seed=config.seed, config=config, extra=dict(command="experiment", suite=suite), name=f"{suite}-manifest.json")


command = RunExperiment
