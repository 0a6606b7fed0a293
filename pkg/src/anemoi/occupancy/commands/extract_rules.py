# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import logging

from ..data.dataset import WINDOWS
from ..data.store import load_dataset
from ..experiments.splits import normalised_partitions
from ..experiments.suite import ExperimentConfig
from ..symbolic.extraction import extract_rules
from ..symbolic.rules import save_rules
from ..symbolic.tree import TreeParams
from ..symbolic.tree import induce_tree
from ..text import rules_table
from . import RunCommand

LOG = logging.getLogger(__name__)


class ExtractRules(RunCommand):
    """Induce a decision tree on the training set and write its rules."""

    command = "extract-rules"

    def add_arguments(self, command_parser):
        super().add_arguments(command_parser)
        command_parser.add_argument("--window", type=int, choices=WINDOWS, help="Only this prediction window")
        command_parser.add_argument("--print", action="store_true", help="Print the rules")

    def run(self, args):
        config = self.load_config(args)
        dataset = load_dataset(config)
        experiment = ExperimentConfig.from_config(config)
        train_set, _, _ = normalised_partitions(dataset, experiment.split, purge=experiment.purge)
        params = TreeParams.from_config(config.tree)

        for window in [args.window] if args.window else WINDOWS:
            rules = extract_rules(induce_tree(train_set, window, params), window)
            save_rules(rules, self.output(config, "rules", f"rules-pw{window}.json"))
            if args.print:
                print(f"PW{window}")
                print(rules_table(rules))


command = ExtractRules
