# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import logging
from dataclasses import replace

from ..bnn.training import TrainConfig
from ..bnn.training import derive_seed
from ..bnn.training import train
from ..checkpoints import save_model
from ..data.dataset import WINDOWS
from ..data.store import load_dataset
from ..experiments.splits import normalised_partitions
from ..experiments.suite import ExperimentConfig
from ..provenance import write_manifest
from ..symbolic.extraction import extract_rules
from ..symbolic.rules import save_rules
from ..symbolic.tree import TreeParams
from ..symbolic.tree import induce_tree
from ..timer import Timer
from . import RunCommand

LOG = logging.getLogger(__name__)

# Stream of the network of each window
TRAIN_STREAM = 1


class Train(RunCommand):
    """Train the Bayesian network and extract the rules of every prediction window."""

    def run(self, args):
        config = self.load_config(args)
        dataset = load_dataset(config)
        experiment = ExperimentConfig.from_config(config)
        train_set, validation, _ = normalised_partitions(dataset, experiment.split, purge=experiment.purge)

        train_config = TrainConfig.from_config(config.train)
        tree_params = TreeParams.from_config(config.tree)

        files = []
        for window in WINDOWS:
            seed = derive_seed(config.seed, TRAIN_STREAM, window)
            with Timer(f"Training PW{window}", LOG):
                model, log = train(
                    None,
                    train_set,
                    validation,
                    window,
                    replace(train_config, seed=seed),
                    progress=bool(config.get("progress", False)),
                )

            path = self.output(config, "models", f"bnn-pw{window}.json")
            save_model(model, path, train_config=replace(train_config, seed=seed).as_dict(), seed=seed)
            files.append(path)

            path = self.output(config, "models", f"train-log-pw{window}.csv")
            log.write_csv(path)
            files.append(path)

            rules = extract_rules(induce_tree(train_set, window, tree_params), window)
            path = self.output(config, "rules", f"rules-pw{window}.json")
            save_rules(rules, path)
            files.append(path)

        write_manifest(
            config.paths.output,
            files,
            seed=config.seed,
            config=config,
            extra=dict(command="train", training_examples=len(train_set), validation_examples=len(validation)),
            name="train-manifest.json",
        )


command = Train
