# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import json
import logging
import os

from ..bnn.training import TrainConfig
from ..bnn.training import derive_seed
from ..checkpoints import load_model
from ..data.dataset import WINDOWS
from ..data.dataset import check_window
from ..data.store import load_dataset
from ..errors import ConfigError
from ..errors import DataError
from ..experiments.splits import temporal_split
from ..experiments.suite import NEEDS_MODEL
from ..experiments.suite import NEEDS_RULES
from ..experiments.suite import ExperimentConfig
from ..hybrid.methods import Components
from ..hybrid.methods import methods
from ..hybrid.methods import predict_batch
from ..hybrid.outcome import outcome_record
from ..symbolic.rules import load_rules
from . import RunCommand

LOG = logging.getLogger(__name__)

SLICES = ("train", "validation", "test", "all")

# Stream of the posterior predictive draws of each window
PREDICT_STREAM = 2


def select_slice(dataset, name, experiment):
    if name not in SLICES:
        raise ConfigError(f"Unknown slice {name!r}, expected one of {', '.join(SLICES)}")
    if name == "all" or len(dataset) == 0:
        return dataset
    return temporal_split(dataset, experiment.split, purge=experiment.purge)[SLICES.index(name)]


class Predict(RunCommand):
    """Predict the occupancy class of every example of a slice, one JSON line each."""

    def add_arguments(self, command_parser):
        super().add_arguments(command_parser)
        command_parser.add_argument("--method", help="bnn, symbolic, m1, m2 or persistence (default: predict.method)")
        command_parser.add_argument("--slice", help="train, validation, test or all (default: predict.slice)")
        command_parser.add_argument("--window", type=int, choices=WINDOWS, help="Only this prediction window")

    def components(self, config, method, window):
        model = None
        if method in NEEDS_MODEL:
            model = load_model(self.output(config, "models", f"bnn-pw{window}.json", create=False))
            if model.window != window:
                raise DataError(f"The checkpoint of PW{window} was trained for PW{model.window}")

        rules = None
        if method in NEEDS_RULES:
            rules = load_rules(self.output(config, "rules", f"rules-pw{window}.json", create=False))
            if rules.window is not None and rules.window != window:
                raise DataError(f"The rules of PW{window} were extracted for PW{rules.window}")

        return Components(
            model=model,
            rules=rules,
            threshold=config.hybrid.threshold,
            tau_p=config.hybrid.tau_p,
            refinement=config.hybrid.refinement,
            samples=TrainConfig.from_config(config.train).mc_predict_samples,
            seed=derive_seed(config.seed, PREDICT_STREAM, window),
        )

    def run(self, args):
        config = self.load_config(args)
        method = args.method or config.predict.method
        methods.lookup(method)

        dataset = load_dataset(config)
        examples = select_slice(dataset, args.slice or config.predict.slice, ExperimentConfig.from_config(config))

        window = args.window or config.predict.get("window")
        windows = [check_window(window)] if window else list(WINDOWS)

        path = self.output(config, f"predictions-{method}.jsonl")
        count = 0
        with open(path, "w") as f:
            for w in windows:
                if not len(examples):
                    continue
                components = self.components(config, method, w)
                if components.model is not None and components.model.schema.lag_depth != examples.lag_depth:
                    raise DataError(
                        f"The model uses {components.model.schema.lag_depth} past ratios, the dataset {examples.lag_depth}"
                    )
                outcomes = predict_batch(method, components, examples.features)
                for e, outcome in zip(examples, outcomes):
                    f.write(json.dumps(outcome_record(outcome, e.segment_id, e.slot_start, w)))
                    f.write("\n")
                    count += 1

        LOG.info("%s prediction(s) written to %s", count, os.path.relpath(path))


command = Predict
