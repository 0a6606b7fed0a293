# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Experiment suites: every model under every data condition, window and seed.

A cell is one (condition, seed) pair. It owns its random streams, derived from the seed and
the condition, so cells can run in any order, or in parallel, and the reports are the same.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import as_completed
from dataclasses import dataclass
from dataclasses import field
from dataclasses import replace
from typing import Optional

import numpy as np
import tqdm

from ..bnn.training import TrainConfig
from ..bnn.training import train as train_bnn
from ..config import from_section
from ..data.dataset import Dataset
from ..data.dataset import check_window
from ..errors import ConfigError
from ..hybrid.methods import Components
from ..hybrid.methods import methods
from ..hybrid.methods import predict_batch
from ..hybrid.outcome import REFINEMENTS
from ..hybrid.outcome import RENORMALIZE
from ..symbolic.extraction import extract_rules
from ..symbolic.tree import TreeParams
from ..symbolic.tree import induce_tree
from ..timer import Timer
from ..timer import Timers
from .metrics import Evaluation
from .metrics import aggregate
from .metrics import compute_accuracy
from .metrics import compute_accuracy_at_1
from .metrics import compute_deferral_rate
from .metrics import write_long_report
from .metrics import write_report
from .noise import NoiseParams
from .noise import inject_noise
from .splits import check_fractions
from .splits import subsample_training
from .splits import temporal_split

LOG = logging.getLogger(__name__)

FULL = "full"
NOISY = "noisy"

NEEDS_MODEL = ("bnn", "m1", "m2")
NEEDS_RULES = ("symbolic", "m1", "m2")

SUITES = ("baseline", "scarcity", "noise", "all")


def scarcity_condition(fraction: float) -> str:
    return f"scarcity_{fraction:g}"


@dataclass(frozen=True)
class ExperimentConfig:
    split: tuple = (0.8, 0.1, 0.1)
    purge: bool = True
    scarcity_fractions: tuple = (0.9, 0.5, 0.1)
    noise: NoiseParams = field(default_factory=NoiseParams)
    seeds: tuple = (0, 1, 2, 3, 4)
    windows: tuple = (1, 2, 3)
    models: tuple = ("bnn", "symbolic", "m1", "m2", "persistence")
    thresholds: tuple = (0.19, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5, 0.6)
    workers: int = 1
    threshold: float = 0.3
    tau_p: float = 0.05
    refinement: str = RENORMALIZE

    def __post_init__(self):
        for name in ("split", "scarcity_fractions", "seeds", "windows", "models", "thresholds"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if isinstance(self.noise, dict):
            object.__setattr__(self, "noise", NoiseParams.from_config(self.noise))

        object.__setattr__(self, "split", check_fractions(self.split))
        if any(not (0.0 < f <= 1.0) for f in self.scarcity_fractions):
            raise ValueError(f"Scarcity fractions must be in (0, 1], got {self.scarcity_fractions}")
        if not self.seeds:
            raise ValueError("At least one seed is needed")
        if any(not isinstance(s, int) or isinstance(s, bool) for s in self.seeds):
            raise ValueError(f"Seeds must be integers, got {self.seeds}")
        object.__setattr__(self, "windows", tuple(check_window(w) for w in self.windows))
        if not self.windows:
            raise ValueError("At least one window is needed")
        for name in self.models:
            methods.lookup(name)
        if any(not (0.0 <= t <= 1.0) for t in self.thresholds + (self.threshold,)):
            raise ValueError("Thresholds must be in [0, 1]")
        if not (0.0 <= self.tau_p < 1.0):
            raise ValueError(f"tau_p must be in [0, 1), got {self.tau_p}")
        if self.refinement not in REFINEMENTS:
            raise ValueError(f"Unknown refinement {self.refinement!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}")

    @classmethod
    def from_config(cls, config) -> "ExperimentConfig":
        """Build from the ``experiment`` section and the prediction settings of ``hybrid``."""
        section = dict(config.get("experiment") or {})
        section.update(config.get("hybrid") or {})
        return from_section(cls, section, "experiment")

    @property
    def conditions(self) -> tuple:
        """Every data condition, in report order."""
        return (FULL,) + tuple(scarcity_condition(f) for f in self.scarcity_fractions) + (NOISY,)

    def suite_conditions(self, suite: str) -> tuple:
        if suite == "baseline":
            return (FULL,)
        if suite == "scarcity":
            return tuple(scarcity_condition(f) for f in self.scarcity_fractions)
        if suite == "noise":
            return (NOISY,)
        if suite == "all":
            return self.conditions
        raise ConfigError(f"Unknown suite {suite!r}, expected one of {', '.join(SUITES)} or sweep")


class Experiment:
    """Training and evaluation of the prediction methods on one dataset.

    Parameters
    ----------
    dataset : Dataset
        All the examples; they are split in time once, the same way for every cell.
    config : ExperimentConfig
        Conditions, seeds, windows and models.
    train_config : TrainConfig
        Network hyperparameters; the seed is replaced in every cell.
    tree_params : TreeParams
        Rule induction settings.
    progress : bool, optional
        Show a progress bar over the cells.
    """

    def __init__(
        self,
        dataset: Dataset,
        config: ExperimentConfig,
        train_config: TrainConfig = TrainConfig(),
        tree_params: TreeParams = TreeParams(),
        *,
        progress: bool = False,
    ):
        self.config = config
        self.train_config = train_config
        self.tree_params = tree_params
        self.progress = progress
        self.timers = Timers(LOG)
        self.partitions = temporal_split(dataset, config.split, purge=config.purge)

    @classmethod
    def from_config(cls, dataset: Dataset, config) -> "Experiment":
        return cls(
            dataset,
            ExperimentConfig.from_config(config),
            TrainConfig.from_config(config.get("train")),
            TreeParams.from_config(config.get("tree")),
            progress=bool(config.get("progress", False)),
        )

    def streams(self, condition: str, seed: int) -> tuple:
        """Seed sequences of a cell: one for the data, one per window."""
        code = self.config.conditions.index(condition)
        root = np.random.SeedSequence([seed, code])
        data, *windows = root.spawn(4)
        return data, dict(zip((1, 2, 3), windows))

    def prepare(self, condition: str, stream: np.random.SeedSequence) -> tuple:
        """Training, validation and test sets of a condition, normalised on the training set."""
        train, validation, test = self.partitions

        if condition == NOISY:
            noise = self.config.noise
            s_train, s_val, s_test = stream.spawn(3)
            reference = train
            train = inject_noise(train, noise, s_train, labels=True, reference=reference)
            validation = inject_noise(validation, noise, s_val, labels=True, reference=reference)
            # Test labels stay clean for scoring
            test = inject_noise(test, noise, s_test, labels=False, reference=reference)
        elif condition != FULL:
            fraction = float(condition[len("scarcity_") :])
            train = subsample_training(train, fraction, stream)

        train = train.refit()
        return train, validation.with_schema(train.feature_schema), test.with_schema(train.feature_schema)

    def fit(self, train: Dataset, validation: Dataset, window: int, stream: np.random.SeedSequence, models=None) -> Components:
        """Train what ``models`` need for one window and bundle it with the prediction settings."""
        models = self.config.models if models is None else models
        train_seed, predict_seed = (int(s.generate_state(1)[0]) for s in stream.spawn(2))

        model = None
        if any(m in NEEDS_MODEL for m in models):
            with self.timers["train"]:
                model, _ = train_bnn(None, train, validation, window, replace(self.train_config, seed=train_seed))

        rules = None
        if any(m in NEEDS_RULES for m in models):
            with self.timers["rules"]:
                rules = extract_rules(induce_tree(train, window, self.tree_params), window)

        return Components(
            model=model,
            rules=rules,
            threshold=self.config.threshold,
            tau_p=self.config.tau_p,
            refinement=self.config.refinement,
            samples=self.train_config.mc_predict_samples,
            seed=predict_seed,
        )

    def evaluate(self, name: str, components: Components, test: Dataset, window: int, condition: str, seed: int) -> Evaluation:
        with self.timers["predict"]:
            outcomes = predict_batch(name, components, test.features)
        predicted = [o.predicted for o in outcomes]
        truth = test.targets(window)

        if name == "bnn":
            # The network always answers: report how often it would have abstained
            deferral = float(np.mean([o.confidence <= components.threshold for o in outcomes]))
        else:
            deferral = compute_deferral_rate(outcomes)

        return Evaluation(
            model=name,
            condition=condition,
            window=window,
            seed=seed,
            accuracy=compute_accuracy(predicted, truth),
            accuracy_at_1=compute_accuracy_at_1(predicted, truth),
            deferral_rate=deferral,
            n=len(test),
        )

    def cell(self, condition: str, seed: int) -> list:
        data_stream, window_streams = self.streams(condition, seed)
        with self.timers["prepare"]:
            train, validation, test = self.prepare(condition, data_stream)

        evaluations = []
        for window in self.config.windows:
            components = self.fit(train, validation, window, window_streams[window])
            for name in self.config.models:
                evaluations.append(self.evaluate(name, components, test, window, condition, seed))
        LOG.debug("Cell %s/seed %s done", condition, seed)
        return evaluations

    def _run_cells(self, cells: list, title: str) -> tuple:
        results = {}
        failures = {}
        bar = tqdm.tqdm(total=len(cells), desc=title, disable=not self.progress, leave=False)

        if self.config.workers == 1:
            for key in cells:
                try:
                    results[key] = self.cell(*key)
                except Exception as e:
                    failures[key] = e
                bar.update(1)
        else:
            with ThreadPoolExecutor(max_workers=self.config.workers) as executor:
                futures = {executor.submit(self.cell, *key): key for key in cells}
                for future in as_completed(futures):
                    key = futures[future]
                    try:
                        results[key] = future.result()
                    except Exception as e:
                        failures[key] = e
                    bar.update(1)
        bar.close()
        return results, failures

    def run(self, suite: str, output: Optional[str] = None) -> list:
        """Run a suite and aggregate its evaluations over seeds.

        Parameters
        ----------
        suite : str
            ``baseline``, ``scarcity``, ``noise`` or ``all``.
        output : str, optional
            Directory receiving ``<suite>.csv`` and ``<suite>-long.csv``. If a cell fails,
            the reports of the other cells and ``<suite>-failures.json`` are written before
            the first error is raised again.

        Returns
        -------
        list of MetricsReport
            One per (model, condition, window), ordered by model, condition, then window.
        """
        conditions = self.config.suite_conditions(suite)
        cells = [(c, s) for c in conditions for s in self.config.seeds]

        with Timer(f"Suite {suite} ({len(cells)} cells)", LOG):
            results, failures = self._run_cells(cells, suite)

        # Canonical order, whatever the completion order
        evaluations = [e for key in cells if key in results for e in results[key]]
        c = self.config
        evaluations.sort(
            key=lambda e: (c.models.index(e.model), conditions.index(e.condition), c.windows.index(e.window), c.seeds.index(e.seed))
        )
        reports = aggregate(evaluations)

        if output is not None:
            os.makedirs(output, exist_ok=True)
            write_report(reports, os.path.join(output, f"{suite}.csv"))
            write_long_report(evaluations, os.path.join(output, f"{suite}-long.csv"))

        if failures:
            failed = [
                dict(condition=c, seed=s, error=type(failures[(c, s)]).__name__, message=str(failures[(c, s)]))
                for (c, s) in cells
                if (c, s) in failures
            ]
            for f in failed:
                LOG.error("Cell %s/seed %s failed: %s", f["condition"], f["seed"], f["message"])
            if output is not None:
                with open(os.path.join(output, f"{suite}-failures.json"), "w") as f:
                    json.dump(dict(suite=suite, failures=failed), f, indent=2)
            first = next(key for key in cells if key in failures)
            raise failures[first]

        self.timers.report()
        return reports


def run_suite(config, dataset: Dataset, suite: str, output: Optional[str] = None) -> list:
    """Run the experiment ``suite`` on ``dataset`` with the settings of a run configuration."""
    return Experiment.from_config(dataset, config).run(suite, output)
