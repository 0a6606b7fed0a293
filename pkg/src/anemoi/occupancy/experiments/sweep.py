# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Selective prediction statistics over a range of confidence thresholds."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from dataclasses import replace
from typing import Optional

import numpy as np
import pandas as pd
import tqdm

from ..data.dataset import Dataset
from ..hybrid.methods import Batch
from ..hybrid.methods import methods
from ..timer import Timer
from .metrics import compute_accuracy
from .suite import FULL
from .suite import Experiment

LOG = logging.getLogger(__name__)

SWEEP_COLUMNS = (
    "window",
    "threshold",
    "seed_count",
    "deferral_mean",
    "prediction_ratio_mean",
    "accepted_accuracy_mean",
    "bnn_accuracy_mean",
    "m1_accuracy_mean",
    "m2_accuracy_mean",
    "n",
)


@dataclass(frozen=True)
class SweepPoint:
    """Statistics of one threshold for one window, averaged over seeds.

    ``accepted_accuracy_mean`` is the accuracy on the inputs the network does not defer,
    averaged over the seeds where there are any; NaN if there are none.
    """

    window: int
    threshold: float
    seed_count: int
    deferral_mean: float
    prediction_ratio_mean: float
    accepted_accuracy_mean: float
    bnn_accuracy_mean: float
    m1_accuracy_mean: float
    m2_accuracy_mean: float
    n: int

    def row(self) -> list:
        def f(x):
            return "nan" if math.isnan(x) else f"{x:.6f}"

        return [
            f"PW{self.window}",
            f"{self.threshold:g}",
            self.seed_count,
            f(self.deferral_mean),
            f(self.prediction_ratio_mean),
            f(self.accepted_accuracy_mean),
            f(self.bnn_accuracy_mean),
            f(self.m1_accuracy_mean),
            f(self.m2_accuracy_mean),
            self.n,
        ]


def threshold_statistics(probs: np.ndarray, truth: np.ndarray, threshold: float) -> tuple:
    """Deferral rate and accuracy on the accepted inputs of one network output.

    An input is accepted when its top probability is strictly above ``threshold``.
    """
    accepted = probs.max(axis=1) > threshold
    deferral = 1.0 - float(np.mean(accepted))
    if not accepted.any():
        return deferral, float("nan")
    return deferral, float(np.mean(probs[accepted].argmax(axis=1) == truth[accepted]))


def _mean(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    return float(np.mean(values)) if values else float("nan")


def run_sweep(experiment: Experiment, output: Optional[str] = None, name: str = "sweep") -> list:
    """Evaluate every threshold of the experiment configuration on the full-data condition.

    The network and the rules are trained once per (seed, window); each threshold reuses
    their outputs.

    Returns
    -------
    list of SweepPoint
        Ordered by window, then threshold.
    """
    config = experiment.config
    thresholds = sorted(config.thresholds)
    stats = {}
    n = {}

    cells = [(seed, window) for seed in config.seeds for window in config.windows]
    with Timer(f"Threshold sweep ({len(cells)} cells)", LOG):
        prepared = {}
        for seed, window in tqdm.tqdm(cells, desc=name, disable=not experiment.progress, leave=False):
            data_stream, window_streams = experiment.streams(FULL, seed)
            if seed not in prepared:
                prepared[seed] = experiment.prepare(FULL, data_stream)
            train, validation, test = prepared[seed]

            components = experiment.fit(train, validation, window, window_streams[window], models=("m1", "m2"))
            truth = test.targets(window)
            batch = Batch(components, test.features)
            n[window] = len(test)

            for t in thresholds:
                b = batch.reuse(replace(components, threshold=t))
                deferral, accepted = threshold_statistics(b.probs, truth, t)
                m1 = [o.predicted for o in methods.lookup("m1")(b)]
                m2 = [o.predicted for o in methods.lookup("m2")(b)]
                stats.setdefault((window, t), []).append(
                    (
                        deferral,
                        accepted,
                        compute_accuracy(b.probs.argmax(axis=1), truth),
                        compute_accuracy(m1, truth),
                        compute_accuracy(m2, truth),
                    )
                )

    points = []
    for window in config.windows:
        for t in thresholds:
            values = stats[(window, t)]
            columns = list(zip(*values))
            deferral = float(np.mean(columns[0]))
            points.append(
                SweepPoint(
                    window=window,
                    threshold=t,
                    seed_count=len(values),
                    deferral_mean=deferral,
                    prediction_ratio_mean=1.0 - deferral,
                    accepted_accuracy_mean=_mean(columns[1]),
                    bnn_accuracy_mean=float(np.mean(columns[2])),
                    m1_accuracy_mean=float(np.mean(columns[3])),
                    m2_accuracy_mean=float(np.mean(columns[4])),
                    n=n[window],
                )
            )

    if output is not None:
        os.makedirs(output, exist_ok=True)
        write_sweep(points, os.path.join(output, f"{name}.csv"))

    experiment.timers.report()
    return points


def write_sweep(points, path) -> None:
    frame = pd.DataFrame([p.row() for p in points], columns=list(SWEEP_COLUMNS))
    frame.to_csv(path, index=False, lineterminator="\n")
