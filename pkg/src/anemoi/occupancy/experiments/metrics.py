# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable
from typing import Sequence

import numpy as np
import pandas as pd

from ..errors import DataError
from ..hybrid.outcome import NEURAL

LOG = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "model",
    "condition",
    "window",
    "seed_count",
    "accuracy_mean",
    "accuracy_std",
    "acc_at_1_mean",
    "acc_at_1_std",
    "deferral_mean",
    "n",
)

LONG_COLUMNS = ("model", "condition", "window", "seed", "metric", "value")


def _as_indices(pred, truth) -> tuple:
    pred = np.asarray([int(p) for p in pred], dtype=np.int64)
    truth = np.asarray([int(t) for t in truth], dtype=np.int64)
    if len(pred) != len(truth):
        raise DataError(f"Predictions and truth differ in length ({len(pred)} != {len(truth)})")
    if len(pred) == 0:
        raise DataError("Cannot score an empty set of predictions")
    return pred, truth


def compute_accuracy(pred: Sequence, truth: Sequence) -> float:
    """Fraction of exact class matches."""
    pred, truth = _as_indices(pred, truth)
    return float(np.mean(pred == truth))


def compute_accuracy_at_1(pred: Sequence, truth: Sequence) -> float:
    """Fraction of predictions at most one class away from the truth."""
    pred, truth = _as_indices(pred, truth)
    return float(np.mean(np.abs(pred - truth) <= 1))


def compute_deferral_rate(outcomes: Sequence) -> float:
    """Fraction of outcomes not decided by the network alone."""
    if len(outcomes) == 0:
        raise DataError("Cannot compute the deferral rate of no outcomes")
    return sum(1 for o in outcomes if o.source != NEURAL) / len(outcomes)


@dataclass(frozen=True)
class Evaluation:
    """Scores of one model in one cell (condition, window, seed)."""

    model: str
    condition: str
    window: int
    seed: int
    accuracy: float
    accuracy_at_1: float
    deferral_rate: float
    n: int

    def long_rows(self) -> list:
        return [
            (self.model, self.condition, f"PW{self.window}", self.seed, metric, value)
            for metric, value in (
                ("accuracy", self.accuracy),
                ("acc_at_1", self.accuracy_at_1),
                ("deferral_rate", self.deferral_rate),
            )
        ]


@dataclass(frozen=True)
class MetricsReport:
    """Scores of one (model, condition, window) aggregated over seeds."""

    model: str
    condition: str
    window: int
    seed_count: int
    accuracy_mean: float
    accuracy_std: float
    acc_at_1_mean: float
    acc_at_1_std: float
    deferral_mean: float
    n: int

    def __post_init__(self):
        if not (0.0 <= self.accuracy_mean <= self.acc_at_1_mean <= 1.0):
            raise DataError(f"Inconsistent accuracies for {self.model}/{self.condition}/PW{self.window}")

    def row(self) -> list:
        return [
            self.model,
            self.condition,
            f"PW{self.window}",
            self.seed_count,
            f"{self.accuracy_mean:.6f}",
            f"{self.accuracy_std:.6f}",
            f"{self.acc_at_1_mean:.6f}",
            f"{self.acc_at_1_std:.6f}",
            f"{self.deferral_mean:.6f}",
            self.n,
        ]


def _std(values) -> float:
    return float(np.std(values, ddof=1)) if len(values) > 1 else 0.0


def aggregate(evaluations: Iterable[Evaluation]) -> list:
    """Mean and sample standard deviation over seeds, keeping first-seen group order."""
    groups = {}
    for e in evaluations:
        groups.setdefault((e.model, e.condition, e.window), []).append(e)

    reports = []
    for (model, condition, window), group in groups.items():
        acc = [e.accuracy for e in group]
        acc1 = [e.accuracy_at_1 for e in group]
        reports.append(
            MetricsReport(
                model=model,
                condition=condition,
                window=window,
                seed_count=len(group),
                accuracy_mean=float(np.mean(acc)),
                accuracy_std=_std(acc),
                acc_at_1_mean=float(np.mean(acc1)),
                acc_at_1_std=_std(acc1),
                deferral_mean=float(np.mean([e.deferral_rate for e in group])),
                n=group[0].n,
            )
        )
    return reports


def write_report(reports: Iterable[MetricsReport], path) -> None:
    frame = pd.DataFrame([r.row() for r in reports], columns=list(REPORT_COLUMNS))
    frame.to_csv(path, index=False, lineterminator="\n")


def write_long_report(evaluations: Iterable[Evaluation], path) -> None:
    rows = [
        (model, condition, window, seed, metric, f"{value:.6f}")
        for e in evaluations
        for model, condition, window, seed, metric, value in e.long_rows()
    ]
    pd.DataFrame(rows, columns=list(LONG_COLUMNS)).to_csv(path, index=False, lineterminator="\n")
