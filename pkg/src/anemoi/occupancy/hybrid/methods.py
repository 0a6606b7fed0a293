# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Prediction methods applied to whole sets of inputs.

The network's posterior predictive is computed once for the whole batch and the rules
are matched with vectorised masks; each input is then decided by the functions of
:mod:`anemoi.occupancy.hybrid.outcome`, and every outcome is checked against its source.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional
from typing import Sequence

import numpy as np

from ..bnn.encoding import encode_batch
from ..bnn.model import BnnModel
from ..bnn.predictive import DEFAULT_THRESHOLD
from ..bnn.predictive import confident_prediction
from ..bnn.predictive import posterior_predictive_batch
from ..data.classes import ClassDistribution
from ..data.dataset import FeatureVector
from ..errors import ConfigError
from ..errors import DataError
from ..registry import Registry
from ..symbolic.features import FeatureTable
from ..symbolic.rules import DEFAULT_TAU_P
from ..symbolic.rules import RuleBase
from ..symbolic.rules import plausible_from_distribution
from ..symbolic.rules import rule_infer_batch
from .outcome import REFINEMENTS
from .outcome import RENORMALIZE
from .outcome import RESAMPLE
from .outcome import check_outcome
from .outcome import method1_outcome
from .outcome import method2_outcome
from .outcome import neural_outcome
from .outcome import persistence_outcome
from .outcome import symbolic_outcome

LOG = logging.getLogger(__name__)

methods = Registry("anemoi.occupancy.hybrid")

BASELINE_THRESHOLD = 0.0


@dataclass(frozen=True)
class Components:
    """What a prediction method may use, for one prediction window."""

    model: Optional[BnnModel] = None
    rules: Optional[RuleBase] = None
    threshold: float = DEFAULT_THRESHOLD
    tau_p: float = DEFAULT_TAU_P
    refinement: str = RENORMALIZE
    samples: int = 50
    seed: int = 0

    def __post_init__(self):
        if self.refinement not in REFINEMENTS:
            raise ConfigError(f"Unknown refinement {self.refinement!r}, expected one of {', '.join(REFINEMENTS)}")
        if not (0.0 <= self.threshold <= 1.0):
            raise ConfigError(f"The threshold must be in [0, 1], got {self.threshold}")
        if not (0.0 <= self.tau_p < 1.0):
            raise ConfigError(f"tau_p must be in [0, 1), got {self.tau_p}")

    def need_model(self) -> BnnModel:
        if self.model is None:
            raise DataError("This prediction method needs a trained model")
        return self.model

    def need_rules(self) -> RuleBase:
        if self.rules is None:
            raise DataError("This prediction method needs a rule base")
        return self.rules


class Batch:
    """Intermediate results shared by the methods, computed on first use."""

    def __init__(self, components: Components, features: Sequence[FeatureVector]):
        self.components = components
        self.features = list(features)
        self._probs = None
        self._rules = None
        self._x = None

    def __len__(self):
        return len(self.features)

    @property
    def x(self) -> np.ndarray:
        if self._x is None:
            model = self.components.need_model()
            self._x = encode_batch(self.features, model.schema)
        return self._x

    @property
    def probs(self) -> np.ndarray:
        if self._probs is None:
            c = self.components
            self._probs = posterior_predictive_batch(c.need_model(), self.x, c.samples, c.seed)
        return self._probs

    @property
    def rule_index(self) -> np.ndarray:
        if self._rules is None:
            self._rules = rule_infer_batch(self.components.need_rules(), FeatureTable(self.features))
        return self._rules

    def reuse(self, components: Components) -> "Batch":
        """Same inputs under other settings, e.g. another threshold, sharing what is already computed.

        Only valid when ``components`` holds the same model, rules, samples and seed.
        """
        other = Batch(components, self.features)
        other._x, other._probs, other._rules = self._x, self._probs, self._rules
        return other

    def neural(self, i) -> ClassDistribution:
        return ClassDistribution(self.probs[i])

    def rule(self, i):
        return self.components.rules.rules[int(self.rule_index[i])]


def _checked(outcomes: list, threshold: float) -> list:
    for outcome in outcomes:
        check_outcome(outcome, threshold)
    return outcomes


@methods.register("bnn")
def bnn_method(batch: Batch) -> list:
    """The network alone, i.e. Method 1 with a threshold of 0: every prediction is accepted."""
    return _checked([neural_outcome(batch.neural(i)) for i in range(len(batch))], BASELINE_THRESHOLD)


@methods.register("symbolic")
def symbolic_method(batch: Batch) -> list:
    rules = batch.components.need_rules()
    outcomes = [symbolic_outcome(rules, fv, rule=batch.rule(i)) for i, fv in enumerate(batch.features)]
    return _checked(outcomes, batch.components.threshold)


@methods.register("m1")
def method1(batch: Batch) -> list:
    c = batch.components
    rules = c.need_rules()
    outcomes = [
        method1_outcome(batch.neural(i), rules, fv, c.threshold, rule=batch.rule(i))
        for i, fv in enumerate(batch.features)
    ]
    return _checked(outcomes, c.threshold)


def _resampled(batch: Batch, deferred: list) -> dict:
    """Restricted posterior predictive of the deferred inputs, grouped by plausible set.

    Each plausible set gets its own stream, derived from the seed and the set.
    """
    c = batch.components
    groups = {}
    for i, plausible in deferred:
        groups.setdefault(plausible, []).append(i)

    result = {}
    for plausible in sorted(groups, key=lambda s: sorted(int(k) for k in s)):
        rows = groups[plausible]
        code = sum(1 << int(k) for k in plausible)
        probs = posterior_predictive_batch(c.model, batch.x[rows], c.samples, np.random.default_rng([c.seed, 1, code]), plausible)
        for i, p in zip(rows, probs):
            result[i] = ClassDistribution(p)
    return result


@methods.register("m2")
def method2(batch: Batch) -> list:
    c = batch.components
    rules = c.need_rules()

    resampled = {}
    if c.refinement == RESAMPLE:
        deferred = [
            (i, plausible_from_distribution(batch.rule(i).class_distribution, c.tau_p))
            for i in range(len(batch))
            if confident_prediction(batch.neural(i), c.threshold) is None
        ]
        resampled = _resampled(batch, deferred)

    outcomes = []
    for i, fv in enumerate(batch.features):
        resample = (lambda plausible, i=i: resampled[i]) if i in resampled else None
        outcomes.append(method2_outcome(batch.neural(i), rules, fv, c.threshold, c.tau_p, resample, rule=batch.rule(i)))
    return _checked(outcomes, c.threshold)


@methods.register("persistence")
def persistence_method(batch: Batch) -> list:
    return _checked([persistence_outcome(fv) for fv in batch.features], batch.components.threshold)


def predict_batch(name: str, components: Components, features: Sequence[FeatureVector]) -> list:
    """Apply the prediction method ``name`` (bnn, symbolic, m1, m2 or persistence) to every input.

    Returns
    -------
    list of PredictionOutcome
        In input order.
    """
    method = methods.lookup(name)
    if not features:
        return []
    outcomes = method(Batch(components, features))
    LOG.debug("%s: %s prediction(s)", name, len(outcomes))
    return outcomes
