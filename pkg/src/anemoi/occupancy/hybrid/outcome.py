# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""The two ways of combining the network and the rules.

Method 1 (fallback): the network's prediction is used when it is confident, the rules'
otherwise. Method 2 (refinement): when the network is not confident, the rules first
remove the implausible classes, and the network's distribution over the remaining ones
is checked again against the same threshold; the rules decide only if that fails too.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable
from typing import Optional

import numpy as np

from ..bnn.encoding import encode_features
from ..bnn.model import BnnModel
from ..bnn.predictive import DEFAULT_THRESHOLD
from ..bnn.predictive import confident_prediction
from ..bnn.predictive import posterior_predictive
from ..data.classes import ClassDistribution
from ..data.classes import OccupancyClass
from ..data.classes import discretize_ratio
from ..data.dataset import FeatureVector
from ..dates import format_timestamp
from ..errors import IntegrityError
from ..symbolic.rules import DEFAULT_TAU_P
from ..symbolic.rules import Rule
from ..symbolic.rules import RuleBase
from ..symbolic.rules import plausible_from_distribution
from ..symbolic.rules import rule_infer

LOG = logging.getLogger(__name__)

NEURAL = "neural"
NEURAL_REFINED = "neural_refined"
SYMBOLIC = "symbolic"
PERSISTENCE = "persistence"

SOURCES = (NEURAL, NEURAL_REFINED, SYMBOLIC, PERSISTENCE)

RENORMALIZE = "renormalize"
RESAMPLE = "resample"

REFINEMENTS = (RENORMALIZE, RESAMPLE)


@dataclass(frozen=True)
class PredictionOutcome:
    """A prediction and where it came from."""

    predicted: OccupancyClass
    source: str
    confidence: float
    neural_distribution: Optional[ClassDistribution] = None
    refined_distribution: Optional[ClassDistribution] = None
    plausible_set: Optional[frozenset] = None
    matched_rule: Optional[Rule] = None

    @property
    def deferred(self) -> bool:
        """Not decided by the network on its own."""
        return self.source != NEURAL

    @property
    def rule_id(self) -> Optional[str]:
        return self.matched_rule.rule_id if self.matched_rule is not None else None


def check_outcome(outcome: PredictionOutcome, threshold: float) -> None:
    """Check that an outcome is consistent with its source.

    Raises
    ------
    IntegrityError
        If it is not.
    """
    if outcome.source not in SOURCES:
        raise IntegrityError(f"Unknown prediction source {outcome.source!r}")
    if outcome.source == NEURAL:
        if outcome.neural_distribution is None or not outcome.confidence > threshold:
            raise IntegrityError(f"Neural outcome with confidence {outcome.confidence} <= {threshold}")
    if outcome.source == NEURAL_REFINED:
        if outcome.plausible_set is None or outcome.refined_distribution is None:
            raise IntegrityError("Refined outcome without plausible set")
        if not outcome.refined_distribution.max > threshold:
            raise IntegrityError(f"Refined outcome with confidence {outcome.refined_distribution.max} <= {threshold}")
    if outcome.source == SYMBOLIC and outcome.matched_rule is None:
        raise IntegrityError("Symbolic outcome without a matched rule")


def refine_distribution(dist: ClassDistribution, plausible: Iterable) -> ClassDistribution:
    """Zero the classes outside ``plausible`` and renormalise.

    If the plausible classes carry no probability at all, the result is uniform over them.

    Raises
    ------
    ValueError
        If ``plausible`` is empty.
    """
    keep = np.zeros(len(dist), dtype=bool)
    for c in plausible:
        keep[int(c)] = True
    if not keep.any():
        raise ValueError("The plausible class set is empty")

    probs = np.where(keep, dist.probs, 0.0)
    mass = probs.sum()
    if mass > 0.0:
        return ClassDistribution(probs / mass)
    return ClassDistribution(keep / keep.sum())


def neural_outcome(dist: ClassDistribution) -> PredictionOutcome:
    return PredictionOutcome(dist.argmax, NEURAL, dist.max, neural_distribution=dist)


def _matching(rb: RuleBase, fv: FeatureVector, rule: Optional[Rule]):
    if rule is not None:
        return rule.class_distribution, rule
    return rule_infer(rb, fv)


def symbolic_outcome(rb: RuleBase, fv: FeatureVector, *, rule: Optional[Rule] = None, **kwargs) -> PredictionOutcome:
    """The matching rule's most likely class; ``rule`` skips the matching when already known."""
    dist, rule = _matching(rb, fv, rule)
    return PredictionOutcome(dist.argmax, SYMBOLIC, dist.max, matched_rule=rule, **kwargs)


def persistence_outcome(fv: FeatureVector) -> PredictionOutcome:
    return PredictionOutcome(predict_persistence(fv), PERSISTENCE, 1.0)


def method1_outcome(
    dist: ClassDistribution,
    rb: RuleBase,
    fv: FeatureVector,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    rule: Optional[Rule] = None,
) -> PredictionOutcome:
    """Method 1 given the network's distribution for ``fv``."""
    if confident_prediction(dist, threshold) is not None:
        return neural_outcome(dist)
    return symbolic_outcome(rb, fv, rule=rule, neural_distribution=dist)


def method2_outcome(
    dist: ClassDistribution,
    rb: RuleBase,
    fv: FeatureVector,
    threshold: float = DEFAULT_THRESHOLD,
    tau_p: float = DEFAULT_TAU_P,
    resample=None,
    *,
    rule: Optional[Rule] = None,
) -> PredictionOutcome:
    """Method 2 given the network's distribution for ``fv``.

    ``resample``, when given, is called with the plausible set and returns a fresh
    distribution restricted to it; otherwise the distribution is renormalised.
    """
    if confident_prediction(dist, threshold) is not None:
        return neural_outcome(dist)

    rule_dist, rule = _matching(rb, fv, rule)
    plausible = plausible_from_distribution(rule_dist, tau_p)
    refined = resample(plausible) if resample is not None else refine_distribution(dist, plausible)

    if confident_prediction(refined, threshold) is not None:
        return PredictionOutcome(
            refined.argmax,
            NEURAL_REFINED,
            refined.max,
            neural_distribution=dist,
            refined_distribution=refined,
            plausible_set=plausible,
            matched_rule=rule,
        )

    # The rules decide, unrestricted by the plausible set
    return PredictionOutcome(
        rule_dist.argmax,
        SYMBOLIC,
        rule_dist.max,
        neural_distribution=dist,
        refined_distribution=refined,
        plausible_set=plausible,
        matched_rule=rule,
    )


def _neural(model, fv, samples, stream):
    rng = np.random.default_rng(stream) if not isinstance(stream, np.random.Generator) else stream
    x = encode_features(fv, model.schema)
    return x, posterior_predictive(model, x, samples, rng), rng


def predict_method1(
    model: BnnModel,
    rb: RuleBase,
    fv: FeatureVector,
    threshold: float = DEFAULT_THRESHOLD,
    *,
    samples: int = 50,
    stream=0,
) -> PredictionOutcome:
    """Fallback strategy: the network if confident, else the matching rule.

    Parameters
    ----------
    model : BnnModel
        Trained network, carrying its feature schema.
    rb : RuleBase
        Rules for the same prediction window.
    fv : FeatureVector
        The input.
    threshold : float, optional
        Confidence threshold, by default 0.30.
    samples : int, optional
        Monte-Carlo weight samples.
    stream : numpy.random.Generator or int, optional
        Randomness of the weight samples.

    Returns
    -------
    PredictionOutcome
        Source ``neural`` or ``symbolic``.
    """
    _, dist, _ = _neural(model, fv, samples, stream)
    return method1_outcome(dist, rb, fv, threshold)


def predict_method2(
    model: BnnModel,
    rb: RuleBase,
    fv: FeatureVector,
    threshold: float = DEFAULT_THRESHOLD,
    tau_p: float = DEFAULT_TAU_P,
    *,
    refinement: str = RENORMALIZE,
    samples: int = 50,
    stream=0,
) -> PredictionOutcome:
    """Refinement strategy: the rules restrict the classes the network may choose from.

    With ``refinement="resample"`` the restricted distribution is a new Monte-Carlo
    estimate whose per-sample softmax only covers the plausible classes, drawn from the
    same stream after the first estimate.
    """
    if refinement not in REFINEMENTS:
        raise ValueError(f"Unknown refinement {refinement!r}, expected one of {REFINEMENTS}")

    x, dist, rng = _neural(model, fv, samples, stream)

    resample = None
    if refinement == RESAMPLE:

        def resample(plausible):
            return posterior_predictive(model, x, samples, rng, allowed=plausible)

    return method2_outcome(dist, rb, fv, threshold, tau_p, resample)


def predict_bnn(model: BnnModel, fv: FeatureVector, *, samples: int = 50, stream=0) -> PredictionOutcome:
    """The network alone: its most likely class, whatever its confidence.

    This is Method 1 with a threshold of 0, so the outcome passes ``check_outcome(outcome, 0.0)``.
    """
    _, dist, _ = _neural(model, fv, samples, stream)
    return neural_outcome(dist)


def predict_symbolic(rb: RuleBase, fv: FeatureVector) -> PredictionOutcome:
    return symbolic_outcome(rb, fv)


def predict_persistence(fv: FeatureVector) -> OccupancyClass:
    """Naive baseline: the class of the current slot."""
    return discretize_ratio(fv.current_ratio)


def outcome_record(outcome: PredictionOutcome, segment_id: str, slot_start, window: int) -> dict:
    """One line of the prediction output, fields in a fixed order."""
    record = dict(
        segment_id=segment_id,
        slot_start=format_timestamp(slot_start),
        window=window,
        predicted=outcome.predicted.label,
        source=outcome.source,
        confidence=outcome.confidence,
    )
    if outcome.plausible_set is not None:
        record["plausible_set"] = [c.label for c in sorted(outcome.plausible_set)]
    if outcome.matched_rule is not None:
        record["rule_id"] = outcome.rule_id
    return record
