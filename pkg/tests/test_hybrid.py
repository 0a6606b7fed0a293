# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import datetime
import os
import sys

import numpy as np
import pytest

from anemoi.occupancy.bnn.encoding import encode_batch
from anemoi.occupancy.bnn.model import BnnModel
from anemoi.occupancy.bnn.model import VariationalLayer
from anemoi.occupancy.bnn.predictive import posterior_predictive
from anemoi.occupancy.data.classes import ClassDistribution
from anemoi.occupancy.data.classes import OccupancyClass
from anemoi.occupancy.data.context import WEATHER_TYPES
from anemoi.occupancy.data.dataset import FeatureSchema
from anemoi.occupancy.data.dataset import FeatureVector
from anemoi.occupancy.errors import ConfigError
from anemoi.occupancy.errors import DataError
from anemoi.occupancy.errors import IntegrityError
from anemoi.occupancy.hybrid.methods import BASELINE_THRESHOLD
from anemoi.occupancy.hybrid.methods import Batch
from anemoi.occupancy.hybrid.methods import Components
from anemoi.occupancy.hybrid.methods import predict_batch
from anemoi.occupancy.hybrid.outcome import NEURAL
from anemoi.occupancy.hybrid.outcome import NEURAL_REFINED
from anemoi.occupancy.hybrid.outcome import PERSISTENCE
from anemoi.occupancy.hybrid.outcome import SYMBOLIC
from anemoi.occupancy.hybrid.outcome import PredictionOutcome
from anemoi.occupancy.hybrid.outcome import check_outcome
from anemoi.occupancy.hybrid.outcome import method1_outcome
from anemoi.occupancy.hybrid.outcome import method2_outcome
from anemoi.occupancy.hybrid.outcome import outcome_record
from anemoi.occupancy.hybrid.outcome import predict_bnn
from anemoi.occupancy.hybrid.outcome import predict_method1
from anemoi.occupancy.hybrid.outcome import predict_method2
from anemoi.occupancy.hybrid.outcome import predict_persistence
from anemoi.occupancy.hybrid.outcome import predict_symbolic
from anemoi.occupancy.hybrid.outcome import refine_distribution
from anemoi.occupancy.symbolic.rules import Condition
from anemoi.occupancy.symbolic.rules import Rule
from anemoi.occupancy.symbolic.rules import RuleBase
from anemoi.occupancy.symbolic.rules import rule_infer

SLOW = os.environ.get("ANEMOI_OCCUPANCY_SLOW") == "1"

VL, L, M, H, VH = OccupancyClass
UNSURE = [0.28, 0.27, 0.20, 0.15, 0.10]


def _fv(**kwargs):
    values = dict(
        current_ratio=0.5,
        past_ratios=(0.4, 0.3),
        hour=10,
        day_of_week=2,
        month=3,
        is_holiday=False,
        weather_type="clear",
        temperature_c=12.0,
        wind_kmh=5.0,
        rainfall_mm=0.0,
    )
    values.update(kwargs)
    return FeatureVector(**values)


def _random_features(n, seed):
    rng = np.random.default_rng(seed)
    return [
        _fv(
            current_ratio=float(rng.random()),
            past_ratios=tuple(rng.random(2)),
            hour=int(rng.integers(24)),
            day_of_week=int(rng.integers(7)),
            weather_type=WEATHER_TYPES[int(rng.integers(4))],
            temperature_c=float(rng.normal(10, 5)),
        )
        for _ in range(n)
    ]


SCHEMA = FeatureSchema.fit(_random_features(50, 0), 2)


def _rules(morning, afternoon):
    return RuleBase(
        (
            Rule((Condition("hour", "le", 11),), morning, 10, "morning"),
            Rule((Condition("hour", "gt", 11),), afternoon, 10, "afternoon"),
        ),
        window=1,
    )


RULES = _rules([0.5, 0.45, 0.02, 0.02, 0.01], [0.02, 0.03, 0.05, 0.1, 0.8])
ALL_PLAUSIBLE = _rules([0.2] * 5, [0.1, 0.1, 0.2, 0.3, 0.3])


def _fixed_model(probs):
    """A network with no weight uncertainty whose output is probs for every input."""
    layer = VariationalLayer(
        np.zeros((5, SCHEMA.width)),
        np.full((5, SCHEMA.width), -1e3),
        np.log(probs),
        np.full(5, -1e3),
    )
    return BnnModel([layer], SCHEMA, 1)


def _random_model(seed=1):
    return BnnModel.initialise(SCHEMA.width, [8], np.random.default_rng(seed), init_sigma=0.3, schema=SCHEMA, window=1)


def test_refine_distribution():
    refined = refine_distribution(ClassDistribution(UNSURE), {VL, L})
    assert np.allclose(refined.probs, [0.28 / 0.55, 0.27 / 0.55, 0, 0, 0])
    assert refined.probs[0] == pytest.approx(0.5091, abs=1e-4)
    assert refined.probs[1] == pytest.approx(0.4909, abs=1e-4)

    assert np.allclose(refine_distribution(ClassDistribution(UNSURE), set(OccupancyClass)).probs, UNSURE)

    refined = refine_distribution(ClassDistribution([0, 0, 0, 0, 1]), {VL, L})
    assert refined == ClassDistribution([0.5, 0.5, 0, 0, 0])

    with pytest.raises(ValueError):
        refine_distribution(ClassDistribution(UNSURE), set())


def test_method1_outcome():
    outcome = method1_outcome(ClassDistribution([0.6, 0.1, 0.1, 0.1, 0.1]), RULES, _fv(), 0.3)
    assert outcome.source == NEURAL
    assert outcome.predicted == VL
    assert not outcome.deferred

    outcome = method1_outcome(ClassDistribution.uniform(), RULES, _fv(hour=15), 0.3)
    assert outcome.source == SYMBOLIC
    assert outcome.predicted == VH
    assert outcome.rule_id == "afternoon"
    assert outcome.deferred

    assert method1_outcome(ClassDistribution.uniform(), RULES, _fv(), 0.0).source == NEURAL


def test_method2_outcome():
    outcome = method2_outcome(ClassDistribution(UNSURE), RULES, _fv(hour=9), 0.3, 0.05)
    assert outcome.source == NEURAL_REFINED
    assert outcome.predicted == VL
    assert outcome.plausible_set == {VL, L}
    assert outcome.confidence == pytest.approx(0.28 / 0.55)
    check_outcome(outcome, 0.3)

    # Every class plausible: the refined distribution is the initial one, still unsure
    outcome = method2_outcome(ClassDistribution(UNSURE), ALL_PLAUSIBLE, _fv(hour=15), 0.3, 0.05)
    assert outcome.source == SYMBOLIC
    assert np.allclose(outcome.refined_distribution.probs, UNSURE)
    assert outcome.predicted == H
    assert outcome.predicted == method1_outcome(ClassDistribution(UNSURE), ALL_PLAUSIBLE, _fv(hour=15), 0.3).predicted

    confident = ClassDistribution([0.1, 0.1, 0.6, 0.1, 0.1])
    assert method2_outcome(confident, RULES, _fv(), 0.3) == method1_outcome(confident, RULES, _fv(), 0.3)


def test_method2_symbolic_fallback():
    # The plausible classes carry too little of the network's mass
    rules = _rules([0.02, 0.02, 0.02, 0.47, 0.47], [0.2] * 5)
    dist = ClassDistribution([0.29, 0.29, 0.29, 0.07, 0.06])
    outcome = method2_outcome(dist, rules, _fv(hour=8), 0.6, 0.05)
    assert outcome.plausible_set == {H, VH}
    assert outcome.refined_distribution.max == pytest.approx(0.07 / 0.13)
    assert outcome.source == SYMBOLIC
    assert outcome.predicted == H
    check_outcome(outcome, 0.6)


def test_predict_with_model():
    model = _fixed_model(UNSURE)
    fv = _fv(hour=9)

    outcome = predict_method1(model, RULES, fv, 0.3, samples=5)
    assert outcome.source == SYMBOLIC
    assert outcome.predicted == VL
    assert np.allclose(outcome.neural_distribution.probs, UNSURE)

    for refinement in ("renormalize", "resample"):
        outcome = predict_method2(model, RULES, fv, 0.3, refinement=refinement, samples=5)
        assert outcome.source == NEURAL_REFINED
        assert outcome.predicted == VL
        assert outcome.confidence == pytest.approx(0.28 / 0.55)

    with pytest.raises(ValueError):
        predict_method2(model, RULES, fv, refinement="other")

    outcome = predict_bnn(model, fv, samples=3)
    assert outcome.source == NEURAL
    assert outcome.predicted == VL
    assert outcome.confidence == pytest.approx(0.28)

    outcome = predict_symbolic(RULES, _fv(hour=20))
    assert outcome.rule_id == "afternoon"
    assert outcome.predicted == VH


def test_predict_persistence():
    assert predict_persistence(_fv(current_ratio=0.9)) == VH
    assert predict_persistence(_fv(current_ratio=0.0)) == VL
    assert predict_persistence(_fv(current_ratio=0.4)) == M


def test_check_outcome():
    check_outcome(PredictionOutcome(VL, NEURAL, 0.6, neural_distribution=ClassDistribution([0.6, 0.1, 0.1, 0.1, 0.1])), 0.3)
    with pytest.raises(IntegrityError):
        check_outcome(PredictionOutcome(VL, NEURAL, 0.25, neural_distribution=ClassDistribution.uniform()), 0.3)
    with pytest.raises(IntegrityError):
        check_outcome(PredictionOutcome(VL, SYMBOLIC, 0.5), 0.3)
    with pytest.raises(IntegrityError):
        check_outcome(PredictionOutcome(VL, "oracle", 0.5), 0.3)


def test_outcome_record():
    outcome = method2_outcome(ClassDistribution(UNSURE), RULES, _fv(hour=9), 0.3)
    record = outcome_record(outcome, "s1", datetime.datetime(2019, 3, 4, 9, 0), 1)
    assert list(record) == ["segment_id", "slot_start", "window", "predicted", "source", "confidence", "plausible_set", "rule_id"]
    assert record["slot_start"] == "2019-03-04T09:00:00Z"
    assert record["predicted"] == "VeryLow"
    assert record["plausible_set"] == ["VeryLow", "Low"]
    assert record["rule_id"] == "morning"

    record = outcome_record(PredictionOutcome(H, PERSISTENCE, 1.0), "s1", datetime.datetime(2019, 3, 4), 2)
    assert "rule_id" not in record
    assert "plausible_set" not in record


def test_batch_matches_single_inputs():
    features = _random_features(60, 2)
    components = Components(_random_model(), RULES, threshold=0.3, samples=10, seed=3)
    batch = Batch(components, features)

    m1 = predict_batch("m1", components, features)
    m2 = predict_batch("m2", components, features)
    for i, fv in enumerate(features):
        dist = batch.neural(i)
        assert m1[i] == method1_outcome(dist, RULES, fv, 0.3)
        expected = method2_outcome(dist, RULES, fv, 0.3, components.tau_p)
        assert (m2[i].predicted, m2[i].source) == (expected.predicted, expected.source)
        check_outcome(m1[i], 0.3)
        check_outcome(m2[i], 0.3)

    bnn = predict_batch("bnn", components, features)
    assert [o.predicted for o in bnn] == [o.neural_distribution.argmax for o in bnn]

    symbolic = predict_batch("symbolic", components, features)
    assert all(o.rule_id == ("morning" if fv.hour <= 11 else "afternoon") for o, fv in zip(symbolic, features))

    persistence = predict_batch("persistence", components, features)
    assert [o.predicted for o in persistence] == [predict_persistence(fv) for fv in features]


def test_m2_with_all_classes_plausible_is_m1():
    features = _random_features(60, 4)
    components = Components(_random_model(5), ALL_PLAUSIBLE, threshold=0.4, samples=10, seed=6)
    m1 = predict_batch("m1", components, features)
    m2 = predict_batch("m2", components, features)
    assert [o.predicted for o in m1] == [o.predicted for o in m2]
    assert [o.source for o in m1] == [o.source for o in m2]


def test_low_threshold_never_defers():
    features = _random_features(40, 7)
    components = Components(_random_model(8), RULES, threshold=0.19, samples=10, seed=9)
    for name in ("m1", "m2"):
        assert all(o.source == NEURAL for o in predict_batch(name, components, features))


def test_resample_refinement():
    features = _random_features(60, 10)
    components = Components(_random_model(11), RULES, threshold=0.35, samples=10, seed=12, refinement="resample")
    outcomes = predict_batch("m2", components, features)
    assert outcomes == predict_batch("m2", components, features)
    for o in outcomes:
        check_outcome(o, 0.35)
        if o.source == NEURAL_REFINED:
            outside = [k for k in range(5) if OccupancyClass(k) not in o.plausible_set]
            assert np.all(o.refined_distribution.probs[outside] == 0.0)


def test_batch_reuse():
    features = _random_features(20, 13)
    components = Components(_random_model(14), RULES, threshold=0.3, samples=10, seed=15)
    batch = Batch(components, features)
    probs = batch.probs
    other = batch.reuse(Components(components.model, RULES, threshold=0.5, samples=10, seed=15))
    assert other.probs is probs
    assert other.components.threshold == 0.5


def test_components():
    with pytest.raises(ConfigError):
        Components(refinement="other")
    with pytest.raises(ConfigError):
        Components(threshold=1.5)
    with pytest.raises(ConfigError):
        Components(tau_p=1.0)

    features = _random_features(3, 16)
    with pytest.raises(DataError):
        predict_batch("symbolic", Components(_random_model()), features)
    with pytest.raises(DataError):
        predict_batch("bnn", Components(rules=RULES), features)
    with pytest.raises(ConfigError):
        predict_batch("oracle", Components(), features)

    assert predict_batch("m2", Components(), []) == []


def test_unseen_weather_type():
    wet = Condition("weather_type", "in", ["rain"])
    rules = RuleBase(
        (
            Rule((wet,), [0.1, 0.1, 0.1, 0.2, 0.5], 10, "wet"),
            Rule((wet.negate(),), [0.6, 0.3, 0.05, 0.03, 0.02], 10, "dry"),
        ),
        window=1,
    )
    fv = _fv(weather_type="Snow")
    assert fv.weather_type == "other"
    outcome = predict_method2(_fixed_model(UNSURE), rules, fv, 0.3)
    assert outcome.rule_id == "dry"
    assert outcome.source == NEURAL_REFINED
    assert predict_batch("m2", Components(_fixed_model(UNSURE), rules), [fv])[0].rule_id == "dry"

    with pytest.raises(DataError):
        _fv(weather_type=None)


def test_batch_outcomes_are_checked(monkeypatch):
    def overconfident(dist, *args, **kwargs):
        return PredictionOutcome(dist.argmax, NEURAL, 0.1, neural_distribution=dist)

    # The package re-exports the ``methods`` registry, which shadows the submodule
    # for dotted-string lookups, so patch the module object directly.
    monkeypatch.setattr(sys.modules["anemoi.occupancy.hybrid.methods"], "method1_outcome", overconfident)
    components = Components(_random_model(17), RULES, threshold=0.3, samples=10, seed=18)
    with pytest.raises(IntegrityError):
        predict_batch("m1", components, _random_features(5, 19))


def test_bnn_baseline_accepts_everything():
    features = _random_features(30, 20)
    components = Components(_random_model(21), RULES, threshold=0.9, samples=10, seed=22)
    bnn = predict_batch("bnn", components, features)
    assert all(o.source == NEURAL for o in bnn)
    low = [o for o in bnn if o.confidence <= 0.9]
    assert low
    for o in bnn:
        check_outcome(o, BASELINE_THRESHOLD)
    with pytest.raises(IntegrityError):
        check_outcome(low[0], 0.9)

    m1 = predict_batch("m1", components, features)
    assert all(m.deferred for m, b in zip(m1, bnn) if b.confidence <= 0.9)


def _assert_normalised(dist):
    assert np.all(dist.probs >= 0.0)
    assert abs(dist.probs.sum() - 1.0) <= 1e-9


@pytest.mark.slow
@pytest.mark.skipif(not SLOW, reason="Set ANEMOI_OCCUPANCY_SLOW=1 to run the randomized distribution checks")
def test_distributions_normalised():
    rng = np.random.default_rng(23)
    n = 10_000

    model = _random_model(24)
    x = encode_batch(_random_features(n, 25), SCHEMA)
    for i in range(n):
        _assert_normalised(posterior_predictive(model, x[i], int(rng.integers(1, 6)), i))

    features = _random_features(n, 26)
    for base in range(100):
        rules = RuleBase(
            (
                Rule((Condition("hour", "le", base % 23),), rng.dirichlet(np.ones(5)), 10, "early"),
                Rule((Condition("hour", "gt", base % 23),), rng.dirichlet(np.full(5, 0.2)), 10, "late"),
            ),
            window=1,
        )
        for fv in features[base * 100 : (base + 1) * 100]:
            dist, _ = rule_infer(rules, fv)
            _assert_normalised(dist)

    for _ in range(n):
        dist = ClassDistribution(rng.dirichlet(np.full(5, rng.uniform(0.05, 2.0))))
        size = int(rng.integers(1, 6))
        plausible = {OccupancyClass(int(k)) for k in rng.choice(5, size=size, replace=False)}
        refined = refine_distribution(dist, plausible)
        _assert_normalised(refined)
        assert all(refined.probs[k] == 0.0 for k in range(5) if OccupancyClass(k) not in plausible)


def test_methods_registry():
    from anemoi.occupancy.hybrid.methods import methods

    assert methods.names() == ["bnn", "m1", "m2", "persistence", "symbolic"]
    assert not hasattr(methods, "create")
    with pytest.raises(ConfigError):
        methods.lookup("m3")
    assert methods.lookup("m3", return_none=True) is None


if __name__ == "__main__":
    for name, obj in list(globals().items()):
        if name.startswith("test_") and callable(obj):
            print(f"Running {name}...")
            obj()
