# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import datetime
import math

import numpy as np
import pytest

from anemoi.occupancy.data.classes import OccupancyClass
from anemoi.occupancy.data.context import WEATHER_TYPES
from anemoi.occupancy.data.dataset import Dataset
from anemoi.occupancy.data.dataset import FeatureSchema
from anemoi.occupancy.data.dataset import FeatureVector
from anemoi.occupancy.data.dataset import LabeledExample
from anemoi.occupancy.errors import ConfigError
from anemoi.occupancy.errors import DataError
from anemoi.occupancy.experiments.metrics import Evaluation
from anemoi.occupancy.experiments.metrics import MetricsReport
from anemoi.occupancy.experiments.metrics import aggregate
from anemoi.occupancy.experiments.metrics import compute_accuracy
from anemoi.occupancy.experiments.metrics import compute_accuracy_at_1
from anemoi.occupancy.experiments.metrics import compute_deferral_rate
from anemoi.occupancy.experiments.metrics import write_long_report
from anemoi.occupancy.experiments.metrics import write_report
from anemoi.occupancy.experiments.noise import PERTURBED_CATEGORICAL
from anemoi.occupancy.experiments.noise import NoiseParams
from anemoi.occupancy.experiments.noise import inject_noise
from anemoi.occupancy.experiments.splits import check_fractions
from anemoi.occupancy.experiments.splits import normalised_partitions
from anemoi.occupancy.experiments.splits import round_half_up
from anemoi.occupancy.experiments.splits import subsample_training
from anemoi.occupancy.experiments.splits import temporal_split
from anemoi.occupancy.experiments.sweep import SweepPoint
from anemoi.occupancy.experiments.sweep import threshold_statistics
from anemoi.occupancy.hybrid.outcome import NEURAL
from anemoi.occupancy.hybrid.outcome import NEURAL_REFINED
from anemoi.occupancy.hybrid.outcome import SYMBOLIC
from anemoi.occupancy.hybrid.outcome import PredictionOutcome

START = datetime.datetime(2019, 3, 4)
SLOT = datetime.timedelta(minutes=15)


def _examples(n, segment="s1", seed=0):
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        when = START + i * SLOT
        fv = FeatureVector(
            current_ratio=float(rng.random()),
            past_ratios=(float(rng.random()),),
            hour=when.hour,
            day_of_week=when.weekday(),
            month=when.month,
            is_holiday=False,
            weather_type=WEATHER_TYPES[int(rng.integers(4))],
            temperature_c=float(rng.normal(10.0, 4.0)),
            wind_kmh=float(rng.uniform(0.0, 30.0)),
            rainfall_mm=float(rng.uniform(0.0, 2.0)),
        )
        targets = tuple(OccupancyClass(int(k)) for k in rng.integers(5, size=3))
        examples.append(LabeledExample(fv, targets, segment, when))
    return examples


def _dataset(*segments):
    examples = [e for n, name in segments for e in _examples(n, name, seed=len(name) + n)]
    return Dataset(examples, FeatureSchema.fit([e.features for e in examples], 1))


def test_round_half_up():
    assert round_half_up(2.5) == 3
    assert round_half_up(0.5) == 1
    assert round_half_up(2.4) == 2


def test_check_fractions():
    assert check_fractions([0.8, 0.1, 0.1]) == (0.8, 0.1, 0.1)
    with pytest.raises(ValueError):
        check_fractions([0.8, 0.2])
    with pytest.raises(ValueError):
        check_fractions([0.8, 0.1, 0.2])
    with pytest.raises(ValueError):
        check_fractions([1.0, 0.0, 0.0])


def test_split_counts():
    ds = _dataset((100, "s1"), (100, "s2"))
    train, validation, test = temporal_split(ds, (0.8, 0.1, 0.1), purge=False)
    assert (len(train), len(validation), len(test)) == (160, 20, 20)
    assert train.feature_schema is ds.feature_schema

    for segment in ("s1", "s2"):
        times = [[e.slot_start for e in part if e.segment_id == segment] for part in (train, validation, test)]
        assert max(times[0]) < min(times[1])
        assert max(times[1]) < min(times[2])


def test_split_purge():
    ds = _dataset((100, "s1"), (100, "s2"))
    train, validation, test = temporal_split(ds, (0.8, 0.1, 0.1))
    assert (len(train), len(validation), len(test)) == (2 * 77, 2 * 7, 2 * 10)

    # Targets of a partition never reach the next one
    for part, following in ((train, validation), (validation, test)):
        for segment in ("s1", "s2"):
            last = max(e.slot_start for e in part if e.segment_id == segment)
            first = min(e.slot_start for e in following if e.segment_id == segment)
            assert last + 3 * SLOT < first


def test_split_purge_by_hand():
    ds = _dataset((16, "s1"))
    train, validation, test = temporal_split(ds, (0.5, 0.25, 0.25), purge=False)
    assert (len(train), len(validation), len(test)) == (8, 4, 4)

    train, validation, test = temporal_split(ds, (0.5, 0.25, 0.25))
    assert (len(train), len(validation), len(test)) == (5, 1, 4)
    assert [e.slot_start for e in validation] == [START + 8 * SLOT]


def test_split_too_small():
    with pytest.raises(DataError):
        temporal_split(_dataset((3, "s1")), (0.8, 0.1, 0.1), purge=False)


def test_normalised_partitions():
    ds = _dataset((100, "s1"))
    train, validation, test = normalised_partitions(ds, (0.8, 0.1, 0.1))
    assert train.feature_schema == FeatureSchema.fit(train.features, 1)
    assert validation.feature_schema is train.feature_schema
    assert test.feature_schema is train.feature_schema


def test_subsample_training():
    train = _dataset((100, "s1"))
    assert subsample_training(train, 1.0, 0) is train

    half = subsample_training(train, 0.5, 1)
    assert len(half) == 50
    assert [e.slot_start for e in half] == sorted(e.slot_start for e in half)
    assert half.feature_schema is train.feature_schema
    assert half.examples == subsample_training(train, 0.5, 1).examples
    assert half.examples != subsample_training(train, 0.5, 2).examples

    assert len(subsample_training(train, 0.001, 3)) == 1

    with pytest.raises(ValueError):
        subsample_training(train, 0.0, 0)


def test_noise_null():
    ds = _dataset((50, "s1"))
    assert inject_noise(ds, NoiseParams(0.0, 0.0, 0.0), 0) is ds
    assert inject_noise(ds, NoiseParams(0.0, 0.0, 0.5), 0, labels=False) is ds
    assert NoiseParams(0.0, 0.0, 0.0).is_null
    assert not NoiseParams().is_null


def test_noise_flip_all_labels():
    ds = _dataset((200, "s1"))
    noisy = inject_noise(ds, NoiseParams(0.0, 0.0, 1.0), 1)
    for a, b in zip(ds, noisy):
        assert all(x != y for x, y in zip(a.targets, b.targets))
        assert a.features == b.features


def test_noise_flip_rate():
    ds = _dataset((3334, "s1"))
    noisy = inject_noise(ds, NoiseParams(0.0, 0.0, 0.1), 2)
    flipped = sum(x != y for a, b in zip(ds, noisy) for x, y in zip(a.targets, b.targets))
    assert abs(flipped / (3 * len(ds)) - 0.1) < 0.01


def test_noise_features():
    ds = _dataset((300, "s1"))
    noisy = inject_noise(ds, NoiseParams(5.0, 0.5, 0.0), 3, labels=False)
    assert len(noisy) == len(ds)
    changed_weather = 0
    for a, b in zip(ds, noisy):
        fv, nv = a.features, b.features
        assert a.targets == b.targets
        assert nv.hour == fv.hour
        assert 0 <= nv.day_of_week <= 6 and 1 <= nv.month <= 12
        assert 0.0 <= nv.current_ratio <= 1.0
        assert all(0.0 <= r <= 1.0 for r in nv.past_ratios)
        assert nv.wind_kmh >= 0.0
        assert nv.rainfall_mm >= 0.0
        assert nv.weather_type in WEATHER_TYPES
        changed_weather += nv.weather_type != fv.weather_type
    # Resampled with probability 0.5, to a different value 3 times in 4
    assert 0.25 < changed_weather / len(ds) < 0.5

    assert noisy.examples == inject_noise(ds, NoiseParams(5.0, 0.5, 0.0), 3, labels=False).examples


@pytest.mark.parametrize("name", sorted(PERTURBED_CATEGORICAL))
def test_noise_categorical_flip_rate(name):
    ds = _dataset((2000, "s1"))
    noisy = inject_noise(ds, NoiseParams(0.0, 0.3, 0.0), 4, labels=False)
    changed = sum(getattr(a.features, name) != getattr(b.features, name) for a, b in zip(ds, noisy))
    # resampled 3 times in 10, to a different value unless the draw repeats it
    expected = 0.3 * (1 - 1 / len(PERTURBED_CATEGORICAL[name]))
    assert abs(changed / len(ds) - expected) < 0.04


def test_noise_params():
    with pytest.raises(ValueError):
        NoiseParams(label_flip_p=1.5)
    with pytest.raises(ValueError):
        NoiseParams(feature_sigma_scale=-1.0)
    with pytest.raises(ConfigError):
        NoiseParams.from_config(dict(flip=0.1))
    assert NoiseParams.from_config(dict(label_flip_p=0.2)).label_flip_p == 0.2


def test_accuracy():
    assert compute_accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert compute_accuracy([2, 2, 2, 2], [2, 3, 0, 2]) == 0.5
    assert compute_accuracy([0, 1], [2, 3]) == 0.0
    assert compute_accuracy([OccupancyClass.HIGH], [3]) == 1.0

    with pytest.raises(DataError):
        compute_accuracy([1, 2], [1])
    with pytest.raises(DataError):
        compute_accuracy([], [])


def test_accuracy_at_1():
    assert compute_accuracy_at_1([OccupancyClass.MODERATE], [OccupancyClass.HIGH]) == 1.0
    assert compute_accuracy_at_1([OccupancyClass.VERY_HIGH], [OccupancyClass.HIGH]) == 1.0
    assert compute_accuracy_at_1([OccupancyClass.MODERATE], [OccupancyClass.VERY_LOW]) == 0.0
    assert compute_accuracy_at_1([0, 1, 4, 3], [1, 1, 2, 4]) == 0.75


def test_deferral_rate():
    neural = PredictionOutcome(OccupancyClass.LOW, NEURAL, 0.6)
    symbolic = PredictionOutcome(OccupancyClass.LOW, SYMBOLIC, 0.5)
    refined = PredictionOutcome(OccupancyClass.LOW, NEURAL_REFINED, 0.5)
    assert compute_deferral_rate([neural] * 4) == 0.0
    assert compute_deferral_rate([neural, symbolic, neural, refined, neural]) == 0.4
    with pytest.raises(DataError):
        compute_deferral_rate([])


def _evaluation(model, seed, accuracy, accuracy_at_1, window=1, deferral=0.0):
    return Evaluation(model, "full", window, seed, accuracy, accuracy_at_1, deferral, 100)


def test_aggregate():
    evaluations = [
        _evaluation("bnn", 0, 0.5, 0.8, deferral=0.4),
        _evaluation("m1", 0, 0.6, 0.9),
        _evaluation("bnn", 1, 0.7, 0.9, deferral=0.2),
        _evaluation("bnn", 0, 0.4, 0.6, window=2),
    ]
    reports = aggregate(evaluations)
    assert [(r.model, r.window, r.seed_count) for r in reports] == [("bnn", 1, 2), ("m1", 1, 1), ("bnn", 2, 1)]

    bnn = reports[0]
    assert bnn.accuracy_mean == pytest.approx(0.6)
    assert bnn.accuracy_std == pytest.approx(np.std([0.5, 0.7], ddof=1))
    assert bnn.acc_at_1_mean == pytest.approx(0.85)
    assert bnn.deferral_mean == pytest.approx(0.3)
    assert reports[1].accuracy_std == 0.0

    assert bnn.row()[:5] == ["bnn", "full", "PW1", 2, "0.600000"]


def test_report_invariant():
    with pytest.raises(DataError):
        MetricsReport("bnn", "full", 1, 1, 0.7, 0.0, 0.6, 0.0, 0.0, 10)


def test_write_reports(tmp_path):
    evaluations = [_evaluation("bnn", 0, 0.5, 0.75), _evaluation("bnn", 1, 0.25, 0.5)]
    write_report(aggregate(evaluations), tmp_path / "report.csv")
    lines = (tmp_path / "report.csv").read_text().splitlines()
    assert lines[0] == "model,condition,window,seed_count,accuracy_mean,accuracy_std,acc_at_1_mean,acc_at_1_std,deferral_mean,n"
    assert lines[1].startswith("bnn,full,PW1,2,0.375000,")
    assert len(lines) == 2

    write_long_report(evaluations, tmp_path / "long.csv")
    lines = (tmp_path / "long.csv").read_text().splitlines()
    assert lines[0] == "model,condition,window,seed,metric,value"
    assert lines[1:4] == [
        "bnn,full,PW1,0,accuracy,0.500000",
        "bnn,full,PW1,0,acc_at_1,0.750000",
        "bnn,full,PW1,0,deferral_rate,0.000000",
    ]
    assert len(lines) == 7


def test_threshold_statistics():
    probs = np.array([[0.6, 0.1, 0.1, 0.1, 0.1], [0.25, 0.25, 0.2, 0.15, 0.15]])
    truth = np.array([0, 1])

    assert threshold_statistics(probs, truth, 0.3) == (0.5, 1.0)
    assert threshold_statistics(probs, truth, 0.19) == (0.0, 0.5)

    deferral, accepted = threshold_statistics(probs, truth, 0.9)
    assert deferral == 1.0
    assert math.isnan(accepted)


def test_sweep_point_row():
    point = SweepPoint(1, 0.25, 3, 0.4, 0.6, float("nan"), 0.5, 0.55, 0.56, 90)
    assert point.row() == ["PW1", "0.25", 3, "0.400000", "0.600000", "nan", "0.500000", "0.550000", "0.560000", 90]



if __name__ == "__main__":
    for name, obj in list(globals().items()):
        if name.startswith("test_") and callable(obj):
            print(f"Running {name}...")
            obj()
