# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import datetime

import numpy as np
import pytest

from anemoi.occupancy.bnn.encoding import encode_dataset
from anemoi.occupancy.bnn.model import BnnModel
from anemoi.occupancy.bnn.predictive import posterior_predictive_batch
from anemoi.occupancy.bnn.training import Adam
from anemoi.occupancy.bnn.training import TrainConfig
from anemoi.occupancy.bnn.training import derive_seed
from anemoi.occupancy.bnn.training import train
from anemoi.occupancy.bnn.training import validation_loss
from anemoi.occupancy.data.classes import OccupancyClass
from anemoi.occupancy.data.dataset import Dataset
from anemoi.occupancy.data.dataset import FeatureSchema
from anemoi.occupancy.data.dataset import FeatureVector
from anemoi.occupancy.data.dataset import LabeledExample
from anemoi.occupancy.errors import ConfigError
from anemoi.occupancy.errors import DataError

START = datetime.datetime(2019, 3, 4)
SMALL = TrainConfig(hidden=(8,), max_epochs=3, batch_size=16, mc_validation_samples=2, seed=1)


def _toy(n, seed, segment="s1"):
    """Two classes, VeryLow and VeryHigh, separated by the occupancy features."""
    rng = np.random.default_rng(seed)
    examples = []
    for i in range(n):
        high = bool(rng.random() < 0.5)
        lo, hi = (0.7, 1.0) if high else (0.0, 0.3)
        fv = FeatureVector(
            current_ratio=float(rng.uniform(lo, hi)),
            past_ratios=tuple(rng.uniform(lo, hi, size=2)),
            hour=int(rng.integers(14, 20)) if high else int(rng.integers(0, 6)),
            day_of_week=2,
            month=3,
            is_holiday=False,
            weather_type="clear",
            temperature_c=10.0,
            wind_kmh=5.0,
            rainfall_mm=0.0,
        )
        target = OccupancyClass.VERY_HIGH if high else OccupancyClass.VERY_LOW
        examples.append(LabeledExample(fv, (target,) * 3, segment, START + datetime.timedelta(minutes=15 * i)))
    return examples


def _datasets(n_train=400, n_val=100):
    train_examples = _toy(n_train, 0)
    schema = FeatureSchema.fit([e.features for e in train_examples], 2)
    return Dataset(train_examples, schema), Dataset(_toy(n_val, 1, "s2"), schema)


def test_learns_separable_classes():
    train_set, validation = _datasets()
    config = TrainConfig(hidden=(16,), max_epochs=40, patience=40, learning_rate=0.02, batch_size=32, seed=0)
    model, log = train(None, train_set, validation, 1, config)
    assert model.window == 1
    assert model.schema == train_set.feature_schema
    assert len(log) == 40

    probs = posterior_predictive_batch(model, encode_dataset(train_set), 30, 0)
    accuracy = np.mean(np.argmax(probs, axis=1) == train_set.targets(1))
    assert accuracy >= 0.95


def test_deterministic():
    train_set, validation = _datasets(100, 30)
    a, log_a = train(None, train_set, validation, 2, SMALL)
    b, log_b = train(None, train_set, validation, 2, SMALL)
    for p, q in zip(a.parameters(), b.parameters()):
        assert np.array_equal(p, q)
    assert log_a.records == log_b.records

    c, _ = train(None, train_set, validation, 2, TrainConfig(**{**SMALL.as_dict(), "seed": 2}))
    assert not all(np.array_equal(p, q) for p, q in zip(a.parameters(), c.parameters()))


def test_early_stopping():
    train_set, validation = _datasets(100, 30)
    config = TrainConfig(hidden=(8,), max_epochs=50, patience=0, learning_rate=1.0, batch_size=16, seed=3)
    _, log = train(None, train_set, validation, 1, config)
    assert log.stopped_early
    # patience 0 stops after the first epoch without improvement
    assert len(log) == log.best_epoch + 1
    assert [r.stopped_early for r in log.records] == [False] * (len(log) - 1) + [True]


def test_best_epoch_restored():
    train_set, validation = _datasets(100, 30)
    config = TrainConfig(hidden=(8,), max_epochs=6, patience=2, learning_rate=0.05, batch_size=16, seed=4)
    model, log = train(None, train_set, validation, 3, config)

    if log.stopped_early:
        assert len(log) == log.best_epoch + 2
    else:
        assert len(log) == 6

    if log.best_epoch > 0:
        val_seed = int(np.random.SeedSequence(config.seed).spawn(4)[3].generate_state(1)[0])
        x_val = encode_dataset(validation, train_set.feature_schema)
        loss = validation_loss(model, x_val, validation.targets(3), config.mc_validation_samples, val_seed, len(train_set))
        assert loss == log.records[log.best_epoch - 1].val_loss
        assert loss == min(r.val_loss for r in log.records)


def test_continue_training():
    train_set, validation = _datasets(100, 30)
    first, _ = train(None, train_set, validation, 1, SMALL)
    before = [p.copy() for p in first.parameters()]
    second, _ = train(first, train_set, validation, 1, SMALL)
    assert second is not first
    for p, q in zip(first.parameters(), before):
        assert np.array_equal(p, q)


def test_training_log_csv(tmp_path):
    train_set, validation = _datasets(100, 30)
    _, log = train(None, train_set, validation, 1, SMALL)
    log.write_csv(tmp_path / "log.csv")
    lines = (tmp_path / "log.csv").read_text().splitlines()
    assert lines[0] == "epoch,train_loss,val_loss,stopped_early"
    assert len(lines) == len(log) + 1
    assert lines[1].startswith("1,")
    assert lines[-1].endswith(",true") or lines[-1].endswith(",false")


def test_errors():
    train_set, validation = _datasets(50, 10)
    with pytest.raises(DataError):
        train(None, train_set.subset([]), validation, 1, SMALL)
    with pytest.raises(DataError):
        train(None, train_set, validation.subset([]), 1, SMALL)
    with pytest.raises(DataError):
        train(None, train_set, validation.refit(), 1, SMALL)
    with pytest.raises(DataError):
        train(None, train_set, validation, 4, SMALL)

    other = BnnModel.initialise(3, [4], np.random.default_rng(0))
    with pytest.raises(DataError):
        train(other, train_set, validation, 1, SMALL)


def test_train_config():
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ValueError):
        TrainConfig(hidden=(4, 0))
    with pytest.raises(ConfigError):
        TrainConfig.from_config(dict(epochs=3))

    config = TrainConfig.from_config(dict(hidden=[32, 16], max_epochs=5), seed=9)
    assert config.hidden == (32, 16)
    assert config.seed == 9
    assert config.as_dict()["hidden"] == [32, 16]


def test_adam():
    p = np.array([0.0])
    adam = Adam([p], learning_rate=0.1)
    for _ in range(200):
        adam.step([p], [2.0 * (p - 3.0)])
    assert p[0] == pytest.approx(3.0, abs=0.1)


def test_derive_seed():
    assert derive_seed(1, 2) == derive_seed(1, 2)
    assert derive_seed(1, 2) != derive_seed(1, 3)
    assert derive_seed(1, 2) != derive_seed(2, 2)
    assert 0 <= derive_seed(0) < 2**32



if __name__ == "__main__":
    for name, obj in list(globals().items()):
        if name.startswith("test_") and callable(obj):
            print(f"Running {name}...")
            obj()
