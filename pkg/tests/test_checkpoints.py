# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import json

import numpy as np
import pytest

from anemoi.occupancy.bnn.model import BnnModel
from anemoi.occupancy.checkpoints import load_model
from anemoi.occupancy.checkpoints import model_from_dict
from anemoi.occupancy.checkpoints import model_to_dict
from anemoi.occupancy.checkpoints import save_model
from anemoi.occupancy.data.dataset import FeatureSchema
from anemoi.occupancy.errors import DataError
from anemoi.occupancy.errors import IntegrityError

NAMES = FeatureSchema.continuous_names(1)
SCHEMA = FeatureSchema(1, {n: 0.0 for n in NAMES}, {n: float(i + 1) for i, n in enumerate(NAMES)})


def _model():
    model = BnnModel.initialise(SCHEMA.width, [3], np.random.default_rng(0), prior_sigma=0.5, schema=SCHEMA, window=2)
    # A standard deviation driven to zero
    model.layers[0].weight_rho[0, 0] = -np.inf
    model.layers[1].bias_mean[4] = 1.0 / 3.0
    return model


def test_round_trip(tmp_path):
    model = _model()
    path = tmp_path / "bnn.json"
    save_model(model, path, train_config=dict(max_epochs=3), seed=11)

    loaded = load_model(path)
    assert loaded.window == 2
    assert loaded.schema == SCHEMA
    assert loaded.hidden == [3]
    assert loaded.prior_sigma == 0.5
    for a, b in zip(model.parameters(), loaded.parameters()):
        assert a.shape == b.shape
        assert np.array_equal(a, b)
    assert loaded.layers[0].weight_sigma[0, 0] == 0.0

    doc = json.loads(path.read_text())
    assert doc["format"] == "anemoi-occupancy-bnn"
    assert doc["seed"] == 11
    assert doc["train_config"] == dict(max_epochs=3)
    assert doc["schema_hash"] == SCHEMA.digest()


def test_no_schema():
    model = BnnModel.initialise(4, [], np.random.default_rng(1))
    loaded = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
    assert loaded.schema is None
    assert loaded.window is None
    assert loaded.input_width == 4
    for a, b in zip(model.parameters(), loaded.parameters()):
        assert np.array_equal(a, b)


def test_errors(tmp_path):
    with pytest.raises(DataError):
        load_model(tmp_path / "missing.json")

    path = tmp_path / "broken.json"
    path.write_text("{")
    with pytest.raises(IntegrityError):
        load_model(path)

    doc = model_to_dict(_model())

    with pytest.raises(IntegrityError):
        model_from_dict(dict(doc, format="something-else"))

    with pytest.raises(IntegrityError):
        model_from_dict(dict(doc, version=99))

    with pytest.raises(IntegrityError):
        model_from_dict(dict(doc, schema_hash="0" * 64))

    layers = [dict(layer) for layer in doc["layers"]]
    layers[0]["shape"] = [2, 2]
    with pytest.raises(IntegrityError):
        model_from_dict(dict(doc, layers=layers))

    layers = [dict(layer) for layer in doc["layers"]]
    del layers[1]["bias_rho"]
    with pytest.raises(IntegrityError):
        model_from_dict(dict(doc, layers=layers))

    layers = [dict(layer) for layer in doc["layers"]]
    layers[1]["bias_rho"] = layers[1]["bias_rho"][:-1]
    with pytest.raises(IntegrityError):
        model_from_dict(dict(doc, layers=layers))



if __name__ == "__main__":
    for name, obj in list(globals().items()):
        if name.startswith("test_") and callable(obj):
            print(f"Running {name}...")
            obj()
