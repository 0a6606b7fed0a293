# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Read and write trained models as JSON documents.

Floats are written in their shortest round-trip form, so loading a checkpoint gives back
the exact parameters. Standard deviations driven to zero are stored as ``-Infinity`` rho.
"""

import json
import logging
import os

import numpy as np

from .bnn.model import BnnModel
from .bnn.model import VariationalLayer
from .data.dataset import FeatureSchema
from .errors import DataError
from .errors import IntegrityError

LOG = logging.getLogger(__name__)

FORMAT = "anemoi-occupancy-bnn"
VERSION = 1


def model_to_dict(model: BnnModel, *, train_config=None, seed=None) -> dict:
    return dict(
        format=FORMAT,
        version=VERSION,
        window=model.window,
        schema_hash=model.schema.digest() if model.schema is not None else None,
        schema=model.schema.as_dict() if model.schema is not None else None,
        prior_sigma=model.prior_sigma,
        layers=[
            dict(
                shape=[layer.out_features, layer.in_features],
                weight_mean=layer.weight_mean.tolist(),
                weight_rho=layer.weight_rho.tolist(),
                bias_mean=layer.bias_mean.tolist(),
                bias_rho=layer.bias_rho.tolist(),
            )
            for layer in model.layers
        ],
        train_config=train_config,
        seed=seed,
    )


def model_from_dict(doc: dict) -> BnnModel:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise IntegrityError("Not a model checkpoint")
    if doc.get("version") != VERSION:
        raise IntegrityError(f"Unsupported checkpoint version {doc.get('version')}")

    try:
        schema = FeatureSchema.from_dict(doc["schema"]) if doc.get("schema") else None
        layers = []
        for i, layer in enumerate(doc["layers"]):
            layers.append(
                VariationalLayer(
                    np.array(layer["weight_mean"], dtype=np.float64).reshape(layer["shape"]),
                    np.array(layer["weight_rho"], dtype=np.float64).reshape(layer["shape"]),
                    np.array(layer["bias_mean"], dtype=np.float64),
                    np.array(layer["bias_rho"], dtype=np.float64),
                    float(doc["prior_sigma"]),
                )
            )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, IntegrityError):
            raise
        raise IntegrityError(f"Corrupt checkpoint: {e}") from e

    if schema is not None and doc.get("schema_hash") != schema.digest():
        raise IntegrityError("Checkpoint schema does not match its hash")

    return BnnModel(layers, schema, doc.get("window"))


def save_model(model: BnnModel, path, *, train_config=None, seed=None) -> None:
    """Save a model checkpoint

    Parameters
    ----------
    model : BnnModel
        The model to save.
    path : str
        The path of the JSON file.
    train_config : dict, optional
        The training configuration, recorded for reference.
    seed : int, optional
        The training seed, recorded for reference.
    """
    with open(path, "w") as f:
        json.dump(model_to_dict(model, train_config=train_config, seed=seed), f, indent=1)
        f.write("\n")
    LOG.info("Saved %s to %s", model, path)


def load_model(path) -> BnnModel:
    """Load a model checkpoint written by :func:`save_model`.

    Raises
    ------
    DataError
        If the file does not exist.
    IntegrityError
        If the document is not a valid checkpoint.
    """
    if not os.path.exists(path):
        raise DataError(f"Checkpoint not found: {path}")
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise IntegrityError(f"{path}: invalid JSON ({e})") from e
    return model_from_dict(doc)
