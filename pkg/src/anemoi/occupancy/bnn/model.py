# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Mean-field Gaussian variational multilayer perceptron.

Each weight ``w`` has its own variational distribution ``N(mean, softplus(rho)**2)``.
Hidden layers use a rectifier, the output layer produces the logits of the five classes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional
from typing import Sequence

import numpy as np

from ..data.classes import N_CLASSES
from ..data.dataset import FeatureSchema
from ..errors import DimensionError
from ..errors import IntegrityError

LOG = logging.getLogger(__name__)


def softplus(x):
    # log(1 + exp(x)), exact 0 at -inf
    return np.logaddexp(0.0, x)


def inverse_softplus(y: float) -> float:
    return float(np.log(np.expm1(y)))


@dataclass
class VariationalLayer:
    """Weights are stored ``(out, in)``."""

    weight_mean: np.ndarray
    weight_rho: np.ndarray
    bias_mean: np.ndarray
    bias_rho: np.ndarray
    prior_sigma: float = 1.0

    def __post_init__(self):
        self.weight_mean = np.asarray(self.weight_mean, dtype=np.float64)
        self.weight_rho = np.asarray(self.weight_rho, dtype=np.float64)
        self.bias_mean = np.asarray(self.bias_mean, dtype=np.float64)
        self.bias_rho = np.asarray(self.bias_rho, dtype=np.float64)
        if self.weight_mean.ndim != 2 or self.weight_rho.shape != self.weight_mean.shape:
            raise IntegrityError(f"Inconsistent weight shapes {self.weight_mean.shape} and {self.weight_rho.shape}")
        if self.bias_mean.shape != (self.out_features,) or self.bias_rho.shape != self.bias_mean.shape:
            raise IntegrityError(f"Bias shapes {self.bias_mean.shape} do not match {self.out_features} outputs")
        if not self.prior_sigma > 0:
            raise IntegrityError(f"prior_sigma must be positive, got {self.prior_sigma}")

    @property
    def in_features(self) -> int:
        return self.weight_mean.shape[1]

    @property
    def out_features(self) -> int:
        return self.weight_mean.shape[0]

    @property
    def weight_sigma(self) -> np.ndarray:
        return softplus(self.weight_rho)

    @property
    def bias_sigma(self) -> np.ndarray:
        return softplus(self.bias_rho)

    def parameters(self) -> list:
        return [self.weight_mean, self.weight_rho, self.bias_mean, self.bias_rho]

    @classmethod
    def initialise(
        cls,
        in_features: int,
        out_features: int,
        rng: np.random.Generator,
        prior_sigma: float = 1.0,
        init_sigma: float = 0.05,
    ) -> "VariationalLayer":
        """Means drawn from ``N(0, 1/in_features)``, standard deviations all ``init_sigma``."""
        rho = inverse_softplus(init_sigma)
        return cls(
            rng.normal(0.0, np.sqrt(1.0 / in_features), size=(out_features, in_features)),
            np.full((out_features, in_features), rho),
            np.zeros(out_features),
            np.full(out_features, rho),
            prior_sigma,
        )


class BnnModel:
    """A stack of variational layers ending in the five class logits.

    ``schema`` is the feature schema the model was trained with and ``window`` its
    prediction window; both travel with the checkpoint.
    """

    def __init__(self, layers: Sequence[VariationalLayer], schema: Optional[FeatureSchema] = None, window: Optional[int] = None):
        self.layers = list(layers)
        self.schema = schema
        self.window = window

        if not self.layers:
            raise IntegrityError("A model needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_features != b.in_features:
                raise IntegrityError(f"Layer widths do not chain: {a.out_features} -> {b.in_features}")
        if self.layers[-1].out_features != N_CLASSES:
            raise IntegrityError(f"The last layer must have {N_CLASSES} outputs, not {self.layers[-1].out_features}")
        if schema is not None and schema.width != self.input_width:
            raise IntegrityError(f"Schema width {schema.width} does not match model input width {self.input_width}")

    @classmethod
    def initialise(
        cls,
        input_width: int,
        hidden: Sequence[int],
        rng: np.random.Generator,
        *,
        prior_sigma: float = 1.0,
        init_sigma: float = 0.05,
        schema: Optional[FeatureSchema] = None,
        window: Optional[int] = None,
    ) -> "BnnModel":
        widths = [input_width] + list(hidden) + [N_CLASSES]
        layers = [
            VariationalLayer.initialise(i, o, rng, prior_sigma=prior_sigma, init_sigma=init_sigma)
            for i, o in zip(widths, widths[1:])
        ]
        return cls(layers, schema, window)

    @property
    def input_width(self) -> int:
        return self.layers[0].in_features

    @property
    def hidden(self) -> list:
        return [layer.out_features for layer in self.layers[:-1]]

    @property
    def prior_sigma(self) -> float:
        return self.layers[0].prior_sigma

    def parameters(self) -> list:
        """All the variational parameters, four arrays per layer. The arrays are live references."""
        return [p for layer in self.layers for p in layer.parameters()]

    def copy(self) -> "BnnModel":
        return self.with_parameters([p.copy() for p in self.parameters()])

    def with_parameters(self, parameters: Sequence[np.ndarray]) -> "BnnModel":
        """Same architecture, other parameter values (in :meth:`parameters` order)."""
        if len(parameters) != 4 * len(self.layers):
            raise IntegrityError(f"Expected {4 * len(self.layers)} parameter arrays, got {len(parameters)}")
        layers = [
            VariationalLayer(*parameters[4 * i : 4 * i + 4], prior_sigma=layer.prior_sigma)
            for i, layer in enumerate(self.layers)
        ]
        return BnnModel(layers, self.schema, self.window)

    def __repr__(self):
        widths = [self.input_width] + [layer.out_features for layer in self.layers]
        return f"BnnModel({'-'.join(str(w) for w in widths)}, window={self.window})"


def sample_noise(model: BnnModel, rng: np.random.Generator) -> list:
    """Standard normal draws for every weight and bias, ``(eps_w, eps_b)`` per layer."""
    return [
        (rng.standard_normal(layer.weight_mean.shape), rng.standard_normal(layer.bias_mean.shape))
        for layer in model.layers
    ]


def realise(model: BnnModel, noise: list) -> list:
    """Reparameterised weights ``mean + softplus(rho) * eps``, ``(weight, bias)`` per layer."""
    return [
        (layer.weight_mean + layer.weight_sigma * eps_w, layer.bias_mean + layer.bias_sigma * eps_b)
        for layer, (eps_w, eps_b) in zip(model.layers, noise)
    ]


def sample_weights(model: BnnModel, rng: np.random.Generator) -> list:
    """Draw one set of weights from the variational posterior.

    Parameters
    ----------
    model : BnnModel
        The model.
    rng : numpy.random.Generator
        The randomness stream; the result only depends on its state.

    Returns
    -------
    list
        One ``(weight, bias)`` pair per layer.
    """
    return realise(model, sample_noise(model, rng))


def mean_weights(model: BnnModel) -> list:
    return [(layer.weight_mean, layer.bias_mean) for layer in model.layers]


def forward(model: BnnModel, weights: list, x: np.ndarray) -> np.ndarray:
    """Logits for one input (shape ``(width,)``) or a batch (shape ``(n, width)``).

    Raises
    ------
    DimensionError
        If the input width is not the model's.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != model.input_width:
        raise DimensionError(f"Input width {x.shape[-1]} does not match model input width {model.input_width}")

    h = x
    last = len(weights) - 1
    for i, (w, b) in enumerate(weights):
        h = h @ w.T + b
        if i < last:
            h = np.maximum(h, 0.0)
    return h
