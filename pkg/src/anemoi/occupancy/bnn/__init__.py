# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Variational Bayesian neural network classifier."""

from .elbo import elbo_minus
from .elbo import kl_mean_field
from .encoding import encode_batch
from .encoding import encode_features
from .model import BnnModel
from .model import VariationalLayer
from .model import forward
from .model import sample_weights
from .predictive import confident_prediction
from .predictive import posterior_predictive
from .predictive import posterior_predictive_batch
from .training import TrainConfig
from .training import train

__all__ = [
    "BnnModel",
    "TrainConfig",
    "VariationalLayer",
    "confident_prediction",
    "elbo_minus",
    "encode_batch",
    "encode_features",
    "forward",
    "kl_mean_field",
    "posterior_predictive",
    "posterior_predictive_batch",
    "sample_weights",
    "train",
]
