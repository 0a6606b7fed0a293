# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Negative evidence lower bound of a minibatch and its gradients.

The loss of a batch is the cross-entropy summed over its examples and averaged over the
Monte-Carlo weight samples, plus the KL divergence to the prior divided by the number of
batches of an epoch. Summed over an epoch, the batch losses estimate the negative ELBO of
the whole training set. Gradients are derived by hand through the reparameterised weights.
"""

from __future__ import annotations

import logging

import numpy as np
from scipy.special import expit
from scipy.special import log_softmax
from scipy.special import softmax

from ..data.classes import N_CLASSES
from ..errors import DataError
from .model import BnnModel
from .model import realise
from .model import sample_noise

LOG = logging.getLogger(__name__)


def _kl(mean, sigma, prior_sigma):
    return np.sum(np.log(prior_sigma / sigma) + (sigma**2 + mean**2) / (2.0 * prior_sigma**2) - 0.5)


def kl_mean_field(model: BnnModel) -> float:
    """``KL(q || p)`` between the variational posterior and the ``N(0, prior_sigma**2)`` prior, in closed form."""
    total = 0.0
    for layer in model.layers:
        total += _kl(layer.weight_mean, layer.weight_sigma, layer.prior_sigma)
        total += _kl(layer.bias_mean, layer.bias_sigma, layer.prior_sigma)
    return float(total)


def _kl_gradients(mean, rho, prior_sigma):
    sigma = np.logaddexp(0.0, rho)
    d_mean = mean / prior_sigma**2
    d_rho = (-1.0 / sigma + sigma / prior_sigma**2) * expit(rho)
    return d_mean, d_rho


def cross_entropy(logits: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of the labels ``y`` under ``softmax(logits)``."""
    return float(-np.mean(log_softmax(logits, axis=1)[np.arange(len(y)), y]))


def elbo_minus(
    model: BnnModel,
    batch: tuple,
    mc_train_samples: int,
    total_batches: int,
    rng: np.random.Generator,
) -> tuple[float, list]:
    """Loss of a minibatch and its gradients.

    The loss is the cross-entropy summed over the ``n`` examples of the batch (``n`` times
    the batch mean), averaged over ``mc_train_samples`` weight draws, plus the KL divergence
    divided by ``total_batches``. Summed over the batches of an epoch this is the negative
    ELBO of the whole training set.

    Parameters
    ----------
    model : BnnModel
        The model.
    batch : tuple
        Encoded inputs ``x`` of shape ``(n, width)`` and class indices ``y`` of shape ``(n,)``.
    mc_train_samples : int
        Number of weight samples the expected cross-entropy is averaged over.
    total_batches : int
        Number of batches in an epoch; the KL term is divided by it.
    rng : numpy.random.Generator
        Source of the weight samples.

    Returns
    -------
    tuple
        The loss and the list of gradients, in :meth:`BnnModel.parameters` order.
    """
    x, y = batch
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    if n == 0:
        raise DataError("Empty batch")

    grads = [np.zeros_like(p) for p in model.parameters()]
    one_hot = np.zeros((n, N_CLASSES))
    one_hot[np.arange(n), y] = 1.0

    nll = 0.0
    for _ in range(mc_train_samples):
        noise = sample_noise(model, rng)
        weights = realise(model, noise)

        # Forward, keeping the input of every layer
        inputs = []
        h = x
        for i, (w, b) in enumerate(weights):
            inputs.append(h)
            h = h @ w.T + b
            if i < len(weights) - 1:
                h = np.maximum(h, 0.0)

        nll += cross_entropy(h, y) * n

        # Backward
        delta = (softmax(h, axis=1) - one_hot) / mc_train_samples
        for i in reversed(range(len(weights))):
            layer = model.layers[i]
            eps_w, eps_b = noise[i]
            d_w = delta.T @ inputs[i]
            d_b = delta.sum(axis=0)

            grads[4 * i] += d_w
            grads[4 * i + 1] += d_w * eps_w * expit(layer.weight_rho)
            grads[4 * i + 2] += d_b
            grads[4 * i + 3] += d_b * eps_b * expit(layer.bias_rho)

            if i > 0:
                delta = (delta @ weights[i][0]) * (inputs[i] > 0.0)

    loss = nll / mc_train_samples + kl_mean_field(model) / total_batches

    for i, layer in enumerate(model.layers):
        d_mean, d_rho = _kl_gradients(layer.weight_mean, layer.weight_rho, layer.prior_sigma)
        grads[4 * i] += d_mean / total_batches
        grads[4 * i + 1] += d_rho / total_batches
        d_mean, d_rho = _kl_gradients(layer.bias_mean, layer.bias_rho, layer.prior_sigma)
        grads[4 * i + 2] += d_mean / total_batches
        grads[4 * i + 3] += d_rho / total_batches

    return loss, grads
