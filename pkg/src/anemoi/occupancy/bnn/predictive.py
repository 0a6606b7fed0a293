# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


from __future__ import annotations

import logging
from typing import Iterable
from typing import Optional

import numpy as np
from scipy.special import softmax

from ..data.classes import N_CLASSES
from ..data.classes import ClassDistribution
from ..data.classes import OccupancyClass
from .model import BnnModel
from .model import forward
from .model import sample_weights

LOG = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.30


def _rng(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return np.random.default_rng(stream)


def _restriction(allowed: Optional[Iterable]):
    if allowed is None:
        return None
    mask = np.full(N_CLASSES, -np.inf)
    for c in allowed:
        mask[int(c)] = 0.0
    return mask


def posterior_predictive_batch(model: BnnModel, x: np.ndarray, samples: int, stream, allowed: Optional[Iterable] = None) -> np.ndarray:
    """Monte-Carlo posterior predictive ``(1/S) sum_s softmax(forward(x, w_s))`` for a batch.

    Weight samples are drawn one after the other from ``stream`` (a generator or a seed)
    and shared by all the rows of ``x``; the average is accumulated in sample order.
    With ``allowed``, the softmax of every sample is restricted to those classes.

    Returns
    -------
    numpy.ndarray
        Array of shape ``(n, 5)``, each row a distribution.
    """
    if samples < 1:
        raise ValueError(f"The number of samples must be at least 1, got {samples}")

    rng = _rng(stream)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    restriction = _restriction(allowed)
    total = np.zeros((x.shape[0], N_CLASSES))
    for _ in range(samples):
        logits = forward(model, sample_weights(model, rng), x)
        if restriction is not None:
            logits = logits + restriction
        total += softmax(logits, axis=1)
    return total / samples


def posterior_predictive(model: BnnModel, x: np.ndarray, samples: int, stream, allowed: Optional[Iterable] = None) -> ClassDistribution:
    """Posterior predictive distribution of a single encoded input.

    Parameters
    ----------
    model : BnnModel
        The trained model.
    x : numpy.ndarray
        The encoded input.
    samples : int
        Number of weight samples ``S``, at least 1.
    stream : numpy.random.Generator or int
        The randomness stream, or a seed.
    allowed : iterable of OccupancyClass, optional
        Restrict the softmax of each sample to these classes.

    Returns
    -------
    ClassDistribution
        The averaged class probabilities.
    """
    return ClassDistribution(posterior_predictive_batch(model, x, samples, stream, allowed)[0])


def confident_prediction(dist: ClassDistribution, threshold: float = DEFAULT_THRESHOLD) -> Optional[OccupancyClass]:
    """The most likely class if its probability strictly exceeds ``threshold``, otherwise None (abstain).

    Ties between classes go to the lower class.
    """
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"The confidence threshold must be in [0, 1], got {threshold}")
    if dist.max > threshold:
        return dist.argmax
    return None


def confident_mask(probs: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Vectorised :func:`confident_prediction`: True where the prediction is accepted."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"The confidence threshold must be in [0, 1], got {threshold}")
    return np.asarray(probs).max(axis=1) > threshold
