# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Synthetic corruption of features and labels."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from dataclasses import replace
from typing import Optional

import numpy as np

from ..config import from_section
from ..data.classes import N_CLASSES
from ..data.classes import OccupancyClass
from ..data.dataset import CATEGORIES
from ..data.dataset import Dataset
from ..data.dataset import FeatureVector
from ..data.dataset import LabeledExample

LOG = logging.getLogger(__name__)

PERTURBED_CONTINUOUS = ("temperature_c", "wind_kmh", "rainfall_mm")
PERTURBED_CATEGORICAL = dict(CATEGORIES, is_holiday=(False, True))


@dataclass(frozen=True)
class NoiseParams:
    feature_sigma_scale: float = 0.1
    categorical_flip_p: float = 0.05
    label_flip_p: float = 0.1

    def __post_init__(self):
        if self.feature_sigma_scale < 0:
            raise ValueError(f"feature_sigma_scale must not be negative, got {self.feature_sigma_scale}")
        for name in ("categorical_flip_p", "label_flip_p"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {getattr(self, name)}")

    @classmethod
    def from_config(cls, section) -> "NoiseParams":
        return from_section(cls, section, "experiment.noise")

    @property
    def is_null(self) -> bool:
        return self.feature_sigma_scale == 0 and self.categorical_flip_p == 0 and self.label_flip_p == 0


def feature_stddevs(ds: Dataset) -> dict:
    """Standard deviation of each perturbed continuous feature, ratios included."""
    features = ds.features
    result = {}
    if not features:
        return result
    result["current_ratio"] = float(np.std([fv.current_ratio for fv in features]))
    for k in range(ds.lag_depth):
        result[f"past_ratio_{k + 1}"] = float(np.std([fv.past_ratios[k] for fv in features]))
    for name in PERTURBED_CONTINUOUS:
        result[name] = float(np.std([fv.value(name) for fv in features]))
    return result


def _perturb(fv: FeatureVector, params, stddevs, rng) -> FeatureVector:
    changes = {}
    if params.feature_sigma_scale > 0:
        ratios = np.array((fv.current_ratio,) + fv.past_ratios)
        sigmas = np.array([stddevs["current_ratio"]] + [stddevs[f"past_ratio_{k + 1}"] for k in range(fv.lag_depth)])
        ratios = np.clip(ratios + rng.normal(0.0, 1.0, size=len(ratios)) * sigmas * params.feature_sigma_scale, 0.0, 1.0)
        changes["current_ratio"] = float(ratios[0])
        changes["past_ratios"] = tuple(float(r) for r in ratios[1:])

        for name in PERTURBED_CONTINUOUS:
            value = fv.value(name) + rng.normal() * stddevs[name] * params.feature_sigma_scale
            changes[name] = float(value if name == "temperature_c" else max(value, 0.0))

    if params.categorical_flip_p > 0:
        for name, domain in PERTURBED_CATEGORICAL.items():
            if rng.random() < params.categorical_flip_p:
                changes[name] = domain[int(rng.integers(len(domain)))]

    return replace(fv, **changes) if changes else fv


def _flip(target: OccupancyClass, rng) -> OccupancyClass:
    # Uniform over the four other classes
    k = int(rng.integers(N_CLASSES - 1))
    return OccupancyClass(k if k < target else k + 1)


def inject_noise(ds: Dataset, params: NoiseParams, seed, *, labels: bool = True, reference: Optional[Dataset] = None) -> Dataset:
    """Corrupt a dataset.

    Continuous features get Gaussian noise of standard deviation ``feature_sigma_scale``
    times the feature's standard deviation in ``reference`` (by default ``ds`` itself);
    ratios are clipped to [0, 1], wind and rainfall at 0. Day of week, month, weather type
    and holiday flag are each resampled uniformly with probability ``categorical_flip_p``.
    With ``labels``, each target is replaced by a uniformly chosen different class with
    probability ``label_flip_p``.

    Parameters
    ----------
    ds : Dataset
        The examples to corrupt.
    params : NoiseParams
        Noise levels.
    seed : int or numpy.random.SeedSequence
        All the randomness derives from it.
    labels : bool, optional
        Whether to corrupt the targets too.
    reference : Dataset, optional
        Where the feature standard deviations are measured.

    Returns
    -------
    Dataset
        A new dataset with the same schema; ``ds`` itself when every rate is zero.
    """
    if params.is_null or (params.feature_sigma_scale == 0 and params.categorical_flip_p == 0 and not labels):
        return ds

    rng = np.random.default_rng(seed)
    stddevs = feature_stddevs(reference if reference is not None else ds)

    examples = []
    flipped = 0
    for e in ds.examples:
        fv = _perturb(e.features, params, stddevs, rng)
        targets = e.targets
        if labels and params.label_flip_p > 0:
            draws = rng.random(len(targets))
            targets = tuple(_flip(t, rng) if d < params.label_flip_p else t for t, d in zip(targets, draws))
            flipped += sum(1 for a, b in zip(targets, e.targets) if a != b)
        examples.append(LabeledExample(fv, targets, e.segment_id, e.slot_start))

    LOG.debug("Noise injected in %s example(s), %s label(s) flipped", len(examples), flipped)
    return ds.subset(examples)
