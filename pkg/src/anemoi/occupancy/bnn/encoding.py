# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Feature vectors as network inputs.

Layout: the min-max normalised continuous features in schema order, the holiday
flag, then one one-hot block per categorical feature.
"""

from __future__ import annotations

import logging
from collections import Counter
from typing import Optional
from typing import Sequence

import numpy as np

from ..data.dataset import FeatureSchema
from ..data.dataset import FeatureVector

LOG = logging.getLogger(__name__)


def _other_index(domain):
    return domain.index("other") if "other" in domain else len(domain) - 1


def encode_batch(features: Sequence[FeatureVector], schema: FeatureSchema, unseen: Optional[Counter] = None) -> np.ndarray:
    """Encode feature vectors, one row each.

    Parameters
    ----------
    features : list of FeatureVector
        The inputs.
    schema : FeatureSchema
        Normalisation constants and categorical domains, from the training data.
    unseen : collections.Counter, optional
        Receives, per feature, the number of categorical values missing from the schema.
        Those values are encoded in the ``other`` slot of the block (the last one when
        the domain has no ``other``).

    Returns
    -------
    numpy.ndarray
        Array of shape ``(len(features), schema.width)``.
    """
    n = len(features)
    result = np.zeros((n, schema.width), dtype=np.float64)
    if n == 0:
        return result

    col = 0
    for name in schema.continuous:
        values = np.array([fv.value(name) for fv in features], dtype=np.float64)
        lo, hi = schema.minimum[name], schema.maximum[name]
        result[:, col] = (values - lo) / (hi - lo) if hi > lo else 0.0
        col += 1

    result[:, col] = [1.0 if fv.is_holiday else 0.0 for fv in features]
    col += 1

    rows = np.arange(n)
    for name, domain in schema.categories.items():
        index = {v: i for i, v in enumerate(domain)}
        other = _other_index(domain)
        positions = np.empty(n, dtype=np.int64)
        for i, fv in enumerate(features):
            value = fv.value(name)
            if value in index:
                positions[i] = index[value]
            else:
                positions[i] = other
                if unseen is not None:
                    unseen[name] += 1
        result[rows, col + positions] = 1.0
        col += len(domain)

    assert col == schema.width, (col, schema.width)
    return result


def encode_features(fv: FeatureVector, schema: FeatureSchema, unseen: Optional[Counter] = None) -> np.ndarray:
    """Encode one feature vector, see :func:`encode_batch`."""
    return encode_batch([fv], schema, unseen)[0]


def encode_dataset(dataset, schema: Optional[FeatureSchema] = None) -> np.ndarray:
    """Encode every example of a dataset, with its own schema unless one is given."""
    schema = dataset.feature_schema if schema is None else schema
    unseen = Counter()
    x = encode_batch(dataset.features, schema, unseen)
    if unseen:
        LOG.warning("Unseen categorical values mapped to 'other': %s", dict(unseen))
    return x
