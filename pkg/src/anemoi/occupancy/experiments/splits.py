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
import math
from collections import defaultdict
from typing import Sequence

import numpy as np

from ..data.dataset import WINDOWS
from ..data.dataset import Dataset
from ..dates import SLOT
from ..errors import DataError

LOG = logging.getLogger(__name__)

DEFAULT_SPLIT = (0.8, 0.1, 0.1)


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def check_fractions(fractions: Sequence[float]) -> tuple:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError(f"Expected three split fractions, got {fractions}")
    if any(not (0.0 < f <= 1.0) for f in fractions):
        raise ValueError(f"Split fractions must be in (0, 1], got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"Split fractions must sum to 1, got {fractions}")
    return fractions


def temporal_split(ds: Dataset, fractions: Sequence[float] = DEFAULT_SPLIT, *, purge: bool = True) -> tuple:
    """Split each segment's examples in time: the earliest for training, then validation, then test.

    A segment of ``n`` examples gives ``round(f_train * n)`` training and ``round(f_val * n)``
    validation examples (halves rounded up), the test set takes the rest. With ``purge``,
    examples whose target slots reach the first slot of the next partition are dropped, so
    that no label of a partition is an input or label of a later one.

    Returns
    -------
    tuple
        ``(train, validation, test)`` datasets, sharing the schema of ``ds``.

    Raises
    ------
    DataError
        If a partition ends up empty.
    """
    fractions = check_fractions(fractions)
    horizon = max(WINDOWS) * SLOT

    by_segment = defaultdict(list)
    for e in ds.examples:
        by_segment[e.segment_id].append(e)

    parts = ([], [], [])
    purged = 0
    for segment in sorted(by_segment):
        examples = by_segment[segment]
        n = len(examples)
        n_train = round_half_up(fractions[0] * n)
        n_val = min(round_half_up(fractions[1] * n), n - n_train)
        chunks = [examples[:n_train], examples[n_train : n_train + n_val], examples[n_train + n_val :]]

        for i, chunk in enumerate(chunks):
            if purge:
                following = [c for c in chunks[i + 1 :] if c]
                if following:
                    boundary = following[0][0].slot_start
                    kept = [e for e in chunk if e.slot_start + horizon < boundary]
                    purged += len(chunk) - len(kept)
                    chunk = kept
            parts[i].extend(chunk)

    names = ("training", "validation", "test")
    for name, part in zip(names, parts):
        if not part:
            raise DataError(f"Not enough examples ({len(ds)}) to form a nonempty {name} set")

    LOG.info(
        "Temporal split: %s training, %s validation, %s test example(s), %s purged",
        len(parts[0]),
        len(parts[1]),
        len(parts[2]),
        purged,
    )
    return tuple(ds.subset(p) for p in parts)


def subsample_training(train: Dataset, fraction: float, seed) -> Dataset:
    """Uniform sample without replacement of ``round(fraction * n)`` examples (at least one).

    Fraction 1 returns ``train`` itself.
    """
    if not (0.0 < fraction <= 1.0):
        raise ValueError(f"The sampling fraction must be in (0, 1], got {fraction}")
    if fraction == 1.0:
        return train

    n = len(train)
    k = max(1, round_half_up(fraction * n)) if n else 0
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(n, size=k, replace=False))
    return train.subset([train.examples[i] for i in chosen])


def normalised_partitions(ds: Dataset, fractions: Sequence[float] = DEFAULT_SPLIT, *, purge: bool = True) -> tuple:
    """:func:`temporal_split`, with every partition normalised on the training set."""
    train, validation, test = temporal_split(ds, fractions, purge=purge)
    train = train.refit()
    schema = train.feature_schema
    return train, validation.with_schema(schema), test.with_schema(schema)
