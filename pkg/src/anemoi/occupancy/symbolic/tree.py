# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Greedy top-down induction of a classification tree (Gini impurity).

Continuous features are split at midpoints between consecutive distinct values,
categorical features one value against the rest, booleans on true against false.
All candidates of a feature are scored at once with cumulative class counts.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from typing import Optional
from typing import Sequence

import numpy as np

from ..config import from_section
from ..data.classes import N_CLASSES
from ..data.classes import OccupancyClass
from ..data.dataset import Dataset
from ..data.dataset import FeatureVector
from ..errors import DataError
from ..errors import DomainError
from .features import BOOLEAN
from .features import CATEGORICAL
from .features import FeatureTable
from .features import feature_domain
from .features import feature_kind
from .features import feature_names
from .rules import Condition

LOG = logging.getLogger(__name__)

# Gains closer than this are ties
TOLERANCE = 1e-12


@dataclass(frozen=True)
class TreeParams:
    max_depth: Optional[int] = 8
    min_leaf: int = 20
    min_gain: float = 1e-4

    def __post_init__(self):
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError(f"max_depth must be positive, got {self.max_depth}")
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be at least 1, got {self.min_leaf}")
        if self.min_gain < 0:
            raise ValueError(f"min_gain must not be negative, got {self.min_gain}")

    @classmethod
    def from_config(cls, section) -> "TreeParams":
        return from_section(cls, section, "tree")


@dataclass(frozen=True)
class TreeNode:
    """A leaf (``condition`` is None) or a split whose ``left`` child holds the examples matching ``condition``.

    ``counts`` are the training class counts of the examples reaching the node.
    """

    counts: tuple
    condition: Optional[Condition] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None

    @property
    def is_leaf(self) -> bool:
        return self.condition is None

    @property
    def n(self) -> int:
        return int(sum(self.counts))

    @property
    def prediction(self) -> OccupancyClass:
        return OccupancyClass(int(np.argmax(self.counts)))

    def depth(self) -> int:
        if self.is_leaf:
            return 0
        return 1 + max(self.left.depth(), self.right.depth())

    def leaves(self) -> list:
        if self.is_leaf:
            return [self]
        return self.left.leaves() + self.right.leaves()

    def as_dict(self) -> dict:
        if self.is_leaf:
            return dict(counts=list(self.counts))
        return dict(
            counts=list(self.counts),
            split=self.condition.as_dict(),
            left=self.left.as_dict(),
            right=self.right.as_dict(),
        )


def gini(counts) -> float:
    """Gini impurity of class counts: 0 when pure, 0.8 for five equally frequent classes."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p * p))


def _weighted_gini(left, right):
    # left, right: (candidates, classes)
    n_left = left.sum(axis=1)
    n_right = right.sum(axis=1)
    n = n_left + n_right
    g_left = 1.0 - np.sum((left / n_left[:, None]) ** 2, axis=1)
    g_right = 1.0 - np.sum((right / n_right[:, None]) ** 2, axis=1)
    return (n_left * g_left + n_right * g_right) / n


def _pick(gains):
    # First candidate within tolerance of the best one
    best = gains.max()
    return int(np.argmax(gains >= best - TOLERANCE))


class _Column:

    def __init__(self, name, values):
        self.name = name
        self.kind = feature_kind(name)
        if self.kind == CATEGORICAL:
            self.domain = feature_domain(name)
            index = {v: i for i, v in enumerate(self.domain)}
            unknown = sorted({str(v) for v in values if v not in index})
            if unknown:
                raise DomainError(f"Unknown {name} value(s): {', '.join(unknown)}")
            self.values = np.array([index[v] for v in values], dtype=np.int64)
        else:
            self.values = values

    def best_split(self, idx, y, parent, min_leaf):
        """Best ``(gain, condition)`` for the examples ``idx``, or None."""
        values = self.values[idx]
        labels = y[idx]
        if self.kind == CATEGORICAL:
            return self._categorical(values, labels, parent, min_leaf)
        if self.kind == BOOLEAN:
            return self._boolean(values, labels, parent, min_leaf)
        return self._continuous(values, labels, parent, min_leaf)

    def _continuous(self, values, labels, parent, min_leaf):
        n = len(values)
        order = np.argsort(values, kind="stable")
        sorted_values = values[order]
        one_hot = np.zeros((n, N_CLASSES), dtype=np.float64)
        one_hot[np.arange(n), labels[order]] = 1.0
        cumulative = np.cumsum(one_hot, axis=0)

        change = np.nonzero(sorted_values[:-1] < sorted_values[1:])[0]
        n_left = change + 1
        change = change[(n_left >= min_leaf) & (n - n_left >= min_leaf)]
        if len(change) == 0:
            return None

        left = cumulative[change]
        right = cumulative[-1] - left
        gains = parent - _weighted_gini(left, right)
        best = _pick(gains)

        lo, hi = sorted_values[change[best]], sorted_values[change[best] + 1]
        threshold = (lo + hi) / 2.0
        if not (lo <= threshold < hi):
            threshold = lo
        return float(gains[best]), Condition(self.name, "le", float(threshold))

    def _categorical(self, values, labels, parent, min_leaf):
        size = len(self.domain)
        table = np.bincount(values * N_CLASSES + labels, minlength=size * N_CLASSES)
        left = table.reshape(size, N_CLASSES).astype(np.float64)
        right = left.sum(axis=0) - left
        n_left = left.sum(axis=1)
        n_right = right.sum(axis=1)
        valid = np.nonzero((n_left >= min_leaf) & (n_right >= min_leaf))[0]
        if len(valid) == 0:
            return None
        gains = parent - _weighted_gini(left[valid], right[valid])
        best = _pick(gains)
        return float(gains[best]), Condition(self.name, "in", [self.domain[valid[best]]])

    def _boolean(self, values, labels, parent, min_leaf):
        n_left = int(values.sum())
        if n_left < min_leaf or len(values) - n_left < min_leaf:
            return None
        left = np.bincount(labels[values], minlength=N_CLASSES).astype(np.float64)
        right = np.bincount(labels[~values], minlength=N_CLASSES).astype(np.float64)
        gain = parent - _weighted_gini(left[None, :], right[None, :])[0]
        return float(gain), Condition(self.name, "eq", True)


class _Builder:

    def __init__(self, table, columns, y, params):
        self.table = table
        self.columns = columns
        self.y = y
        self.params = params

    def build(self, idx, depth):
        counts = np.bincount(self.y[idx], minlength=N_CLASSES)
        leaf = TreeNode(tuple(int(c) for c in counts))
        params = self.params

        if params.max_depth is not None and depth >= params.max_depth:
            return leaf
        if len(idx) < 2 * params.min_leaf:
            return leaf
        if np.count_nonzero(counts) <= 1:
            return leaf

        parent = gini(counts)
        best = None
        for column in self.columns:
            candidate = column.best_split(idx, self.y, parent, params.min_leaf)
            if candidate is None:
                continue
            if best is None or candidate[0] > best[0] + TOLERANCE:
                best = candidate

        if best is None or best[0] < params.min_gain:
            return leaf

        gain, condition = best
        LOG.debug("depth=%s n=%s split %s gain=%.6f", depth, len(idx), condition, gain)
        goes_left = condition.mask(self.table)[idx]
        return TreeNode(
            leaf.counts,
            condition,
            self.build(idx[goes_left], depth + 1),
            self.build(idx[~goes_left], depth + 1),
        )


def induce_tree(train: Dataset, window: int, params: TreeParams = TreeParams()) -> TreeNode:
    """Induce a classification tree predicting the class ``window`` slots ahead.

    Parameters
    ----------
    train : Dataset
        The training examples.
    window : int
        Prediction window, 1 to 3.
    params : TreeParams
        Stopping parameters. ``max_depth`` None means unlimited depth.

    Returns
    -------
    TreeNode
        The root of the tree.

    Raises
    ------
    DataError
        If the training set is empty.
    """
    if len(train) == 0:
        raise DataError("Cannot induce a tree from an empty dataset")

    table = FeatureTable(train.features)
    y = train.targets(window)
    columns = [_Column(name, table.column(name)) for name in feature_names(train.lag_depth)]

    tree = _Builder(table, columns, y, params).build(np.arange(len(train)), 0)
    LOG.info(
        "Tree for PW%s: %s examples, depth %s, %s leaves",
        window,
        len(train),
        tree.depth(),
        len(tree.leaves()),
    )
    return tree


def predict_tree(tree: TreeNode, fv: FeatureVector) -> OccupancyClass:
    """Class of the leaf reached by ``fv``."""
    node = tree
    while not node.is_leaf:
        node = node.left if node.condition.matches(fv) else node.right
    return node.prediction


def predict_tree_batch(tree: TreeNode, features: Sequence[FeatureVector] | FeatureTable) -> np.ndarray:
    table = features if isinstance(features, FeatureTable) else FeatureTable(features)
    result = np.zeros(len(table), dtype=np.int64)

    def _walk(node, idx):
        if node.is_leaf:
            result[idx] = int(node.prediction)
            return
        goes_left = node.condition.mask(table)[idx]
        _walk(node.left, idx[goes_left])
        _walk(node.right, idx[~goes_left])

    _walk(tree, np.arange(len(table)))
    return result


def tree_digest(tree: TreeNode) -> str:
    """Structural hash: two trees have the same digest if and only if they are identical."""
    text = json.dumps(tree.as_dict(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()
