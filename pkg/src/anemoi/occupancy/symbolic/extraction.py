# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import logging
from typing import Optional

import numpy as np

from ..data.classes import N_CLASSES
from ..data.classes import ClassDistribution
from .rules import Rule
from .rules import RuleBase
from .tree import TreeNode

LOG = logging.getLogger(__name__)


def leaf_distribution(counts) -> ClassDistribution:
    """Laplace-smoothed class frequencies of a leaf: ``(count + 1) / (total + 5)``."""
    counts = np.asarray(counts, dtype=np.float64)
    return ClassDistribution((counts + 1.0) / (counts.sum() + N_CLASSES))


def extract_rules(tree: TreeNode, window: Optional[int] = None) -> RuleBase:
    """One rule per leaf of ``tree``, its conditions being the tests along the path from the root.

    Leaves are visited left to right, so rule ``k`` is the ``k``-th leaf. The rules
    are disjoint and exhaustive, and the rule base is flagged as exclusive.
    """
    prefix = f"pw{window}-" if window is not None else ""
    rules = []

    def _walk(node, path):
        if node.is_leaf:
            rules.append(
                Rule(
                    tuple(path),
                    leaf_distribution(node.counts),
                    max(node.n, 1),
                    f"{prefix}r{len(rules):03d}",
                )
            )
            return
        _walk(node.left, path + [node.condition])
        _walk(node.right, path + [node.condition.negate()])

    _walk(tree, [])
    LOG.debug("Extracted %s rule(s)", len(rules))
    return RuleBase(tuple(rules), window, exclusive=True)
