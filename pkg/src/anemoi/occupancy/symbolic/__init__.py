# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""The rule engine: tree induction, rule extraction and probabilistic rule queries."""

from .extraction import extract_rules
from .rules import Condition
from .rules import Rule
from .rules import RuleBase
from .rules import load_rules
from .rules import parse_rules
from .rules import plausible_classes
from .rules import rule_infer
from .rules import rule_infer_batch
from .rules import save_rules
from .rules import serialize_rules
from .tree import TreeNode
from .tree import TreeParams
from .tree import induce_tree
from .tree import predict_tree

__all__ = [
    "Condition",
    "Rule",
    "RuleBase",
    "TreeNode",
    "TreeParams",
    "extract_rules",
    "induce_tree",
    "load_rules",
    "parse_rules",
    "plausible_classes",
    "predict_tree",
    "rule_infer",
    "rule_infer_batch",
    "save_rules",
    "serialize_rules",
]
