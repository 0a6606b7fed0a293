# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Probabilistic rules: conjunctions of conditions annotated with a class distribution.

Rules extracted from a single tree are mutually exclusive and exhaustive, so answering
a query reduces to finding the one rule that matches. Rule bases written by hand may
overlap; they are read as a decision list, where the first matching rule wins.
"""

from __future__ import annotations

import json
import logging
import operator
from dataclasses import dataclass
from typing import Optional
from typing import Sequence

import numpy as np

from ..data.classes import N_CLASSES
from ..data.classes import ClassDistribution
from ..data.classes import OccupancyClass
from ..data.dataset import FeatureVector
from ..errors import DataError
from ..errors import IntegrityError
from ..errors import RuleParseError
from .features import BOOLEAN
from .features import CATEGORICAL
from .features import CONTINUOUS
from .features import FeatureTable
from .features import feature_domain
from .features import feature_kind
from .features import is_known_feature
from .features import symbolic_value

LOG = logging.getLogger(__name__)

DEFAULT_TAU_P = 0.05

OPERATORS = {
    "le": operator.le,
    "gt": operator.gt,
    "eq": operator.eq,
}

OPS_BY_KIND = {
    CONTINUOUS: ("le", "gt"),
    CATEGORICAL: ("in",),
    BOOLEAN: ("eq",),
}


@dataclass(frozen=True)
class Condition:
    """A test on one feature: ``le``/``gt`` a threshold, ``in`` a value set, or ``eq`` a boolean."""

    feature: str
    op: str
    value: object

    def __post_init__(self):
        if not is_known_feature(self.feature):
            raise IntegrityError(f"Unknown feature {self.feature!r}")
        kind = feature_kind(self.feature)
        if self.op not in OPS_BY_KIND[kind]:
            raise IntegrityError(f"Operator {self.op!r} cannot be applied to {kind} feature {self.feature!r}")
        if self.op == "in":
            values = frozenset(_category(self.feature, v) for v in self.value)
            if not values:
                raise IntegrityError(f"Empty value set for {self.feature!r}")
            object.__setattr__(self, "value", values)
        elif self.op == "eq":
            if not isinstance(self.value, (bool, np.bool_)):
                raise IntegrityError(f"{self.feature!r} must be compared to true or false")
            object.__setattr__(self, "value", bool(self.value))
        else:
            object.__setattr__(self, "value", float(self.value))

    def matches(self, fv: FeatureVector) -> bool:
        value = symbolic_value(fv, self.feature)
        if self.op == "in":
            return value in self.value
        return bool(OPERATORS[self.op](value, self.value))

    def mask(self, table: FeatureTable) -> np.ndarray:
        column = table.column(self.feature)
        if self.op == "in":
            return np.isin(column, list(self.value))
        return OPERATORS[self.op](column, self.value)

    def negate(self) -> "Condition":
        """The condition of the other branch of a split."""
        if self.op == "le":
            return Condition(self.feature, "gt", self.value)
        if self.op == "gt":
            return Condition(self.feature, "le", self.value)
        if self.op == "eq":
            return Condition(self.feature, "eq", not self.value)
        rest = [v for v in feature_domain(self.feature) if v not in self.value]
        return Condition(self.feature, "in", rest)

    def as_dict(self) -> dict:
        if self.feature == "prev_occ":
            value = [OccupancyClass(v).label for v in sorted(self.value)]
        elif self.op == "in":
            value = sorted(self.value)
        else:
            value = self.value
        return dict(feature=self.feature, op=self.op, value=value)

    def __str__(self):
        if self.op == "in":
            return f"{self.feature} in {{{', '.join(str(v) for v in sorted(self.value))}}}"
        if self.op == "eq":
            return f"{self.feature} = {self.value}"
        symbol = {"le": "<=", "gt": ">"}[self.op]
        return f"{self.feature} {symbol} {self.value:g}"


def _category(feature, value):
    if feature == "prev_occ":
        return int(OccupancyClass.from_label(value))
    domain = feature_domain(feature)
    if isinstance(value, str) and feature != "weather_type":
        raise IntegrityError(f"Value {value!r} is not valid for {feature!r}")
    if feature != "weather_type":
        value = int(value)
    if value not in domain:
        raise IntegrityError(f"Value {value!r} is not valid for {feature!r}, expected one of {list(domain)}")
    return value


@dataclass(frozen=True)
class Rule:
    """If all ``conditions`` hold, the class follows ``class_distribution``."""

    conditions: tuple
    class_distribution: ClassDistribution
    support: int
    rule_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "conditions", tuple(self.conditions))
        if not isinstance(self.class_distribution, ClassDistribution):
            object.__setattr__(self, "class_distribution", ClassDistribution(self.class_distribution))
        if self.support < 1:
            raise IntegrityError(f"Rule {self.rule_id} has support {self.support}")

    @property
    def consequent(self) -> OccupancyClass:
        return self.class_distribution.argmax

    def matches(self, fv: FeatureVector) -> bool:
        return all(c.matches(fv) for c in self.conditions)

    def mask(self, table: FeatureTable) -> np.ndarray:
        mask = np.ones(len(table), dtype=bool)
        for c in self.conditions:
            mask &= c.mask(table)
        return mask

    def __str__(self):
        body = " and ".join(str(c) for c in self.conditions) or "true"
        return f"{self.rule_id}: if {body} then {self.consequent.label} (p={self.class_distribution.max:.3f}, n={self.support})"


@dataclass(frozen=True)
class RuleBase:
    """The rules of one prediction window.

    ``exclusive`` asserts that exactly one rule matches any input, which holds for
    rules extracted from a tree. Without it, the first matching rule is used.
    """

    rules: tuple
    window: Optional[int] = None
    exclusive: bool = True

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if not self.rules:
            raise IntegrityError("A rule base needs at least one rule")

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)

    def rule(self, rule_id: str) -> Rule:
        for r in self.rules:
            if r.rule_id == rule_id:
                return r
        raise KeyError(rule_id)


def rule_infer(rb: RuleBase, fv: FeatureVector) -> tuple[ClassDistribution, Rule]:
    """Answer a query: the class distribution of the matching rule, and the rule.

    Raises
    ------
    IntegrityError
        If no rule matches, or if several rules of an exclusive rule base match.
    """
    matched = None
    for rule in rb.rules:
        if rule.matches(fv):
            if matched is None:
                matched = rule
                if not rb.exclusive:
                    break
            else:
                raise IntegrityError(f"Rules {matched.rule_id} and {rule.rule_id} both match {fv}")
    if matched is None:
        raise IntegrityError(f"No rule matches {fv}")
    return matched.class_distribution, matched


def rule_infer_batch(rb: RuleBase, features: Sequence[FeatureVector] | FeatureTable) -> np.ndarray:
    """Index of the matching rule for each input (vectorised :func:`rule_infer`)."""
    table = features if isinstance(features, FeatureTable) else FeatureTable(features)
    if len(table) == 0:
        return np.zeros(0, dtype=np.int64)
    matches = np.stack([rule.mask(table) for rule in rb.rules])
    count = matches.sum(axis=0)
    if np.any(count == 0):
        bad = int(np.argmax(count == 0))
        raise IntegrityError(f"No rule matches {table.features[bad]}")
    if rb.exclusive and np.any(count > 1):
        bad = int(np.argmax(count > 1))
        raise IntegrityError(f"{int(count[bad])} rules match {table.features[bad]}")
    # argmax picks the first matching rule
    return np.argmax(matches, axis=0)


def plausible_classes(rb: RuleBase, fv: FeatureVector, tau_p: float = DEFAULT_TAU_P) -> frozenset:
    """Classes the rules do not rule out: probability at least ``tau_p`` under the matching rule.

    Never empty: when no class reaches ``tau_p`` the rule's most likely class is returned.
    """
    dist, _ = rule_infer(rb, fv)
    return plausible_from_distribution(dist, tau_p)


def plausible_from_distribution(dist: ClassDistribution, tau_p: float = DEFAULT_TAU_P) -> frozenset:
    if not (0.0 <= tau_p < 1.0):
        raise ValueError(f"Plausibility threshold must be in [0, 1), got {tau_p}")
    result = frozenset(OccupancyClass(i) for i, p in enumerate(dist.probs) if p >= tau_p)
    if not result:
        result = frozenset([dist.argmax])
    return result


def serialize_rules(rb: RuleBase) -> dict:
    """JSON document of a rule base: ``{window, exclusive, rules: [{id, conditions, distribution, support}]}``."""
    return dict(
        window=rb.window,
        exclusive=rb.exclusive,
        rules=[
            dict(
                id=r.rule_id,
                consequent=r.consequent.label,
                conditions=[c.as_dict() for c in r.conditions],
                distribution=r.class_distribution.tolist(),
                support=r.support,
            )
            for r in rb.rules
        ],
    )


def _parse_condition(doc, path):
    if not isinstance(doc, dict):
        raise RuleParseError("a condition must be an object", path)
    for key in ("feature", "op", "value"):
        if key not in doc:
            raise RuleParseError(f"missing '{key}'", path)
    if doc["op"] not in ("le", "gt", "in", "eq"):
        raise RuleParseError(f"unknown operator {doc['op']!r}", f"{path}.op")
    value = doc["value"]
    if doc["op"] == "in" and not isinstance(value, list):
        value = [value]
    try:
        return Condition(doc["feature"], doc["op"], value)
    except (IntegrityError, TypeError, ValueError) as e:
        raise RuleParseError(str(e), path) from e


def parse_rules(doc: dict) -> RuleBase:
    """Inverse of :func:`serialize_rules`; also reads hand-authored rule files.

    ``exclusive`` defaults to false and rule ids to ``r<index>`` when absent.

    Raises
    ------
    RuleParseError
        With the JSON path of the first problem found.
    """
    if not isinstance(doc, dict):
        raise RuleParseError("a rule document must be an object")
    if not isinstance(doc.get("rules"), list):
        raise RuleParseError("missing 'rules' list", "$.rules")

    window = doc.get("window")
    if window is not None and window not in (1, 2, 3):
        raise RuleParseError(f"invalid window {window!r}", "$.window")

    rules = []
    for i, r in enumerate(doc["rules"]):
        path = f"$.rules[{i}]"
        if not isinstance(r, dict):
            raise RuleParseError("a rule must be an object", path)
        conditions = [_parse_condition(c, f"{path}.conditions[{j}]") for j, c in enumerate(r.get("conditions", []))]
        dist = r.get("distribution")
        if not isinstance(dist, list) or len(dist) != N_CLASSES:
            raise RuleParseError(f"distribution must be a list of {N_CLASSES} numbers", f"{path}.distribution")
        try:
            dist = ClassDistribution([float(p) for p in dist])
        except (IntegrityError, TypeError, ValueError) as e:
            raise RuleParseError(str(e), f"{path}.distribution") from e
        support = r.get("support", 1)
        if not isinstance(support, int) or isinstance(support, bool) or support < 1:
            raise RuleParseError(f"support must be a positive integer, got {support!r}", f"{path}.support")
        rules.append(Rule(tuple(conditions), dist, support, str(r.get("id", f"r{i:04d}"))))

    if not rules:
        raise RuleParseError("no rules", "$.rules")

    return RuleBase(tuple(rules), window, bool(doc.get("exclusive", False)))


def save_rules(rb: RuleBase, path) -> None:
    with open(path, "w") as f:
        json.dump(serialize_rules(rb), f, indent=2)
        f.write("\n")
    LOG.info("Saved %s rule(s) to %s", len(rb), path)


def load_rules(path) -> RuleBase:
    try:
        with open(path) as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise DataError(f"Rule file not found: {path}")
    except json.JSONDecodeError as e:
        raise RuleParseError(f"invalid JSON ({e})") from e
    return parse_rules(doc)
