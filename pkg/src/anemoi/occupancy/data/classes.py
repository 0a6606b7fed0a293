# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""The five ordinal occupancy classes and probability distributions over them."""

from __future__ import annotations

import enum

import numpy as np

from ..errors import DomainError
from ..errors import IntegrityError

N_CLASSES = 5

# Allowed deviation of a distribution's total from 1
SUM_TOLERANCE = 1e-9


class OccupancyClass(enum.IntEnum):
    """Occupancy level of a street segment, each class covering 20% of the ratio range."""

    VERY_LOW = 0
    LOW = 1
    MODERATE = 2
    HIGH = 3
    VERY_HIGH = 4

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def from_label(cls, label) -> "OccupancyClass":
        """Accept a label (``"VeryHigh"``), a member name (``"VERY_HIGH"``) or an index."""
        if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
            return cls(int(label))
        if isinstance(label, str):
            if label in _BY_LABEL:
                return _BY_LABEL[label]
            if label in cls.__members__:
                return cls[label]
        raise ValueError(f"Unknown occupancy class {label!r}")


_LABELS = {
    OccupancyClass.VERY_LOW: "VeryLow",
    OccupancyClass.LOW: "Low",
    OccupancyClass.MODERATE: "Moderate",
    OccupancyClass.HIGH: "High",
    OccupancyClass.VERY_HIGH: "VeryHigh",
}

_BY_LABEL = {v: k for k, v in _LABELS.items()}


def discretize_ratio(ratio: float) -> OccupancyClass:
    """Map an occupancy ratio to its class.

    Bins are half-open, ``[0, 0.2)`` is VeryLow and so on, and the top bin ``[0.8, 1.0]`` is closed.

    Parameters
    ----------
    ratio : float
        Occupancy ratio, in [0, 1].

    Returns
    -------
    OccupancyClass
        The class of the ratio.

    Raises
    ------
    DomainError
        If the ratio is outside [0, 1] (or NaN).
    """
    if not (0.0 <= ratio <= 1.0):
        raise DomainError(f"Occupancy ratio {ratio!r} is outside [0, 1]")
    return OccupancyClass(min(int(ratio * 5), 4))


def discretize_ratios(ratios) -> np.ndarray:
    """Vectorised :func:`discretize_ratio`, returning class indices."""
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.size and not np.all((ratios >= 0.0) & (ratios <= 1.0)):
        raise DomainError("Occupancy ratios must be in [0, 1]")
    return np.minimum((ratios * 5).astype(np.int64), 4)


def check_distribution(probs, what="distribution") -> np.ndarray:
    """Validate one distribution (or a batch, one per row) over the five classes."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape[-1] != N_CLASSES:
        raise IntegrityError(f"{what} must have {N_CLASSES} entries, got shape {probs.shape}")
    if not np.all(np.isfinite(probs)) or np.any(probs < 0.0) or np.any(probs > 1.0):
        raise IntegrityError(f"{what} has entries outside [0, 1]: {probs}")
    total = probs.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > SUM_TOLERANCE):
        raise IntegrityError(f"{what} does not sum to 1 (sum={total})")
    return probs


class ClassDistribution:
    """A normalised probability vector over the five occupancy classes. Immutable."""

    __slots__ = ("_probs",)

    def __init__(self, probs):
        probs = np.array(check_distribution(probs), dtype=np.float64)
        probs.setflags(write=False)
        self._probs = probs

    @classmethod
    def uniform(cls) -> "ClassDistribution":
        return cls(np.full(N_CLASSES, 1.0 / N_CLASSES))

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def argmax(self) -> OccupancyClass:
        # np.argmax returns the first maximum: ties go to the lower class
        return OccupancyClass(int(np.argmax(self._probs)))

    @property
    def max(self) -> float:
        return float(self._probs.max())

    def __getitem__(self, cls) -> float:
        return float(self._probs[int(cls)])

    def __iter__(self):
        return iter(self._probs.tolist())

    def __len__(self):
        return N_CLASSES

    def __eq__(self, other):
        if not isinstance(other, ClassDistribution):
            return NotImplemented
        return bool(np.array_equal(self._probs, other._probs))

    def __hash__(self):
        return hash(self._probs.tobytes())

    def tolist(self) -> list:
        return self._probs.tolist()

    def __repr__(self) -> str:
        return "ClassDistribution(%s)" % ", ".join(f"{p:.4f}" for p in self._probs)
