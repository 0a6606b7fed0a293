# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Exceptions raised by the package.

All of them derive from :class:`ValueError`, so callers that only care about
"bad input" can keep catching that. The command line maps each family to an exit code.
"""


class OccupancyError(ValueError):
    """Base class of all the errors raised by anemoi-occupancy."""

    kind = "error"
    code = 1


class ConfigError(OccupancyError):
    """Invalid or inconsistent configuration."""

    kind = "config"
    code = 2


class DataError(OccupancyError):
    """Input data that cannot be used: missing files, unmapped bays, empty datasets..."""

    kind = "data"
    code = 3


class DomainError(DataError):
    """A value outside of its domain, e.g. an occupancy ratio outside [0, 1]."""


class DimensionError(DataError):
    """Array shapes that do not chain."""


class IntegrityError(OccupancyError):
    """A trained artefact (rule base, distribution, checkpoint) violates its invariants."""

    kind = "integrity"
    code = 4


class RuleParseError(IntegrityError):
    """A rule document could not be parsed. ``path`` locates the offending entry."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path
