# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import importlib
import logging
import os
import sys

from .errors import ConfigError

LOG = logging.getLogger(__name__)


class Wrapper:
    """A wrapper for the registry"""

    def __init__(self, name, registry):
        self.name = name
        self.registry = registry

    def __call__(self, factory):
        self.registry.register(self.name, factory)
        return factory


class Registry:
    """A registry of factories, filled by the modules of ``package``.

    Modules register their factories when imported; the first :meth:`lookup` of an
    unknown name imports every module of the package.
    """

    def __init__(self, package):
        self.package = package
        self.registered = {}
        self.kind = package.split(".")[-1]
        self._scanned = False

    def register(self, name: str, factory: callable = None):

        if factory is None:
            return Wrapper(name, self)

        if name in self.registered and self.registered[name] is not factory:
            LOG.warning(f"Overwriting '{name}' in {self.package}")
        self.registered[name] = factory

    def _load(self, file):
        name, _ = os.path.splitext(file)
        try:
            importlib.import_module(f".{name}", package=self.package)
        except Exception:
            LOG.warning(f"Error loading '{self.package}.{name}'", exc_info=True)

    def _scan(self):
        if self._scanned:
            return
        self._scanned = True

        directory = sys.modules[self.package].__path__[0]

        for file in sorted(os.listdir(directory)):

            if file[0] == "." or file == "__init__.py":
                continue

            full = os.path.join(directory, file)
            if os.path.isdir(full):
                if os.path.exists(os.path.join(full, "__init__.py")):
                    self._load(file)
                continue

            if file.endswith(".py"):
                self._load(file)

    def names(self) -> list:
        self._scan()
        return sorted(self.registered)

    def lookup(self, name: str, *, return_none=False) -> callable:

        if name not in self.registered:
            self._scan()

        if name not in self.registered:
            if return_none:
                return None
            raise ConfigError(f"Unknown {self.kind} '{name}', expected one of {', '.join(self.names())}")

        return self.registered[name]
