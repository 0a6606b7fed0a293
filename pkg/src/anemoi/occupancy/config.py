# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


from __future__ import annotations

import copy
import dataclasses
import json
import logging
import os
from typing import Iterable
from typing import Optional

import yaml

try:
    import tomllib  # Only available since 3.11
except ImportError:
    import tomli as tomllib

from .errors import ConfigError

LOG = logging.getLogger(__name__)

HERE = os.path.dirname(__file__)


class DotDict(dict):
    """A dictionary that allows access to its keys as attributes.

    >>> d = DotDict({"a": 1, "b": {"c": 2}})
    >>> d.a
    1
    >>> d.b.c
    2

    The class is recursive, so nested dictionaries are also DotDicts.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)

        for k, v in self.items():
            if isinstance(v, dict):
                self[k] = DotDict(v)

            if isinstance(v, (list, tuple)):
                self[k] = [DotDict(i) if isinstance(i, dict) else i for i in v]

    def __getattr__(self, attr):
        try:
            return self[attr]
        except KeyError:
            raise AttributeError(attr)

    def __setattr__(self, attr, value):
        if isinstance(value, dict):
            value = DotDict(value)
        self[attr] = value

    def __repr__(self) -> str:
        return f"DotDict({super().__repr__()})"


def _merge_dicts(a, b):
    for k, v in b.items():
        if k in a and isinstance(a[k], dict) and isinstance(v, dict):
            _merge_dicts(a[k], v)
        else:
            a[k] = v


def _set_defaults(a, b):
    for k, v in b.items():
        if k in a and isinstance(a[k], dict) and isinstance(v, dict):
            _set_defaults(a[k], v)
        else:
            a.setdefault(k, v)


def load_any_dict_format(path) -> dict:
    """Load a configuration file in any supported format: JSON, YAML and TOML.

    Parameters
    ----------
    path : str
        The path to the configuration file.

    Returns
    -------
    dict
        The decoded configuration file.

    Raises
    ------
    ConfigError
        If the file is missing, cannot be decoded, or is not a mapping.
    """

    path = str(path)
    if not os.path.exists(path):
        raise ConfigError(f"Configuration file not found: {path}")

    try:
        if path.endswith(".json"):
            with open(path, "rb") as f:
                data = json.load(f)

        elif path.endswith(".yaml") or path.endswith(".yml"):
            with open(path, "rb") as f:
                data = yaml.safe_load(f)

        elif path.endswith(".toml"):
            with open(path, "rb") as f:
                data = tomllib.load(f)

        else:
            raise ConfigError(f"Unknown configuration file extension: {path}")

    except (json.JSONDecodeError, yaml.YAMLError, tomllib.TOMLDecodeError) as e:
        LOG.warning(f"Failed to parse config file {path}", exc_info=e)
        raise ConfigError(f"Failed to parse config file {path} [{e}]")

    if data is None:
        return {}

    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping at the top level")

    return data


def _packaged(name):
    with open(os.path.join(HERE, name)) as f:
        return yaml.safe_load(f)


def load_defaults() -> dict:
    """The package defaults (``defaults.yaml``), as a fresh mutable dictionary."""
    return _packaged("defaults.yaml")


def preset_names() -> list:
    return sorted(os.path.splitext(n)[0] for n in os.listdir(HERE) if n.endswith(".yaml") and n != "defaults.yaml")


def _resolve(path):
    # A packaged preset can be named without its extension
    if not os.path.exists(path) and path in preset_names():
        return os.path.join(HERE, path + ".yaml")
    return path


def parse_override(text: str) -> tuple[list, object]:
    """Split ``dotted.key=value``, the value being read as a YAML scalar."""
    if "=" not in text:
        raise ConfigError(f"Invalid override {text!r}, expected KEY=VALUE")
    key, value = text.split("=", 1)
    key = key.strip()
    if not key or any(not k for k in key.split(".")):
        raise ConfigError(f"Invalid override key {key!r}")
    try:
        value = yaml.safe_load(value) if value.strip() else None
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid override value for {key}: {e}")
    return key.split("."), value


def _apply_override(config, keys, value):
    node = config
    for k in keys[:-1]:
        if k not in node or not isinstance(node[k], dict):
            node[k] = {}
        node = node[k]
    node[keys[-1]] = value


def load_run_config(
    path: Optional[str] = None,
    overrides: Iterable[str] = (),
    *,
    seed: Optional[int] = None,
    output: Optional[str] = None,
) -> DotDict:
    """Build the effective configuration.

    Layers are applied in this order, later ones winning: package defaults, the
    configuration file ``path`` (or the name of a packaged preset), the ``--set`` style
    ``overrides``, and finally ``seed`` and ``output``.

    Returns
    -------
    DotDict
        The merged configuration.
    """
    config = load_defaults()

    if path is not None:
        path = _resolve(path)
        LOG.debug("Loading configuration from %s", path)
        _merge_dicts(config, load_any_dict_format(path))

    for text in overrides:
        keys, value = parse_override(text)
        _apply_override(config, keys, value)

    if seed is not None:
        config["seed"] = int(seed)

    if output is not None:
        config.setdefault("paths", {})["output"] = output

    _check(config)
    return DotDict(config)


def _check(config):
    defaults = load_defaults()
    unknown = sorted(set(config) - set(defaults))
    if unknown:
        raise ConfigError(f"Unknown configuration section(s): {', '.join(unknown)}")
    if not isinstance(config.get("seed"), int) or isinstance(config.get("seed"), bool):
        raise ConfigError(f"seed must be an integer, got {config.get('seed')!r}")
    for name, value in config.items():
        if isinstance(defaults[name], dict) and not isinstance(value, dict):
            raise ConfigError(f"Configuration section '{name}' must be a mapping")


def from_section(cls, section, name: str):
    """Build the dataclass ``cls`` from a configuration section.

    Missing entries take the dataclass defaults; unknown entries and invalid values
    raise :class:`ConfigError`.
    """
    section = {} if section is None else dict(section)
    fields = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = sorted(set(section) - fields)
    if unknown:
        raise ConfigError(f"Unknown entries in '{name}': {', '.join(unknown)}")
    try:
        return cls(**{k: copy.deepcopy(v) for k, v in section.items()})
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"Invalid '{name}' configuration: {e}") from e
