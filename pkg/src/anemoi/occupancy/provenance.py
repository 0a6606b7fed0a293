# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


"""Collect information about the current environment and the files a command emitted.

Manifests hold no wall-clock time, so that two runs with the same configuration and
seed produce identical manifests.
"""

import hashlib
import json
import logging
import os
import sys
from importlib import metadata

LOG = logging.getLogger(__name__)

MODULES = ("numpy", "pandas", "scipy", "pyyaml", "aniso8601", "python-dateutil", "tqdm", "anemoi-occupancy")


def path_sha256(path) -> str:
    hash = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1024 * 1024), b""):
            hash.update(chunk)
    return hash.hexdigest()


def module_versions() -> dict:
    versions = {}
    for name in MODULES:
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "missing"
    return versions


def assets_info(paths, root=None) -> dict:
    """Size and SHA-256 of each file, keyed by its path relative to ``root``."""
    result = {}
    for path in sorted(paths):
        key = os.path.relpath(path, root) if root else str(path)
        result[key] = dict(size=os.path.getsize(path), sha256=path_sha256(path))
    return result


def gather_provenance_info() -> dict:
    """Gather information about the current environment

    Returns
    -------
    dict
        The Python version and the versions of the main dependencies.
    """
    return dict(
        python=f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}",
        module_versions=module_versions(),
    )


def write_manifest(directory, files, *, seed=None, config=None, extra=None, name="manifest.json") -> str:
    """Write ``manifest.json`` in ``directory``, listing ``files`` with their digests.

    Returns
    -------
    str
        The path of the manifest.
    """
    manifest = dict(seed=seed, files=assets_info(files, directory))
    if extra:
        manifest.update(extra)
    if config is not None:
        manifest["config"] = config
    manifest["provenance"] = gather_provenance_info()

    path = os.path.join(directory, name)
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    LOG.info("Manifest of %s file(s) written to %s", len(files), path)
    return path
