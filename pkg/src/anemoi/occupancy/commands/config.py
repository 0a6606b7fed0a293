# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


import json

from ..config import preset_names
from . import RunCommand


class Config(RunCommand):
    """Print the effective configuration."""

    def add_arguments(self, command_parser):
        super().add_arguments(command_parser)
        command_parser.add_argument("--presets", action="store_true", help="List the packaged presets")

    def run(self, args):
        if args.presets:
            for name in preset_names():
                print(name)
        else:
            print(json.dumps(self.load_config(args), indent=4))


command = Config
