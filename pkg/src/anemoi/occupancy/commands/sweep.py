# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


from . import RunCommand
from .experiment import run_experiment


class Sweep(RunCommand):
    """Selective prediction statistics over the configured confidence thresholds."""

    def run(self, args):
        run_experiment(self, self.load_config(args), "sweep")


command = Sweep
