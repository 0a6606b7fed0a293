# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.

from .metrics import MetricsReport
from .metrics import compute_accuracy
from .metrics import compute_accuracy_at_1
from .metrics import compute_deferral_rate
from .noise import NoiseParams
from .noise import inject_noise
from .splits import subsample_training
from .splits import temporal_split
from .suite import Experiment
from .suite import ExperimentConfig
from .suite import run_suite
from .sweep import run_sweep

__all__ = [
    "Experiment",
    "ExperimentConfig",
    "MetricsReport",
    "NoiseParams",
    "compute_accuracy",
    "compute_accuracy_at_1",
    "compute_deferral_rate",
    "inject_noise",
    "run_suite",
    "run_sweep",
    "subsample_training",
    "temporal_split",
]
