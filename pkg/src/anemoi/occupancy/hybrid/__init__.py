# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


from .methods import Components
from .methods import methods
from .methods import predict_batch
from .outcome import PredictionOutcome
from .outcome import check_outcome
from .outcome import outcome_record
from .outcome import predict_bnn
from .outcome import predict_method1
from .outcome import predict_method2
from .outcome import predict_persistence
from .outcome import predict_symbolic
from .outcome import refine_distribution

__all__ = [
    "Components",
    "PredictionOutcome",
    "check_outcome",
    "methods",
    "outcome_record",
    "predict_batch",
    "predict_bnn",
    "predict_method1",
    "predict_method2",
    "predict_persistence",
    "predict_symbolic",
    "refine_distribution",
]
