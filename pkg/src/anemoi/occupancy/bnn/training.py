# (C) Copyright 2024 Anemoi contributors.
#
# This software is licensed under the terms of the Apache Licence Version 2.0
# which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
#
# In applying this licence, ECMWF does not waive the privileges and immunities
# granted to it by virtue of its status as an intergovernmental organisation
# nor does it submit to any jurisdiction.


from __future__ import annotations

import logging
import math
from dataclasses import asdict
from dataclasses import dataclass
from dataclasses import field
from typing import Optional

import numpy as np
import pandas as pd
import tqdm

from ..config import from_section
from ..data.dataset import Dataset
from ..data.dataset import check_window
from ..errors import DataError
from .elbo import cross_entropy
from .elbo import elbo_minus
from .elbo import kl_mean_field
from .encoding import encode_dataset
from .model import BnnModel
from .model import forward
from .model import sample_weights

LOG = logging.getLogger(__name__)

LOG_COLUMNS = ("epoch", "train_loss", "val_loss", "stopped_early")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 64
    max_epochs: int = 40
    patience: int = 10
    mc_train_samples: int = 1
    mc_predict_samples: int = 50
    # Weight samples of the validation loss
    mc_validation_samples: int = 10
    seed: int = 0
    hidden: tuple = (64, 64)
    prior_sigma: float = 1.0
    init_sigma: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        for name in ("batch_size", "max_epochs", "mc_train_samples", "mc_predict_samples", "mc_validation_samples"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.patience < 0:
            raise ValueError(f"patience must not be negative, got {self.patience}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if any(h < 1 for h in self.hidden):
            raise ValueError(f"Invalid hidden layer sizes {self.hidden}")
        if not (self.prior_sigma > 0 and self.init_sigma > 0):
            raise ValueError("prior_sigma and init_sigma must be positive")

    @classmethod
    def from_config(cls, section, seed: Optional[int] = None) -> "TrainConfig":
        section = dict(section or {})
        if seed is not None:
            section["seed"] = seed
        return from_section(cls, section, "train")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d


class Adam:
    """Adam updates, applied in place to a list of arrays."""

    def __init__(self, parameters, learning_rate=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m = [np.zeros_like(p) for p in parameters]
        self.v = [np.zeros_like(p) for p in parameters]
        self.t = 0

    def step(self, parameters, grads):
        self.t += 1
        correction1 = 1.0 - self.beta1**self.t
        correction2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(parameters, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + self.epsilon)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    stopped_early: bool = False


@dataclass
class TrainingLog:
    records: list = field(default_factory=list)
    best_epoch: int = 0

    def __len__(self):
        return len(self.records)

    @property
    def stopped_early(self) -> bool:
        return bool(self.records) and self.records[-1].stopped_early

    def write_csv(self, path) -> None:
        rows = [(r.epoch, repr(r.train_loss), repr(r.val_loss), str(r.stopped_early).lower()) for r in self.records]
        pd.DataFrame(rows, columns=list(LOG_COLUMNS)).to_csv(path, index=False, lineterminator="\n")


def validation_loss(model: BnnModel, x: np.ndarray, y: np.ndarray, samples: int, seed, n_train: int) -> float:
    """Expected cross-entropy over ``samples`` weight draws from a fixed stream, plus KL / ``n_train``."""
    rng = np.random.default_rng(seed)
    nll = 0.0
    for _ in range(samples):
        nll += cross_entropy(forward(model, sample_weights(model, rng), x), y)
    return nll / samples + kl_mean_field(model) / n_train


def train(
    model: Optional[BnnModel],
    train_set: Dataset,
    validation: Dataset,
    window: int,
    config: TrainConfig,
    *,
    progress: bool = False,
) -> tuple[BnnModel, TrainingLog]:
    """Fit the variational posterior of a model predicting the class ``window`` slots ahead.

    Minibatch Adam on the negative ELBO, one pass over a fresh permutation of the training
    set per epoch. After each epoch the validation loss is computed; training stops once
    ``patience`` epochs (at least one) went by without improvement, and the parameters of
    the best epoch are restored.

    Parameters
    ----------
    model : BnnModel or None
        Starting point. When None, a model is initialised from ``config`` with the
        training set's schema.
    train_set, validation : Dataset
        Training and validation examples, sharing the same feature schema.
    window : int
        Prediction window, 1 to 3.
    config : TrainConfig
        Hyperparameters and seed.
    progress : bool, optional
        Show a progress bar over epochs.

    Returns
    -------
    tuple
        The trained model (a new object) and the :class:`TrainingLog`.

    Raises
    ------
    DataError
        If the training or validation set is empty, or the schemas differ.
    """
    window = check_window(window)
    if len(train_set) == 0:
        raise DataError("Cannot train on an empty training set")
    if len(validation) == 0:
        raise DataError("Cannot train without validation examples")
    if train_set.feature_schema != validation.feature_schema:
        raise DataError("Training and validation sets have different feature schemas")

    init_seq, shuffle_seq, mc_seq, val_seq = np.random.SeedSequence(config.seed).spawn(4)

    schema = train_set.feature_schema
    if model is None:
        model = BnnModel.initialise(
            schema.width,
            config.hidden,
            np.random.default_rng(init_seq),
            prior_sigma=config.prior_sigma,
            init_sigma=config.init_sigma,
            schema=schema,
            window=window,
        )
    else:
        model = model.copy()
        model.schema = schema
        model.window = window

    if model.input_width != schema.width:
        raise DataError(f"Model input width {model.input_width} does not match the schema width {schema.width}")

    x = encode_dataset(train_set)
    y = train_set.targets(window)
    x_val = encode_dataset(validation, schema)
    y_val = validation.targets(window)

    n = len(y)
    total_batches = math.ceil(n / config.batch_size)
    shuffle_rng = np.random.default_rng(shuffle_seq)
    mc_rng = np.random.default_rng(mc_seq)
    val_seed = int(val_seq.generate_state(1)[0])

    parameters = model.parameters()
    optimiser = Adam(parameters, config.learning_rate)

    best = validation_loss(model, x_val, y_val, config.mc_validation_samples, val_seed, n)
    best_parameters = [p.copy() for p in parameters]
    log = TrainingLog()
    wait = 0

    LOG.debug("PW%s: %s training examples, %s batches per epoch, initial val_loss=%.6f", window, n, total_batches, best)

    epochs = tqdm.tqdm(range(1, config.max_epochs + 1), desc=f"Training PW{window}", leave=False, disable=not progress)
    for epoch in epochs:
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            loss, grads = elbo_minus(model, (x[idx], y[idx]), config.mc_train_samples, total_batches, mc_rng)
            optimiser.step(parameters, grads)
            epoch_loss += loss / n

        val_loss = validation_loss(model, x_val, y_val, config.mc_validation_samples, val_seed, n)
        LOG.debug("PW%s epoch %s: train_loss=%.6f val_loss=%.6f", window, epoch, epoch_loss, val_loss)

        if val_loss < best:
            best = val_loss
            best_parameters = [p.copy() for p in parameters]
            log.best_epoch = epoch
            wait = 0
        else:
            wait += 1

        stop = wait >= max(config.patience, 1)
        log.records.append(EpochRecord(epoch, float(epoch_loss), float(val_loss), stop))
        if stop:
            LOG.info("PW%s: early stop at epoch %s, best epoch %s (val_loss=%.6f)", window, epoch, log.best_epoch, best)
            break
    else:
        LOG.info("PW%s: trained %s epochs, best epoch %s (val_loss=%.6f)", window, config.max_epochs, log.best_epoch, best)

    for p, b in zip(parameters, best_parameters):
        p[...] = b

    return model, log


def derive_seed(seed: int, *key: int) -> int:
    """An independent 32-bit seed for the stream ``key`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, *key]).generate_state(1)[0])
