"""Mini-batch training of the S2S / S2M / SM2SM models.

A window of ``W`` consecutive 20 ms rows gives ``W - 1`` supervised steps:
input columns of rows ``0..W-2`` and output columns of rows ``1..W-1``, all in
normalized space.
"""

from __future__ import annotations

import hashlib
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DimensionMismatch, EmptyDataset, UnsupportedVariant
from . import lstm
from .adam import AdamState, adam_step, clip_by_global_norm
from .normalizer import Normalizer, fit_normalizer
from .variants import ModelVariant, get_variant

ROW_DIMS = 18


@dataclass(frozen=True)
class ModelConfig:
    variant: str = "SM2SM"
    layers: int = 6
    units: int = 50
    window: int = 150
    batch: int = 100
    ar: bool = False
    ar_period: float = 10       # math.inf: never re-anchor after the first step
    stride_ms: int = 20
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 100
    batches_per_epoch: int = 1
    clip_norm: float | None = None   # None: 1.0 when free running, off otherwise; 0: off
    target_loss: float = 0.0         # stop early once an epoch's loss falls below this
    seed: int = 0

    def __post_init__(self):
        v = get_variant(self.variant)
        object.__setattr__(self, "variant", v.name)
        if self.layers < 1 or self.units < 1:
            raise ValueError("layers and units must be at least 1")
        if self.window < 2:
            raise ValueError("window must be at least 2 rows")
        if not self.ar_period >= 1:
            raise ValueError("ar_period must be at least 1")
        if self.batch < 1 or self.epochs < 0 or self.batches_per_epoch < 1:
            raise ValueError("batch, epochs and batches_per_epoch must be positive")
        if self.ar and not v.supports_ar:
            raise UnsupportedVariant(f"{v.name} cannot be trained autoregressively: "
                                     "its outputs are not valid inputs")

    @property
    def model_variant(self) -> ModelVariant:
        return get_variant(self.variant)

    @property
    def regime_period(self):
        """``None`` for teacher forcing, else the re-anchoring period."""
        return self.ar_period if self.ar else None

    @property
    def effective_clip(self) -> float | None:
        if self.clip_norm is None:
            return 1.0 if self.ar else None
        return self.clip_norm or None

    @property
    def label(self) -> str:
        return f"{self.variant}-{'AR' if self.ar else 'w/o-AR'}"

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SequenceModel:
    config: ModelConfig
    weights: dict
    normalizer: Normalizer

    @property
    def variant(self) -> ModelVariant:
        return self.config.model_variant

    def initial_state(self) -> list:
        return lstm.zero_state(self.weights)

    def step(self, x01, state):
        return lstm.model_step(self.weights, x01, state)

    def weights_hash(self) -> str:
        return weights_hash(self.weights)


@dataclass
class TrainReport:
    losses: list = field(default_factory=list)
    wall_time: float = 0.0
    weights_hash: str = ""
    config: dict = field(default_factory=dict)


def weights_hash(weights: dict) -> str:
    h = hashlib.sha256()
    for name, w in weights.items():
        h.update(name.encode())
        h.update(np.ascontiguousarray(w, dtype="<f8").tobytes())
    return h.hexdigest()


def as_rows(dataset) -> list[np.ndarray]:
    rows = [np.asarray(getattr(s, "rows", s), dtype=float) for s in dataset]
    for r in rows:
        if r.ndim != 2 or r.shape[1] != ROW_DIMS:
            raise DimensionMismatch(f"training rows must be (n, {ROW_DIMS}), got {r.shape}")
    return rows


def make_windows(rows01: list[np.ndarray], picks, window: int, variant: ModelVariant):
    """Stack input/target windows for ``picks`` = [(sequence, start), ...]."""
    ins = np.stack([rows01[s][k:k + window - 1][:, variant.inputs] for s, k in picks])
    outs = np.stack([rows01[s][k + 1:k + window][:, variant.outputs] for s, k in picks])
    return ins, outs


def window_starts(rows: list[np.ndarray], window: int) -> list[tuple[int, int]]:
    return [(s, k) for s, r in enumerate(rows) for k in range(r.shape[0] - window + 1)]


def train(dataset, config: ModelConfig, normalizer: Normalizer | None = None,
          log=None) -> tuple[SequenceModel, TrainReport]:
    """Fit a model; every random draw comes from ``config.seed``.

    Each epoch draws ``batch`` windows uniformly over all valid starts of all
    sequences, and takes one Adam step per batch on the batch-mean loss.
    """
    rows = as_rows(dataset)
    if not rows:
        raise EmptyDataset("no training sequences")
    if normalizer is None:
        normalizer = fit_normalizer(rows)
    rows01 = [normalizer.normalize(r) for r in rows]
    starts = window_starts(rows01, config.window)
    if not starts:
        raise EmptyDataset(f"no sequence has {config.window} rows for one window")
    variant = config.model_variant
    rng = np.random.default_rng(config.seed)
    weights = lstm.init_weights(variant.n_in, variant.n_out, config.layers, config.units, rng)
    opt = AdamState()
    report = TrainReport(config=config.to_dict())
    clip = config.effective_clip
    t0 = time.perf_counter()
    for epoch in range(config.epochs):
        epoch_loss = 0.0
        for _ in range(config.batches_per_epoch):
            idx = rng.integers(0, len(starts), size=config.batch)
            X, Y = make_windows(rows01, [starts[i] for i in idx], config.window, variant)
            loss, grads = lstm.bptt_gradients(weights, X, Y, config.regime_period)
            if clip is not None:
                grads, _ = clip_by_global_norm(grads, clip)
            weights = adam_step(weights, grads, opt, config.lr, config.beta1,
                                config.beta2, config.eps)
            epoch_loss += loss
        epoch_loss /= config.batches_per_epoch
        report.losses.append(epoch_loss)
        if log is not None:
            log(epoch, epoch_loss)
        if config.target_loss and epoch_loss < config.target_loss:
            break
    report.wall_time = time.perf_counter() - t0
    report.weights_hash = weights_hash(weights)
    return SequenceModel(config, weights, normalizer), report


def evaluate_windows(model: SequenceModel, dataset, ar_period=None) -> float:
    """Mean loss over every full window of ``dataset`` under the given regime."""
    rows01 = [model.normalizer.normalize(r) for r in as_rows(dataset)]
    starts = window_starts(rows01, model.config.window)
    if not starts:
        raise EmptyDataset("no complete window in the evaluation data")
    X, Y = make_windows(rows01, starts, model.config.window, model.variant)
    preds, _ = lstm.forward(model.weights, X, ar_period)
    return lstm.loss_mse(preds, Y)


def epochs_to_reach(losses, threshold: float) -> float:
    for i, loss in enumerate(losses):
        if loss < threshold:
            return i + 1
    return math.inf
