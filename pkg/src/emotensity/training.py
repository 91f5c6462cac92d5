"""Mini-batch SGD on the negative-Pearson + L2 objective.

The loss is computed per batch, so its gradient couples all predictions in
the batch through the centering and normalization terms. Early stopping
watches the dev-set Pearson (computed on clipped predictions, eval mode)
and the returned parameters are the snapshot from the best step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .batching import EncodedTweet, encode_tweets, make_batch, predict_encoded
from .model import (
    WEIGHT_NAMES,
    ConfigError,
    ModelConfig,
    ModelParams,
    backward,
    forward,
    init_params,
)

VARIANCE_GUARD = 1e-12


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation, clamped to [-1, 1].

    A batch whose predictions (or golds) are constant has an undefined
    correlation; that happens routinely at initialization, so a variance
    below VARIANCE_GUARD yields 0 rather than an error.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("pearson needs at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    if np.var(x) < VARIANCE_GUARD or np.var(y) < VARIANCE_GUARD:
        return 0.0
    # sqrt of the product (not product of sqrts): then identical inputs give
    # sqrt((xc@xc)^2) == xc@xc and the ratio is exactly 1.0
    r = (xc @ yc) / np.sqrt((xc @ xc) * (yc @ yc))
    return float(min(1.0, max(-1.0, r)))


def l2_penalty(params: ModelParams, l2_lambda: float) -> float:
    """lambda * sum of squared entries over weight tensors (biases exempt)."""
    if l2_lambda == 0.0:
        return 0.0
    total = 0.0
    for name in WEIGHT_NAMES:
        if name in params:
            total += float(np.sum(params[name] ** 2))
    return l2_lambda * total


def loss(predictions: np.ndarray, golds: np.ndarray, params: ModelParams,
         l2_lambda: float) -> float:
    return -pearson(predictions, golds) + l2_penalty(params, l2_lambda)


def loss_gradient(predictions: np.ndarray, golds: np.ndarray) -> np.ndarray:
    """d(-pearson)/d predictions; zero under the variance guard."""
    p = np.asarray(predictions, dtype=np.float64)
    g = np.asarray(golds, dtype=np.float64)
    if p.shape != g.shape or p.ndim != 1:
        raise ValueError(f"shape mismatch: {p.shape} vs {g.shape}")
    if p.size < 2:
        raise ValueError("loss gradient needs at least 2 points")
    if np.var(p) < VARIANCE_GUARD or np.var(g) < VARIANCE_GUARD:
        return np.zeros_like(p)
    pc = p - p.mean()
    gc = g - g.mean()
    sp = np.linalg.norm(pc)
    sg = np.linalg.norm(gc)
    rho = (pc @ gc) / (sp * sg)
    return -(gc / (sp * sg) - rho * pc / (sp * sp))


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    lr0: float = 0.1
    decay_ratio: float = 0.9
    decay_every: int = 100
    l2_lambda: float = 0.0
    patience_steps: int = 1000
    eval_every: int = 50
    max_steps: int = 10000
    seed: int = 42

    def __post_init__(self):
        if self.batch_size < 2:
            raise ConfigError("batch_size must be >= 2 (correlation loss)")
        if self.lr0 <= 0.0:
            raise ConfigError("lr0 must be positive")
        if not (0.0 < self.decay_ratio <= 1.0):
            raise ConfigError("decay_ratio must be in (0, 1]")
        if self.decay_every < 1:
            raise ConfigError("decay_every must be >= 1")
        if self.l2_lambda < 0.0:
            raise ConfigError("l2_lambda must be non-negative")
        if self.eval_every < 1:
            raise ConfigError("eval_every must be >= 1")
        if self.patience_steps < self.eval_every:
            raise ConfigError("patience_steps must be >= eval_every")
        if self.max_steps < 0:
            raise ConfigError("max_steps must be non-negative")


def learning_rate(cfg: TrainConfig, step: int) -> float:
    """Exponentially decayed rate at a 1-based SGD step."""
    return cfg.lr0 * cfg.decay_ratio ** (step // cfg.decay_every)


@dataclass(frozen=True)
class HistoryRecord:
    step: int
    lr: float
    train_loss: float
    dev_pearson: float

    def line(self) -> str:
        return (f"{self.step}\t{self.lr:.10g}\t{self.train_loss:.10g}"
                f"\t{self.dev_pearson:.10g}")


@dataclass
class TrainHistory:
    records: list[HistoryRecord] = field(default_factory=list)
    best_step: int = 0
    best_val_pearson: float = math.nan

    def to_tsv(self) -> str:
        return "".join(rec.line() + "\n" for rec in self.records)


def clip01(x: np.ndarray) -> np.ndarray:
    return np.clip(x, 0.0, 1.0)


def dev_metric(params: ModelParams, dev: Sequence[EncodedTweet],
               cfg: ModelConfig, golds: np.ndarray) -> float:
    """The early-stopping criterion: Pearson on clipped eval-mode predictions."""
    return pearson(clip01(predict_encoded(params, dev, cfg)), golds)


def _require_labeled(encoded: Sequence[EncodedTweet], which: str) -> np.ndarray:
    for e in encoded:
        if e.gold is None:
            raise ConfigError(f"{which} tweet {e.id!r} has no gold intensity")
    return np.array([e.gold for e in encoded])


def train(model_cfg: ModelConfig, train_cfg: TrainConfig,
          train_set, dev_set, store,
          train_tags: Optional[dict] = None, dev_tags: Optional[dict] = None,
          init: Optional[ModelParams] = None,
          verbose: bool = False):
    """Run SGD until max_steps or patience runs out.

    train_set/dev_set are parsed tweets; optional tag dicts map tweet id to
    a tag sequence. Returns (best params, TrainHistory). The best params are
    the snapshot taken at best_step, so re-evaluating them reproduces
    best_val_pearson. With max_steps = 0 the initial params come back
    untouched with an empty history.
    """
    train_enc = encode_tweets(train_set, store, model_cfg, train_tags)
    dev_enc = encode_tweets(dev_set, store, model_cfg, dev_tags)
    if not train_enc or not dev_enc:
        raise ConfigError("train and dev sets must be non-empty")
    _require_labeled(train_enc, "train")
    dev_golds = _require_labeled(dev_enc, "dev")
    if len(dev_enc) < 2 or np.var(dev_golds) < VARIANCE_GUARD:
        raise ConfigError("dev set needs at least 2 distinct gold intensities")
    if len(train_enc) < train_cfg.batch_size:
        raise ConfigError(
            f"train set ({len(train_enc)}) smaller than batch_size "
            f"({train_cfg.batch_size}); no full batch can form")

    params = init.copy() if init is not None else init_params(model_cfg)
    best_params = params.copy()
    history = TrainHistory()
    best_val = -math.inf
    rng = np.random.default_rng(train_cfg.seed)
    lam = train_cfg.l2_lambda
    bs = train_cfg.batch_size
    step = 0
    stop = train_cfg.max_steps == 0

    while not stop:
        perm = rng.permutation(len(train_enc))
        for k in range(len(train_enc) // bs):  # partial tail batch dropped
            idx = perm[k * bs:(k + 1) * bs]
            batch = make_batch([train_enc[i] for i in idx], model_cfg)
            step += 1
            lr = learning_rate(train_cfg, step)

            trace = forward(batch, params, model_cfg, train_mode=True, rng=rng)
            batch_loss = loss(trace.y_hat, batch.golds, params, lam)
            d_y = loss_gradient(trace.y_hat, batch.golds)
            grads, _ = backward(trace, params, model_cfg, d_y)
            for name in params.names():
                g = grads[name]
                if lam and name in WEIGHT_NAMES:
                    g = g + (2.0 * lam) * params[name]
                params.tensors[name] -= lr * g

            if step % train_cfg.eval_every == 0:
                dev_p = dev_metric(params, dev_enc, model_cfg, dev_golds)
                rec = HistoryRecord(step, lr, batch_loss, dev_p)
                history.records.append(rec)
                if verbose:
                    print(rec.line())
                if dev_p > best_val:
                    best_val = dev_p
                    history.best_step = step
                    history.best_val_pearson = dev_p
                    best_params = params.copy()
                if step - history.best_step >= train_cfg.patience_steps:
                    stop = True
                    break
            if step >= train_cfg.max_steps:
                stop = True
                break

    return best_params, history
