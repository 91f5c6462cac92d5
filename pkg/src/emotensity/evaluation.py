"""Shared-task metrics, the feature-ablation experiment, and attention export.

Metrics are computed on predictions clipped to [0, 1]: submissions are
scored in-range, so reports reflect what would be submitted. The training
loss never sees clipping.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .batching import encode_tweets, make_batch, predict_encoded
from .model import ModelConfig, ModelParams, ablated, forward
from .training import TrainConfig, clip01, pearson, train

GE05_THRESHOLD = 0.5


def average_ranks(x) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    x = np.asarray(x, dtype=np.float64)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(x.size)
    i = 0
    while i < x.size:
        j = i
        while j + 1 < x.size and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> float:
    """Pearson correlation of average ranks."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if x.size < 2:
        raise ValueError("spearman needs at least 2 points")
    return pearson(average_ranks(x), average_ranks(y))


@dataclass(frozen=True)
class EvalReport:
    pearson_all: float
    spearman_all: float
    pearson_ge05: Optional[float]   # None when the subset has < 2 examples
    spearman_ge05: Optional[float]
    n_all: int
    n_ge05: int

    def to_text(self) -> str:
        def fmt(v):
            return "NA" if v is None else f"{v:.10g}"
        lines = [
            f"pearson_all\t{fmt(self.pearson_all)}",
            f"spearman_all\t{fmt(self.spearman_all)}",
            f"pearson_ge05\t{fmt(self.pearson_ge05)}",
            f"spearman_ge05\t{fmt(self.spearman_ge05)}",
            f"n_all\t{self.n_all}",
            f"n_ge05\t{self.n_ge05}",
        ]
        return "".join(line + "\n" for line in lines)


def evaluate(params: ModelParams, tweets, cfg: ModelConfig, store,
             tags: Optional[dict] = None) -> EvalReport:
    """All four metrics over the labeled part of a dataset.

    The >= 0.5 subset is selected on gold intensity; its metrics are None
    (reported as NA) when fewer than 2 examples qualify.
    """
    encoded = [e for e in encode_tweets(tweets, store, cfg, tags)
               if e.gold is not None]
    if len(encoded) < 2:
        raise ValueError("evaluation needs at least 2 labeled examples")
    preds = clip01(predict_encoded(params, encoded, cfg))
    golds = np.array([e.gold for e in encoded])
    subset = golds >= GE05_THRESHOLD
    n_ge05 = int(subset.sum())
    if n_ge05 >= 2:
        p05 = pearson(preds[subset], golds[subset])
        s05 = spearman(preds[subset], golds[subset])
    else:
        p05 = s05 = None
    return EvalReport(
        pearson_all=pearson(preds, golds),
        spearman_all=spearman(preds, golds),
        pearson_ge05=p05,
        spearman_ge05=s05,
        n_all=len(encoded),
        n_ge05=n_ge05,
    )


@dataclass(frozen=True)
class AblationResult:
    with_features: float     # best dev Pearson, full model
    without_features: float  # best dev Pearson, feature_dim = 0
    difference: float


def ablation(model_cfg: ModelConfig, train_cfg: TrainConfig,
             train_set, dev_set, store,
             train_tags: Optional[dict] = None,
             dev_tags: Optional[dict] = None) -> AblationResult:
    """Train twice with identical seeds, with and without the binary features.

    The ablated run drops the feature dimensions entirely (smaller augmented
    state), it does not just zero them.
    """
    _, full = train(model_cfg, train_cfg, train_set, dev_set, store,
                    train_tags, dev_tags)
    _, bare = train(ablated(model_cfg), train_cfg, train_set, dev_set, store,
                    train_tags, dev_tags)
    return AblationResult(
        with_features=full.best_val_pearson,
        without_features=bare.best_val_pearson,
        difference=full.best_val_pearson - bare.best_val_pearson,
    )


@dataclass(frozen=True)
class AttentionTrace:
    id: str
    tokens: tuple[str, ...]
    weights: tuple[float, ...]  # padding excluded; sums to 1
    y_hat: float                # clipped, as reported
    gold: Optional[float]


def attention_traces(params: ModelParams, tweets, cfg: ModelConfig, store,
                     tags: Optional[dict] = None,
                     batch_size: int = 256) -> list[AttentionTrace]:
    encoded = encode_tweets(tweets, store, cfg, tags)
    traces = []
    for lo in range(0, len(encoded), batch_size):
        chunk = encoded[lo:lo + batch_size]
        fwd = forward(make_batch(chunk, cfg), params, cfg, train_mode=False)
        for b, e in enumerate(chunk):
            n = int(fwd.lengths[b])
            traces.append(AttentionTrace(
                id=e.id,
                tokens=e.tokens,
                weights=tuple(float(w) for w in fwd.alpha[b, :n]),
                y_hat=float(clip01(fwd.y_hat[b:b + 1])[0]),
                gold=e.gold,
            ))
    return traces


def export_attention(params: ModelParams, tweets, cfg: ModelConfig, store,
                     path, tags: Optional[dict] = None) -> None:
    """One JSON object per line: id, tokens, weights, y_hat, gold."""
    traces = attention_traces(params, tweets, cfg, store, tags)
    with open(path, "w", encoding="utf-8") as fh:
        for tr in traces:
            fh.write(json.dumps({
                "id": tr.id,
                "tokens": list(tr.tokens),
                "weights": list(tr.weights),
                "y_hat": tr.y_hat,
                "gold": tr.gold,
            }, ensure_ascii=False) + "\n")


def export_attention_csv(traces: Sequence[AttentionTrace], path) -> None:
    """Plot-data CSV: per tweet a `# id y_hat gold` comment, then
    token,weight rows, then a blank line. Gnuplot and comment-aware CSV
    readers take this directly."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for tr in traces:
            gold = "NA" if tr.gold is None else f"{tr.gold:.10g}"
            fh.write(f"# {tr.id} {tr.y_hat:.10g} {gold}\n")
            for token, weight in zip(tr.tokens, tr.weights):
                writer.writerow([token, f"{weight:.10g}"])
            fh.write("\n")
