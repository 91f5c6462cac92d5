"""Encoding tweets into padded model inputs.

encode_tweets turns parsed tweets into per-tweet arrays once (embedding
lookups and binary features); make_batch pads a subset into the dense
(B, T, ...) layout the model consumes. Padding is zeros plus a mask and is
provably inert: the model never reads values outside the mask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .features import featurize_tweet
from .model import MAX_TOKENS, ModelConfig, ModelParams, forward


@dataclass(frozen=True)
class EncodedTweet:
    id: str
    tokens: tuple[str, ...]        # surfaces, truncated to MAX_TOKENS
    emb: np.ndarray                # (n, embed_dim)
    feats: np.ndarray              # (n, feature_dim)
    gold: Optional[float]


@dataclass(frozen=True)
class Batch:
    ids: tuple[str, ...]
    lengths: np.ndarray            # (B,)
    emb: np.ndarray                # (B, T, embed_dim)
    feats: np.ndarray              # (B, T, feature_dim)
    mask: np.ndarray               # (B, T) 1.0 where valid
    golds: np.ndarray              # (B,) NaN where unlabeled


def encode_tweet(tweet, store, cfg: ModelConfig,
                 tags: Optional[Sequence[str]] = None) -> EncodedTweet:
    featurized = featurize_tweet(tweet, tags)
    if not featurized:
        raise ValueError(f"tweet {tweet.id!r} has no tokens")
    featurized = featurized[:MAX_TOKENS]
    emb = np.stack([store.lookup(tok.surface) for tok, _ in featurized])
    if cfg.feature_dim:
        feats = np.stack([tf.as_array() for _, tf in featurized])
    else:
        feats = np.zeros((len(featurized), 0))
    return EncodedTweet(
        id=tweet.id,
        tokens=tuple(tok.surface for tok, _ in featurized),
        emb=emb,
        feats=feats,
        gold=tweet.intensity,
    )


def encode_tweets(tweets, store, cfg: ModelConfig,
                  tags_by_id: Optional[dict] = None) -> list[EncodedTweet]:
    tags_by_id = tags_by_id or {}
    return [encode_tweet(t, store, cfg, tags_by_id.get(t.id)) for t in tweets]


def make_batch(encoded: Sequence[EncodedTweet], cfg: ModelConfig) -> Batch:
    if not encoded:
        raise ValueError("empty batch")
    lengths = np.array([e.emb.shape[0] for e in encoded], dtype=np.intp)
    T = int(lengths.max())
    B = len(encoded)
    emb = np.zeros((B, T, cfg.embed_dim))
    feats = np.zeros((B, T, cfg.feature_dim))
    mask = np.zeros((B, T))
    golds = np.full(B, np.nan)
    for b, e in enumerate(encoded):
        n = lengths[b]
        emb[b, :n] = e.emb
        feats[b, :n] = e.feats
        mask[b, :n] = 1.0
        if e.gold is not None:
            golds[b] = e.gold
    return Batch(
        ids=tuple(e.id for e in encoded),
        lengths=lengths, emb=emb, feats=feats, mask=mask, golds=golds,
    )


def predict_encoded(params: ModelParams, encoded: Sequence[EncodedTweet],
                    cfg: ModelConfig, batch_size: int = 256) -> np.ndarray:
    """Raw (unclipped) predictions over a dataset, eval mode, input order."""
    out = np.empty(len(encoded))
    for lo in range(0, len(encoded), batch_size):
        chunk = encoded[lo:lo + batch_size]
        trace = forward(make_batch(chunk, cfg), params, cfg, train_mode=False)
        out[lo:lo + len(chunk)] = trace.y_hat
    return out
