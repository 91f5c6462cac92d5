"""Shared test fixtures: high-precision metric oracles, finite-difference
gradient utilities, and synthetic corpus builders.

The synthetic corpora pair an all-OOV embedding store with gold intensities
that are exact functions of the binary features, so model behavior can be
predicted in closed form.
"""

import mpmath
import numpy as np
import pytest

from emotensity.batching import Batch, encode_tweets, make_batch
from emotensity.data import Tweet
from emotensity.embeddings import EmbeddingStore
from emotensity.model import (
    ModelConfig,
    ModelParams,
    backward,
    forward,
    init_params,
    param_shapes,
)

mpmath.mp.dps = 50


# ---------------------------------------------------------------- oracles

def mp_pearson(x, y) -> float:
    """Pearson correlation in 50-digit arithmetic."""
    n = len(x)
    xs = [mpmath.mpf(float(v)) for v in x]  # binary64 -> mpf is exact
    ys = [mpmath.mpf(float(v)) for v in y]
    mx = mpmath.fsum(xs) / n
    my = mpmath.fsum(ys) / n
    xc = [v - mx for v in xs]
    yc = [v - my for v in ys]
    num = mpmath.fsum(a * b for a, b in zip(xc, yc))
    den = mpmath.sqrt(mpmath.fsum(a * a for a in xc)) * \
        mpmath.sqrt(mpmath.fsum(b * b for b in yc))
    return float(num / den)


def naive_ranks(x) -> np.ndarray:
    """Quadratic-time average ranks: for each value, count smaller values
    and average over the positions of its ties."""
    x = list(x)
    out = np.empty(len(x))
    for i, v in enumerate(x):
        smaller = sum(1 for w in x if w < v)
        ties = sum(1 for w in x if w == v)
        out[i] = smaller + (ties + 1) / 2.0
    return out


def mp_spearman(x, y) -> float:
    return mp_pearson(naive_ranks(x), naive_ranks(y))


# ------------------------------------------------- gradient check helpers

def random_batch(cfg: ModelConfig, lengths, rng, ids=None) -> Batch:
    lengths = np.asarray(lengths, dtype=np.intp)
    B, T = len(lengths), int(lengths.max())
    emb = np.zeros((B, T, cfg.embed_dim))
    feats = np.zeros((B, T, cfg.feature_dim))
    mask = np.zeros((B, T))
    for b, n in enumerate(lengths):
        emb[b, :n] = rng.normal(size=(n, cfg.embed_dim))
        feats[b, :n] = (rng.random((n, cfg.feature_dim)) < 0.4)
        mask[b, :n] = 1.0
    if ids is None:
        ids = tuple(f"t{b}" for b in range(B))
    return Batch(ids=ids, lengths=lengths, emb=emb, feats=feats, mask=mask,
                 golds=rng.random(B))


def fd_param_gradient(batch, params: ModelParams, cfg: ModelConfig,
                      d_y: np.ndarray, name: str, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of sum(d_y * y_hat) w.r.t. one tensor."""
    base = params[name]
    grad = np.zeros_like(base)
    flat_g = grad.reshape(-1)
    flat_p = base.reshape(-1)
    for i in range(flat_p.size):
        orig = flat_p[i]
        flat_p[i] = orig + step
        up = float(d_y @ forward(batch, params, cfg).y_hat)
        flat_p[i] = orig - step
        dn = float(d_y @ forward(batch, params, cfg).y_hat)
        flat_p[i] = orig
        flat_g[i] = (up - dn) / (2.0 * step)
    return grad


def max_rel_error(analytic: np.ndarray, numeric: np.ndarray,
                  floor: float = 1e-4) -> float:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def assert_gradcheck(cfg: ModelConfig, lengths, seed: int,
                     tol: float = 1e-4) -> float:
    """Every parameter coordinate vs central differences; returns worst error."""
    rng = np.random.default_rng(seed)
    batch = random_batch(cfg, lengths, rng)
    params = init_params(cfg, rng)
    d_y = rng.normal(size=len(lengths))
    trace = forward(batch, params, cfg)
    grads, _ = backward(trace, params, cfg, d_y)
    worst = 0.0
    for name in params.names():
        fd = fd_param_gradient(batch, params, cfg, d_y, name)
        err = max_rel_error(grads[name], fd)
        assert err < tol, f"{name}: rel err {err:.3g} (cfg {cfg})"
        worst = max(worst, err)
    return worst


# ------------------------------------------------------ synthetic corpora

PLAIN_WORDS = ("calm", "day", "walk", "rain", "tree", "song",
               "note", "hill", "door", "lamp", "path", "wind")
ELONG_WORDS = ("sooo", "yaaay", "weeee", "noooo", "heyyy",
               "loool", "woooow", "pffff")


def elongation_corpus(n: int, seed: int, emotion: str = "joy",
                      prefix: str = "syn") -> list[Tweet]:
    """Tweets whose gold intensity is exactly the fraction of elongated
    tokens. Token count 4..8, elongated count 0..all."""
    rng = np.random.default_rng(seed)
    tweets = []
    for i in range(n):
        length = int(rng.integers(4, 9))
        n_elong = int(rng.integers(0, length + 1))
        words = [str(rng.choice(ELONG_WORDS)) for _ in range(n_elong)]
        words += [str(rng.choice(PLAIN_WORDS)) for _ in range(length - n_elong)]
        rng.shuffle(words)
        tweets.append(Tweet(id=f"{prefix}-{i:04d}", text=" ".join(words),
                            emotion=emotion, intensity=n_elong / length))
    return tweets


def zero_store(dim: int) -> EmbeddingStore:
    """Every token is OOV: embeddings carry no signal at all."""
    return EmbeddingStore(dim, {}, source_path="all-oov-synthetic")


def oracle_params(cfg: ModelConfig) -> ModelParams:
    """Closed-form predictor of the elongation fraction.

    Zero LSTM weights keep every hidden state at zero; zero attention
    weights make alpha uniform, so t is the mean augmented state and its
    last coordinate is the fraction of elongated tokens. A one-hot output
    map reads exactly that coordinate.
    """
    assert cfg.feature_dim == 9
    tensors = {name: np.zeros(shape) for name, shape in param_shapes(cfg).items()}
    tensors["w_s"][-1] = 1.0
    return ModelParams(tensors)


def encode_corpus(tweets, store, cfg):
    return encode_tweets(tweets, store, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_embeddings_file(path, table: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for word, vec in table.items():
            fh.write(word + " " + " ".join(repr(float(v)) for v in vec) + "\n")
