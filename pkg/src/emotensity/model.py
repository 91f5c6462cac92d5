"""Differentiable forward pipeline and its exact reverse-mode gradients.

Per tweet: embedded tokens are stacked into context windows, run through a
(bi)directional LSTM, the hidden states are concatenated with the binary
token features, a global attention over the augmented states (scored
against the last valid state) compresses the sequence into one vector, and
a linear head maps that to the intensity prediction.

All arrays are float64. Sequences are padded to the batch maximum (capped
at MAX_TOKENS) and masked; padded positions never influence any output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .kernels import cell_sweep_backward, cell_sweep_forward

MAX_TOKENS = 50  # sequences are truncated to this many leading tokens


class ConfigError(ValueError):
    """Inconsistent model or training configuration."""


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int
    window_radius: int = 1       # window covers 2*radius + 1 positions
    hidden_size: int = 100       # per direction
    bidirectional: bool = True
    feature_dim: int = 9         # 0 drops the binary features entirely
    dropout_keep: float = 1.0
    seed: int = 42

    def __post_init__(self):
        if self.embed_dim < 1:
            raise ConfigError("embed_dim must be positive")
        if self.window_radius < 0:
            raise ConfigError("window_radius must be non-negative")
        if self.hidden_size < 1:
            raise ConfigError("hidden_size must be positive")
        if self.feature_dim < 0:
            raise ConfigError("feature_dim must be non-negative")
        if not (0.0 < self.dropout_keep <= 1.0):
            raise ConfigError("dropout_keep must be in (0, 1]")

    @property
    def window_dim(self) -> int:
        return (2 * self.window_radius + 1) * self.embed_dim

    @property
    def lstm_out_dim(self) -> int:
        return self.hidden_size * (2 if self.bidirectional else 1)

    @property
    def aug_dim(self) -> int:
        # attention hidden size matches this by construction
        return self.lstm_out_dim + self.feature_dim


# tensors carrying an L2 penalty; gate and output biases are exempt
WEIGHT_NAMES = ("wx_f", "wh_f", "wx_b", "wh_b", "w_a", "v", "w_s")
BIAS_NAMES = ("b_f", "b_b", "b_s")


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Name -> shape map for every trainable tensor of a config."""
    h = cfg.hidden_size
    d = cfg.aug_dim
    shapes = {
        "wx_f": (4 * h, cfg.window_dim),
        "wh_f": (4 * h, h),
        "b_f": (4 * h,),
    }
    if cfg.bidirectional:
        shapes.update({
            "wx_b": (4 * h, cfg.window_dim),
            "wh_b": (4 * h, h),
            "b_b": (4 * h,),
        })
    shapes.update({
        "w_a": (d, 2 * d),
        "v": (d,),
        "w_s": (d,),
        "b_s": (1,),
    })
    return shapes


class ModelParams:
    """All trainable tensors, keyed by name.

    LSTM gate order along the stacked 4H axis: input, forget, cell
    candidate, output.
    """

    def __init__(self, tensors: dict[str, np.ndarray]):
        self.tensors = tensors

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    def names(self) -> tuple[str, ...]:
        return tuple(self.tensors)

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.tensors.items()})

    def count(self) -> int:
        return sum(v.size for v in self.tensors.values())

    def allclose(self, other: "ModelParams") -> bool:
        return self.names() == other.names() and all(
            np.array_equal(self.tensors[k], other.tensors[k]) for k in self.tensors
        )


def init_params(cfg: ModelConfig, rng: Optional[np.random.Generator] = None) -> ModelParams:
    """Glorot-uniform weights, zero biases except the forget gate at 1.0."""
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    h = cfg.hidden_size
    tensors = {}
    for name, shape in param_shapes(cfg).items():
        if name in BIAS_NAMES:
            arr = np.zeros(shape)
            if name in ("b_f", "b_b"):
                arr[h:2 * h] = 1.0  # forget-gate bias
        else:
            if len(shape) == 2:
                fan_in, fan_out = shape[1], shape[0]
            else:
                fan_in, fan_out = shape[0], 1
            r = np.sqrt(6.0 / (fan_in + fan_out))
            arr = rng.uniform(-r, r, size=shape)
        tensors[name] = arr
    return ModelParams(tensors)


def zero_grads(params: ModelParams) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.tensors.items()}


def build_windows(embedded: np.ndarray, radius: int) -> np.ndarray:
    """Stack each position with its +-radius neighbours.

    embedded: (n, e). Output (n, (2*radius+1)*e); out-of-range neighbours
    contribute zeros. radius=0 returns a copy of the input.
    """
    n, e = embedded.shape
    width = 2 * radius + 1
    out = np.zeros((n, width * e))
    for k in range(-radius, radius + 1):
        if abs(k) >= n:  # offset falls entirely outside the sequence
            continue
        slot = slice((k + radius) * e, (k + radius + 1) * e)
        src_lo, src_hi = max(0, k), min(n, n + k)
        dst_lo, dst_hi = max(0, -k), min(n, n - k)
        out[dst_lo:dst_hi, slot] = embedded[src_lo:src_hi]
    return out


def window_grad_to_embedding(d_windows: np.ndarray, radius: int, embed_dim: int) -> np.ndarray:
    """Adjoint of build_windows: scatter window-slot gradients back."""
    n = d_windows.shape[0]
    d_emb = np.zeros((n, embed_dim))
    for k in range(-radius, radius + 1):
        if abs(k) >= n:
            continue
        slot = slice((k + radius) * embed_dim, (k + radius + 1) * embed_dim)
        emb_lo, emb_hi = max(0, k), min(n, n + k)
        win_lo, win_hi = max(0, -k), min(n, n - k)
        d_emb[emb_lo:emb_hi] += d_windows[win_lo:win_hi, slot]
    return d_emb


def augment(hidden: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Concatenate hidden states with binary feature vectors, per position."""
    if hidden.shape[0] != features.shape[0]:
        raise ValueError(
            f"length mismatch: {hidden.shape[0]} hidden states, "
            f"{features.shape[0]} feature vectors"
        )
    return np.concatenate([hidden, features], axis=-1)


def _attention_valid(augmented: np.ndarray, w_a: np.ndarray, v: np.ndarray):
    """attention() over valid states only; also returns the tanh cache
    needed by backward."""
    query = augmented[-1]
    paired = np.concatenate(
        [np.broadcast_to(query, augmented.shape), augmented], axis=1
    )  # (n, 2D)
    act = np.tanh(paired @ w_a.T)  # (n, D)
    logits = act @ v
    shifted = np.exp(logits - logits.max())
    alpha = shifted / shifted.sum()
    t = alpha @ augmented
    return alpha, t, act, logits


def attention(augmented: np.ndarray, w_a: np.ndarray, v: np.ndarray,
              mask: Optional[np.ndarray] = None):
    """Score each augmented state against the last valid one and average.

    augmented: (n, D); mask, when given, marks the valid positions (invalid
    ones get weight exactly 0 and never touch the sentence vector).
    Returns (alpha (n,), t (D,)).
    """
    if mask is None:
        if augmented.shape[0] < 1:
            raise ValueError("attention needs at least one valid position")
        alpha, t, _, _ = _attention_valid(augmented, w_a, v)
        return alpha, t
    valid = np.flatnonzero(mask)
    if valid.size == 0:
        raise ValueError("attention needs at least one valid position")
    sub_alpha, t, _, _ = _attention_valid(augmented[valid], w_a, v)
    alpha = np.zeros(augmented.shape[0])
    alpha[valid] = sub_alpha
    return alpha, t


def predict(t: np.ndarray, w_s: np.ndarray, bias: float) -> float:
    """Affine map from sentence vector to raw intensity (no squashing)."""
    return float(t @ w_s + bias)


@dataclass
class ForwardTrace:
    """Every intermediate of a batched forward pass, padded and masked.

    Padded positions hold zeros in all per-position arrays; alpha is exactly
    zero there and sums to one over each valid region.
    """
    lengths: np.ndarray            # (B,) valid token counts
    mask: np.ndarray               # (B, T) 1.0 on valid positions
    windows: np.ndarray            # (B, T, window_dim)
    lstm_caches: dict              # per direction: i, f, g, o, c, h (B, T, H), aligned
    h_pre: np.ndarray              # (B, T, lstm_out_dim) before dropout
    drop_mask: Optional[np.ndarray]  # (B, T, lstm_out_dim) or None in eval mode
    h: np.ndarray                  # (B, T, lstm_out_dim) after dropout
    augmented: np.ndarray          # (B, T, aug_dim)
    att_act: np.ndarray            # (B, T, aug_dim) tanh pre-logit activations
    logits: np.ndarray             # (B, T), zeros on padding
    alpha: np.ndarray              # (B, T)
    t_vec: np.ndarray              # (B, aug_dim)
    y_hat: np.ndarray              # (B,)
    train_mode: bool


def forward(batch, params: ModelParams, cfg: ModelConfig, train_mode: bool = False,
            rng: Optional[np.random.Generator] = None) -> ForwardTrace:
    """Run the full pipeline over a prepared Batch (see batching.make_batch)."""
    if train_mode and cfg.dropout_keep < 1.0 and rng is None:
        raise ValueError("train_mode with dropout needs an RNG")
    emb, feats, mask, lengths = batch.emb, batch.feats, batch.mask, batch.lengths
    B, T, _ = emb.shape
    if B < 1:
        raise ValueError("empty batch")
    for b in range(B):
        if lengths[b] < 1:
            raise ValueError(f"tweet {batch.ids[b]!r} has no tokens")

    h_size = cfg.hidden_size
    windows = np.zeros((B, T, cfg.window_dim))
    for b in range(B):
        n = lengths[b]
        windows[b, :n] = build_windows(emb[b, :n], cfg.window_radius)

    directions = ["f", "b"] if cfg.bidirectional else ["f"]
    caches = {}
    for d in directions:
        zx = windows.reshape(B * T, -1) @ params[f"wx_{d}"].T + params[f"b_{d}"]
        zx = zx.reshape(B, T, 4 * h_size)
        cache = {k: np.zeros((B, T, h_size)) for k in "ifgoch"}
        for b in range(B):
            n = lengths[b]
            zx_seq = zx[b, :n] if d == "f" else zx[b, :n][::-1]
            h, i, f, g, o, c = cell_sweep_forward(
                np.ascontiguousarray(zx_seq), params[f"wh_{d}"]
            )
            if d == "b":  # store aligned to token order
                h, i, f, g, o, c = (a[::-1] for a in (h, i, f, g, o, c))
            for k, a in zip("ifgoch", (i, f, g, o, c, h)):
                cache[k][b, :n] = a
        caches[d] = cache

    if cfg.bidirectional:
        h_pre = np.concatenate([caches["f"]["h"], caches["b"]["h"]], axis=2)
    else:
        h_pre = caches["f"]["h"].copy()

    if train_mode and rng is not None:
        keep = cfg.dropout_keep
        drop_mask = (rng.random(h_pre.shape) < keep) / keep
        h = h_pre * drop_mask
    else:
        drop_mask = None
        h = h_pre

    augmented = augment(h.reshape(B * T, -1), feats.reshape(B * T, -1))
    augmented = augmented.reshape(B, T, cfg.aug_dim)

    att_act = np.zeros((B, T, cfg.aug_dim))
    logits = np.zeros((B, T))
    alpha = np.zeros((B, T))
    t_vec = np.zeros((B, cfg.aug_dim))
    y_hat = np.zeros(B)
    for b in range(B):
        n = lengths[b]
        a, t, act, u = _attention_valid(augmented[b, :n], params["w_a"], params["v"])
        alpha[b, :n] = a
        att_act[b, :n] = act
        logits[b, :n] = u
        t_vec[b] = t
        y_hat[b] = predict(t, params["w_s"], params["b_s"][0])

    return ForwardTrace(
        lengths=lengths, mask=mask, windows=windows, lstm_caches=caches,
        h_pre=h_pre, drop_mask=drop_mask, h=h, augmented=augmented,
        att_act=att_act, logits=logits, alpha=alpha, t_vec=t_vec, y_hat=y_hat,
        train_mode=train_mode,
    )


def backward(trace: ForwardTrace, params: ModelParams, cfg: ModelConfig,
             d_y: np.ndarray):
    """Exact gradients of sum_b d_y[b] * y_hat[b] w.r.t. every parameter.

    Returns (grads, d_emb): grads maps each parameter name to its gradient;
    d_emb (B, T, embed_dim) is the gradient w.r.t. the embedded inputs
    (zero on padding). Masked positions contribute nothing.
    """
    B, T = trace.alpha.shape
    D = cfg.aug_dim
    h_size = cfg.hidden_size
    grads = zero_grads(params)
    d_aug = np.zeros((B, T, D))

    for b in range(B):
        n = trace.lengths[b]
        dy = d_y[b]
        aug = trace.augmented[b, :n]
        alpha = trace.alpha[b, :n]
        act = trace.att_act[b, :n]
        t = trace.t_vec[b]

        # head: y = t @ w_s + b_s
        grads["w_s"] += dy * t
        grads["b_s"][0] += dy
        dt = dy * params["w_s"]

        # t = alpha @ aug
        d_alpha = aug @ dt
        d_aug_b = np.outer(alpha, dt)

        # softmax over valid positions
        du = alpha * (d_alpha - alpha @ d_alpha)

        # u_j = v . tanh(w_a [query; aug_j]), query = aug[n-1]
        grads["v"] += act.T @ du
        d_act = np.outer(du, params["v"])
        d_z = d_act * (1.0 - act * act)
        paired = np.concatenate([np.broadcast_to(aug[-1], aug.shape), aug], axis=1)
        grads["w_a"] += d_z.T @ paired
        d_paired = d_z @ params["w_a"]
        d_aug_b += d_paired[:, D:]
        d_aug_b[-1] += d_paired[:, :D].sum(axis=0)

        d_aug[b, :n] = d_aug_b

    # augmented = [h ; features]; features are fixed inputs
    d_h = d_aug[:, :, :cfg.lstm_out_dim]
    if trace.drop_mask is not None:
        d_h = d_h * trace.drop_mask

    directions = ["f", "b"] if cfg.bidirectional else ["f"]
    d_windows = np.zeros_like(trace.windows)
    for di, d in enumerate(directions):
        cache = trace.lstm_caches[d]
        dh_dir = d_h[:, :, di * h_size:(di + 1) * h_size]
        dz = np.zeros((B, T, 4 * h_size))
        for b in range(B):
            n = trace.lengths[b]
            if d == "f":
                args = tuple(cache[k][b, :n] for k in "ifgoc")
                dz[b, :n] = cell_sweep_backward(
                    params[f"wh_{d}"], *args,
                    np.ascontiguousarray(dh_dir[b, :n]))
            else:
                args = tuple(np.ascontiguousarray(cache[k][b, :n][::-1]) for k in "ifgoc")
                dz_rev = cell_sweep_backward(
                    params[f"wh_{d}"], *args,
                    np.ascontiguousarray(dh_dir[b, :n][::-1]))
                dz[b, :n] = dz_rev[::-1]

        # h_prev per position in each direction's processing order, aligned:
        # forward uses the previous position, backward the next one
        h_ctx = np.zeros((B, T, h_size))
        if d == "f":
            h_ctx[:, 1:] = cache["h"][:, :-1]
        else:
            h_ctx[:, :-1] = cache["h"][:, 1:]

        dz_flat = dz.reshape(B * T, -1)
        grads[f"wx_{d}"] += dz_flat.T @ trace.windows.reshape(B * T, -1)
        grads[f"wh_{d}"] += dz_flat.T @ h_ctx.reshape(B * T, -1)
        grads[f"b_{d}"] += dz_flat.sum(axis=0)
        d_windows += (dz_flat @ params[f"wx_{d}"]).reshape(B, T, -1)

    d_emb = np.zeros((B, T, cfg.embed_dim))
    for b in range(B):
        n = trace.lengths[b]
        d_emb[b, :n] = window_grad_to_embedding(
            d_windows[b, :n], cfg.window_radius, cfg.embed_dim
        )
    return grads, d_emb


def ablated(cfg: ModelConfig) -> ModelConfig:
    """The same configuration with the binary features removed."""
    return replace(cfg, feature_dim=0)
