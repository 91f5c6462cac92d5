"""Timing comparison of the compiled and pure-numpy recurrence kernels.

Runs the full forward + backward pipeline on a realistic batch with each
backend and reports per-step wall time. Usage:

    python benchmarks/bench_kernels.py [--hidden 100] [--batch 16]
        [--tokens 30] [--embed 50] [--repeat 20]
"""

import argparse
import time

import numpy as np

from emotensity import kernels
from emotensity.batching import Batch
from emotensity.model import ModelConfig, backward, forward, init_params


def make_inputs(cfg, batch_size, tokens, rng):
    lengths = rng.integers(max(2, tokens // 2), tokens + 1, size=batch_size)
    T = int(lengths.max())
    emb = np.zeros((batch_size, T, cfg.embed_dim))
    feats = np.zeros((batch_size, T, cfg.feature_dim))
    mask = np.zeros((batch_size, T))
    for b, n in enumerate(lengths):
        emb[b, :n] = rng.normal(size=(n, cfg.embed_dim))
        feats[b, :n] = (rng.random((n, cfg.feature_dim)) < 0.2)
        mask[b, :n] = 1.0
    ids = tuple(f"bench-{b}" for b in range(batch_size))
    return Batch(ids=ids, lengths=lengths, emb=emb, feats=feats, mask=mask,
                 golds=rng.random(batch_size))


def run(backend, cfg, params, batch, d_y, repeat):
    previous = kernels.use_backend(backend)
    try:
        forward(batch, params, cfg)  # warm-up
        start = time.perf_counter()
        for _ in range(repeat):
            trace = forward(batch, params, cfg)
            backward(trace, params, cfg, d_y)
        elapsed = time.perf_counter() - start
        trace = forward(batch, params, cfg)
    finally:
        kernels.use_backend(previous)
    return elapsed / repeat, trace.y_hat


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--hidden", type=int, default=100)
    ap.add_argument("--batch", type=int, default=16)
    ap.add_argument("--tokens", type=int, default=30)
    ap.add_argument("--embed", type=int, default=50)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    cfg = ModelConfig(embed_dim=args.embed, hidden_size=args.hidden)
    rng = np.random.default_rng(7)
    params = init_params(cfg, rng)
    batch = make_inputs(cfg, args.batch, args.tokens, rng)
    d_y = rng.normal(size=args.batch)

    print(f"config: hidden={args.hidden} batch={args.batch} "
          f"tokens<={args.tokens} embed={args.embed} repeat={args.repeat}")
    results = {}
    for backend in kernels.available_backends():
        per_step, y_hat = run(backend, cfg, params, batch, d_y, args.repeat)
        results[backend] = (per_step, y_hat)
        print(f"{backend:>8}: {per_step * 1e3:8.2f} ms / fwd+bwd step")
    if len(results) == 2:
        (fast, slow) = sorted(results, key=lambda k: results[k][0])
        ratio = results[slow][0] / results[fast][0]
        diff = float(np.abs(results["pure"][1] - results["native"][1]).max())
        print(f"{fast} is {ratio:.2f}x faster; max |y_hat| deviation {diff:.3g}")


if __name__ == "__main__":
    main()
