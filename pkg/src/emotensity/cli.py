"""Command-line entry point.

One executable, six subcommands: train, predict, eval, stats, attention,
featurize. Training runs are driven by a flat key=value config file so a
run is reproducible from a single diffable artifact; individual keys can be
overridden on the command line (flags win).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields
from typing import Optional

from .batching import encode_tweets, predict_encoded
from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    EMOTIONS,
    INTENSITY_NONE,
    corpus_stats,
    load_pos_tags,
    parse_dataset,
)
from .embeddings import load_embeddings
from .evaluation import (
    attention_traces,
    evaluate,
    export_attention,
    export_attention_csv,
)
from .features import featurize_tweet, tokenize
from .model import ModelConfig
from .training import TrainConfig, clip01, train


class CliError(ValueError):
    """Bad invocation or config; reported to stderr with exit code 1."""


_BOOL_WORDS = {
    "true": True, "yes": True, "1": True, "on": True,
    "false": False, "no": False, "0": False, "off": False,
}

_MODEL_KEYS = {
    "embed_dim": int,
    "window_radius": int,
    "hidden_size": int,
    "bidirectional": bool,
    "feature_dim": int,
    "dropout_keep": float,
}
_TRAIN_KEYS = {
    "batch_size": int,
    "lr0": float,
    "decay_ratio": float,
    "decay_every": int,
    "l2_lambda": float,
    "patience_steps": int,
    "eval_every": int,
    "max_steps": int,
}
_PATH_KEYS = (
    "train_path", "dev_path", "test_path",
    "train_pos_path", "dev_pos_path", "test_pos_path",
    "embeddings_path", "out_dir",
)
_ALL_KEYS = set(_MODEL_KEYS) | set(_TRAIN_KEYS) | set(_PATH_KEYS) | {"emotion", "seed"}


@dataclass
class RunConfig:
    """Everything a training run needs, resolved and validated."""
    seed: int = 42
    emotion: Optional[str] = None
    train_path: Optional[str] = None
    dev_path: Optional[str] = None
    test_path: Optional[str] = None
    train_pos_path: Optional[str] = None
    dev_pos_path: Optional[str] = None
    test_pos_path: Optional[str] = None
    embeddings_path: Optional[str] = None
    out_dir: Optional[str] = None
    embed_dim: Optional[int] = None   # None: taken from the embedding file
    window_radius: int = 1
    hidden_size: int = 100
    bidirectional: bool = True
    feature_dim: int = 9
    dropout_keep: float = 1.0
    batch_size: int = 16
    lr0: float = 0.1
    decay_ratio: float = 0.9
    decay_every: int = 100
    l2_lambda: float = 0.0
    patience_steps: int = 1000
    eval_every: int = 50
    max_steps: int = 10000

    def model_config(self, embed_dim: int) -> ModelConfig:
        return ModelConfig(
            embed_dim=embed_dim,
            window_radius=self.window_radius,
            hidden_size=self.hidden_size,
            bidirectional=self.bidirectional,
            feature_dim=self.feature_dim,
            dropout_keep=self.dropout_keep,
            seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            batch_size=self.batch_size,
            lr0=self.lr0,
            decay_ratio=self.decay_ratio,
            decay_every=self.decay_every,
            l2_lambda=self.l2_lambda,
            patience_steps=self.patience_steps,
            eval_every=self.eval_every,
            max_steps=self.max_steps,
            seed=self.seed,
        )


def parse_config_file(path) -> dict[str, str]:
    """Flat `key = value` lines; blank lines and # comments are skipped."""
    raw: dict[str, str] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read config: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise CliError(f"{path}:{lineno}: expected key = value")
            key, value = stripped.split("=", 1)
            key, value = key.strip(), value.strip()
            if key in raw:
                raise CliError(f"{path}:{lineno}: duplicate key {key!r}")
            raw[key] = value
    return raw


def _coerce(key: str, value: str):
    if key == "emotion" or key in _PATH_KEYS:
        return value
    if key == "seed":
        kind = int
    elif key in _MODEL_KEYS:
        kind = _MODEL_KEYS[key]
    else:
        kind = _TRAIN_KEYS[key]
    if kind is bool:
        try:
            return _BOOL_WORDS[value.lower()]
        except KeyError:
            raise CliError(f"{key}: not a boolean: {value!r}") from None
    try:
        return kind(value)
    except ValueError:
        raise CliError(f"{key}: not a {kind.__name__}: {value!r}") from None


def build_run_config(raw: dict[str, str], required: tuple[str, ...] = ()) -> RunConfig:
    unknown = sorted(set(raw) - _ALL_KEYS)
    if unknown:
        raise CliError(f"unknown config key(s): {', '.join(unknown)}")
    missing = [k for k in required if k not in raw]
    if missing:
        raise CliError(f"missing config key(s): {', '.join(missing)}")
    kwargs = {k: _coerce(k, v) for k, v in raw.items()}
    rc = RunConfig(**kwargs)
    if rc.emotion is not None and rc.emotion not in EMOTIONS:
        raise CliError(f"unknown emotion {rc.emotion!r}; expected one of {EMOTIONS}")
    for f in fields(rc):
        if not f.name.endswith("_path"):
            continue
        value = getattr(rc, f.name)
        if value is not None and not os.path.exists(value):
            raise CliError(f"{f.name}: no such file: {value}")
    return rc


def _corpus_vocab(tweets) -> set[str]:
    vocab: set[str] = set()
    for t in tweets:
        vocab.update(tok.surface.lower() for tok in tokenize(t.text))
    return vocab


def _load_store(path, tweets, expected_dim: Optional[int] = None):
    """Vocabulary-restricted load: only types occurring in the data are kept."""
    return load_embeddings(os.path.abspath(path), expected_dim=expected_dim,
                           vocab=_corpus_vocab(tweets))


def _load_bundle(checkpoint_path, data_path, embeddings_path, pos_path):
    """Shared predict/eval/attention input loading with fingerprint check."""
    tweets = parse_dataset(data_path)
    tags = load_pos_tags(tweets, pos_path)
    store = _load_store(embeddings_path, tweets)
    cfg, params, _ = load_checkpoint(
        checkpoint_path, expected_fingerprint=store.fingerprint())
    return tweets, tags, store, cfg, params


def cmd_train(args) -> int:
    raw = parse_config_file(args.config)
    for item in args.set or []:
        if "=" not in item:
            raise CliError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    if args.seed is not None:
        raw["seed"] = str(args.seed)
    if args.out_dir is not None:
        raw["out_dir"] = str(args.out_dir)
    rc = build_run_config(
        raw, required=("train_path", "dev_path", "embeddings_path", "out_dir"))

    train_tweets = parse_dataset(rc.train_path)
    dev_tweets = parse_dataset(rc.dev_path)
    train_tags = load_pos_tags(train_tweets, rc.train_pos_path)
    dev_tags = load_pos_tags(dev_tweets, rc.dev_pos_path)
    store = _load_store(rc.embeddings_path, list(train_tweets) + list(dev_tweets),
                        expected_dim=rc.embed_dim)
    model_cfg = rc.model_config(store.dim)
    train_cfg = rc.train_config()

    params, history = train(model_cfg, train_cfg, train_tweets, dev_tweets,
                            store, train_tags, dev_tags, verbose=True)

    os.makedirs(rc.out_dir, exist_ok=True)
    save_checkpoint(os.path.join(rc.out_dir, "checkpoint"),
                    model_cfg, params, store.fingerprint())
    with open(os.path.join(rc.out_dir, "history.tsv"), "w", encoding="utf-8") as fh:
        fh.write(history.to_tsv())
    report = evaluate(params, dev_tweets, model_cfg, store, dev_tags)
    with open(os.path.join(rc.out_dir, "eval.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.to_text())
    print(f"best_step\t{history.best_step}")
    print(report.to_text(), end="")
    return 0


def cmd_predict(args) -> int:
    tweets, tags, store, cfg, params = _load_bundle(
        args.checkpoint, args.data, args.embeddings, args.pos)
    encoded = encode_tweets(tweets, store, cfg, tags)
    preds = clip01(predict_encoded(params, encoded, cfg))
    with open(args.out, "w", encoding="utf-8") as fh:
        for tweet, pred in zip(tweets, preds):
            fh.write(f"{tweet.id}\t{tweet.text}\t{tweet.emotion}\t{pred:.6f}\n")
    return 0


def cmd_eval(args) -> int:
    tweets, tags, store, cfg, params = _load_bundle(
        args.checkpoint, args.data, args.embeddings, args.pos)
    report = evaluate(params, tweets, cfg, store, tags)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_text())
    print(report.to_text(), end="")
    return 0


def cmd_stats(args) -> int:
    tweets = parse_dataset(args.data)
    store = _load_store(args.embeddings, tweets)
    stats = corpus_stats(tweets, store)
    print(f"tweets\t{len(tweets)}")
    print(f"mean_len\t{stats.mean_len:.10g}")
    print(f"min_len\t{stats.min_len}")
    print(f"max_len\t{stats.max_len}")
    print(f"coverage\t{stats.coverage:.10g}")
    return 0


def cmd_attention(args) -> int:
    tweets, tags, store, cfg, params = _load_bundle(
        args.checkpoint, args.data, args.embeddings, args.pos)
    export_attention(params, tweets, cfg, store, args.out, tags)
    if args.csv:
        traces = attention_traces(params, tweets, cfg, store, tags)
        export_attention_csv(traces, args.csv)
    return 0


def cmd_featurize(args) -> int:
    tweets = parse_dataset(args.data)
    tags = load_pos_tags(tweets, args.pos)
    for tweet in tweets:
        tweet_tags = tags.get(tweet.id) if tags else None
        shown = tweet_tags if tweet_tags is not None else ["?"] * len(tokenize(tweet.text))
        for (token, feats), tag in zip(featurize_tweet(tweet, tweet_tags), shown):
            bits = "".join(str(b) for b in feats.flags)
            print(f"{token.surface}\t{tag}\t{bits}")
    return 0


def _add_bundle_flags(sub, with_out: bool, out_help: str = ""):
    sub.add_argument("--checkpoint", required=True, help="trained checkpoint file")
    sub.add_argument("--data", required=True, help="dataset TSV (id, text, emotion, intensity)")
    sub.add_argument("--embeddings", required=True, help="word-vector text file")
    sub.add_argument("--pos", default=None, help="optional POS sidecar TSV")
    if with_out:
        sub.add_argument("--out", required=True, help=out_help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emotensity",
        description="Tweet emotion-intensity regression: train, predict, inspect.")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("train", help="train a model from a config file")
    p.add_argument("--config", required=True, help="flat key = value config file")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--out-dir", default=None, help="override the output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override any config key (repeatable)")
    p.set_defaults(func=cmd_train)

    p = subs.add_parser("predict", help="fill the intensity column of a dataset")
    _add_bundle_flags(p, with_out=True, out_help="output TSV path")
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("eval", help="print metrics for a labeled dataset")
    _add_bundle_flags(p, with_out=False)
    p.add_argument("--out", default=None, help="also write the report to this file")
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("stats", help="corpus length and embedding-coverage summary")
    p.add_argument("--data", required=True, help="dataset TSV")
    p.add_argument("--embeddings", required=True, help="word-vector text file")
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("attention", help="export per-token attention weights")
    _add_bundle_flags(p, with_out=True, out_help="JSONL output path")
    p.add_argument("--csv", default=None, help="also write a token,weight plot CSV")
    p.set_defaults(func=cmd_attention)

    p = subs.add_parser("featurize", help="dump tokens and binary features")
    p.add_argument("--data", required=True, help="dataset TSV")
    p.add_argument("--pos", default=None, help="optional POS sidecar TSV")
    p.set_defaults(func=cmd_featurize)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"emotensity: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
