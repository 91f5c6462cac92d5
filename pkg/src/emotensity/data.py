"""Dataset and POS-sidecar ingestion.

Dataset files are 4-column TSV, one tweet per line::

    id <TAB> raw text <TAB> emotion <TAB> intensity

where intensity is a real in [0, 1] or the literal ``NONE`` for unlabeled
test data. POS sidecars carry one line per tweet::

    id <TAB> space-separated single-character tags

aligned 1:1 with the tokens produced by features.tokenize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .features import tokenize

EMOTIONS = ("anger", "fear", "joy", "sadness")

INTENSITY_NONE = "NONE"

# tag handed out when no sidecar is available; only the surface-form
# fallback rules fire for it (see features.extract_features)
PLACEHOLDER_TAG = "?"


class ParseError(ValueError):
    """Malformed dataset or sidecar line."""


class AlignmentError(ValueError):
    """POS tags cannot be aligned with tokenized tweets."""


@dataclass(frozen=True)
class Tweet:
    id: str
    text: str
    emotion: str
    intensity: Optional[float]  # None for unlabeled test rows


@dataclass(frozen=True)
class PosTaggedTweet:
    id: str
    tags: tuple[str, ...]


@dataclass(frozen=True)
class CorpusStats:
    mean_len: float
    min_len: int
    max_len: int
    coverage: float  # fraction of distinct lowercased token types in the store


def parse_dataset(path) -> list[Tweet]:
    """Parse a 4-column TSV dataset file into Tweet records."""
    tweets = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise ParseError(
                    f"{path}:{lineno}: expected 4 tab-separated fields, got {len(fields)}"
                )
            tid, text, emotion, raw_intensity = fields
            if not tid:
                raise ParseError(f"{path}:{lineno}: empty tweet id")
            if tid in seen:
                raise ParseError(f"{path}:{lineno}: duplicate tweet id {tid!r}")
            seen.add(tid)
            if emotion not in EMOTIONS:
                raise ParseError(f"{path}:{lineno}: unknown emotion {emotion!r}")
            if raw_intensity == INTENSITY_NONE:
                intensity = None
            else:
                try:
                    intensity = float(raw_intensity)
                except ValueError:
                    raise ParseError(
                        f"{path}:{lineno}: bad intensity {raw_intensity!r}"
                    ) from None
                if not (0.0 <= intensity <= 1.0) or not math.isfinite(intensity):
                    raise ParseError(
                        f"{path}:{lineno}: intensity {intensity} outside [0, 1]"
                    )
            tweets.append(Tweet(tid, text, emotion, intensity))
    return tweets


def serialize_dataset(tweets: Iterable[Tweet]) -> str:
    """Inverse of parse_dataset; re-parsing the result yields equal records."""
    lines = []
    for t in tweets:
        intensity = INTENSITY_NONE if t.intensity is None else repr(t.intensity)
        lines.append(f"{t.id}\t{t.text}\t{t.emotion}\t{intensity}")
    return "".join(line + "\n" for line in lines)


def parse_pos_sidecar(path) -> list[PosTaggedTweet]:
    """Parse an `id TAB space-separated-tags` sidecar file."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(
                    f"{path}:{lineno}: expected 2 tab-separated fields, got {len(fields)}"
                )
            tid, tag_str = fields
            records.append(PosTaggedTweet(tid, tuple(tag_str.split())))
    return records


def align_pos_tags(tweets: Sequence[Tweet], records: Sequence[PosTaggedTweet]) -> dict[str, tuple[str, ...]]:
    """Map tweet id -> tags, validating ids and per-tweet tag counts.

    Every sidecar id must name a tweet, every tweet must be covered, and each
    tag sequence must match the tokenizer's token count for that tweet.
    """
    by_id = {t.id: t for t in tweets}
    tags = {}
    for rec in records:
        tweet = by_id.get(rec.id)
        if tweet is None:
            raise AlignmentError(f"sidecar id {rec.id!r} not present in dataset")
        n_tokens = len(tokenize(tweet.text))
        if len(rec.tags) != n_tokens:
            raise AlignmentError(
                f"tweet {rec.id!r}: {len(rec.tags)} tags for {n_tokens} tokens"
            )
        tags[rec.id] = rec.tags
    missing = [t.id for t in tweets if t.id not in tags]
    if missing:
        raise AlignmentError(
            f"sidecar missing tags for {len(missing)} tweet(s), first: {missing[0]!r}"
        )
    return tags


def load_pos_tags(tweets: Sequence[Tweet], path) -> Optional[dict[str, tuple[str, ...]]]:
    """Parse and align a sidecar; a missing file degrades to None (all tweets
    get the placeholder tag, so only regex-based features fire)."""
    if path is None or not Path(path).exists():
        return None
    return align_pos_tags(tweets, parse_pos_sidecar(path))


def corpus_stats(tweets: Sequence[Tweet], store) -> CorpusStats:
    """Token-length summary plus embedding coverage of the corpus vocabulary.

    Coverage is the fraction of distinct lowercased token types found in the
    embedding store.
    """
    if not tweets:
        raise ValueError("empty corpus")
    lengths = []
    types = set()
    for t in tweets:
        tokens = tokenize(t.text)
        lengths.append(len(tokens))
        types.update(tok.surface.lower() for tok in tokens)
    if not types:
        raise ValueError("corpus contains no tokens")
    covered = sum(1 for ty in types if store.has(ty))
    return CorpusStats(
        mean_len=sum(lengths) / len(lengths),
        min_len=min(lengths),
        max_len=max(lengths),
        coverage=covered / len(types),
    )
