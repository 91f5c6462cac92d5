"""Twitter-aware tokenization and per-token binary features.

The tokenizer is a set of ordered regex rules (URLs, emoticons, mentions,
hashtags, numbers, words, punctuation runs): deliberately simpler than the
full curated rule sets used by dedicated tweet tokenizers, so token counts
on real data are approximate.

Each token gets a 9-flag binary feature vector: eight flags keyed off
single-character POS codes and one regex-based word-elongation flag.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# order matters: each flag index i is set iff the POS tag equals POS_CODES[i]
POS_CODES = ("A", "!", "#", "E", "@", "V", "$", "O")

FEATURE_NAMES = (
    "adjective",
    "interjection",
    "hashtag",
    "emoji",
    "at_mention",
    "verb",
    "numeral",
    "personal_pronoun",
    "elongation",
)

N_FEATURES = len(FEATURE_NAMES)

_EMOTICONS = (
    ":-)", ":)", ":-]", ":]", ":-(", ":(", ":-[", ":[",
    ":-D", ":D", "=D", ":-P", ":P", ":-p", ":p",
    ";-)", ";)", ";-P", ";P", ":-/", ":/", ":-\\",
    ":'(", ":'-(", ":')", ":-|", ":|",
    "=)", "=(", "=/", "=P", "<3", "</3",
    ":*", ":-*", ":o", ":-o", ":O", ":-O", "^_^", "^-^",
)

_RULES = [
    r"(?:https?://|www\.)\S+",                 # URLs
    "|".join(re.escape(e) for e in sorted(_EMOTICONS, key=len, reverse=True)),
    r"@\w+",                                   # at-mentions
    r"#\w+",                                   # hashtags
    r"[+-]?\d+(?:[.,:/]\d+)*%?",               # numbers, decimals, times, percents
    r"\w+(?:['’-]\w+)*",                  # words incl. contractions/hyphens
    r"[!?.,;:]+",                              # punctuation runs
    r"\S",                                     # anything else, one char at a time
]

_TOKEN_RE = re.compile("|".join(f"(?:{r})" for r in _RULES), re.UNICODE)

_ELONGATION_RE = re.compile(r"(.)\1{2,}")


@dataclass(frozen=True)
class Token:
    surface: str
    span: tuple[int, int]  # character offsets into the raw tweet


@dataclass(frozen=True)
class TokenFeatures:
    flags: tuple[int, ...]  # 9 entries, 0/1, ordered as FEATURE_NAMES

    def as_array(self) -> np.ndarray:
        return np.asarray(self.flags, dtype=np.float64)


def tokenize(text: str) -> list[Token]:
    """Split a tweet into tokens; deterministic, whitespace never survives."""
    return [Token(m.group(), (m.start(), m.end())) for m in _TOKEN_RE.finditer(text)]


def has_elongation(surface: str) -> bool:
    """True iff some character repeats 3+ times in a row (case-insensitive)."""
    return _ELONGATION_RE.search(surface.lower()) is not None


def extract_features(surface: str, pos: str) -> TokenFeatures:
    """Binary feature vector for one token.

    pos is a single-character tagger code, or "?" when no tags are
    available; with "?" the hashtag and at-mention flags fall back to
    surface-prefix tests and the other POS flags stay off.
    """
    if pos == "?":
        pos_flags = [0] * len(POS_CODES)
        pos_flags[POS_CODES.index("#")] = int(surface.startswith("#"))
        pos_flags[POS_CODES.index("@")] = int(surface.startswith("@"))
    else:
        pos_flags = [int(pos == code) for code in POS_CODES]
    return TokenFeatures(tuple(pos_flags) + (int(has_elongation(surface)),))


def featurize_tweet(tweet, tags: Optional[Sequence[str]] = None) -> list[tuple[Token, TokenFeatures]]:
    """Tokenize a tweet and pair each token with its feature vector.

    tags, when given, must align 1:1 with the tokens; None means no sidecar
    (every token gets the placeholder tag).
    """
    tokens = tokenize(tweet.text)
    if tags is None:
        tags = ["?"] * len(tokens)
    if len(tags) != len(tokens):
        raise ValueError(
            f"tweet {tweet.id!r}: {len(tags)} tags for {len(tokens)} tokens"
        )
    return [(tok, extract_features(tok.surface, tag)) for tok, tag in zip(tokens, tags)]
