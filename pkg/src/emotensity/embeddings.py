"""Plain-text word vector loading with a fixed OOV policy.

Format: one entry per line, token followed by whitespace-separated reals.
A word2vec-style header line (exactly two integer fields) is skipped.
Keys are lowercased on load and lookups lowercase the query; misses resolve
to the all-zeros OOV vector, so for uncovered tokens the binary token
features are the only signal.
"""

from __future__ import annotations

from typing import Optional

import numpy as np


class EmbeddingFormatError(ValueError):
    """Unreadable or inconsistent embedding file."""


class EmbeddingStore:
    """Immutable token -> vector table; lookups are total."""

    def __init__(self, dim: int, table: dict[str, np.ndarray], source_path: Optional[str] = None):
        self.dim = dim
        self.table = table
        self.oov_vector = np.zeros(dim)
        self.source_path = source_path

    def __len__(self) -> int:
        return len(self.table)

    def has(self, token: str) -> bool:
        return token.lower() in self.table

    def lookup(self, token: str) -> np.ndarray:
        """Vector for a token (lowercased exact match), or the OOV vector."""
        return self.table.get(token.lower(), self.oov_vector)

    def fingerprint(self) -> dict:
        return {
            "path": self.source_path or "",
            "dim": self.dim,
            "vocab_size": len(self.table),
        }


def _is_header(fields: list[str]) -> bool:
    if len(fields) != 2:
        return False
    try:
        int(fields[0]), int(fields[1])
    except ValueError:
        return False
    return True


def load_embeddings(path, expected_dim: Optional[int] = None,
                    vocab: Optional[set] = None) -> EmbeddingStore:
    """Load vectors from a text file.

    expected_dim: required vector width; inferred from the first entry when
    absent. Any line whose arity disagrees is a format error.
    vocab: when given, only tokens whose lowercased form is in this set are
    kept (memory control for large files).
    """
    if vocab is not None:
        vocab = {v.lower() for v in vocab}
    dim = expected_dim
    table: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.rstrip("\n").split()
            if not fields:
                continue
            if lineno == 1 and _is_header(fields):
                continue
            token = fields[0].lower()
            if dim is None:
                dim = len(fields) - 1
                if dim < 1:
                    raise EmbeddingFormatError(f"{path}:{lineno}: no vector values")
            if len(fields) - 1 != dim:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: expected {dim} values, got {len(fields) - 1}"
                )
            if vocab is not None and token not in vocab:
                continue
            if token in table:  # duplicates keep the first occurrence
                continue
            try:
                vec = np.array([float(v) for v in fields[1:]])
            except ValueError:
                raise EmbeddingFormatError(
                    f"{path}:{lineno}: non-numeric vector value"
                ) from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(f"{path}:{lineno}: non-finite vector value")
            table[token] = vec
    if dim is None:
        raise EmbeddingFormatError(f"{path}: no valid entries")
    if not table and vocab is None:
        raise EmbeddingFormatError(f"{path}: no valid entries")
    return EmbeddingStore(dim, table, source_path=str(path))
