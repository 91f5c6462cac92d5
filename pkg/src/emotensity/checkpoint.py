"""Deterministic binary checkpoint container.

Layout: magic line, then a u32 little-endian header length, then that many
bytes of JSON (sorted keys, no whitespace variation), then the raw tensor
bytes concatenated in manifest order as little-endian float64, C order.
Writing the same state twice produces byte-identical files, and a
round-trip is bit-exact.
"""

from __future__ import annotations

import dataclasses
import json
import struct
from typing import Optional

import numpy as np

from .model import ModelConfig, ModelParams, param_shapes

MAGIC = b"EMOTENSITY-CKPT-1\n"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Corrupt, truncated, or incompatible checkpoint file."""


def _header(cfg: ModelConfig, params: ModelParams,
            fingerprint: Optional[dict]) -> dict:
    manifest = [
        {"name": name, "shape": list(params[name].shape)}
        for name in sorted(params.names())
    ]
    return {
        "config": dataclasses.asdict(cfg),
        "embedding": fingerprint,
        "format": FORMAT_VERSION,
        "tensors": manifest,
    }


def save_checkpoint(path, cfg: ModelConfig, params: ModelParams,
                    fingerprint: Optional[dict] = None) -> None:
    header = json.dumps(_header(cfg, params, fingerprint),
                        sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        for entry in sorted(params.names()):
            arr = np.ascontiguousarray(params[entry], dtype="<f8")
            fh.write(arr.tobytes())


def load_checkpoint(path, expected_fingerprint: Optional[dict] = None):
    """Read a checkpoint back. Returns (config, params, fingerprint).

    When expected_fingerprint is given, its path and dim must match the
    stored one exactly; vocab_size is informational (a vocabulary-restricted
    load of the same file shrinks it legitimately) and is not compared.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    off = len(MAGIC)
    if len(blob) < off + 4:
        raise CheckpointError(f"{path}: truncated header")
    (hlen,) = struct.unpack_from("<I", blob, off)
    off += 4
    if len(blob) < off + hlen:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(blob[off:off + hlen])
    except ValueError as exc:
        raise CheckpointError(f"{path}: bad header: {exc}") from None
    off += hlen

    if header.get("format") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: unsupported format {header.get('format')!r}")
    cfg = ModelConfig(**header["config"])
    fingerprint = header.get("embedding")

    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = count * 8
        if len(blob) < off + nbytes:
            raise CheckpointError(f"{path}: truncated tensor {entry['name']!r}")
        arr = np.frombuffer(blob[off:off + nbytes], dtype="<f8").reshape(shape)
        tensors[entry["name"]] = arr.astype(np.float64, copy=True)
        off += nbytes
    if off != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - off} trailing bytes")

    expected = param_shapes(cfg)
    if set(tensors) != set(expected):
        raise CheckpointError(
            f"{path}: tensor set {sorted(tensors)} does not match config")
    for name, shape in expected.items():
        if tensors[name].shape != shape:
            raise CheckpointError(
                f"{path}: tensor {name!r} has shape {tensors[name].shape}, "
                f"config implies {shape}")

    if expected_fingerprint is not None:
        if fingerprint is None:
            raise CheckpointError(
                f"{path}: checkpoint carries no embedding fingerprint")
        for key in ("path", "dim"):
            if fingerprint.get(key) != expected_fingerprint.get(key):
                raise CheckpointError(
                    f"{path}: embedding {key} mismatch: checkpoint has "
                    f"{fingerprint.get(key)!r}, current store has "
                    f"{expected_fingerprint.get(key)!r}")

    return cfg, ModelParams(tensors), fingerprint
