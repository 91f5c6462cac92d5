import json

import numpy as np
import pytest

from emotensity.checkpoint import (
    MAGIC,
    CheckpointError,
    load_checkpoint,
    save_checkpoint,
)
from emotensity.model import ModelConfig, init_params


def setup_ckpt(tmp_path, cfg=None, fingerprint=None, seed=9):
    if cfg is None:
        cfg = ModelConfig(embed_dim=5, window_radius=1, hidden_size=4,
                          feature_dim=9, dropout_keep=0.7, seed=seed)
    params = init_params(cfg)
    path = tmp_path / "model.ckpt"
    save_checkpoint(path, cfg, params, fingerprint=fingerprint)
    return path, cfg, params


FP = {"path": "/data/vec.txt", "dim": 5, "vocab_size": 120}


class TestRoundTrip:
    def test_bit_exact(self, tmp_path):
        path, cfg, params = setup_ckpt(tmp_path, fingerprint=FP)
        cfg2, params2, fp2 = load_checkpoint(path)
        assert cfg2 == cfg
        assert fp2 == FP
        assert set(params2.tensors) == set(params.tensors)
        for name, arr in params.tensors.items():
            got = params2.tensors[name]
            assert got.dtype == np.float64 and got.shape == arr.shape
            assert np.array_equal(got, arr)

    def test_no_fingerprint(self, tmp_path):
        path, cfg, _ = setup_ckpt(tmp_path)
        cfg2, _, fp2 = load_checkpoint(path)
        assert cfg2 == cfg and fp2 is None

    def test_resave_byte_identical(self, tmp_path):
        path, cfg, params = setup_ckpt(tmp_path, fingerprint=FP)
        other = tmp_path / "again.ckpt"
        save_checkpoint(other, cfg, params, fingerprint=FP)
        assert path.read_bytes() == other.read_bytes()

    def test_unidirectional_and_no_features(self, tmp_path):
        cfg = ModelConfig(embed_dim=3, window_radius=0, hidden_size=2,
                          bidirectional=False, feature_dim=0)
        path, cfg, params = setup_ckpt(tmp_path, cfg=cfg)
        cfg2, params2, _ = load_checkpoint(path)
        assert cfg2 == cfg
        assert "wx_b" not in params2.tensors
        assert all(np.array_equal(params2.tensors[n], arr)
                   for n, arr in params.tensors.items())

    def test_starts_with_magic(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path)
        assert path.read_bytes().startswith(MAGIC)


class TestCorruption:
    def test_bad_magic(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path)
        blob = path.read_bytes()
        path.write_bytes(b"X" + blob[1:])
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_truncated_header(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path)
        path.write_bytes(path.read_bytes()[: len(MAGIC) + 2])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncated_tensor_bytes(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError, match="truncat"):
            load_checkpoint(path)

    def test_trailing_garbage(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path)
        path.write_bytes(path.read_bytes() + b"\x00" * 4)
        with pytest.raises(CheckpointError, match="trailing"):
            load_checkpoint(path)

    def test_wrong_format_version(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path)
        blob = path.read_bytes()
        hlen = int.from_bytes(blob[len(MAGIC): len(MAGIC) + 4], "little")
        start = len(MAGIC) + 4
        header = json.loads(blob[start: start + hlen])
        header["format"] = 99
        raw = json.dumps(header, sort_keys=True,
                         separators=(",", ":")).encode()
        path.write_bytes(MAGIC + len(raw).to_bytes(4, "little") + raw
                         + blob[start + hlen:])
        with pytest.raises(CheckpointError, match="format"):
            load_checkpoint(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.ckpt"
        path.write_bytes(b"")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestFingerprintPolicy:
    def test_path_mismatch_rejected(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path, fingerprint=FP)
        wrong = dict(FP, path="/elsewhere/vec.txt")
        with pytest.raises(CheckpointError, match="path"):
            load_checkpoint(path, expected_fingerprint=wrong)

    def test_dim_mismatch_rejected(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path, fingerprint=FP)
        wrong = dict(FP, dim=25)
        with pytest.raises(CheckpointError, match="dim"):
            load_checkpoint(path, expected_fingerprint=wrong)

    def test_vocab_size_difference_tolerated(self, tmp_path):
        # vocab size shifts when the same file is loaded under a different
        # corpus restriction; that must not invalidate the checkpoint
        path, cfg, _ = setup_ckpt(tmp_path, fingerprint=FP)
        other = dict(FP, vocab_size=7)
        cfg2, _, _ = load_checkpoint(path, expected_fingerprint=other)
        assert cfg2 == cfg

    def test_expected_but_absent_rejected(self, tmp_path):
        path, _, _ = setup_ckpt(tmp_path, fingerprint=None)
        with pytest.raises(CheckpointError):
            load_checkpoint(path, expected_fingerprint=FP)

    def test_match_accepted(self, tmp_path):
        path, cfg, _ = setup_ckpt(tmp_path, fingerprint=FP)
        cfg2, _, fp2 = load_checkpoint(path, expected_fingerprint=dict(FP))
        assert cfg2 == cfg and fp2 == FP
