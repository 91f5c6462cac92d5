import numpy as np
import pytest

from emotensity import kernels


def make_sweep_inputs(n, hidden, seed):
    rng = np.random.default_rng(seed)
    zx = rng.normal(size=(n, 4 * hidden)) * 0.5
    wh = rng.normal(size=(4 * hidden, hidden)) * 0.3
    dh = rng.normal(size=(n, hidden))
    return zx, wh, dh


def run_both(fn_name, *args):
    results = {}
    for backend in kernels.available_backends():
        prev = kernels.use_backend(backend)
        try:
            results[backend] = getattr(kernels, fn_name)(*args)
        finally:
            kernels.use_backend(prev)
    return results


needs_native = pytest.mark.skipif(
    "native" not in kernels.available_backends(),
    reason="compiled kernel unavailable")


class TestBackendSelection:
    def test_pure_always_available(self):
        assert "pure" in kernels.available_backends()

    def test_use_backend_roundtrip(self):
        start = kernels.active_backend()
        prev = kernels.use_backend("pure")
        assert prev == start
        assert kernels.active_backend() == "pure"
        kernels.use_backend(start)
        assert kernels.active_backend() == start

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            kernels.use_backend("gpu")


class TestSweepSemantics:
    def test_zero_weights_zero_hidden(self):
        n, h = 6, 4
        zx = np.zeros((n, 4 * h))
        wh = np.zeros((4 * h, h))
        hs, i, f, g, o, c = kernels.cell_sweep_forward(zx, wh)
        assert np.all(hs == 0.0) and np.all(c == 0.0)
        assert np.allclose(i, 0.5) and np.allclose(f, 0.5) and np.allclose(o, 0.5)

    def test_shapes(self):
        zx, wh, _ = make_sweep_inputs(5, 3, 0)
        out = kernels.cell_sweep_forward(zx, wh)
        assert all(a.shape == (5, 3) for a in out)

    def test_forward_deterministic(self):
        zx, wh, _ = make_sweep_inputs(5, 3, 1)
        a = kernels.cell_sweep_forward(zx, wh)
        b = kernels.cell_sweep_forward(zx, wh)
        for x, y in zip(a, b):
            assert np.array_equal(x, y)


@needs_native
class TestBackendEquivalence:
    def test_forward_agrees(self):
        zx, wh, _ = make_sweep_inputs(12, 7, 2)
        res = run_both("cell_sweep_forward", zx, wh)
        for a, b in zip(res["pure"], res["native"]):
            assert np.allclose(a, b, rtol=0, atol=1e-12)

    def test_backward_agrees(self):
        zx, wh, dh = make_sweep_inputs(12, 7, 3)
        h, i, f, g, o, c = kernels.cell_sweep_forward(zx, wh)
        res = run_both("cell_sweep_backward", wh, i, f, g, o, c, dh)
        assert np.allclose(res["pure"], res["native"], rtol=0, atol=1e-12)

    def test_single_step(self):
        zx, wh, dh = make_sweep_inputs(1, 5, 4)
        res = run_both("cell_sweep_forward", zx, wh)
        for a, b in zip(res["pure"], res["native"]):
            assert np.allclose(a, b, rtol=0, atol=1e-14)
