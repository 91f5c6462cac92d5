"""LSTM recurrence kernels.

Two interchangeable backends provide the sequential cell sweeps:

* ``native`` -- Cython extension (built by setup.py), the default when the
  compiled module imported cleanly;
* ``pure``   -- numpy fallback with identical semantics.

Selection happens at import time. Set EMOTENSITY_PURE=1 to force the
fallback; call use_backend() to switch at runtime (used by the benchmark
and the backend-equivalence tests).
"""

import os

from . import _pure

try:
    from . import _native
except ImportError:
    _native = None

_BACKENDS = {"pure": _pure}
if _native is not None:
    _BACKENDS["native"] = _native

if os.environ.get("EMOTENSITY_PURE"):
    _active = _pure
else:
    _active = _native if _native is not None else _pure


def available_backends():
    return tuple(sorted(_BACKENDS))


def active_backend():
    return "native" if _active is _native else "pure"


def use_backend(name):
    """Switch the active backend ('pure' or 'native'); returns the old name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    old = active_backend()
    _active = _BACKENDS[name]
    return old


def cell_sweep_forward(zx, wh):
    return _active.cell_sweep_forward(zx, wh)


def cell_sweep_backward(wh, i, f, g, o, c, dh_out):
    return _active.cell_sweep_backward(wh, i, f, g, o, c, dh_out)
