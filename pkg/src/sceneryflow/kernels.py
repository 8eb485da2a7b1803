"""Backend selection for the digit-walk kernel.

The compiled core is preferred when importable; set ``SCENERYFLOW_PURE_PY=1``
to force the NumPy fallback. Both backends satisfy the same contract and
produce bit-identical results (see tests/test_backends.py), so everything
downstream is backend-agnostic.
"""

import os

import numpy as np

from . import _corepy

FRAC_BITS = _corepy.FRAC_BITS
_SCALE = float(1 << FRAC_BITS)

if os.environ.get("SCENERYFLOW_PURE_PY", "") not in ("", "0"):
    _impl = _corepy
    BACKEND = "numpy"
else:
    try:
        from . import _digitcore as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _corepy
        BACKEND = "numpy"


def backend_name() -> str:
    return BACKEND


def quantize(x):
    """Map points of [0, 1] to fixed-point numerators over 2**52.

    Inputs are clamped to [0, 1] first; the quantization step is 2**-52,
    below every cell width the library admits.
    """
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return np.rint(x * _SCALE).astype(np.uint64)


def cdf_walk_fixed(q, base, rows_w, rows_cum, s0, max_depth):
    """Run the digit walk on already-quantized numerators."""
    q = np.ascontiguousarray(np.asarray(q, dtype=np.uint64).ravel())
    return _impl.cdf_walk(q, base, rows_w, rows_cum, s0, max_depth)


def cdf_walk_points(x, base, rows_w, rows_cum, s0, max_depth):
    """Quantize points, run the digit walk, restore the input shape."""
    x = np.asarray(x, dtype=np.float64)
    q = quantize(x).ravel()
    if np.ndim(s0) > 0:
        s0 = np.asarray(s0, dtype=np.uint64).ravel()
    F, tail = _impl.cdf_walk(q, base, rows_w, rows_cum, s0, max_depth)
    return F.reshape(x.shape), tail.reshape(x.shape)
