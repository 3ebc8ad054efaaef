"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise, or when
``BLSAC_PURE_PYTHON=1`` is set, the numpy fallback is used. Both backends take
pre-drawn random numbers so they produce the same output for the same seed.
"""
import os

from . import _kernels_py

if os.environ.get("BLSAC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

ou_paths = _impl.ou_paths
circular_stencil = _impl.circular_stencil
simulate_chain = _impl.simulate_chain

__all__ = ["BACKEND", "ou_paths", "circular_stencil", "simulate_chain"]
