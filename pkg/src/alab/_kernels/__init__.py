"""Kernel backend selection.

Two interchangeable implementations of the hot training kernels exist: a
compiled Cython extension (BLAS matmuls plus fused elementwise loops) and a
pure NumPy fallback.  The active one is chosen once at import:

  * ``ALAB_BACKEND=compiled`` — require the extension, fail loudly if absent;
  * ``ALAB_BACKEND=pure``     — force the NumPy implementation;
  * unset / ``auto``          — use the extension when importable.

Both backends consume the same caller-generated random numbers, so a run is
reproducible within a backend; across backends results agree to floating-point
rounding (see tests/test_kernels.py and benchmarks/bench_backends.py).
"""

from __future__ import annotations

import os

from alab._kernels import pure

_choice = os.environ.get("ALAB_BACKEND", "auto").lower()

if _choice not in ("auto", "compiled", "pure"):
    raise RuntimeError(
        f"ALAB_BACKEND={_choice!r} not understood (use auto, compiled, or pure)"
    )

if _choice == "pure":
    _impl = pure
    BACKEND = "pure"
else:
    try:
        from alab._kernels import _compiled as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        _impl = pure
        BACKEND = "pure"

forward_probs = _impl.forward_probs
train_minibatch = _impl.train_minibatch

__all__ = ["BACKEND", "forward_probs", "train_minibatch", "pure"]
