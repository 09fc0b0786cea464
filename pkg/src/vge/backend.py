"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set ``VGE_BACKEND=python`` or ``VGE_BACKEND=compiled`` to force a choice;
the default picks the compiled core when it imports cleanly. Both backends
implement identical per-sample semantics (parity is covered by the test
suite), so a given install always produces the same bytes for the same
inputs.
"""

from __future__ import annotations

import os

from . import _kernels as _python_kernels

try:
    from . import _core as _compiled_kernels
except ImportError:
    _compiled_kernels = None

AVAILABLE = ("python",) if _compiled_kernels is None else ("python", "compiled")


def get_backend(name: str):
    """Return the kernel module for an explicit backend name."""
    if name == "python":
        return _python_kernels
    if name == "compiled":
        if _compiled_kernels is None:
            raise ImportError("compiled kernel extension is not built")
        return _compiled_kernels
    raise ValueError(f"unknown backend {name!r} (expected 'python' or 'compiled')")


_requested = os.environ.get("VGE_BACKEND", "auto").strip().lower() or "auto"
if _requested == "auto":
    _impl = _compiled_kernels if _compiled_kernels is not None else _python_kernels
    ACTIVE = "compiled" if _compiled_kernels is not None else "python"
else:
    _impl = get_backend(_requested)
    ACTIVE = _requested

moments_batch = _impl.moments_batch
decompose_batch = _impl.decompose_batch
epkl_batch = _impl.epkl_batch
epjs_batch = _impl.epjs_batch
vgmu_batch = _impl.vgmu_batch
