"""Pick the kernel implementation at import time.

``DACLAB_BACKEND=python`` forces the pure-Python kernels; otherwise the
compiled extension is used when it imports.
"""
from __future__ import annotations

import os

from . import _pykernels

_requested = os.environ.get("DACLAB_BACKEND", "auto").lower()

if _requested == "python":
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as kernels  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        kernels = _pykernels
        BACKEND = "python"

COMPILED_MAX_BITS = 63


def kernels_for(width: int, frac_bits: int):
    """Compiled kernels need range*prob to fit in 64 bits."""
    if kernels is not _pykernels and width + frac_bits > COMPILED_MAX_BITS:
        return _pykernels
    return kernels
