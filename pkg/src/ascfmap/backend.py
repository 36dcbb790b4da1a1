"""Kernel backend chosen at import time.

The compiled extension is preferred.  ``ASC_BACKEND=python`` forces the
numpy fallback; ``ASC_BACKEND=cython`` makes a missing extension an error.
"""

import os

from . import _fallback

ADAPTIVE = _fallback.ADAPTIVE
REVISED_ONLY = _fallback.REVISED_ONLY
LOG_ONLY = _fallback.LOG_ONLY


def _load(choice: str):
    if choice == "python":
        return _fallback
    try:
        from . import _kernels
    except ImportError:
        if choice == "cython":
            raise
        return _fallback
    return _kernels


def available() -> dict:
    """Every importable backend by name."""
    found = {"python": _fallback}
    try:
        from . import _kernels

        found["cython"] = _kernels
    except ImportError:
        pass
    return found


kernels = _load(os.environ.get("ASC_BACKEND", "auto").lower())
NAME = kernels.NAME
