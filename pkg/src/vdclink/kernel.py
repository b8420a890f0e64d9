"""Backend selection for the time-stepping kernel.

The compiled extension is used when it imports; otherwise, or when
``VDCLINK_PURE_PYTHON=1`` is set, the pure-Python reference takes over.
"""

import os

from . import _kernel_py

BACKEND = "python"
advance = _kernel_py.advance

if os.environ.get("VDCLINK_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernel as _compiled
    except ImportError:  # pragma: no cover - depends on build
        _compiled = None
    if _compiled is not None:
        advance = _compiled.advance
        BACKEND = "cython"


def backends():
    """Available ``name -> advance`` callables, for parity tests and benchmarks."""
    out = {"python": _kernel_py.advance}
    try:
        from . import _kernel as compiled
        out["cython"] = compiled.advance
    except ImportError:  # pragma: no cover
        pass
    return out
