"""Kernel selection.

The compiled extension is used when importable; ``FSM_JACOBI_PURE=1``
forces the pure-Python fallback. ``BACKEND`` names the active one.
"""

import os

from . import _purepy

if os.environ.get("FSM_JACOBI_PURE", "") not in ("", "0"):
    _impl = _purepy
else:
    try:
        from . import _kernels as _impl
    except ImportError:  # extension not built
        _impl = _purepy

BACKEND = "compiled" if _impl is not _purepy else "python"

thomas = _impl.thomas
upper3 = _impl.upper3
lower3 = _impl.lower3
scan_right = _impl.scan_right
scan_left = _impl.scan_left


def implementations():
    """Return ``{name: module}`` for every kernel implementation available."""
    out = {"python": _purepy}
    try:
        from . import _kernels
        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
