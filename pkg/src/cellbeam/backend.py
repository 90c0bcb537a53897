"""Sweep-kernel backend selection.

The compiled extension is preferred when importable; setting the environment
variable ``CELLBEAM_NO_EXT`` (to anything nonempty) forces the pure-NumPy
fallback.  Both backends implement the same ``dual_map_sweep`` contract and
agree to floating-point round-off.
"""

import os

from . import _pencil_np

if os.environ.get("CELLBEAM_NO_EXT"):
    _impl = _pencil_np
else:
    try:
        from . import _pencil as _impl
    except ImportError:
        _impl = _pencil_np

dual_map_sweep = _impl.dual_map_sweep
COMPILED = bool(_impl.COMPILED)


def backend_name():
    return "compiled" if COMPILED else "numpy"
