"""Clearing-kernel selection.

The compiled extension is preferred; the numpy reference implementation is
the fallback.  COURNOT_LA_KERNEL=python|cython forces one side (used by the
benchmark and the parity tests).
"""
import os

from . import active_set as _py

_requested = os.environ.get("COURNOT_LA_KERNEL", "").lower()

STATUS_OK = _py.STATUS_OK
STATUS_INFEASIBLE = _py.STATUS_INFEASIBLE

if _requested == "python":
    solve_clearing = _py.solve_clearing
    KERNEL_NAME = "python"
else:
    try:
        from ._active_set_cy import solve_clearing  # noqa: F401
        KERNEL_NAME = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        solve_clearing = _py.solve_clearing
        KERNEL_NAME = "python"


def python_kernel():
    return _py.solve_clearing
