"""Kernel backend selection.

The compiled extension is preferred; the pure Python module is a drop-in
fallback so the package works from a plain source checkout.  Set
MVSET_KERNELS=python to force the fallback (used by the benchmark and by
backend parity tests).
"""

import os

if os.environ.get("MVSET_KERNELS", "").lower() == "python":
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

psor_sweep = _impl.psor_sweep
forward_subst = _impl.forward_subst
backward_subst = _impl.backward_subst


def backend() -> str:
    """Name of the active kernel backend, "compiled" or "python"."""
    return BACKEND
