"""Backend selection for the hot kernels.

The compiled extension is used when it imports; set
``GAUSS_DEANON_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _kernels_py

compiled = None
if not os.environ.get("GAUSS_DEANON_PURE_PYTHON"):
    try:
        from . import _kernels as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else _kernels_py

BACKEND = "cython" if compiled is not None else "python"
threshold_components = _impl.threshold_components
perm_distances = _impl.perm_distances

__all__ = ["BACKEND", "threshold_components", "perm_distances", "compiled"]
