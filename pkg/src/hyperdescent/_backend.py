"""Select the kernel implementation at import time.

The compiled extension is used when it imports cleanly.  Setting the
environment variable ``HYPERDESCENT_PURE_PYTHON=1`` forces the pure-Python
kernels, which is handy for debugging and for the benchmark.
"""

import os

if os.environ.get("HYPERDESCENT_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:  # extension not built
        from . import _pykernels as kernels

BACKEND = kernels.BACKEND

__all__ = ["kernels", "BACKEND"]
