"""Select the compiled Jacobi kernels when available.

Set ``QADAPOSE_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _pykernels

if os.environ.get("QADAPOSE_PURE_PYTHON", "").strip() not in ("", "0"):
    kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        kernels = _pykernels
        BACKEND = "python"
    else:
        BACKEND = "cython"


def available_backends():
    """Map of backend name -> kernel module for every importable backend."""
    found = {"python": _pykernels}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        found["cython"] = _kernels
    return found
