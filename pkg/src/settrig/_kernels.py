"""Pick the pivoting kernel at import time.

The compiled extension is used when it was built; otherwise the numpy
fallback. Set ``SETTRIG_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _simplex_py

try:
    from . import _simplex_ext
except ImportError:  # extension not built
    _simplex_ext = None

KERNELS = {"python": _simplex_py}
if _simplex_ext is not None:
    KERNELS["compiled"] = _simplex_ext

if os.environ.get("SETTRIG_PURE_PYTHON", "") not in ("", "0") or _simplex_ext is None:
    BACKEND = "python"
else:
    BACKEND = "compiled"


def get_kernel(name=None):
    name = name or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"kernel {name!r} is not available (have {sorted(KERNELS)})") from None
