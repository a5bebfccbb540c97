"""Selects the research-step kernel at import time.

The compiled extension is used when it was built; set ``ESLS_BACKEND=python``
to force the pure-Python fallback (``ESLS_BACKEND=cython`` makes a missing
extension an error).
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled

_requested = os.environ.get("ESLS_BACKEND", "").strip().lower()
if _requested and _requested not in ("python", "cython"):
    raise ImportError(f"unknown ESLS_BACKEND {_requested!r}")
if _requested == "cython" and _compiled is None:
    raise ImportError("ESLS_BACKEND=cython but the compiled extension is not built")

kernels = _kernels_py if _requested == "python" or _compiled is None else _compiled
BACKEND = kernels.NAME
