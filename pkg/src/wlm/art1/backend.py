"""Pick the ART1 kernel: the compiled extension when importable, else numpy.

Set ``WLM_PURE_PYTHON=1`` to force the numpy kernel.
"""

import os

from . import _pure

try:
    if os.environ.get("WLM_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python kernel requested")
    from . import _kernel as kernel
except ImportError:
    kernel = _pure

BACKEND = kernel.BACKEND


def available() -> dict:
    """All importable kernels by name."""
    found = {"python": _pure}
    try:
        from . import _kernel
    except ImportError:
        pass
    else:
        found["cython"] = _kernel
    return found
