"""Kernel backend selection.

The compiled Cython kernels are preferred when the extension built; the
pure-NumPy twin is the fallback.  Set ONEBIT_BACKEND=numpy (or =cython)
to force a choice, e.g. for the benchmark in benchmarks/.
"""

import os

from . import _kernels_np

_forced = os.environ.get("ONEBIT_BACKEND", "").strip().lower()

if _forced in ("", "cython", "c"):
    try:
        from . import _kernels as kernels
    except ImportError:
        if _forced:
            raise
        kernels = _kernels_np
else:
    kernels = _kernels_np

BACKEND = kernels.BACKEND_NAME


def get_kernels(name):
    """Return a specific kernel module by name ('cython' or 'numpy')."""
    if name == "numpy":
        return _kernels_np
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError("unknown backend %r" % (name,))


def available_backends():
    out = ["numpy"]
    try:
        from . import _kernels  # noqa: F401
        out.insert(0, "cython")
    except ImportError:
        pass
    return out
