"""Kernel backend selection.

The compiled extension is preferred; set ``BATWB_PURE_PYTHON=1`` to force
the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"

if os.environ.get("BATWB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _pykernels
else:
    _impl = _pykernels

tridiag_solve = _impl.tridiag_solve
implicit_diffusion = _impl.implicit_diffusion
best_split = _impl.best_split


def backend_module(name):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _pykernels
    from . import _ckernels

    return _ckernels
