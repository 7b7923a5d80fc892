"""Kernel backend selection.

The compiled ``_kernels`` extension is used when importable; otherwise the
pure-Python ``_pykernels`` twin. Set ``ILPSHAPE_BACKEND=python`` to force the
fallback (``cython`` makes a missing extension an import error).
"""

import importlib
import os

_choice = os.environ.get("ILPSHAPE_BACKEND", "auto").lower()
if _choice not in ("auto", "python", "cython"):
    raise ImportError(f"ILPSHAPE_BACKEND must be auto, python or cython, not {_choice!r}")

if _choice == "python":
    from . import _pykernels as kernels
elif _choice == "cython":
    from . import _kernels as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        from . import _pykernels as kernels

BACKEND = kernels.BACKEND


def load(name):
    """Import a backend by name (``"python"`` or ``"cython"``)."""
    module = {"python": "._pykernels", "cython": "._kernels"}[name]
    return importlib.import_module(module, __package__)


def available():
    names = ["python"]
    try:
        load("cython")
        names.append("cython")
    except ImportError:
        pass
    return names
