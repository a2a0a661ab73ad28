"""Backend selection for the grid kernels.

The compiled extension is used when it imports; otherwise (or when
``NODALSPEC_PURE_PYTHON=1``) the NumPy fallback is used. Both expose
``marching_squares`` and ``segment_distances`` with identical semantics.
"""

import importlib
import os

from . import _pykernels

BACKENDS = ("cython", "python")


def load_backend(name: str):
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("nodalspec._ckernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends() -> list[str]:
    names = []
    for name in BACKENDS:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


if os.environ.get("NODALSPEC_PURE_PYTHON", "") not in ("", "0"):
    BACKEND = "python"
    _impl = _pykernels
else:
    try:
        _impl = load_backend("cython")
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

marching_squares = _impl.marching_squares
segment_distances = _impl.segment_distances
