"""Backend selection for the moment kernels.

The compiled extension ``hdlingam._kernels`` is used when it imports;
otherwise the numpy reference ``hdlingam._pykernels`` is used. Setting
``HDLINGAM_PURE_PYTHON=1`` forces the fallback.
"""
import importlib
import os

from . import _pykernels

BACKENDS = ("cython", "python")


def load(name=None):
    """Return the kernel module for ``name`` (``"cython"``, ``"python"`` or None for default)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        return importlib.import_module("hdlingam._kernels")
    raise ValueError(f"unknown kernel backend {name!r}")


def available():
    out = ["python"]
    try:
        load("cython")
    except ImportError:
        pass
    else:
        out.insert(0, "cython")
    return out


if os.environ.get("HDLINGAM_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl, BACKEND = _pykernels, "python"
else:
    try:
        _impl, BACKEND = load("cython"), "cython"
    except ImportError:
        _impl, BACKEND = _pykernels, "python"

gram = _impl.gram
moment = _impl.moment
residual = _impl.residual
residual_moments = _impl.residual_moments
cross_moment = _impl.cross_moment
cross_moments = _impl.cross_moments
