"""Kernel backend selection.

The compiled extension is used when importable; otherwise, or when the
environment variable ``VANSLBM_BACKEND=python`` is set, the NumPy version is
used. ``get_backend(name)`` returns a specific one.
"""
from __future__ import annotations

import logging
import os

from ..lattice import C, W
from . import _numpy_kernel
from .params import KernelGeometry, KernelParams, KernelState

log = logging.getLogger(__name__)

try:
    from . import _ckernel

    _ckernel._init_lattice(C, W)
except ImportError:  # extension not built
    _ckernel = None

_BACKENDS = {"numpy": _numpy_kernel, "python": _numpy_kernel}
if _ckernel is not None:
    _BACKENDS["cython"] = _ckernel


def available():
    return sorted(set(_BACKENDS) - {"python"})


def get_backend(name=None):
    if name is None:
        name = os.environ.get("VANSLBM_BACKEND", "auto")
    if name == "auto":
        return _ckernel if _ckernel is not None else _numpy_kernel
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {available()}") from None


default = get_backend()

__all__ = ["KernelGeometry", "KernelParams", "KernelState", "available", "get_backend", "default"]
