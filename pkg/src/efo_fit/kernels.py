"""Backend selection for the hot projection kernel.

The compiled extension is used when it was built; otherwise, or when
``EFO_FIT_BACKEND=python`` is set, the numpy implementation is used. Both give
bitwise-identical results.
"""
import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _kernels_c
except ImportError:  # extension not built
    _kernels_c = None

_BACKENDS = {"python": _kernels_py}
if _kernels_c is not None:
    _BACKENDS["cython"] = _kernels_c

_active = "cython" if _kernels_c is not None else "python"
if os.environ.get("EFO_FIT_BACKEND") in _BACKENDS:
    _active = os.environ["EFO_FIT_BACKEND"]


def available_backends():
    return sorted(_BACKENDS)


def backend():
    return _active


def set_backend(name):
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available_backends()}")
    _active = name


def project(kind, src, operands, out, backend=None):
    """Max-T projection of ``src`` through one or more CSR operands, in place on ``out``."""
    impl = _BACKENDS[backend or _active]
    src = np.ascontiguousarray(src, dtype=np.float64)
    return impl.project(int(kind), src, operands, out)
