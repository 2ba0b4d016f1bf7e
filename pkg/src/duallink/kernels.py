"""Backend selection for the per-iteration kernels.

The compiled Cython extension is used when it imports; otherwise, or when
the environment variable ``DUALLINK_PURE_PYTHON`` is set to a non-empty
value other than ``0``, the numpy fallback is used. Both expose
``interference_cov``, ``dual_map`` and ``normalize_psd`` with identical
semantics.
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

__all__ = ["BACKEND", "available_backends", "get_backend",
           "interference_cov", "dual_map", "normalize_psd"]


def _force_pure():
    return os.environ.get("DUALLINK_PURE_PYTHON", "") not in ("", "0")


_impl = _kernels_py if (_compiled is None or _force_pure()) else _compiled
BACKEND = _impl.BACKEND


def available_backends():
    """Names of importable backends, compiled first."""
    names = []
    if _compiled is not None:
        names.append(_compiled.BACKEND)
    names.append(_kernels_py.BACKEND)
    return names


class _Backend:
    """Thin wrapper that coerces dtypes/contiguity before calling a backend."""

    def __init__(self, mod):
        self.name = mod.BACKEND
        self._mod = mod

    def interference_cov(self, G, S, active):
        return self._mod.interference_cov(
            np.ascontiguousarray(G, dtype=np.complex128),
            np.ascontiguousarray(S, dtype=np.complex128),
            np.ascontiguousarray(active, dtype=np.uint8))

    def dual_map(self, Hd, S, Omega, w):
        return self._mod.dual_map(
            np.ascontiguousarray(Hd, dtype=np.complex128),
            np.ascontiguousarray(S, dtype=np.complex128),
            np.ascontiguousarray(Omega, dtype=np.complex128),
            np.ascontiguousarray(w, dtype=np.float64))

    def normalize_psd(self, lam, total_power, rtol):
        return self._mod.normalize_psd(
            np.ascontiguousarray(lam, dtype=np.complex128), float(total_power), float(rtol))


def get_backend(name=None):
    """Return a backend by name (``"cython"`` or ``"numpy"``); default is the active one."""
    if name is None:
        return _default
    if name == _kernels_py.BACKEND:
        return _Backend(_kernels_py)
    if _compiled is not None and name == _compiled.BACKEND:
        return _Backend(_compiled)
    raise ValueError(f"backend {name!r} not available; have {available_backends()}")


_default = _Backend(_impl)
interference_cov = _default.interference_cov
dual_map = _default.dual_map
normalize_psd = _default.normalize_psd
