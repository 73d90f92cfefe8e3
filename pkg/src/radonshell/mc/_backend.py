"""Kernel selection: compiled extension if importable, numpy otherwise.

Set ``RADONSHELL_PURE=1`` to force the numpy implementation.
"""
import os

import numpy as np

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

# numpy twin materialises every split at once; keep its working set small
_FALLBACK_CHUNK = 4096


class Backend:
    def __init__(self, name, module, chunk=None):
        self.name = name
        self._mod = module
        self._chunk = chunk

    def reciprocal_block(self, A, X, group_a, group_b, gamma, rtol):
        A = np.ascontiguousarray(A, dtype=np.float64)
        X = np.ascontiguousarray(X, dtype=np.float64)
        n = X.shape[0]
        if self._chunk is None or n <= self._chunk:
            return self._mod.reciprocal_block(A, X, group_a, group_b, gamma, rtol)
        vols, accs = [], []
        for lo in range(0, n, self._chunk):
            hi = min(lo + self._chunk, n)
            a = A if A.shape[0] == 1 else A[lo:hi]
            v, acc = self._mod.reciprocal_block(a, X[lo:hi], group_a, group_b, gamma, rtol)
            vols.append(v)
            accs.append(acc)
        return np.concatenate(vols), np.concatenate(accs)

    def block_volumes(self, P):
        return self._mod.block_volumes(np.ascontiguousarray(P, dtype=np.float64))

    def __repr__(self):
        return f"Backend({self.name!r})"


PYTHON = Backend("python", _fallback, chunk=_FALLBACK_CHUNK)
COMPILED = Backend("cython", _compiled) if _compiled is not None else None


def get_backend(name=None):
    """Return a backend by name (``"cython"``/``"python"``) or the default."""
    if name is None:
        if os.environ.get("RADONSHELL_PURE", "") not in ("", "0") or COMPILED is None:
            return PYTHON
        return COMPILED
    if name == "python":
        return PYTHON
    if name == "cython":
        if COMPILED is None:
            raise ImportError("compiled kernels are not built")
        return COMPILED
    raise ValueError(f"unknown backend {name!r}")


DEFAULT = get_backend()
