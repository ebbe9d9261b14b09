"""Kernel backend selection.

The compiled extension is used when importable; set ``RWRE_PURE_PYTHON=1``
to force the pure-Python kernels. Both produce identical results.
"""
import os

import numpy as np

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

if _compiled is not None and not os.environ.get("RWRE_PURE_PYTHON"):
    kernels = _compiled
else:
    kernels = _pykernels

BACKEND = kernels.NAME
_INT64_HEADROOM = 1 << 62


def available():
    """Names of importable backends, compiled first."""
    return [k.NAME for k in (_compiled, _pykernels) if k is not None]


def get(name=None):
    if name is None:
        return kernels
    for k in (_compiled, _pykernels):
        if k is not None and k.NAME == name:
            return k
    raise ValueError(f"kernel backend {name!r} is not available (have {available()})")


def radix_for(jump_coords, steps):
    """Packing radix so that every site within ``steps`` jumps gets a distinct int64 key.

    Returns None when Z^d cannot be packed into an int64 at this scale.
    """
    jc = np.asarray(jump_coords, dtype=np.int64)
    reach = int(np.abs(jc).max(initial=0)) * max(int(steps), 1)
    radix = 2 * reach + 3
    if radix ** jc.shape[1] >= _INT64_HEADROOM:
        return None
    return radix


def pick(jump_coords, steps, backend=None):
    """Kernel module and radix for a walk of ``steps`` steps; falls back to Python if unpackable."""
    k = get(backend)
    radix = radix_for(jump_coords, steps)
    if radix is None:
        return _pykernels, None
    return k, radix


def for_index(index):
    """Kernel module whose HistoryIndex type ``index`` is."""
    for k in (_compiled, _pykernels):
        if k is not None and isinstance(index, k.HistoryIndex):
            return k
    raise TypeError(f"unknown history index type {type(index)!r}")


def convert_index(index, target):
    """Copy of ``index`` as ``target.HistoryIndex``, preserving ids."""
    if isinstance(index, target.HistoryIndex):
        return index.copy()
    out = target.HistoryIndex(index.m)
    for h in range(1, len(index)):
        out.intern(index.counts(h))
    return out
