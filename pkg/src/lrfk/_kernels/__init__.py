"""Kernel lane selection.

Imports the compiled Cython kernels when the extension is built, otherwise
falls back to the pure-Python lane.  Set LRFK_PURE=1 to force the fallback
(used by the benchmark and the lane-equivalence tests).
"""
import os

from . import _pure

DONE = _pure.DONE
NEED_POOL = _pure.NEED_POOL
STORED_EVENT = _pure.STORED_EVENT
GROW_BONDS = _pure.GROW_BONDS

if os.environ.get("LRFK_PURE", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from . import _speed as _impl
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND

label_clusters = _impl.label_clusters
enum_shard = _impl.enum_shard
hb_chunk = _impl.hb_chunk
skip_candidates = _impl.skip_candidates
es_chunk = _impl.es_chunk

pure = _pure
