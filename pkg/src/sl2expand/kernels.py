"""Backend selection for the hot loops.

The compiled module is used when it imports; ``SL2EXPAND_PURE=1`` forces the
numpy fallback.  Both expose the same functions with identical results.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("SL2EXPAND_PURE", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND


def backends():
    """Available backend modules keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def pushforward(mu, right, impl=None):
    return (impl or _impl).pushforward(np.ascontiguousarray(mu, dtype=np.float64), _i64(right))


def pushforward_counts(counts, right, impl=None):
    return (impl or _impl).pushforward_counts(_i64(counts), _i64(right))


def table_mean(f, left, impl=None):
    return (impl or _impl).table_mean(np.ascontiguousarray(f, dtype=np.float64), _i64(left))


def bfs_depths(table, start=0, impl=None):
    return (impl or _impl).bfs_depths(_i64(table), int(start))


def girth_bfs(right, inv_letter, max_length, impl=None):
    best, depth = (impl or _impl).girth_bfs(_i64(right), _i64(inv_letter), int(max_length))
    return int(best), int(depth)


def field_right_mul(state, gens, letters, field, impl=None):
    """In place: state[i] <- state[i] @ gens[letters[i]] over ``field``."""
    (impl or _impl).field_right_mul(
        state, np.ascontiguousarray(gens, dtype=np.int32), _i64(letters),
        field.exp, field.log, field.zech, int(field.q),
    )


def poly_right_mul(state, gens, letters, p, width, impl=None):
    (impl or _impl).poly_right_mul(state, _i64(gens), _i64(letters), int(p), int(width))
