"""Hot numeric kernels: sparse-adjacency matmul and word-pair counting.

Both kernels have a numba @njit implementation and a pure-numpy fallback.
The fallback is selected when numba is unavailable or when the environment
variable SLICEGCN_NUMBA is set to "0". Both paths accumulate in the same
element order, so results are bit-identical across paths.

benchmarks/bench_accel.py compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np

_env = os.environ.get("SLICEGCN_NUMBA", "1").strip().lower()
_want_numba = _env not in ("0", "false", "off")

if _want_numba:
    try:
        from numba import njit

        using_numba = True
    except ImportError:
        using_numba = False
else:
    using_numba = False


def _coo_matmul_py(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, dense: np.ndarray) -> np.ndarray:
    out = np.zeros((dense.shape[0], dense.shape[1]), dtype=np.float64)
    # Unbuffered scatter-add visits entries in array order, matching the
    # jitted loop exactly.
    np.add.at(out, rows, vals[:, None] * dense[cols])
    return out


def _pair_keys_py(starts: np.ndarray, flat: np.ndarray) -> np.ndarray:
    """All i<j word-index pairs per slice, encoded as i*2**32+j."""
    keys = []
    for s in range(len(starts) - 1):
        w = flat[starts[s] : starts[s + 1]]
        if len(w) < 2:
            continue
        a, b = np.triu_indices(len(w), k=1)
        keys.append(w[a].astype(np.int64) * 2**32 + w[b].astype(np.int64))
    if not keys:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(keys)


if using_numba:

    @njit(cache=True)
    def _coo_matmul_nb(rows, cols, vals, dense):  # pragma: no cover - jitted
        out = np.zeros((dense.shape[0], dense.shape[1]), dtype=np.float64)
        for e in range(rows.shape[0]):
            r = rows[e]
            c = cols[e]
            v = vals[e]
            for k in range(dense.shape[1]):
                out[r, k] += v * dense[c, k]
        return out

    @njit(cache=True)
    def _pair_keys_nb(starts, flat):  # pragma: no cover - jitted
        total = 0
        for s in range(starts.shape[0] - 1):
            m = starts[s + 1] - starts[s]
            total += m * (m - 1) // 2
        keys = np.empty(total, dtype=np.int64)
        pos = 0
        for s in range(starts.shape[0] - 1):
            lo = starts[s]
            hi = starts[s + 1]
            for a in range(lo, hi):
                for b in range(a + 1, hi):
                    keys[pos] = flat[a] * 2**32 + flat[b]
                    pos += 1
        return keys


def coo_matmul(rows: np.ndarray, cols: np.ndarray, vals: np.ndarray, dense: np.ndarray) -> np.ndarray:
    """(sparse COO matrix) @ dense, for a square matrix over dense's rows."""
    if using_numba:
        return _coo_matmul_nb(rows, cols, vals, np.ascontiguousarray(dense))
    return _coo_matmul_py(rows, cols, vals, dense)


def pair_keys(starts: np.ndarray, flat: np.ndarray) -> np.ndarray:
    """Encoded (i<j) pairs of the per-slice sorted unique word-index runs
    flat[starts[s]:starts[s+1]]. Joint counts follow from np.unique."""
    if using_numba:
        return _pair_keys_nb(starts, flat)
    return _pair_keys_py(starts, flat)


def warmup() -> None:
    """Trigger jit compilation outside timed sections."""
    rows = np.array([0, 1], dtype=np.int64)
    cols = np.array([1, 0], dtype=np.int64)
    vals = np.array([1.0, 1.0])
    coo_matmul(rows, cols, vals, np.ones((2, 2)))
    pair_keys(np.array([0, 2], dtype=np.int64), np.array([0, 1], dtype=np.int64))
