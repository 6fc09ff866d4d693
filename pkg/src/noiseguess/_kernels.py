"""Optional compiled kernels for the Monte-Carlo hot path.

Everything here has a pure-numpy fallback producing bit-identical output;
numba only changes speed, never results.
"""

from __future__ import annotations

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - environment without numba
    numba = None
    HAVE_NUMBA = False


def _mixture_walk_numpy(u: np.ndarray, t0: np.ndarray, t1: np.ndarray, start_one: bool) -> np.ndarray:
    size, n = u.shape
    acc = np.zeros(size, dtype=np.uint64)
    z = np.full(size, start_one)
    one = np.uint64(1)
    for i in range(n):
        z = u[:, i] < np.where(z, t1, t0)
        acc = (acc << one) | z.astype(np.uint64)
    return acc


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _mixture_walk_numba(u, t0, t1, start_one):  # pragma: no cover - jitted
        size, n = u.shape
        acc = np.empty(size, dtype=np.uint64)
        for b in range(size):
            z = start_one
            a = np.uint64(0)
            lo = t0[b]
            hi = t1[b]
            for i in range(n):
                th = hi if z else lo
                z = u[b, i] < th
                a = (a << np.uint64(1)) | np.uint64(1 if z else 0)
            acc[b] = a
        return acc

    def mixture_walk(u, t0, t1, start_one):
        return _mixture_walk_numba(u, t0, t1, start_one)

else:
    mixture_walk = _mixture_walk_numpy
