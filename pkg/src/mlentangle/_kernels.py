"""Fused loop for evolving the level-diagonal ensemble on large grids."""

import numpy as np
from numba import njit


@njit(cache=True)
def ensemble_kernel(psi, dims, strides, lambdas, delta, t, out):
    """Fill ``out[i, a, k]`` (branch, level, flat field index).

    Branch ``i`` starts on level ``i`` with field ``psi``; every grid point
    ``n`` is treated as a block label. Each entry of ``out`` is written
    exactly once, so it may arrive uninitialized.
    """
    nm = dims.size
    size = psi.size
    n = np.zeros(nm, dtype=np.int64)
    c = np.zeros(nm)
    inside = np.zeros(nm, dtype=np.bool_)
    phase = np.exp(-0.5j * delta * t)
    for f in range(size):
        v = 0.0
        for j in range(nm):
            inside[j] = n[j] + 1 < dims[j]
            c[j] = lambdas[j] * np.sqrt(n[j] + 1.0) if inside[j] else 0.0
            v += c[j] * c[j]
        mu = np.sqrt(0.25 * delta * delta + v)
        cos = np.cos(mu * t)
        sinc = np.sin(mu * t) / mu if mu > 0 else t
        a = phase * (cos - 0.5j * delta * sinc)
        b = -1j * phase * sinc
        d = (phase * (cos + 0.5j * delta * sinc) - 1.0) / v if v > 0 else 0.0j

        p = psi[f]
        out[0, 0, f] = a * p
        bp = b * p
        for k in range(nm):
            if inside[k]:
                out[0, k + 1, f + strides[k]] = bp * c[k]
            if n[k] == 0:
                out[0, k + 1, f] = 0.0
        for j in range(nm):
            # lower states with n_k = 0 are never the image of a block
            for k in range(nm):
                if n[k] == 0:
                    out[j + 1, k + 1, f] = p if k == j else 0.0
            x = psi[f + strides[j]] if inside[j] else 0.0j
            out[j + 1, 0, f] = b * c[j] * x
            cdx = c[j] * d * x
            for k in range(nm):
                if inside[k]:
                    y = c[k] * cdx
                    if k == j:
                        y += x
                    out[j + 1, k + 1, f + strides[k]] = y

        # advance the row-major multi-index
        j = nm - 1
        while j >= 0:
            n[j] += 1
            if n[j] < dims[j]:
                break
            n[j] = 0
            j -= 1
