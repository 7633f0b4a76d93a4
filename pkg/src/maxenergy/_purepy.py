"""NumPy implementations of the hot loops in ``_core.pyx``.

Same signatures and semantics; used when the extension is not built or when
``MAXENERGY_PURE`` is set.
"""
from __future__ import annotations

import numpy as np

BACKEND = "python"

_BLOCK_BYTES = 32 * 2**20


def _profile(family: int, p0: float, p1: float, r: np.ndarray) -> np.ndarray:
    if family == 1:
        return np.exp(-r / p0)
    if family == 2:
        return p1 * np.exp(-(r * r) / (4.0 * p0))
    if family == 3:
        with np.errstate(divide="ignore"):
            return r ** (-p0)
    if family == 4:
        return np.where(r < p0, p0 - r, 0.0)
    return np.ones_like(r)


def apply_direct(nodes, v, family, p0, p1, manhattan, skip_diag, nthreads=1):
    nodes = np.ascontiguousarray(nodes, dtype=float)
    v = np.ascontiguousarray(v, dtype=float)
    n, p = nodes.shape
    out = np.empty(n)
    block = max(1, _BLOCK_BYTES // (8 * max(n, 1) * (p + 1)))
    for start in range(0, n, block):
        stop = min(n, start + block)
        diff = nodes[start:stop, None, :] - nodes[None, :, :]
        if manhattan:
            dist = np.abs(diff).sum(axis=2)
        else:
            dist = np.sqrt((diff * diff).sum(axis=2))
        kmat = _profile(family, p0, p1, dist)
        if skip_diag:
            rows = np.arange(start, stop)
            kmat[rows - start, rows] = 0.0
        out[start:stop] = (kmat * v).sum(axis=1)
    return out


def interval_search(cand, counts, lo, hi, sep, cover, family, p0, p1, eps, mode, threshold):
    cand = np.asarray(cand, dtype=float)
    n = cand.shape[0]
    # prefixes are kept in lexicographic (depth-first) order throughout
    prefix = np.empty((1, 0))
    pidx = np.empty((1, 0), dtype=np.intc)
    for level in range(n):
        c = cand[level, : counts[level]]
        remaining = n - 1 - level
        x = np.repeat(prefix, c.size, axis=0)
        xi = np.repeat(pidx, c.size, axis=0)
        v = np.tile(c, prefix.shape[0])
        k = np.tile(np.arange(c.size, dtype=np.intc), prefix.shape[0])
        ok = (v >= lo - eps) & (v <= hi + eps)
        if level == 0:
            ok &= v - lo <= cover + eps
        else:
            gap = v - x[:, -1]
            ok &= (gap >= sep - eps) & (gap <= 2.0 * cover + eps)
        ok &= v + remaining * 2.0 * cover >= hi - cover - eps
        ok &= v + remaining * sep <= hi + eps
        prefix = np.column_stack([x[ok], v[ok]])
        pidx = np.column_stack([xi[ok], k[ok]]).astype(np.intc)
        if prefix.shape[0] == 0:
            return False, 0.0, np.full(n, -1, dtype=np.intc), 0
    energy = np.zeros(prefix.shape[0])
    for i in range(n):
        for j in range(i + 1, n):
            energy = energy + _profile(family, p0, p1, prefix[:, j] - prefix[:, i])
    if mode == 0:
        best = int(np.argmax(energy))
    else:
        hits = np.flatnonzero(energy >= threshold)
        if hits.size == 0:
            return False, 0.0, np.full(n, -1, dtype=np.intc), int(energy.size)
        best = int(hits[0])
    return True, float(energy[best]), pidx[best].copy(), int(energy.size)
