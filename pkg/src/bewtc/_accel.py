"""Numba kernels for erasure-pattern solvability tests.

Everything here works on rows packed as little-endian uint64 words.
A bit u_i is recoverable from the unerased codeword positions exactly
when its generator row (restricted to unerased columns) is outside the
GF(2) span of the rows of the other still-unknown bits.  Each kernel
therefore runs one incremental elimination per erasure pattern: insert
the never-queried rows first, then process query rows in the caller's
order, testing each row against the basis before inserting its reduced
remainder.  For the all-past convention the query order n-1..0 makes
the basis at query time hold exactly the rows below the target.

Reductions are organized so results are bit-identical for any thread
count: trial outcomes are integers written to disjoint slots, and the
exact kernels accumulate into a fixed number of chunk partials.
"""

import warnings

import numpy as np

warnings.filterwarnings("ignore", message=".*TBB.*")

from numba import njit, prange

_NCHUNKS = 64


@njit(inline="always", cache=True)
def _top64(x):
    r = 0
    if x >> np.uint64(32):
        x >>= np.uint64(32)
        r += 32
    if x >> np.uint64(16):
        x >>= np.uint64(16)
        r += 16
    if x >> np.uint64(8):
        x >>= np.uint64(8)
        r += 8
    if x >> np.uint64(4):
        x >>= np.uint64(4)
        r += 4
    if x >> np.uint64(2):
        x >>= np.uint64(2)
        r += 2
    if x >> np.uint64(1):
        r += 1
    return r


@njit(inline="always", cache=True)
def _popcnt64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    return int((x * np.uint64(0x0101010101010101)) >> np.uint64(56))


@njit(inline="always", cache=True)
def _reduce_insert(vec, basis, occ, nwords):
    """Reduce vec against the pivot-indexed basis, inserting any remainder.

    Returns 1 if the remainder was nonzero (vec independent of the basis),
    0 if vec reduced to zero.  basis rows are keyed by top-bit position;
    occ marks which pivots are present.
    """
    while True:
        top = -1
        for wi in range(nwords - 1, -1, -1):
            if vec[wi]:
                top = (wi << 6) + _top64(vec[wi])
                break
        if top < 0:
            return 0
        if occ[top]:
            for wi in range(nwords):
                vec[wi] ^= basis[top, wi]
        else:
            for wi in range(nwords):
                basis[top, wi] = vec[wi]
            occ[top] = 1
            return 1


@njit(cache=True, parallel=True)
def solve_trials(rows, masks, pool, targets, out):
    """Per-trial solvability of each target bit.

    rows: (n, W) packed generator rows.  masks: (T, W) packed unerased
    column masks, one per trial.  pool: row indices that are unknown but
    never queried.  targets: row indices queried in the given order,
    query-then-insert.  out: (T, len(targets)) uint8, 1 = determined.
    """
    ntrials = masks.shape[0]
    nwords = rows.shape[1]
    nbits = nwords * 64
    npool = pool.shape[0]
    ntargets = targets.shape[0]
    for t in prange(ntrials):
        basis = np.zeros((nbits, nwords), dtype=np.uint64)
        occ = np.zeros(nbits, dtype=np.uint8)
        vec = np.empty(nwords, dtype=np.uint64)
        for j in range(npool):
            r = pool[j]
            for wi in range(nwords):
                vec[wi] = rows[r, wi] & masks[t, wi]
            _reduce_insert(vec, basis, occ, nwords)
        for q in range(ntargets):
            r = targets[q]
            for wi in range(nwords):
                vec[wi] = rows[r, wi] & masks[t, wi]
            out[t, q] = _reduce_insert(vec, basis, occ, nwords)


@njit(cache=True, parallel=True)
def exact_undetermined(rows, n, pool, targets, weights):
    """Exact per-target probability of NOT being determined.

    Enumerates all 2^n erasure patterns (n <= 63; rows packed in one
    word) and accumulates weights[e] = p^e (1-p)^(n-e) whenever the
    target is unsolvable.  Chunked partial sums keep the floating-point
    reduction order independent of the thread count.
    """
    total = 1 << n
    ntargets = targets.shape[0]
    nchunks = _NCHUNKS if total >= _NCHUNKS else total
    chunk = (total + nchunks - 1) // nchunks
    partial = np.zeros((nchunks, ntargets))
    full = (np.uint64(1) << np.uint64(n)) - np.uint64(1)
    for c in prange(nchunks):
        lo = c * chunk
        hi = min(lo + chunk, total)
        basis = np.zeros((64, 1), dtype=np.uint64)
        occ = np.zeros(64, dtype=np.uint8)
        vec = np.empty(1, dtype=np.uint64)
        for pat in range(lo, hi):
            erased = np.uint64(pat)
            mask = ~erased & full
            w = weights[_popcnt64(erased)]
            occ[:] = 0
            for j in range(pool.shape[0]):
                vec[0] = rows[pool[j], 0] & mask
                _reduce_insert(vec, basis, occ, 1)
            for q in range(ntargets):
                vec[0] = rows[targets[q], 0] & mask
                if _reduce_insert(vec, basis, occ, 1) == 0:
                    partial[c, q] += w
    return partial.sum(axis=0)


@njit(cache=True, parallel=True)
def leakage_sum(rows, n, weights):
    """Total variation leakage by erasure-pattern enumeration.

    rows: packed generator rows of the randomness positions (complement
    of the message set).  For each pattern with e erasures the group of
    eavesdropper outputs sharing that pattern contributes
    weights[e] * (1 - 2^(rho - (n-e))) where rho is the rank of rows on
    the unerased columns; summing over all 2^n patterns gives the exact
    average TVD between the joint and product message/output laws.
    """
    total = 1 << n
    nrows = rows.shape[0]
    nchunks = _NCHUNKS if total >= _NCHUNKS else total
    chunk = (total + nchunks - 1) // nchunks
    partial = np.zeros(nchunks)
    full = (np.uint64(1) << np.uint64(n)) - np.uint64(1)
    for c in prange(nchunks):
        lo = c * chunk
        hi = min(lo + chunk, total)
        basis = np.zeros((64, 1), dtype=np.uint64)
        occ = np.zeros(64, dtype=np.uint8)
        vec = np.empty(1, dtype=np.uint64)
        acc = 0.0
        for pat in range(lo, hi):
            erased = np.uint64(pat)
            mask = ~erased & full
            e = _popcnt64(erased)
            occ[:] = 0
            rho = 0
            for i in range(nrows):
                vec[0] = rows[i, 0] & mask
                rho += _reduce_insert(vec, basis, occ, 1)
            acc += weights[e] * (1.0 - 2.0 ** np.float64(rho - (n - e)))
        partial[c] = acc
    return partial.sum()
