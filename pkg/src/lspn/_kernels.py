"""Compiled inner loops over packed uint64 words.

Everything here works on raw numpy arrays; the typed wrappers live in
:mod:`lspn.bitlin` and the solver modules.
"""

import numpy as np
from numba import njit

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)
_ONE = np.uint64(1)


@njit(cache=True, inline="always")
def popcount64(x):
    x = x - ((x >> _ONE) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


@njit(cache=True)
def rref(work, ncols, pivots):
    """Reduce ``work`` in place to reduced row echelon form over F2.

    Only the first ``ncols`` columns are pivoted on; bits beyond them (an
    augmented right-hand side, say) are carried along. Returns the rank and
    fills ``pivots[:rank]`` with pivot columns.
    """
    nrows, nwords = work.shape
    rank = 0
    for col in range(ncols):
        w = col >> 6
        bit = _ONE << np.uint64(col & 63)
        piv = -1
        for r in range(rank, nrows):
            if work[r, w] & bit:
                piv = r
                break
        if piv < 0:
            continue
        if piv != rank:
            for ww in range(w, nwords):
                tmp = work[piv, ww]
                work[piv, ww] = work[rank, ww]
                work[rank, ww] = tmp
        # the pivot row is zero left of `col`, so XOR can start at word w
        for r in range(nrows):
            if r != rank and (work[r, w] & bit):
                for ww in range(w, nwords):
                    work[r, ww] ^= work[rank, ww]
        pivots[rank] = col
        rank += 1
        if rank == nrows:
            break
    return rank


@njit(cache=True)
def floyd_subsets(u, m, out):
    """Fill ``out[b]`` with a uniform q-subset of range(m) per row of ``u``.

    ``u`` holds one uniform double per insertion step (Floyd's algorithm).
    Subsets are written in ascending order.
    """
    nb, q = u.shape
    mark = np.zeros(m, dtype=np.uint8)
    for b in range(nb):
        for i in range(q):
            j = m - q + i
            t = np.int64(u[b, i] * (j + 1))
            if t > j:
                t = j
            if mark[t]:
                mark[j] = 1
                out[b, i] = j
            else:
                mark[t] = 1
                out[b, i] = t
        out[b].sort()
        for i in range(q):
            mark[out[b, i]] = 0


@njit(cache=True)
def scan_subset_systems(rows, subsets, start, s, k, sol):
    """Walk ``subsets[start:]`` looking for a solvable full-rank system.

    ``rows`` packs X(i, S) in bits [0, s) and the label in bit s. For each
    row-subset T the q x s system is eliminated; T is skipped when the rank
    is below s or when the redundant rows contradict the labels. The first
    T whose unique solution has weight <= k is reported: its index is
    returned and its bits written to ``sol``. Returns -1 when none qualify.
    """
    nb, q = subsets.shape
    nwords = rows.shape[1]
    work = np.empty((q, nwords), dtype=np.uint64)
    pivots = np.empty(s, dtype=np.int64)
    yw = s >> 6
    ybit = _ONE << np.uint64(s & 63)
    for b in range(start, nb):
        for i in range(q):
            for w in range(nwords):
                work[i, w] = rows[subsets[b, i], w]
        rank = rref(work, s, pivots)
        if rank < s:
            continue
        consistent = True
        for r in range(rank, q):
            if work[r, yw] & ybit:
                consistent = False
                break
        if not consistent:
            continue
        weight = 0
        for r in range(s):
            bitv = 1 if (work[r, yw] & ybit) else 0
            sol[pivots[r]] = bitv
            weight += bitv
        if weight <= k:
            return b
    return -1


@njit(cache=True)
def gram_signed(colbits, pos_mask, neg_mask):
    """Signed Gram matrix of +-1 columns from their F2 bit-sets.

    Entry (a, b) = sum_i w_i * (-1)^(D[i,a] xor D[i,b]) with w_i = +1 on
    ``pos_mask`` rows and -1 on ``neg_mask`` rows.
    """
    ncols, nwords = colbits.shape
    n_pos = 0
    n_neg = 0
    for w in range(nwords):
        n_pos += popcount64(pos_mask[w])
        n_neg += popcount64(neg_mask[w])
    out = np.empty((ncols, ncols), dtype=np.int64)
    for a in range(ncols):
        out[a, a] = np.int64(n_pos) - np.int64(n_neg)
        for b in range(a + 1, ncols):
            dp = 0
            dn = 0
            for w in range(nwords):
                x = colbits[a, w] ^ colbits[b, w]
                dp += popcount64(x & pos_mask[w])
                dn += popcount64(x & neg_mask[w])
            v = (np.int64(n_pos) - 2 * np.int64(dp)) - (np.int64(n_neg) - 2 * np.int64(dn))
            out[a, b] = v
            out[b, a] = v
    return out


@njit(cache=True)
def bkw_round(rows, labels, shift, width):
    """One BKW collision round on single-word rows.

    Samples are bucketed by ``width`` bits starting at ``shift``; within a
    bucket consecutive samples are paired and XORed, odd leftovers dropped.
    """
    nb = 1 << width
    pending = np.full(nb, -1, dtype=np.int64)
    keymask = np.uint64((1 << width) - 1)
    n = rows.shape[0]
    out_rows = np.empty(n // 2 + 1, dtype=np.uint64)
    out_labels = np.empty(n // 2 + 1, dtype=np.uint8)
    cnt = 0
    for i in range(n):
        key = np.int64((rows[i] >> np.uint64(shift)) & keymask)
        j = pending[key]
        if j < 0:
            pending[key] = i
        else:
            out_rows[cnt] = rows[i] ^ rows[j]
            out_labels[cnt] = labels[i] ^ labels[j]
            cnt += 1
            pending[key] = -1
    return out_rows[:cnt], out_labels[:cnt]
