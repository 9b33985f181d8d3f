# cython: boundscheck=False, wraparound=False, cdivision=True
"""Streaming enumeration kernel.

One tight loop per expression size: for every slot selection, tree shape,
and operator tuple, evaluate the expression over the concrete operand
values, and either bucket its score by final value (profile) or collect
its skeleton id when the final value hits a target (collect). Division by
zero is screened before dividing, and a negative difference aborts the
tuple before the value is ever stored, so all stored node values are
non-negative.
"""


def profile_k(long long[::1] values, int k,
              int[:, ::1] perms, int[:, ::1] lefts, int[:, ::1] rights,
              int[:, ::1] shifts, long long lo, long long hi,
              long long[::1] counts, long long[::1] sums, long long[::1] maxs):
    """Accumulate count / score sum / max score per final value in [lo, hi]."""
    cdef Py_ssize_t r, si, n_rows = perms.shape[0]
    cdef int nops = k - 1, n_shapes = lefts.shape[0]
    cdef long long n_tuples = 1 << (2 * nops)
    cdef long long t, a, b, v, sc, idx
    cdef long long leaf[5]
    cdef long long node[4]
    cdef int i, n, op, ref, pts, opbits, ok

    for r in range(n_rows):
        for i in range(k):
            leaf[i] = values[perms[r, i]]
        for si in range(n_shapes):
            for t in range(n_tuples):
                ok = 1
                pts = 0
                opbits = 0
                v = 0
                for n in range(nops):
                    ref = lefts[si, n]
                    a = leaf[ref] if ref < k else node[ref - k]
                    ref = rights[si, n]
                    b = leaf[ref] if ref < k else node[ref - k]
                    op = (t >> shifts[si, n]) & 3
                    if op == 0:
                        v = a + b
                        pts += 1
                    elif op == 1:
                        v = a - b
                        if v < 0:
                            ok = 0
                            break
                        pts += 2
                    elif op == 2:
                        v = a * b
                        pts += 1
                    else:
                        if b == 0 or a % b != 0:
                            ok = 0
                            break
                        v = a // b
                        pts += 3
                    opbits |= 1 << op
                    node[n] = v
                if ok and lo <= v <= hi:
                    sc = 5 + pts
                    if nops == 4 and opbits == 15:
                        sc += 6
                    idx = v - lo
                    counts[idx] += 1
                    sums[idx] += sc
                    if sc > maxs[idx]:
                        maxs[idx] = sc


def collect_k(long long[::1] values, int k,
              int[:, ::1] perms, int[:, ::1] lefts, int[:, ::1] rights,
              int[:, ::1] shifts, long long target, long long base_id):
    """Skeleton ids and scores of every expression that hits the target."""
    cdef Py_ssize_t r, si, n_rows = perms.shape[0]
    cdef int nops = k - 1, n_shapes = lefts.shape[0]
    cdef long long n_tuples = 1 << (2 * nops)
    cdef long long t, a, b, v, sc
    cdef long long leaf[5]
    cdef long long node[4]
    cdef int i, n, op, ref, pts, opbits, ok
    ids = []
    scores = []

    for r in range(n_rows):
        for i in range(k):
            leaf[i] = values[perms[r, i]]
        for si in range(n_shapes):
            for t in range(n_tuples):
                ok = 1
                pts = 0
                opbits = 0
                v = 0
                for n in range(nops):
                    ref = lefts[si, n]
                    a = leaf[ref] if ref < k else node[ref - k]
                    ref = rights[si, n]
                    b = leaf[ref] if ref < k else node[ref - k]
                    op = (t >> shifts[si, n]) & 3
                    if op == 0:
                        v = a + b
                        pts += 1
                    elif op == 1:
                        v = a - b
                        if v < 0:
                            ok = 0
                            break
                        pts += 2
                    elif op == 2:
                        v = a * b
                        pts += 1
                    else:
                        if b == 0 or a % b != 0:
                            ok = 0
                            break
                        v = a // b
                        pts += 3
                    opbits |= 1 << op
                    node[n] = v
                if ok and v == target:
                    sc = 5 + pts
                    if nops == 4 and opbits == 15:
                        sc += 6
                    ids.append(base_id + ((r * n_shapes) + si) * n_tuples + t)
                    scores.append(sc)
    return ids, scores
