# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled gestalt (Ratcliff-Obershelp) sequence matcher.

Same contract as difflib.SequenceMatcher(None, a, b, autojunk=False).ratio():
2*M/T where M sums the lengths of recursively matched longest common blocks
and T = len(a) + len(b). No junk heuristic, fully deterministic, and it picks
the earliest maximal block exactly like the stdlib implementation so ratios
are bit-identical.
"""

from libc.stdlib cimport free, malloc


cdef struct Segment:
    Py_ssize_t alo
    Py_ssize_t ahi
    Py_ssize_t blo
    Py_ssize_t bhi


def match_ratio(unicode a, unicode b):
    """Gestalt similarity of two strings in [0, 1]; 1.0 for two empties."""
    cdef Py_ssize_t la = len(a)
    cdef Py_ssize_t lb = len(b)
    if la + lb == 0:
        return 1.0
    if la == 0 or lb == 0:
        return 0.0

    cdef Py_ssize_t matches = 0
    cdef Py_ssize_t cap = 16
    cdef Segment *stack = <Segment *> malloc(cap * sizeof(Segment))
    cdef Segment *grown
    cdef Py_ssize_t top = 0
    # j2len rolling rows for the longest-match scan
    cdef Py_ssize_t *j2len = <Py_ssize_t *> malloc((lb + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *newj2len = <Py_ssize_t *> malloc((lb + 1) * sizeof(Py_ssize_t))
    cdef Py_ssize_t *tmp
    if stack == NULL or j2len == NULL or newj2len == NULL:
        free(stack); free(j2len); free(newj2len)
        raise MemoryError()

    cdef Py_ssize_t alo, ahi, blo, bhi, i, j, k
    cdef Py_ssize_t besti, bestj, bestsize
    cdef Py_UCS4 ca

    stack[0] = Segment(0, la, 0, lb)
    top = 1
    try:
        while top:
            top -= 1
            alo = stack[top].alo
            ahi = stack[top].ahi
            blo = stack[top].blo
            bhi = stack[top].bhi
            if alo >= ahi or blo >= bhi:
                continue

            besti = alo
            bestj = blo
            bestsize = 0
            for j in range(blo, bhi + 1):
                j2len[j] = 0
            for i in range(alo, ahi):
                ca = a[i]
                newj2len[blo] = 0
                for j in range(blo, bhi):
                    if b[j] == ca:
                        k = (j2len[j - 1] if j > blo else 0) + 1
                        newj2len[j] = k
                        if k > bestsize:
                            besti = i - k + 1
                            bestj = j - k + 1
                            bestsize = k
                    else:
                        newj2len[j] = 0
                tmp = j2len
                j2len = newj2len
                newj2len = tmp

            if bestsize == 0:
                continue
            matches += bestsize
            if top + 2 > cap:
                cap *= 2
                grown = <Segment *> malloc(cap * sizeof(Segment))
                if grown == NULL:
                    raise MemoryError()
                for k in range(top):
                    grown[k] = stack[k]
                free(stack)
                stack = grown
            stack[top] = Segment(alo, besti, blo, bestj)
            top += 1
            stack[top] = Segment(besti + bestsize, ahi, bestj + bestsize, bhi)
            top += 1
    finally:
        free(stack)
        free(j2len)
        free(newj2len)

    return 2.0 * matches / (la + lb)
