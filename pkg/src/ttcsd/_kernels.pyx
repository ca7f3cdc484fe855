# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled exhaustive-scan kernels; see ``_kernels_py`` for the contract."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF MAXN = 8


cdef void _ttc_one(const signed char[:, :] perms, long *digits, int n, signed char *got) noexcept nogil:
    cdef int active[MAXN]
    cdef int ptr[MAXN]
    cdef int succ[MAXN]
    cdef int mark[MAXN]
    cdef int i, k, s, v, u, stamp, left = n
    for i in range(n):
        got[i] = -1
        active[i] = 1
        ptr[i] = 0
    while left:
        for i in range(n):
            if active[i]:
                k = ptr[i]
                while not active[perms[digits[i], k]]:
                    k += 1
                ptr[i] = k
                succ[i] = perms[digits[i], k]
        for i in range(n):
            mark[i] = 0
        stamp = 0
        for s in range(n):
            if not active[s] or mark[s]:
                continue
            stamp += 1
            v = s
            while active[v] and mark[v] == 0:
                mark[v] = stamp
                v = succ[v]
            if mark[v] == stamp:
                u = v
                while True:
                    got[u] = <signed char>succ[u]
                    u = succ[u]
                    if u == v:
                        break
        for i in range(n):
            if active[i] and got[i] >= 0:
                active[i] = 0
                left -= 1


def ttc_table(int n, perms):
    cdef const signed char[:, :] pv = np.ascontiguousarray(perms, dtype=np.int8)
    cdef long base = pv.shape[0]
    cdef long size = base ** n
    out = np.empty((size, n), dtype=np.int8)
    cdef signed char[:, :] ov = out
    cdef long digits[MAXN]
    cdef long code, c
    cdef int i
    if n > MAXN:
        raise ValueError(f"n={n} exceeds compiled limit {MAXN}")
    with nogil:
        for code in range(size):
            c = code
            for i in range(n - 1, -1, -1):
                digits[i] = c % base
                c = c // base
            _ttc_one(pv, digits, n, &ov[code, 0])
    return out


def scan_sp(table, ranks, int n, bint top_only, long lo=0, long hi=-1):
    cdef const signed char[:, :] tv = np.ascontiguousarray(table, dtype=np.int8)
    cdef const signed char[:, :] rv = np.ascontiguousarray(ranks, dtype=np.int8)
    cdef long base = rv.shape[0]
    cdef long size = tv.shape[0]
    cdef long weights[MAXN]
    cdef long code, w, d, offset, m
    cdef long failing = 0
    cdef long hit_code = -1, hit_m = -1
    cdef int i, a, b, b_obj, hit_i = -1, hit_obj = -1
    cdef bint found, have_first = False
    w = 1
    for i in range(n - 1, -1, -1):
        weights[i] = w
        w *= base
    if hi < 0:
        hi = size
    with nogil:
        for code in range(lo, hi):
            found = False
            for i in range(n):
                w = weights[i]
                d = (code // w) % base
                a = rv[d, tv[code, i]]
                if a == 0:
                    continue
                offset = code - d * w
                for m in range(base):
                    if m == d:
                        continue
                    b_obj = tv[offset + m * w, i]
                    b = rv[d, b_obj]
                    if (b == 0) if top_only else (b < a):
                        found = True
                        if not have_first:
                            have_first = True
                            hit_code = code
                            hit_i = i
                            hit_m = m
                            hit_obj = b_obj
                        break
                if found:
                    break
            if found:
                failing += 1
    if have_first:
        return failing, (hit_code, hit_i, hit_m, hit_obj)
    return failing, None


def scan_ir_eff(table, ranks, int n, long lo=0, long hi=-1):
    cdef const signed char[:, :] tv = np.ascontiguousarray(table, dtype=np.int8)
    cdef const signed char[:, :] rv = np.ascontiguousarray(ranks, dtype=np.int8)
    cdef long base = rv.shape[0]
    cdef long size = tv.shape[0]
    cdef long weights[MAXN]
    cdef long digits[MAXN]
    cdef int holder[MAXN]
    cdef unsigned int out[MAXN]
    cdef long code, w
    cdef long ir_failing = 0, eff_failing = 0
    cdef long first_ir_code = -1, first_eff = -1
    cdef int first_ir_agent = -1
    cdef int i, x, y, ir_bad, ry
    cdef unsigned int mask, alive
    cdef bint changed
    w = 1
    for i in range(n - 1, -1, -1):
        weights[i] = w
        w *= base
    if hi < 0:
        hi = size
    with nogil:
        for code in range(lo, hi):
            for i in range(n):
                digits[i] = (code // weights[i]) % base
            ir_bad = -1
            for i in range(n):
                if rv[digits[i], tv[code, i]] > rv[digits[i], i]:
                    ir_bad = i
                    break
            if ir_bad >= 0:
                ir_failing += 1
                if first_ir_code < 0:
                    first_ir_code = code
                    first_ir_agent = ir_bad
            for i in range(n):
                holder[tv[code, i]] = i
            for y in range(n):
                ry = rv[digits[holder[y]], y]
                mask = 0
                for x in range(n):
                    if rv[digits[holder[y]], x] < ry:
                        mask |= 1u << x
                out[y] = mask
            alive = (1u << n) - 1
            changed = True
            while changed:
                changed = False
                for y in range(n):
                    if (alive >> y) & 1 and not (out[y] & alive):
                        alive &= ~(1u << y)
                        changed = True
            if alive:
                eff_failing += 1
                if first_eff < 0:
                    first_eff = code
    return (
        ir_failing,
        (first_ir_code, first_ir_agent) if first_ir_code >= 0 else None,
        eff_failing,
        first_eff if first_eff >= 0 else None,
    )
