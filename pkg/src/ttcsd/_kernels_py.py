"""Pure-Python versions of the exhaustive-scan kernels.

Same signatures and results as the compiled ``_kernels`` module. Profiles
are integer codes: agent ``i`` (0-based) contributes digit
``code // base**(n-1-i) % base`` where ``base = n!`` and the digit is the
lexicographic index of their ranking. Objects are 0-based here.
"""

import numpy as np


def ttc_table(n, perms):
    """TTC assignment for every profile: array of shape (n!**n, n), int8."""
    perms = [list(p) for p in np.asarray(perms).tolist()]
    base = len(perms)
    size = base**n
    out = np.empty((size, n), dtype=np.int8)
    prefs = [None] * n
    for code in range(size):
        c = code
        for i in range(n - 1, -1, -1):
            c, d = divmod(c, base)
            prefs[i] = perms[d]
        out[code] = _ttc_one(prefs, n)
    return out


def _ttc_one(prefs, n):
    got = [-1] * n
    active = [True] * n
    left = n
    ptr = [0] * n
    succ = [0] * n
    mark = [0] * n
    while left:
        for i in range(n):
            if active[i]:
                p = prefs[i]
                k = ptr[i]
                while not active[p[k]]:
                    k += 1
                ptr[i] = k
                succ[i] = p[k]
        stamp = 0
        for i in range(n):
            mark[i] = 0
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
                    got[u] = succ[u]
                    u = succ[u]
                    if u == v:
                        break
        for i in range(n):
            if active[i] and got[i] >= 0:
                active[i] = False
                left -= 1
    return got


def scan_sp(table, ranks, n, top_only, lo=0, hi=-1):
    """Exhaustive manipulation scan of a deterministic rule table.

    Returns ``(failing_profiles, first)`` where ``first`` is
    ``(code, agent, misreport_digit, witness_object)`` for the first
    violation in lexicographic order, or ``None``. Only profile codes in
    ``[lo, hi)`` are scanned (``hi=-1``: to the end).
    """
    tab = table.tolist()
    rk = np.asarray(ranks).tolist()
    base = len(rk)
    size = len(tab)
    weights = [base ** (n - 1 - i) for i in range(n)]
    failing = 0
    first = None
    for code in range(lo, size if hi < 0 else hi):
        row = tab[code]
        hit = None
        for i in range(n):
            w = weights[i]
            d = (code // w) % base
            r = rk[d]
            a = r[row[i]]
            if a == 0:
                # already gets the top; no misreport can improve
                continue
            offset = code - d * w
            for m in range(base):
                if m == d:
                    continue
                b_obj = tab[offset + m * w][i]
                b = r[b_obj]
                if (b == 0) if top_only else (b < a):
                    hit = (code, i, m, b_obj)
                    break
            if hit is not None:
                break
        if hit is not None:
            failing += 1
            if first is None:
                first = hit
    return failing, first


def scan_ir_eff(table, ranks, n, lo=0, hi=-1):
    """Individual rationality and Pareto efficiency at every profile.

    Returns ``(ir_failing, first_ir, eff_failing, first_eff)``; the ``first_*``
    entries are ``(code, agent)`` for IR and ``code`` for efficiency, or
    ``None``. Only profile codes in ``[lo, hi)`` are scanned (``hi=-1``: to the end).
    """
    tab = table.tolist()
    rk = np.asarray(ranks).tolist()
    base = len(rk)
    size = len(tab)
    weights = [base ** (n - 1 - i) for i in range(n)]
    ir_failing = eff_failing = 0
    first_ir = first_eff = None
    holder = [0] * n
    for code in range(lo, size if hi < 0 else hi):
        row = tab[code]
        digits = [(code // weights[i]) % base for i in range(n)]
        ir_bad = None
        for i in range(n):
            r = rk[digits[i]]
            if r[row[i]] > r[i]:
                ir_bad = i
                break
        if ir_bad is not None:
            ir_failing += 1
            if first_ir is None:
                first_ir = (code, ir_bad)
        for i in range(n):
            holder[row[i]] = i
        # out[y]: objects the holder of y strictly prefers to y
        out = [0] * n
        for y in range(n):
            r = rk[digits[holder[y]]]
            ry = r[y]
            mask = 0
            for x in range(n):
                if r[x] < ry:
                    mask |= 1 << x
            out[y] = mask
        alive = (1 << n) - 1
        changed = True
        while changed:
            changed = False
            for y in range(n):
                if alive >> y & 1 and not out[y] & alive:
                    alive &= ~(1 << y)
                    changed = True
        if alive:
            eff_failing += 1
            if first_eff is None:
                first_eff = code
    return ir_failing, first_ir, eff_failing, first_eff
