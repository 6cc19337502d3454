# cython: language_level=3
"""Compiled hot loops. Semantics are defined by ``_pykernels.py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int32_t i32
ctypedef cnp.int64_t i64

cdef int PASS_COMPLETE = 0
cdef int PASS_THRESHOLD = 1
cdef int PASS_CAPPED = 2

cdef int VARIANT_ED = 0
cdef int MUTATION_TWO_OPT = 0


def two_opt_pass(i32[::1] perm, const i32[:, ::1] dist, const i32[::1] move_a,
                 const i32[::1] move_b, const i64[::1] order, long long cost,
                 double threshold, long long max_lookups):
    cdef Py_ssize_t n = perm.shape[0]
    cdef Py_ssize_t m = order.shape[0]
    cdef Py_ssize_t idx, k, a, b, b1, lo, hi
    cdef long long lookups = 0
    cdef long long improvements = 0
    cdef long long delta
    cdef int status = PASS_COMPLETE
    cdef i32 u1, v1, u2, v2, tmp
    with nogil:
        for idx in range(m):
            if lookups >= max_lookups:
                status = PASS_CAPPED
                break
            lookups += 1
            k = order[idx]
            a = move_a[k]
            b = move_b[k]
            b1 = b + 1
            if b1 == n:
                b1 = 0
            u1 = perm[a]
            v1 = perm[a + 1]
            u2 = perm[b]
            v2 = perm[b1]
            delta = (<long long>dist[u1, u2] + dist[v1, v2]
                     - dist[u1, v1] - dist[u2, v2])
            if delta < 0:
                lo = a + 1
                hi = b
                while lo < hi:
                    tmp = perm[lo]
                    perm[lo] = perm[hi]
                    perm[hi] = tmp
                    lo += 1
                    hi -= 1
                cost += delta
                improvements += 1
                if cost <= threshold:
                    status = PASS_THRESHOLD
                    break
    return cost, lookups, improvements, status


cdef void _fill_adjacency(const i32[:, ::1] perms, i32[:, ::1] succ,
                          i32[:, ::1] pred) noexcept nogil:
    cdef Py_ssize_t k = perms.shape[0]
    cdef Py_ssize_t n = perms.shape[1]
    cdef Py_ssize_t i, q
    for i in range(k):
        for q in range(n):
            succ[i, perms[i, q]] = perms[i, q + 1 if q + 1 < n else 0]
            pred[i, perms[i, q]] = perms[i, q - 1 if q > 0 else n - 1]


cdef void _fill_row(const i32[:, ::1] perms, i32[:, ::1] succ, i32[:, ::1] pred,
                    Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t n = perms.shape[1]
    cdef Py_ssize_t q
    for q in range(n):
        succ[i, perms[i, q]] = perms[i, q + 1 if q + 1 < n else 0]
        pred[i, perms[i, q]] = perms[i, q - 1 if q > 0 else n - 1]


cdef inline int _count_shared(const i32[:, ::1] succ, const i32[:, ::1] pred,
                              Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t n = succ.shape[1]
    cdef Py_ssize_t u
    cdef int c = 0
    cdef i32 s
    for u in range(n):
        s = succ[i, u]
        if succ[j, u] == s or pred[j, u] == s:
            c += 1
    return c


def shared_counts(perms_in):
    cdef i32[:, ::1] perms = np.ascontiguousarray(perms_in, dtype=np.int32)
    cdef Py_ssize_t k = perms.shape[0]
    cdef Py_ssize_t n = perms.shape[1]
    succ_arr = np.empty((k, n), dtype=np.int32)
    pred_arr = np.empty((k, n), dtype=np.int32)
    out_arr = np.empty((k, k), dtype=np.int32)
    cdef i32[:, ::1] succ = succ_arr
    cdef i32[:, ::1] pred = pred_arr
    cdef i32[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef int c
    with nogil:
        _fill_adjacency(perms, succ, pred)
        for i in range(k):
            out[i, i] = <i32>n
            for j in range(i + 1, k):
                c = _count_shared(succ, pred, i, j)
                out[i, j] = c
                out[j, i] = c
    return out_arr


def shared_with(perms_in, perm_in):
    cdef i32[:, ::1] perms = np.ascontiguousarray(perms_in, dtype=np.int32)
    cdef i32[::1] perm = np.ascontiguousarray(perm_in, dtype=np.int32)
    cdef Py_ssize_t k = perms.shape[0]
    cdef Py_ssize_t n = perms.shape[1]
    succ_arr = np.empty((k, n), dtype=np.int32)
    pred_arr = np.empty((k, n), dtype=np.int32)
    out_arr = np.empty(k, dtype=np.int32)
    cdef i32[:, ::1] succ = succ_arr
    cdef i32[:, ::1] pred = pred_arr
    cdef i32[::1] out = out_arr
    cdef i32[::1] s = np.empty(n, dtype=np.int32)
    cdef Py_ssize_t i, q, u
    cdef int c
    with nogil:
        _fill_adjacency(perms, succ, pred)
        for q in range(n):
            s[perm[q]] = perm[q + 1 if q + 1 < n else 0]
        for i in range(k):
            c = 0
            for u in range(n):
                if succ[i, u] == s[u] or pred[i, u] == s[u]:
                    c += 1
            out[i] = c
    return out_arr


cdef inline bint _edge_in(const i32[:, ::1] succ, const i32[:, ::1] pred,
                          Py_ssize_t j, i32 u, i32 v) noexcept nogil:
    return succ[j, u] == v or pred[j, u] == v


cdef inline i32 _swapped(const i32[:, ::1] perms, Py_ssize_t par, Py_ssize_t pos,
                         Py_ssize_t x, Py_ssize_t y) noexcept nogil:
    if pos == x:
        return perms[par, y]
    if pos == y:
        return perms[par, x]
    return perms[par, pos]


cdef int _offspring_edges(const i32[:, ::1] perms, Py_ssize_t par, int mutation,
                          Py_ssize_t x, Py_ssize_t y, i32* rem, int* nrem,
                          i32* add, int* nadd) noexcept nogil:
    """Fill removed/added edge lists (pairs flattened) for one mutation."""
    cdef Py_ssize_t n = perms.shape[1]
    cdef Py_ssize_t y1, q, q1, t
    cdef Py_ssize_t slots[4]
    cdef int nslots = 0
    cdef int i, j
    cdef bint found
    cdef i32 r_[8]
    cdef i32 a_[8]
    cdef i32 u, v
    if mutation == MUTATION_TWO_OPT:
        y1 = y + 1
        if y1 == n:
            y1 = 0
        rem[0] = perms[par, x]
        rem[1] = perms[par, x + 1]
        rem[2] = perms[par, y]
        rem[3] = perms[par, y1]
        add[0] = perms[par, x]
        add[1] = perms[par, y]
        add[2] = perms[par, x + 1]
        add[3] = perms[par, y1]
        nrem[0] = 2
        nadd[0] = 2
        return 0
    for t in range(4):
        if t == 0:
            q = x - 1
        elif t == 1:
            q = x
        elif t == 2:
            q = y - 1
        else:
            q = y
        q = (q % n + n) % n
        found = False
        for i in range(nslots):
            if slots[i] == q:
                found = True
        if not found:
            slots[nslots] = q
            nslots += 1
    for i in range(nslots):
        q = slots[i]
        q1 = q + 1
        if q1 == n:
            q1 = 0
        r_[2 * i] = perms[par, q]
        r_[2 * i + 1] = perms[par, q1]
        a_[2 * i] = _swapped(perms, par, q, x, y)
        a_[2 * i + 1] = _swapped(perms, par, q1, x, y)
    nrem[0] = 0
    nadd[0] = 0
    for i in range(nslots):
        u = r_[2 * i]
        v = r_[2 * i + 1]
        found = False
        for j in range(nslots):
            if (u == a_[2 * j] and v == a_[2 * j + 1]) or (u == a_[2 * j + 1] and v == a_[2 * j]):
                found = True
        if not found:
            rem[2 * nrem[0]] = u
            rem[2 * nrem[0] + 1] = v
            nrem[0] += 1
    for i in range(nslots):
        u = a_[2 * i]
        v = a_[2 * i + 1]
        found = False
        for j in range(nslots):
            if (u == r_[2 * j] and v == r_[2 * j + 1]) or (u == r_[2 * j + 1] and v == r_[2 * j]):
                found = True
        if not found:
            add[2 * nadd[0]] = u
            add[2 * nadd[0] + 1] = v
            nadd[0] += 1
    return 0


cdef void _top2(const i64[:, ::1] sh, Py_ssize_t i, Py_ssize_t mu, i64* b1,
                i64* a1, i64* b2, i64* a2) noexcept nogil:
    cdef Py_ssize_t k
    cdef i64 s
    b1[0] = -1
    a1[0] = -1
    b2[0] = -1
    a2[0] = -1
    for k in range(mu):
        if k == i:
            continue
        s = sh[i, k]
        if s > b1[0]:
            b2[0] = b1[0]
            a2[0] = a1[0]
            b1[0] = s
            a1[0] = k
        elif s > b2[0]:
            b2[0] = s
            a2[0] = k


def ea_steps(i32[:, ::1] perms, i64[::1] costs, const i32[:, ::1] dist,
             const i32[::1] op_a, const i32[::1] op_b, const i64[::1] parents,
             const i64[::1] ops, double threshold, int variant, int mutation,
             trace=None):
    cdef Py_ssize_t mu = perms.shape[0]
    cdef Py_ssize_t n = perms.shape[1]
    cdef Py_ssize_t steps = parents.shape[0]
    cdef bint do_trace = trace is not None
    cdef i64[::1] tr
    if do_trace:
        tr = trace
    succ_arr = np.empty((mu, n), dtype=np.int32)
    pred_arr = np.empty((mu, n), dtype=np.int32)
    cdef i32[:, ::1] succ = succ_arr
    cdef i32[:, ::1] pred = pred_arr
    cdef i64[:, ::1] sh = shared_counts(np.asarray(perms)).astype(np.int64)
    cdef i64[::1] so = np.zeros(mu, dtype=np.int64)
    cdef i64[::1] rowsum = np.zeros(mu, dtype=np.int64)
    cdef i64[::1] b1 = np.zeros(mu, dtype=np.int64)
    cdef i64[::1] a1 = np.zeros(mu, dtype=np.int64)
    cdef i64[::1] b2 = np.zeros(mu, dtype=np.int64)
    cdef i64[::1] a2 = np.zeros(mu, dtype=np.int64)
    cdef i64[::1] q1 = np.zeros(mu + 1, dtype=np.int64)
    cdef i64[::1] qa = np.zeros(mu + 1, dtype=np.int64)
    cdef i64[::1] q2 = np.zeros(mu + 1, dtype=np.int64)
    cdef i64[::1] pen = np.zeros(mu + 1, dtype=np.int64)
    cdef i32 rem[8]
    cdef i32 add[8]
    cdef int nrem = 0
    cdef int nadd = 0
    cdef Py_ssize_t s, par, o, x, y, i, j, r, best, lo, hi
    cdef i64 key = 0
    cdef i64 new_key, c, delta, c_off, val, bestval, sumso, total, sv
    cdef i64 ob1, oa1, ob2, oa2
    cdef long long accepted = 0
    cdef long long last = -1
    cdef int e
    cdef i32 u, v, tmp

    with nogil:
        _fill_adjacency(perms, succ, pred)
        if variant == VARIANT_ED:
            for i in range(mu):
                rowsum[i] = 0
                for j in range(mu):
                    if j != i:
                        rowsum[i] += sh[i, j]
                key += rowsum[i]
        else:
            for i in range(mu):
                _top2(sh, i, mu, &b1[i], &a1[i], &b2[i], &a2[i])
                key += b1[i]

        for s in range(steps):
            par = parents[s]
            o = ops[s]
            x = op_a[o]
            y = op_b[o]
            _offspring_edges(perms, par, mutation, x, y, rem, &nrem, add, &nadd)
            delta = 0
            for e in range(nadd):
                delta += dist[add[2 * e], add[2 * e + 1]]
            for e in range(nrem):
                delta -= dist[rem[2 * e], rem[2 * e + 1]]
            c_off = costs[par] + delta
            if c_off > threshold:
                if do_trace:
                    tr[s] = key
                continue

            sumso = 0
            for j in range(mu):
                c = sh[par, j]
                for e in range(nrem):
                    if _edge_in(succ, pred, j, rem[2 * e], rem[2 * e + 1]):
                        c -= 1
                for e in range(nadd):
                    if _edge_in(succ, pred, j, add[2 * e], add[2 * e + 1]):
                        c += 1
                so[j] = c
                sumso += c

            if variant == VARIANT_ED:
                best = -1
                bestval = -1
                for j in range(mu):
                    val = rowsum[j] + so[j]
                    if val > bestval:
                        bestval = val
                        best = j
                if sumso > bestval:
                    best = mu
            else:
                for i in range(mu):
                    sv = so[i]
                    if sv > b1[i]:
                        q1[i] = sv
                        qa[i] = mu
                        q2[i] = b1[i]
                    elif sv > b2[i]:
                        q1[i] = b1[i]
                        qa[i] = a1[i]
                        q2[i] = sv
                    else:
                        q1[i] = b1[i]
                        qa[i] = a1[i]
                        q2[i] = b2[i]
                ob1 = -1
                oa1 = -1
                ob2 = -1
                for j in range(mu):
                    sv = so[j]
                    if sv > ob1:
                        ob2 = ob1
                        ob1 = sv
                        oa1 = j
                    elif sv > ob2:
                        ob2 = sv
                q1[mu] = ob1
                qa[mu] = oa1
                q2[mu] = ob2
                total = 0
                for i in range(mu + 1):
                    total += q1[i]
                    pen[i] = 0
                for i in range(mu + 1):
                    pen[qa[i]] += q1[i] - q2[i]
                best = -1
                bestval = 0
                for j in range(mu + 1):
                    val = total - q1[j] - pen[j]
                    if best < 0 or val < bestval:
                        bestval = val
                        best = j

            if best == mu:
                if do_trace:
                    tr[s] = key
                continue

            r = best
            accepted += 1
            if r != par:
                for i in range(n):
                    perms[r, i] = perms[par, i]
            if mutation == MUTATION_TWO_OPT:
                lo = x + 1
                hi = y
                while lo < hi:
                    tmp = perms[r, lo]
                    perms[r, lo] = perms[r, hi]
                    perms[r, hi] = tmp
                    lo += 1
                    hi -= 1
            else:
                tmp = perms[r, x]
                perms[r, x] = perms[r, y]
                perms[r, y] = tmp
            _fill_row(perms, succ, pred, r)
            costs[r] = c_off

            if variant == VARIANT_ED:
                for j in range(mu):
                    if j != r:
                        rowsum[j] += so[j] - sh[j, r]
                rowsum[r] = sumso - so[r]
            for j in range(mu):
                if j != r:
                    sh[j, r] = so[j]
                    sh[r, j] = so[j]
            sh[r, r] = n

            new_key = 0
            if variant == VARIANT_ED:
                for j in range(mu):
                    new_key += rowsum[j]
            else:
                for i in range(mu):
                    if i == r:
                        continue
                    if a1[i] == r or a2[i] == r:
                        _top2(sh, i, mu, &b1[i], &a1[i], &b2[i], &a2[i])
                    else:
                        sv = so[i]
                        if sv > b1[i]:
                            b2[i] = b1[i]
                            a2[i] = a1[i]
                            b1[i] = sv
                            a1[i] = r
                        elif sv > b2[i]:
                            b2[i] = sv
                            a2[i] = r
                _top2(sh, r, mu, &b1[r], &a1[r], &b2[r], &a2[r])
                for i in range(mu):
                    new_key += b1[i]
            if new_key < key:
                last = s
            key = new_key
            if do_trace:
                tr[s] = key
    return accepted, last, key
