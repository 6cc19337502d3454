"""Pure-Python implementations of the hot loops.

These mirror ``_ckernels.pyx`` statement for statement, so both backends
produce identical results from identical inputs. Arrays are modified in
place exactly as the compiled versions do.
"""
from __future__ import annotations

import numpy as np

# two_opt_pass status codes
PASS_COMPLETE = 0
PASS_THRESHOLD = 1
PASS_CAPPED = 2

VARIANT_ED = 0
VARIANT_PD = 1

MUTATION_TWO_OPT = 0
MUTATION_SWAP = 1


def two_opt_pass(perm, dist, move_a, move_b, order, cost, threshold, max_lookups):
    """Scan 2-opt moves in ``order``, applying every improving one at once.

    Move ``k`` exchanges the edges leaving positions ``move_a[k]`` and
    ``move_b[k]``; applying it reverses positions ``move_a[k]+1 .. move_b[k]``.
    Returns ``(cost, lookups, improvements, status)``.
    """
    n = len(perm)
    p = perm.tolist()
    d = dist
    ma = move_a
    mb = move_b
    lookups = 0
    improvements = 0
    status = PASS_COMPLETE
    for k in order.tolist():
        if lookups >= max_lookups:
            status = PASS_CAPPED
            break
        lookups += 1
        a = int(ma[k])
        b = int(mb[k])
        b1 = b + 1 if b + 1 < n else 0
        u1 = p[a]
        v1 = p[a + 1]
        u2 = p[b]
        v2 = p[b1]
        delta = int(d[u1, u2]) + int(d[v1, v2]) - int(d[u1, v1]) - int(d[u2, v2])
        if delta < 0:
            p[a + 1 : b + 1] = p[a + 1 : b + 1][::-1]
            cost += delta
            improvements += 1
            if cost <= threshold:
                status = PASS_THRESHOLD
                break
    perm[:] = p
    return cost, lookups, improvements, status


def _succ_pred(perms):
    k, n = perms.shape
    succ = np.empty((k, n), dtype=np.int32)
    pred = np.empty((k, n), dtype=np.int32)
    rows = np.arange(k)[:, None]
    succ[rows, perms] = np.roll(perms, -1, axis=1)
    pred[rows, perms] = np.roll(perms, 1, axis=1)
    return succ, pred


def shared_counts(perms):
    """Matrix of shared undirected edge counts between all pairs of tours."""
    k, n = perms.shape
    succ, pred = _succ_pred(perms)
    out = np.empty((k, k), dtype=np.int32)
    for i in range(k):
        s = succ[i]
        row = np.count_nonzero((succ == s) | (pred == s), axis=1)
        out[i] = row
    return out


def shared_with(perms, perm):
    """Shared undirected edge counts between ``perm`` and every row of ``perms``."""
    n = perms.shape[1]
    succ, pred = _succ_pred(perms)
    s = np.empty(n, dtype=np.int32)
    s[perm] = np.roll(perm, -1)
    return np.count_nonzero((succ == s) | (pred == s), axis=1).astype(np.int32)


def _has_edge(succ_row, pred_row, u, v):
    return succ_row[u] == v or pred_row[u] == v


def _offspring_edges(p, n, mutation, x, y):
    """Edges removed from and added to parent tour ``p`` by one mutation."""
    if mutation == MUTATION_TWO_OPT:
        y1 = y + 1 if y + 1 < n else 0
        removed = [(p[x], p[x + 1]), (p[y], p[y1])]
        added = [(p[x], p[y]), (p[x + 1], p[y1])]
        return removed, added
    # vertex swap of positions x < y
    slots = []
    for q in (x - 1, x, y - 1, y):
        q %= n
        if q not in slots:
            slots.append(q)

    def val(pos):
        if pos == x:
            return p[y]
        if pos == y:
            return p[x]
        return p[pos]

    rem = []
    add = []
    for q in slots:
        q1 = q + 1 if q + 1 < n else 0
        rem.append((p[q], p[q1]))
        add.append((val(q), val(q1)))
    removed = []
    added = []
    for u, v in rem:
        if not any((u == s and v == t) or (u == t and v == s) for s, t in add):
            removed.append((u, v))
    for u, v in add:
        if not any((u == s and v == t) or (u == t and v == s) for s, t in rem):
            added.append((u, v))
    return removed, added


def _apply_mutation(row, mutation, x, y):
    if mutation == MUTATION_TWO_OPT:
        row[x + 1 : y + 1] = row[x + 1 : y + 1][::-1]
    else:
        row[x], row[y] = row[y], row[x]


def _top2(shared_row, i, mu):
    b1 = -1
    a1 = -1
    b2 = -1
    a2 = -1
    for k in range(mu):
        if k == i:
            continue
        s = shared_row[k]
        if s > b1:
            b2, a2 = b1, a1
            b1, a1 = s, k
        elif s > b2:
            b2, a2 = s, k
    return b1, a1, b2, a2


def ea_steps(perms, costs, dist, op_a, op_b, parents, ops, threshold, variant,
             mutation, trace=None):
    """Run ``len(parents)`` steps of the (mu+1)-EA in place.

    Step ``s`` mutates member ``parents[s]`` with operation ``ops[s]`` (an
    index into ``op_a``/``op_b``). A feasible offspring joins the population
    and the member whose removal leaves the best diversity is dropped; ties go
    to the lowest index, with the offspring indexed ``mu``.

    The diversity key is the integer that the variant's measure decreases in:
    ED tracks the ordered-pair shared-edge total (D1 = 1 - key/(n mu (mu-1))),
    PD tracks the sum of each member's largest overlap (D2 = 1 - key/(n mu)).
    Returns ``(accepted, last_improvement_step, key)`` with
    ``last_improvement_step == -1`` when the key never strictly decreased.
    """
    mu, n = perms.shape
    P = [perms[i].tolist() for i in range(mu)]
    cost = [int(c) for c in costs]
    succ = [[0] * n for _ in range(mu)]
    pred = [[0] * n for _ in range(mu)]
    for i in range(mu):
        row = P[i]
        for q in range(n):
            succ[i][row[q]] = row[q + 1 if q + 1 < n else 0]
            pred[i][row[q]] = row[q - 1]
    sh = shared_counts(perms).tolist()
    d = dist
    so = [0] * mu

    rowsum = [0] * mu
    b1 = [0] * mu
    a1 = [0] * mu
    b2 = [0] * mu
    a2 = [0] * mu
    if variant == VARIANT_ED:
        for i in range(mu):
            rowsum[i] = sum(sh[i]) - sh[i][i]
        key = sum(rowsum)
    else:
        for i in range(mu):
            b1[i], a1[i], b2[i], a2[i] = _top2(sh[i], i, mu)
        key = sum(b1)

    accepted = 0
    last = -1
    steps = len(parents)
    for s in range(steps):
        par = int(parents[s])
        o = int(ops[s])
        x = int(op_a[o])
        y = int(op_b[o])
        p = P[par]
        removed, added = _offspring_edges(p, n, mutation, x, y)
        delta = 0
        for u, v in added:
            delta += int(d[u, v])
        for u, v in removed:
            delta -= int(d[u, v])
        c_off = cost[par] + delta
        if c_off > threshold:
            if trace is not None:
                trace[s] = key
            continue

        for j in range(mu):
            sj = succ[j]
            pj = pred[j]
            c = sh[par][j]
            for u, v in removed:
                if sj[u] == v or pj[u] == v:
                    c -= 1
            for u, v in added:
                if sj[u] == v or pj[u] == v:
                    c += 1
            so[j] = c

        if variant == VARIANT_ED:
            best = -1
            bestval = -1
            for j in range(mu):
                val = rowsum[j] + so[j]
                if val > bestval:
                    bestval = val
                    best = j
            if sum(so) > bestval:
                best = mu
        else:
            # top-2 of every member within population + offspring
            q1 = [0] * (mu + 1)
            qa = [0] * (mu + 1)
            q2 = [0] * (mu + 1)
            for i in range(mu):
                sv = so[i]
                if sv > b1[i]:
                    q1[i], qa[i], q2[i] = sv, mu, b1[i]
                elif sv > b2[i]:
                    q1[i], qa[i], q2[i] = b1[i], a1[i], sv
                else:
                    q1[i], qa[i], q2[i] = b1[i], a1[i], b2[i]
            ob1, oa1, ob2, _ = _top2(so, -1, mu)
            q1[mu], qa[mu], q2[mu] = ob1, oa1, ob2
            total = sum(q1)
            pen = [0] * (mu + 1)
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
            if trace is not None:
                trace[s] = key
            continue

        r = best
        accepted += 1
        if r != par:
            P[r] = list(p)
        row = P[r]
        _apply_mutation(row, mutation, x, y)
        sr = succ[r]
        pr = pred[r]
        for q in range(n):
            sr[row[q]] = row[q + 1 if q + 1 < n else 0]
            pr[row[q]] = row[q - 1]
        cost[r] = c_off

        if variant == VARIANT_ED:
            for j in range(mu):
                if j != r:
                    rowsum[j] += so[j] - sh[j][r]
            rowsum[r] = sum(so) - so[r]
        for j in range(mu):
            if j != r:
                sh[j][r] = so[j]
                sh[r][j] = so[j]
        sh[r][r] = n

        if variant == VARIANT_ED:
            new_key = sum(rowsum)
        else:
            for i in range(mu):
                if i == r:
                    continue
                if a1[i] == r or a2[i] == r:
                    b1[i], a1[i], b2[i], a2[i] = _top2(sh[i], i, mu)
                else:
                    sv = so[i]
                    if sv > b1[i]:
                        b2[i], a2[i] = b1[i], a1[i]
                        b1[i], a1[i] = sv, r
                    elif sv > b2[i]:
                        b2[i], a2[i] = sv, r
            b1[r], a1[r], b2[r], a2[r] = _top2(sh[r], r, mu)
            new_key = sum(b1)
        if new_key < key:
            last = s
        key = new_key
        if trace is not None:
            trace[s] = key

    for i in range(mu):
        perms[i] = P[i]
        costs[i] = cost[i]
    return accepted, last, key
