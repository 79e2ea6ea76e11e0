"""Primal network simplex for uncapacitated min-cost flow (numba).

Follows the classical spanning-tree implementation: an artificial root with
one artificial arc per node, block-search pricing, and the strongly feasible
leaving-arc rule, which rules out cycling. All arithmetic is int64.

Reduced costs are ``cost[e] + pi[src[e]] - pi[tgt[e]]``.
"""

import numpy as np
from numba import njit

OPTIMAL = 0
INFEASIBLE = 1
ITERATION_LIMIT = 2

_UP = 1
_DOWN = -1


@njit(cache=True)
def _add_child(first_child, next_sib, prev_sib, p, c):
    head = first_child[p]
    next_sib[c] = head
    prev_sib[c] = -1
    if head >= 0:
        prev_sib[head] = c
    first_child[p] = c


@njit(cache=True)
def _remove_child(first_child, next_sib, prev_sib, p, c):
    if prev_sib[c] >= 0:
        next_sib[prev_sib[c]] = next_sib[c]
    else:
        first_child[p] = next_sib[c]
    if next_sib[c] >= 0:
        prev_sib[next_sib[c]] = prev_sib[c]
    next_sib[c] = -1
    prev_sib[c] = -1


@njit(cache=True)
def network_simplex(n, supply, src, tgt, cost, block_size, max_pivots):
    """Solve ``min sum cost*flow`` subject to node balances ``supply``.

    Returns ``(flow, pi, status, pivots)``; ``pi`` are node potentials with the
    artificial root at 0.
    """
    m = src.size
    root = n
    total = m + n
    S = np.empty(total, np.int64)
    T = np.empty(total, np.int64)
    C = np.empty(total, np.int64)
    flow = np.zeros(total, np.int64)
    state = np.ones(total, np.int64)
    maxc = 0
    for e in range(m):
        S[e] = src[e]
        T[e] = tgt[e]
        C[e] = cost[e]
        if abs(cost[e]) > maxc:
            maxc = abs(cost[e])
    art = (maxc + 1) * (n + 1)

    parent = np.empty(n + 1, np.int64)
    pred = np.empty(n + 1, np.int64)
    direction = np.zeros(n + 1, np.int64)
    depth = np.zeros(n + 1, np.int64)
    pi = np.zeros(n + 1, np.int64)
    first_child = -np.ones(n + 1, np.int64)
    next_sib = -np.ones(n + 1, np.int64)
    prev_sib = -np.ones(n + 1, np.int64)
    parent[root] = -1
    pred[root] = -1
    for u in range(n):
        e = m + u
        parent[u] = root
        pred[u] = e
        depth[u] = 1
        state[e] = 0
        if supply[u] >= 0:
            S[e] = u
            T[e] = root
            C[e] = 0
            flow[e] = supply[u]
            direction[u] = _UP
            pi[u] = 0
        else:
            S[e] = root
            T[e] = u
            C[e] = art
            flow[e] = -supply[u]
            direction[u] = _DOWN
            pi[u] = art
        _add_child(first_child, next_sib, prev_sib, root, u)

    path = np.empty(n + 1, np.int64)
    old_pred = np.empty(n + 1, np.int64)
    old_dir = np.empty(n + 1, np.int64)
    stack = np.empty(n + 1, np.int64)
    inf = np.iinfo(np.int64).max
    next_arc = 0
    pivots = 0
    status = OPTIMAL
    while True:
        # block search pricing
        entering = -1
        best = 0
        cnt = block_size
        e = next_arc
        for _ in range(m):
            rc = state[e] * (C[e] + pi[S[e]] - pi[T[e]])
            if rc < best:
                best = rc
                entering = e
            cnt -= 1
            e += 1
            if e == m:
                e = 0
            if cnt == 0:
                if entering >= 0:
                    break
                cnt = block_size
        next_arc = e
        if entering < 0:
            break
        if pivots >= max_pivots:
            status = ITERATION_LIMIT
            break
        pivots += 1

        first = S[entering]
        second = T[entering]
        u = first
        v = second
        while u != v:
            if depth[u] > depth[v]:
                u = parent[u]
            elif depth[v] > depth[u]:
                v = parent[v]
            else:
                u = parent[u]
                v = parent[v]
        join = u

        delta = inf
        u_out = -1
        result = 0
        u = first
        while u != join:
            d = flow[pred[u]] if direction[u] == _UP else inf
            if d < delta:
                delta = d
                u_out = u
                result = 1
            u = parent[u]
        u = second
        while u != join:
            d = flow[pred[u]] if direction[u] == _DOWN else inf
            if d <= delta:
                delta = d
                u_out = u
                result = 2
            u = parent[u]

        if delta > 0:
            flow[entering] += delta
            u = first
            while u != join:
                flow[pred[u]] -= direction[u] * delta
                u = parent[u]
            u = second
            while u != join:
                flow[pred[u]] += direction[u] * delta
                u = parent[u]

        if result == 1:
            u_in = second
            v_in = first
        else:
            u_in = first
            v_in = second
        leaving = pred[u_out]

        k = 0
        u = v_in
        path[0] = u
        while u != u_out:
            u = parent[u]
            k += 1
            path[k] = u
        for i in range(k + 1):
            old_pred[i] = pred[path[i]]
            old_dir[i] = direction[path[i]]
        _remove_child(first_child, next_sib, prev_sib, parent[u_out], u_out)
        for i in range(1, k + 1):
            _remove_child(first_child, next_sib, prev_sib, path[i], path[i - 1])
        v0 = path[0]
        parent[v0] = u_in
        pred[v0] = entering
        direction[v0] = _UP if S[entering] == v0 else _DOWN
        _add_child(first_child, next_sib, prev_sib, u_in, v0)
        for i in range(1, k + 1):
            parent[path[i]] = path[i - 1]
            pred[path[i]] = old_pred[i - 1]
            direction[path[i]] = -old_dir[i - 1]
            _add_child(first_child, next_sib, prev_sib, path[i - 1], path[i])
        state[entering] = 0
        state[leaving] = 1

        if direction[v0] == _UP:
            sigma = pi[u_in] - C[entering] - pi[v0]
        else:
            sigma = pi[u_in] + C[entering] - pi[v0]
        top = 0
        stack[0] = v0
        while top >= 0:
            x = stack[top]
            top -= 1
            pi[x] += sigma
            depth[x] = depth[parent[x]] + 1
            c = first_child[x]
            while c >= 0:
                top += 1
                stack[top] = c
                c = next_sib[c]

    if status == OPTIMAL:
        for e in range(m, total):
            if flow[e] != 0:
                status = INFEASIBLE
                break
    out_pi = np.empty(n, np.int64)
    for u in range(n):
        out_pi[u] = pi[u] - pi[root]
    return flow[:m].copy(), out_pi, status, pivots


def solve_flow(supply, src, tgt, cost, max_pivots=None):
    """Python entry point with argument normalization."""
    supply = np.ascontiguousarray(supply, dtype=np.int64)
    src = np.ascontiguousarray(src, dtype=np.int64)
    tgt = np.ascontiguousarray(tgt, dtype=np.int64)
    cost = np.ascontiguousarray(cost, dtype=np.int64)
    if supply.sum() != 0:
        raise ValueError("supplies must balance")
    m = src.size
    block = max(10, int(np.sqrt(max(m, 1))))
    if max_pivots is None:
        max_pivots = 50 * (m + supply.size) + 10_000
    if m == 0:
        status = OPTIMAL if not np.any(supply) else INFEASIBLE
        return np.zeros(0, np.int64), np.zeros(supply.size, np.int64), status, 0
    return network_simplex(supply.size, supply, src, tgt, cost, block, max_pivots)
