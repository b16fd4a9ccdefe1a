"""Spanning-tree (network) simplex specialised to the perturbation LP.

Scaling row constraint i by ``-mu_hat_i`` turns the LP into a min-cost flow
problem on a bipartite graph. Row nodes ``R_i`` are ``0..n-1``, column
nodes ``C_j`` are ``n..2n-1`` and an extra root ``2n`` hosts one artificial
arc per node. A Zero/Plus variable ``x`` at (i, j) is the arc ``R_i -> C_j``
carrying flow ``mu_hat_i * x``; a Minus variable is the arc ``C_j -> R_i``.
Node ``C_j`` must receive net inflow ``z_j``, row nodes are balanced.

A simplex basis is then a spanning tree, FTRAN/BTRAN become walks along
tree paths and the basis update is a re-hanging of one subtree. Leaving
arcs are chosen so the tree stays strongly feasible, which rules out
cycling for any entering rule.
"""
from __future__ import annotations

import numpy as np

from .._accel import jit

LOWER = 1
UPPER = -1
TREE = 0

OPTIMAL = 0
UNBOUNDED = 1
PIVOT_LIMIT = 2


@jit
def _remove_child(p, c, fchild, nsib, psib):
    a = psib[c]
    b = nsib[c]
    if a == -1:
        fchild[p] = b
    else:
        nsib[a] = b
    if b != -1:
        psib[b] = a
    nsib[c] = -1
    psib[c] = -1


@jit
def _add_child(p, c, fchild, nsib, psib):
    h = fchild[p]
    nsib[c] = h
    psib[c] = -1
    if h != -1:
        psib[h] = c
    fchild[p] = c


@jit
def _refresh_subtree(top_node, tail, cost, parent, pred, depth, pi, fchild, nsib, stack):
    """Recompute depth and potential below ``top_node`` (inclusive)."""
    stack[0] = top_node
    top = 1
    while top > 0:
        top -= 1
        x = stack[top]
        p = parent[x]
        if p >= 0:
            f = pred[x]
            depth[x] = depth[p] + 1
            if tail[f] == p:
                pi[x] = pi[p] + cost[f]
            else:
                pi[x] = pi[p] - cost[f]
        c = fchild[x]
        while c != -1:
            stack[top] = c
            top += 1
            c = nsib[c]


@jit
def _run(tail, head, psi, cost, cap, flow, state,
         parent, pred, depth, pi, fchild, nsib, psib,
         opt_tol, max_pivots, block, next_arc):
    """Pivot until optimal. Returns (status, pivots, degenerate, next_arc)."""
    m = tail.size
    stack = np.empty(parent.size, np.int64)
    pivots = 0
    degenerate = 0
    inf = np.inf
    while True:
        # block pricing on reduced costs in variable units
        best = -opt_tol
        e_in = -1
        cnt = 0
        e = next_arc
        for _ in range(m):
            s = state[e]
            if s != TREE and cap[e] > 0.0:
                rc = cost[e] - (pi[head[e]] - pi[tail[e]])
                v = s * rc * psi[e]
                if v < best:
                    best = v
                    e_in = e
            e += 1
            if e == m:
                e = 0
            cnt += 1
            if cnt == block:
                if e_in >= 0:
                    break
                cnt = 0
        next_arc = e
        if e_in < 0:
            return OPTIMAL, pivots, degenerate, next_arc
        if pivots >= max_pivots:
            return PIVOT_LIMIT, pivots, degenerate, next_arc

        if state[e_in] == LOWER:
            first = tail[e_in]
            second = head[e_in]
        else:
            first = head[e_in]
            second = tail[e_in]
        a = first
        b = second
        while depth[a] > depth[b]:
            a = parent[a]
        while depth[b] > depth[a]:
            b = parent[b]
        while a != b:
            a = parent[a]
            b = parent[b]
        join = a

        delta = cap[e_in]
        u_out = -1
        out_at_upper = False
        result = 0
        u = first
        while u != join:
            f = pred[u]
            if tail[f] == u:
                d = flow[f]
                up = False
            else:
                d = cap[f] - flow[f]
                up = True
            if d < 0.0:
                d = 0.0
            if d < delta:
                delta = d
                u_out = u
                out_at_upper = up
                result = 1
            u = parent[u]
        u = second
        while u != join:
            f = pred[u]
            if tail[f] == u:
                d = cap[f] - flow[f]
                up = True
            else:
                d = flow[f]
                up = False
            if d < 0.0:
                d = 0.0
            if d <= delta:
                delta = d
                u_out = u
                out_at_upper = up
                result = 2
            u = parent[u]
        if delta == inf:
            return UNBOUNDED, pivots, degenerate, next_arc

        pivots += 1
        if delta > 0.0:
            if state[e_in] == LOWER:
                flow[e_in] += delta
            else:
                flow[e_in] -= delta
            u = first
            while u != join:
                f = pred[u]
                if tail[f] == u:
                    flow[f] -= delta
                else:
                    flow[f] += delta
                u = parent[u]
            u = second
            while u != join:
                f = pred[u]
                if tail[f] == u:
                    flow[f] += delta
                else:
                    flow[f] -= delta
                u = parent[u]
        else:
            degenerate += 1

        if result == 0:
            # entering arc hits its own opposite bound
            if state[e_in] == LOWER:
                state[e_in] = UPPER
                flow[e_in] = cap[e_in]
            else:
                state[e_in] = LOWER
                flow[e_in] = 0.0
            continue

        leaving = pred[u_out]
        if out_at_upper:
            state[leaving] = UPPER
            flow[leaving] = cap[leaving]
        else:
            state[leaving] = LOWER
            flow[leaving] = 0.0
        state[e_in] = TREE

        if result == 1:
            u_in = first
            v_in = second
        else:
            u_in = second
            v_in = first
        _remove_child(parent[u_out], u_out, fchild, nsib, psib)
        w = u_in
        prev = v_in
        prev_arc = e_in
        while True:
            nxt = parent[w]
            nxt_arc = pred[w]
            if w != u_out:
                _remove_child(nxt, w, fchild, nsib, psib)
            parent[w] = prev
            pred[w] = prev_arc
            _add_child(prev, w, fchild, nsib, psib)
            if w == u_out:
                break
            prev = w
            prev_arc = nxt_arc
            w = nxt
        _refresh_subtree(u_in, tail, cost, parent, pred, depth, pi, fchild, nsib, stack)


@jit
def _bfs_tree(N, root, adj_ptr, adj_arc, tail, head, parent, pred, depth, fchild, nsib, psib):
    """Hang the tree given as an undirected arc list from ``root``.

    Returns the BFS order, or an empty array if the arcs do not span.
    """
    order = np.empty(N, np.int64)
    seen = np.zeros(N, np.bool_)
    for v in range(N):
        fchild[v] = -1
        nsib[v] = -1
        psib[v] = -1
    order[0] = root
    seen[root] = True
    parent[root] = -1
    pred[root] = -1
    depth[root] = 0
    lo = 0
    hi = 1
    while lo < hi:
        u = order[lo]
        lo += 1
        for k in range(adj_ptr[u], adj_ptr[u + 1]):
            f = adj_arc[k]
            w = head[f] if tail[f] == u else tail[f]
            if seen[w]:
                if pred[u] != f:
                    return np.empty(0, np.int64)  # cycle
                continue
            seen[w] = True
            parent[w] = u
            pred[w] = f
            depth[w] = depth[u] + 1
            _add_child(u, w, fchild, nsib, psib)
            order[hi] = w
            hi += 1
    if hi != N:
        return np.empty(0, np.int64)
    return order


@jit
def _tree_flows(order, parent, pred, tail, need, flow):
    """Flows on tree arcs that meet the residual node demands ``need``.

    ``need[v]`` is the net inflow node v still requires once the non-tree
    arcs are fixed at their bounds. Children are settled before parents.
    """
    for k in range(order.size - 1, 0, -1):
        x = order[k]
        f = pred[x]
        p = parent[x]
        if tail[f] == p:
            flow[f] = need[x]
            need[p] += need[x]
        else:
            flow[f] = -need[x]
            need[p] += need[x]
        need[x] = 0.0


@jit
def _potentials(order, parent, pred, tail, cost, depth, pi):
    pi[order[0]] = 0.0
    depth[order[0]] = 0
    for k in range(1, order.size):
        x = order[k]
        p = parent[x]
        f = pred[x]
        depth[x] = depth[p] + 1
        if tail[f] == p:
            pi[x] = pi[p] + cost[f]
        else:
            pi[x] = pi[p] - cost[f]


def tree_order(fchild, nsib, root):
    """Pre-order listing of the current tree (parents before children)."""
    out = []
    stack = [root]
    while stack:
        x = stack.pop()
        out.append(x)
        c = fchild[x]
        while c != -1:
            stack.append(c)
            c = nsib[c]
    return np.asarray(out, dtype=np.int64)


def run_kernel(use_numba: bool):
    return _run if use_numba else _run.py_func


def kernels(use_numba: bool):
    pick = (lambda f: f) if use_numba else (lambda f: f.py_func)
    return {
        "run": pick(_run),
        "bfs": pick(_bfs_tree),
        "flows": pick(_tree_flows),
        "potentials": pick(_potentials),
    }
