"""Driver for the spanning-tree simplex kernels."""
from __future__ import annotations

import numpy as np

from .. import _accel
from ..errors import BackendError, Infeasible, PivotLimit, Unbounded
from ..lp import LpProblem, LpSolution, Status, VarKind
from . import _tree
from .basis import BackendOptions, Basis


class _Network:
    """Arc and node arrays for one solve; artificial arc ``p + v`` joins node v to the root."""

    def __init__(self, problem: LpProblem):
        n = problem.n
        p = problem.num_vars
        self.n, self.p = n, p
        self.N = 2 * n + 1
        self.root = 2 * n
        minus = problem.kind == VarKind.MINUS
        rnode = problem.row.astype(np.int64)
        cnode = n + problem.col.astype(np.int64)
        m = p + self.N - 1
        self.tail = np.empty(m, np.int64)
        self.head = np.empty(m, np.int64)
        self.tail[:p] = np.where(minus, cnode, rnode)
        self.head[:p] = np.where(minus, rnode, cnode)
        self.tail[p:] = self.root
        self.head[p:] = np.arange(2 * n)
        self.psi = np.ones(m)
        self.psi[:p] = problem.mu_hat[problem.row]
        self.cap = np.full(m, np.inf)
        self.cap[:p] = problem.upper * self.psi[:p]
        self.flow = np.zeros(m)
        self.state = np.full(m, _tree.LOWER, np.int8)
        self.cost = np.zeros(m)
        self.b = np.zeros(self.N)
        self.b[n:2 * n] = problem.z
        N = self.N
        self.parent = np.full(N, -1, np.int64)
        self.pred = np.full(N, -1, np.int64)
        self.depth = np.zeros(N, np.int64)
        self.pi = np.zeros(N)
        self.fchild = np.full(N, -1, np.int64)
        self.nsib = np.full(N, -1, np.int64)
        self.psib = np.full(N, -1, np.int64)

    def art(self, v):
        return self.p + v

    def set_phase(self, phase: int):
        p = self.p
        if phase == 1:
            self.cost[:p] = 0.0
            self.cost[p:] = 1.0
        else:
            self.cost[:p] = 1.0 / self.psi[:p]
            self.cost[p:] = 0.0
            self.cap[p:] = 0.0
            self.flow[p:] = 0.0

    def cold_start(self, k):
        n, root = self.n, self.root
        v = np.arange(2 * n)
        a = self.p + v
        pos = self.b[:2 * n] >= 0
        self.flow[:] = 0.0
        self.tail[a] = np.where(pos, root, v)
        self.head[a] = np.where(pos, v, root)
        self.flow[a] = np.abs(self.b[:2 * n])
        self.state[:] = _tree.LOWER
        self.state[a] = _tree.TREE
        self.parent[:2 * n] = root
        self.pred[:2 * n] = a
        self.parent[root] = -1
        self.pred[root] = -1
        self.fchild[:] = -1
        self.nsib[:] = -1
        self.psib[:] = -1
        # child list of the root in order 0..2n-1
        self.fchild[root] = 0
        self.nsib[:2 * n - 1] = v[1:]
        self.psib[1:2 * n] = v[:-1]
        self.order = np.concatenate([[root], v]).astype(np.int64)

    def warm_start(self, basis: Basis, problem: LpProblem, k, feas_tol) -> bool:
        """Rebuild the tree of a previous basis. False if it does not fit."""
        n, p, N, root = self.n, self.p, self.N, self.root
        keys = problem.keys
        bk = np.asarray(basis.basic_keys, dtype=np.int64)
        real = bk[bk >= 0]
        arts = -bk[bk < 0] - 1
        if bk.size != 2 * n or np.any(arts >= 2 * n):
            return False
        pos = np.searchsorted(keys, real)
        if real.size and (np.any(pos >= p) or np.any(keys[np.minimum(pos, p - 1)] != real)):
            return False
        tree_arcs = np.concatenate([pos, p + arts]).astype(np.int64)
        # artificials start pointing away from the root and are flipped below if needed
        self.tail[p + arts] = root
        self.head[p + arts] = arts
        self.state[:] = _tree.LOWER
        self.flow[:] = 0.0
        up = np.asarray(basis.upper_keys, dtype=np.int64)
        if up.size:
            upos = np.searchsorted(keys, up)
            if np.any(upos >= p) or np.any(keys[np.minimum(upos, p - 1)] != up):
                return False
            if not np.all(np.isfinite(self.cap[upos])):
                return False
            self.state[upos] = _tree.UPPER
            self.flow[upos] = self.cap[upos]
        self.state[tree_arcs] = _tree.TREE

        ends = np.concatenate([self.tail[tree_arcs], self.head[tree_arcs]])
        arcs = np.concatenate([tree_arcs, tree_arcs])
        idx = np.argsort(ends, kind="stable")
        adj_arc = arcs[idx]
        adj_ptr = np.zeros(N + 1, np.int64)
        np.cumsum(np.bincount(ends, minlength=N), out=adj_ptr[1:])
        order = k["bfs"](N, root, adj_ptr, adj_arc, self.tail, self.head, self.parent,
                         self.pred, self.depth, self.fchild, self.nsib, self.psib)
        if order.size != N:
            return False
        self.order = order
        self.settle_flows(k)
        # orient artificials along their flow
        a = p + arts
        neg = self.flow[a] < 0
        if neg.any():
            fa = a[neg]
            self.tail[fa], self.head[fa] = self.head[fa].copy(), self.tail[fa].copy()
            self.flow[fa] = -self.flow[fa]
        f = self.flow[:p]
        tree_real = self.state[:p] == _tree.TREE
        lo_bad = f < -feas_tol
        hi_bad = f > self.cap[:p] + feas_tol
        if np.any(tree_real & (lo_bad | hi_bad)):
            return False
        np.clip(self.flow[:p], 0.0, self.cap[:p], out=self.flow[:p])
        return True

    def settle_flows(self, k):
        """Recompute all tree flows from the node demands."""
        nontree = self.state != _tree.TREE
        f = np.where(nontree, self.flow, 0.0)
        need = self.b.copy()
        need -= np.bincount(self.head, weights=f, minlength=self.N)
        need += np.bincount(self.tail, weights=f, minlength=self.N)
        k["flows"](self.order, self.parent, self.pred, self.tail, need, self.flow)

    def potentials(self, k):
        self.order = _tree.tree_order(self.fchild, self.nsib, self.root)
        k["potentials"](self.order, self.parent, self.pred, self.tail, self.cost,
                        self.depth, self.pi)

    def run(self, k, opts: BackendOptions, budget: int, start: int):
        m = self.tail.size
        block = m if opts.pricing == "dantzig" else max(int(np.sqrt(m)), 10)
        status, piv, degen, nxt = k["run"](
            self.tail, self.head, self.psi, self.cost, self.cap, self.flow, self.state,
            self.parent, self.pred, self.depth, self.pi, self.fchild, self.nsib,
            self.psib, opts.opt_tol, budget, block, start)
        if status == _tree.UNBOUNDED:
            raise Unbounded("unbounded direction in the perturbation LP")
        if status == _tree.PIVOT_LIMIT:
            raise PivotLimit(f"pivot limit {opts.max_pivots} reached")
        return int(piv), int(nxt)

    def artificial_mass(self) -> float:
        return float(self.flow[self.p:].sum())


def solve_tree(problem: LpProblem, warm: Basis | None, opts: BackendOptions) -> LpSolution:
    k = _tree.kernels(_accel.resolve(opts.use_numba))
    net = _Network(problem)
    limit = opts.pivot_limit(problem.n)
    started = False
    if warm is not None:
        started = net.warm_start(warm, problem, k, opts.feas_tol)
    if not started:
        net.cold_start(k)

    piv1 = 0
    nxt = 0
    if net.artificial_mass() > opts.feas_tol:
        net.set_phase(1)
        net.potentials(k)
        piv1, nxt = net.run(k, opts, limit, 0)
        if net.artificial_mass() > opts.feas_tol:
            raise Infeasible(
                f"no perturbation on this support reaches the target "
                f"(phase-1 residual {net.artificial_mass():.3e})"
            )
    net.set_phase(2)
    net.potentials(k)
    piv2, _ = net.run(k, opts, limit - piv1, nxt)
    net.order = _tree.tree_order(net.fchild, net.nsib, net.root)
    net.settle_flows(k)
    return _solution(problem, net, piv1 + piv2, piv1, opts)


def _solution(problem: LpProblem, net: _Network, pivots, piv1, opts) -> LpSolution:
    n, p = net.n, net.p
    x = net.flow[:p] / net.psi[:p]
    upper = problem.upper
    x[np.abs(x) <= 1e-13] = 0.0
    near_up = np.isfinite(upper) & (np.abs(x - upper) <= 1e-13)
    x[near_up] = upper[near_up]
    if x.size and (x.min() < -opts.feas_tol or np.any(x > upper + opts.feas_tol)):
        raise BackendError("tree flows left their bounds after the final settle")
    x = np.clip(x, 0.0, upper)
    art = net.flow[p:]
    if np.any(np.abs(art) > opts.feas_tol):
        raise BackendError("artificial flow survived phase 2")

    st = net.state[:p]
    status = np.where(st == _tree.TREE, Status.BASIC,
                      np.where(st == _tree.UPPER, Status.AT_UPPER, Status.AT_LOWER)).astype(np.int8)
    keys = problem.keys
    tree_real = np.flatnonzero(st == _tree.TREE)
    tree_art = np.flatnonzero(net.state[p:] == _tree.TREE)
    basic_keys = np.concatenate([keys[tree_real], -(tree_art + 1)])
    basis = Basis(basic_keys, keys[st == _tree.UPPER])
    y0 = -problem.mu_hat * net.pi[:n]
    ymu = net.pi[n:2 * n].copy()
    return LpSolution(x, y0, ymu, status, float(x.sum()), basis, pivots, piv1, "tree")
