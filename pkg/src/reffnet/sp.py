"""Series-parallel networks: recognition, resistance evaluation and budgeted DPs.

A two-terminal series-parallel network is recognised by repeatedly merging
parallel edges and suppressing internal degree-two vertices; the log of
reductions is the SP-tree.  On the tree two dynamic programs solve the
budgeted problem:

* ``sp_exact``: unit costs, table R(v, b) of the best resistance of G_v with
  at most b edges.
* ``sp_fptas``: arbitrary costs and resistances.  Resistances are rescaled so
  that the smallest is 1, measured in units of L = eps / m^2 and rounded up;
  parallel combinations are rounded up again with exact integer arithmetic.
  For every node the function C(v, R) (least cost reaching discretised
  resistance <= R) is kept as its list of breakpoints, i.e. the Pareto
  frontier of (R, cost).  This is the same step function a dense table over
  the whole integer grid would hold, at a fraction of the size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (InfeasibleBudgetError, InfeasibleError, NotSeriesParallelError,
                     UnitCostRequiredError)
from .graph import Instance

LEAF, SERIES, PARALLEL = "leaf", "series", "parallel"
INF = math.inf


@dataclass(frozen=True)
class SPNode:
    kind: str
    s: int
    t: int
    edge: int | None = None
    left: int | None = None
    right: int | None = None
    middle: int | None = None  # shared vertex of a series node


@dataclass(frozen=True)
class SPTree:
    """Binary SP-tree; children always precede their parent in ``nodes``."""

    nodes: tuple[SPNode, ...]
    root: int

    def __len__(self):
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return sum(1 for nd in self.nodes if nd.kind == LEAF)

    def leaves(self, v: int | None = None) -> list[int]:
        """Edge ids below node ``v`` (the whole tree by default)."""
        out, stack = [], [self.root if v is None else v]
        while stack:
            nd = self.nodes[stack.pop()]
            if nd.kind == LEAF:
                out.append(nd.edge)
            else:
                stack += [nd.right, nd.left]
        return out

    def sizes(self) -> list[int]:
        size = [0] * len(self.nodes)
        for i, nd in enumerate(self.nodes):
            size[i] = 1 if nd.kind == LEAF else size[nd.left] + size[nd.right]
        return size

    def describe(self, v: int | None = None) -> str:
        nd = self.nodes[self.root if v is None else v]
        if nd.kind == LEAF:
            return f"e{nd.edge}"
        op = "S" if nd.kind == SERIES else "P"
        return f"{op}({self.describe(nd.left)}, {self.describe(nd.right)})"


# ---------------------------------------------------------------------------
# recognition


def recognize_sp(instance: Instance) -> SPTree:
    """Build the SP-tree of ``instance`` with terminals (s, t).

    Raises ``NotSeriesParallelError`` when the reductions get stuck before a
    single s-t edge remains.  Vertices without edges are ignored.
    """
    s, t = instance.s, instance.t
    if instance.m == 0:
        raise NotSeriesParallelError("graph has no edges")
    # Virtual edges are keyed by the index of their node in ``raw``; node
    # terminals are fixed afterwards by ``_orient``.
    raw: list[tuple] = []  # (kind, edge, left, right, middle, a, b)
    alive: dict[int, tuple[int, int, int]] = {}
    incident: dict[int, set[int]] = {}
    between: dict[tuple[int, int], set[int]] = {}

    def add(a, b, vid):
        alive[vid] = (a, b, vid)
        incident.setdefault(a, set()).add(vid)
        incident.setdefault(b, set()).add(vid)
        between.setdefault((min(a, b), max(a, b)), set()).add(vid)
        return vid

    def remove(vid):
        a, b, _ = alive.pop(vid)
        incident[a].discard(vid)
        incident[b].discard(vid)
        between[(min(a, b), max(a, b))].discard(vid)

    for i, e in enumerate(instance.edges):
        raw.append((LEAF, i, None, None, None, e.u, e.v))
        add(e.u, e.v, len(raw) - 1)

    pending_pairs = [key for key, ids in between.items() if len(ids) > 1]
    pending_verts = [v for v, ids in incident.items() if len(ids) == 2 and v not in (s, t)]
    while pending_pairs or pending_verts:
        if pending_pairs:
            key = pending_pairs.pop()
            ids = sorted(between.get(key, ()))
            while len(ids) > 1:
                x, y = ids.pop(0), ids.pop(0)
                a, b = key
                remove(x)
                remove(y)
                raw.append((PARALLEL, None, x, y, None, a, b))
                ids.insert(0, add(a, b, len(raw) - 1))
            for w in key:
                if w not in (s, t) and len(incident[w]) == 2:
                    pending_verts.append(w)
            continue
        v = pending_verts.pop()
        ids = sorted(incident.get(v, ()))
        if len(ids) != 2 or v in (s, t):
            continue
        x, y = ids
        ax, bx, _ = alive[x]
        ay, by, _ = alive[y]
        a = bx if ax == v else ax
        b = by if ay == v else ay
        if a == b:
            continue  # a pendant loop; reduction will get stuck
        remove(x)
        remove(y)
        raw.append((SERIES, None, x, y, v, a, b))
        add(a, b, len(raw) - 1)
        key = (min(a, b), max(a, b))
        if len(between[key]) > 1:
            pending_pairs.append(key)
        for w in (a, b):
            if w not in (s, t) and len(incident[w]) == 2:
                pending_verts.append(w)

    if len(alive) != 1:
        raise NotSeriesParallelError(
            f"reduction stuck with {len(alive)} virtual edges left")
    (a, b, root), = alive.values()
    if {a, b} != {s, t}:
        raise NotSeriesParallelError("terminals are not the reduction's end points")
    return _orient(raw, root, s, t)


def _orient(raw, root, s, t) -> SPTree:
    """Assign terminals top-down, starting from (s, t) at the root."""
    term = {root: (s, t)}
    order, stack = [], [root]
    while stack:
        v = stack.pop()
        order.append(v)
        kind, _, left, right, middle, _, _ = raw[v]
        a, b = term[v]
        if kind == PARALLEL:
            term[left] = term[right] = (a, b)
        elif kind == SERIES:
            la, lb = raw[left][5], raw[left][6]
            if a in (la, lb) and middle in (la, lb):
                term[left], term[right] = (a, middle), (middle, b)
            else:
                term[left], term[right] = (middle, b), (a, middle)
                left, right = right, left
            raw[v] = (kind, None, left, right, middle, a, b)
        if kind != LEAF:
            stack += [raw[v][3], raw[v][2]]
    # Renumber so that children precede parents.
    post = order[::-1]
    index = {old: new for new, old in enumerate(post)}
    nodes = []
    for old in post:
        kind, edge, left, right, middle, _, _ = raw[old]
        a, b = term[old]
        if kind == LEAF:
            nodes.append(SPNode(LEAF, a, b, edge=edge))
        else:
            nodes.append(SPNode(kind, a, b, left=index[left], right=index[right],
                                middle=middle))
    return SPTree(tuple(nodes), index[root])


# ---------------------------------------------------------------------------
# evaluation


def parallel(a, b):
    """Harmonic combination with +inf meaning an absent branch."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = a * b / (a + b)
    out = np.where(np.isinf(a), b, np.where(np.isinf(b), a, out))
    return out if out.ndim else float(out)


def sp_reff(tree: SPTree, resistances):
    """Series adds, parallel combines harmonically; +inf marks a missing edge.

    ``resistances`` is indexed by edge id; a 2-D array evaluates every column
    (one resistance vector per column) at once.
    """
    r = np.asarray(resistances, dtype=float)
    vals = [None] * len(tree.nodes)
    for i, nd in enumerate(tree.nodes):
        if nd.kind == LEAF:
            vals[i] = r[nd.edge]
        elif nd.kind == SERIES:
            vals[i] = vals[nd.left] + vals[nd.right]
        else:
            vals[i] = parallel(vals[nd.left], vals[nd.right])
    out = vals[tree.root]
    return float(out) if np.ndim(out) == 0 else out


def subgraph_reff(instance: Instance, tree: SPTree, edges) -> float:
    r = np.full(instance.m, INF)
    idx = list(edges)
    r[idx] = instance.resistances[idx]
    return sp_reff(tree, r)


# ---------------------------------------------------------------------------
# dynamic programs


@dataclass
class DPTable:
    """Per-node DP data.

    exact mode: ``values[v]`` is R(v, b) for b = 0..k, ``choice[v][b]`` the
    budget b' given to the left child.  fptas mode: ``frontier[v]`` lists
    (R, cost, backpointer) breakpoints of C(v, .), R increasing and cost
    strictly decreasing; the backpointer indexes the children's frontiers
    (-1 marks an absent child).
    """

    mode: str
    values: list = field(default_factory=list)
    choice: list = field(default_factory=list)
    frontier: list = field(default_factory=list)
    unit: Fraction | None = None
    scale: float = 1.0


@dataclass
class SPResult:
    reff: float
    edges: tuple[int, ...]
    cost: float
    mode: str
    epsilon: float | None = None
    grid_value: int | None = None
    table: DPTable | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        out = {"mode": self.mode, "edges": list(self.edges),
               "multiplicities": [1] * len(self.edges),
               "cost": self.cost, "reff": self.reff}
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
            out["grid_value"] = self.grid_value
        return out


def _combine(kind, a, b):
    if kind == SERIES:
        return a + b
    return parallel(a, b)


def exact_table(instance: Instance, tree: SPTree, k: int) -> DPTable:
    """R(v, b) for every node and b = 0..k (unit costs)."""
    r = instance.resistances
    size = tree.sizes()
    table = DPTable("exact", [None] * len(tree.nodes), [None] * len(tree.nodes))
    b = np.arange(k + 1)
    for i, nd in enumerate(tree.nodes):
        if nd.kind == LEAF:
            vals = np.where(b >= 1, r[nd.edge], INF)
            table.values[i], table.choice[i] = vals, None
            continue
        L, R = table.values[nd.left], table.values[nd.right]
        # Budget beyond the subtree size is useless; cap the left share there.
        cap = min(k, size[nd.left])
        bl = np.arange(cap + 1)[:, None]          # left budget
        br = b[None, :] - bl                      # right budget
        ok = br >= 0
        cand = _combine(nd.kind, L[bl].repeat(k + 1, axis=1),
                        np.where(ok, R[np.clip(br, 0, k)], INF))
        cand = np.where(ok, cand, INF)
        pick = np.argmin(cand, axis=0)
        table.values[i] = cand[pick, b]
        table.choice[i] = pick
    return table


def _reconstruct_exact(tree: SPTree, table: DPTable, budget: int) -> list[int]:
    chosen, stack = [], [(tree.root, budget)]
    while stack:
        v, b = stack.pop()
        if not math.isfinite(table.values[v][b]):
            continue
        nd = tree.nodes[v]
        if nd.kind == LEAF:
            chosen.append(nd.edge)
            continue
        bl = int(table.choice[v][b])
        stack += [(nd.left, bl), (nd.right, b - bl)]
    return sorted(chosen)


def sp_exact(instance: Instance, tree: SPTree | None = None,
             budget: float | None = None) -> SPResult:
    """Optimal unit-cost subgraph of an SP network with at most k edges."""
    if not np.all(instance.costs == 1):
        raise UnitCostRequiredError("the exact DP needs unit edge costs")
    tree = tree or recognize_sp(instance)
    k = instance.budget if budget is None else budget
    k = min(int(math.floor(k + 1e-9)), instance.m)
    if k < 0:
        raise InfeasibleBudgetError("negative budget")
    table = exact_table(instance, tree, k)
    value = float(table.values[tree.root][k])
    if not math.isfinite(value):
        raise InfeasibleBudgetError(f"no s-t connected subgraph with at most {k} edges")
    edges = tuple(_reconstruct_exact(tree, table, k))
    return SPResult(value, edges, float(len(edges)), "sp-exact", table=table)


def _pareto(points):
    """Keep (R, cost, bp) points that no other point beats in both coordinates."""
    points.sort(key=lambda p: (p[0], p[1]))
    out, best = [], math.inf
    for p in points:
        if p[1] < best:
            out.append(p)
            best = p[1]
    return out


def fptas_table(instance: Instance, tree: SPTree, epsilon: float, k: float) -> DPTable:
    m = instance.m
    r = instance.resistances
    r_min = float(r.min())
    unit = Fraction(epsilon) / (m * m)        # L, in units of r_min
    table = DPTable("fptas", unit=unit, scale=r_min)
    c = instance.costs
    slack = k + 1e-9 * max(1.0, abs(k))
    for i, nd in enumerate(tree.nodes):
        if nd.kind == LEAF:
            grid = math.ceil(Fraction(float(r[nd.edge])) / Fraction(r_min) / unit)
            pts = [(math.inf, 0.0, -1)]
            if c[nd.edge] <= slack:
                pts.append((grid, float(c[nd.edge]), 0))
            table.frontier.append(_pareto(pts))
            continue
        A, B = table.frontier[nd.left], table.frontier[nd.right]
        pts = []
        for ia, (ra, ca, _) in enumerate(A):
            for ib, (rb, cb, _) in enumerate(B):
                cost = ca + cb
                if cost > slack:
                    continue
                if nd.kind == SERIES:
                    val = ra + rb
                elif ra == math.inf:
                    val = rb
                elif rb == math.inf:
                    val = ra
                else:
                    val = -(-(ra * rb) // (ra + rb))   # exact ceiling
                pts.append((val, cost, (ia, ib)))
        table.frontier.append(_pareto(pts))
    return table


def _reconstruct_fptas(tree: SPTree, table: DPTable, index: int) -> list[int]:
    chosen, stack = [], [(tree.root, index)]
    while stack:
        v, j = stack.pop()
        val, _, bp = table.frontier[v][j]
        if val == math.inf:
            continue
        nd = tree.nodes[v]
        if nd.kind == LEAF:
            chosen.append(nd.edge)
            continue
        stack += [(nd.left, bp[0]), (nd.right, bp[1])]
    return sorted(chosen)


def sp_fptas(instance: Instance, tree: SPTree | None = None, epsilon: float = 0.25,
             budget: float | None = None) -> SPResult:
    """(1 + eps)-approximate budgeted subgraph of an SP network, any costs."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    tree = tree or recognize_sp(instance)
    k = instance.budget if budget is None else float(budget)
    table = fptas_table(instance, tree, epsilon, k)
    front = table.frontier[tree.root]
    feasible = [j for j, (val, cost, _) in enumerate(front) if val != math.inf]
    if not feasible:
        raise InfeasibleError(f"no s-t connected subgraph of cost at most {k:g}")
    j = min(feasible, key=lambda j: front[j][0])
    edges = tuple(_reconstruct_fptas(tree, table, j))
    reff = subgraph_reff(instance, tree, edges)
    return SPResult(reff, edges, instance.subgraph_cost(edges), "sp-fptas",
                    epsilon=epsilon, grid_value=int(front[j][0]), table=table)
