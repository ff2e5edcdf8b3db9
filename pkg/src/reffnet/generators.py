"""Instance families: integrality-gap constructions, the 3DM gadget, random corpora.

Vertex 0 is always ``s`` and vertex 1 is always ``t`` unless stated otherwise.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import networkx as nx
import numpy as np

from .electrical import effective_resistance
from .errors import InstanceFormatError, InvalidInstanceError
from .graph import Edge, Instance, shortest_path_distance


def _path_edges(s: int, t: int, length: int, first_free: int) -> tuple[list[tuple[int, int]], int]:
    """Edges of an s-t path with ``length`` edges using fresh interior vertices."""
    verts = [s] + list(range(first_free, first_free + length - 1)) + [t]
    return list(zip(verts, verts[1:])), first_free + length - 1


def gen_gap_cost(n: int) -> Instance:
    """Unit resistances, arbitrary costs: a cheap long path against a 2-edge path.

    The top path has n-2 edges of cost 1/(n-2), the bottom path two edges of
    cost 1, and k = 1.  Integrally only the top path is affordable (Reff n-2),
    while x = 1/2 on the bottom edges gives Reff 4.
    """
    if n < 4:
        raise InvalidInstanceError("gen_gap_cost needs n >= 4")
    top, nxt = _path_edges(0, 1, n - 2, 2)
    bottom, nxt = _path_edges(0, 1, 2, nxt)
    edges = [Edge(u, v, 1.0 / (n - 2), 1.0) for u, v in top]
    edges += [Edge(u, v, 1.0, 1.0) for u, v in bottom]
    return Instance(nxt, tuple(edges), 0, 1, 1.0)


def gen_gap_resistance(n: int, R_big: float) -> Instance:
    """Unit costs, arbitrary resistances: an (n-1)-edge path against one heavy edge, k = n-2."""
    if n < 3:
        raise InvalidInstanceError("gen_gap_resistance needs n >= 3")
    if not R_big > 0:
        raise InvalidInstanceError("R_big must be positive")
    top, nxt = _path_edges(0, 1, n - 1, 2)
    edges = [Edge(u, v) for u, v in top] + [Edge(0, 1, 1.0, float(R_big))]
    return Instance(nxt, tuple(edges), 0, 1, float(n - 2))


def gen_two_paths(k: int) -> Instance:
    """Two vertex-disjoint s-t paths of k/2 + 1 edges each, unit weights, budget k."""
    if k != int(k) or k < 2 or int(k) % 2:
        raise InvalidInstanceError("gen_two_paths needs an even k >= 2")
    k = int(k)
    first, nxt = _path_edges(0, 1, k // 2 + 1, 2)
    second, nxt = _path_edges(0, 1, k // 2 + 1, nxt)
    return Instance(nxt, tuple(Edge(u, v) for u, v in first + second), 0, 1, float(k))


def gen_dual_gap(n: int, epsilon: float) -> Instance:
    """An (n-1)-edge path plus a direct s-t edge, with R = (n-1)^2 / ((n-1)^2 + epsilon).

    Fractionally the direct edge plus x = epsilon/(n-1) on the path reaches R
    at cost 1 + epsilon; integrally both routes are needed, at cost n.
    """
    if n < 3:
        raise InvalidInstanceError("gen_dual_gap needs n >= 3")
    if not 0 < epsilon < n - 1:
        raise InvalidInstanceError("epsilon must lie in (0, n-1)")
    path, nxt = _path_edges(0, 1, n - 1, 2)
    edges = [Edge(u, v) for u, v in path] + [Edge(0, 1)]
    R = (n - 1) ** 2 / ((n - 1) ** 2 + epsilon)
    return Instance(nxt, tuple(edges), 0, 1, float(n), R)


def gen_parallel_paths(lengths, budget: float | None = None) -> Instance:
    """Internally disjoint s-t paths with the given edge counts, unit weights."""
    edges, nxt = [], 2
    for length in lengths:
        if length < 1:
            raise InvalidInstanceError("path lengths must be positive")
        if length == 1:
            edges.append((0, 1))
            continue
        path, nxt = _path_edges(0, 1, int(length), nxt)
        edges += path
    k = float(len(edges)) if budget is None else float(budget)
    return Instance(nxt, tuple(Edge(u, v) for u, v in edges), 0, 1, k)


# ---------------------------------------------------------------------------
# random corpora


def _weights(rng: np.random.Generator, m: int, weighted: bool):
    if not weighted:
        return np.ones(m), np.ones(m)
    resistances = np.exp(rng.uniform(0.0, math.log(16.0), m))
    costs = rng.integers(1, 5, m).astype(float)
    return costs, resistances


def cheapest_path_cost(instance: Instance) -> float | None:
    """Minimum total edge cost of an s-t path, or None if disconnected."""
    g = nx.Graph()
    g.add_nodes_from(range(instance.n))
    for e in instance.edges:
        if not g.has_edge(e.u, e.v) or g[e.u][e.v]["cost"] > e.cost:
            g.add_edge(e.u, e.v, cost=e.cost)
    try:
        return float(nx.shortest_path_length(g, instance.s, instance.t, weight="cost"))
    except nx.NetworkXNoPath:
        return None


def _default_budget(instance: Instance) -> float:
    """Cheapest s-t path plus half of the remaining cost, rounded down."""
    base = cheapest_path_cost(instance)
    return float(math.floor(base + (instance.total_cost - base) / 2 + 1e-9))


def gen_random(n: int, edge_probability: float, seed: int, weighted: bool = False,
               budget: float | None = None, max_tries: int = 10_000) -> Instance:
    """Erdős–Rényi graph on n vertices, resampled until s = 0 and t = n-1 are connected.

    Weighted mode draws resistances log-uniformly from [1, 16] and integer
    costs from {1..4}.  The default budget is the cheapest s-t path plus half
    of the remaining cost, rounded down (for unit costs: (d_st + m) // 2).
    """
    if n < 2:
        raise InvalidInstanceError("need at least two vertices")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        pairs = [p for p in itertools.combinations(range(n), 2)
                 if rng.random() < edge_probability]
        costs, res = _weights(rng, len(pairs), weighted)
        edges = tuple(Edge(u, v, float(c), float(r)) for (u, v), c, r in zip(pairs, costs, res))
        inst = Instance(n, edges, 0, n - 1, 0.0)
        if shortest_path_distance(inst) is None:
            continue
        return inst.with_budget(_default_budget(inst) if budget is None else float(budget))
    raise InvalidInstanceError("could not sample an s-t connected graph")


def gen_random_sp(m: int, seed: int, weighted: bool = False, budget: float | None = None,
                  shuffle: bool = True) -> Instance:
    """Random two-terminal series-parallel graph with m edges.

    Grown from a single s-t edge by repeatedly subdividing or doubling a
    random edge; edge ids are shuffled so the order carries no structure.
    The default budget follows ``gen_random``.
    """
    if m < 1:
        raise InvalidInstanceError("need at least one edge")
    rng = np.random.default_rng(seed)
    pairs, nxt = [(0, 1)], 2
    while len(pairs) < m:
        i = int(rng.integers(len(pairs)))
        u, v = pairs[i]
        if rng.random() < 0.5:
            pairs[i] = (u, nxt)
            pairs.append((nxt, v))
            nxt += 1
        else:
            pairs.append((u, v))
    if shuffle:
        pairs = [pairs[i] for i in rng.permutation(len(pairs))]
    costs, res = _weights(rng, m, weighted)
    edges = tuple(Edge(u, v, float(c), float(r)) for (u, v), c, r in zip(pairs, costs, res))
    inst = Instance(nxt, edges, 0, 1, 0.0)
    return inst.with_budget(_default_budget(inst) if budget is None else float(budget))


def connected_graph_corpus(max_n: int):
    """All connected simple graphs on 2..max_n vertices (max_n <= 7), one per isomorphism class.

    Yields ``(graph_index, Instance)`` with s,t a pair realising the hop
    diameter (lexicographically first) and budget 0; callers sweep k.
    """
    if max_n > 7:
        raise InvalidInstanceError("the graph atlas stops at 7 vertices")
    for index, g in enumerate(nx.graph_atlas_g()):
        if g.number_of_nodes() < 2 or g.number_of_nodes() > max_n or not nx.is_connected(g):
            continue
        dist = dict(nx.all_pairs_shortest_path_length(g))
        nodes = sorted(g.nodes)
        s, t = max(itertools.combinations(nodes, 2), key=lambda p: (dist[p[0]][p[1]], -p[0], -p[1]))
        edges = tuple(Edge(int(u), int(v)) for u, v in sorted(g.edges))
        yield index, Instance(g.number_of_nodes(), edges, int(s), int(t), 0.0)


# ---------------------------------------------------------------------------
# series-parallel networks up to equivalence
#
# A network is "e", ("S", children) or ("P", children), where children is a
# sorted tuple of networks of the other kind (or "e").  Series blocks commute
# for every quantity that depends only on Reff and cost, so these canonical
# forms cover every SP graph up to that equivalence.


@lru_cache(maxsize=None)
def _rooted(kind: str, m: int) -> tuple:
    """Canonical networks with m edges whose root composition is ``kind``."""
    if m < 2:
        return ()
    other = "P" if kind == "S" else "S"

    def atoms(j):
        return ("e",) if j == 1 else _rooted(other, j)

    out = []

    def extend(remaining, parts, min_key):
        if remaining == 0:
            if len(parts) >= 2:
                out.append((kind, tuple(parts)))
            return
        for j in range(min_key[0], min(remaining, m - 1) + 1):
            start = min_key[1] if j == min_key[0] else 0
            pool = atoms(j)
            for idx in range(start, len(pool)):
                extend(remaining - j, parts + [pool[idx]], (j, idx))

    extend(m, [], (1, 0))
    return tuple(out)


def enumerate_sp_networks(m: int) -> tuple:
    """All canonical SP networks with exactly m edges."""
    if m < 1:
        return ()
    if m == 1:
        return ("e",)
    return _rooted("S", m) + _rooted("P", m)


def network_instance(net, budget: float = 0.0) -> Instance:
    """Realise a canonical network as an Instance with s = 0, t = 1."""
    pairs: list[tuple[int, int]] = []
    counter = [2]

    def build(node, a, b):
        if node == "e":
            pairs.append((a, b))
        elif node[0] == "P":
            for child in node[1]:
                build(child, a, b)
        else:
            children = node[1]
            cur = a
            for i, child in enumerate(children):
                nxt = b if i == len(children) - 1 else counter[0]
                if nxt != b:
                    counter[0] += 1
                build(child, cur, nxt)
                cur = nxt

    build(net, 0, 1)
    return Instance(counter[0], tuple(Edge(u, v) for u, v in pairs), 0, 1, float(budget))


# ---------------------------------------------------------------------------
# 3-dimensional matching gadget


@dataclass(frozen=True)
class ThreeDMInstance:
    q: int
    triples: tuple[tuple[int, int, int], ...]   # 1-based (x, y, z)

    def __post_init__(self):
        object.__setattr__(self, "triples", tuple(tuple(int(v) for v in tr) for tr in self.triples))
        if self.q < 1:
            raise InvalidInstanceError("q must be positive")
        for tr in self.triples:
            if len(tr) != 3 or not all(1 <= v <= self.q for v in tr):
                raise InvalidInstanceError(f"triple {tr} out of range [1, {self.q}]")

    @property
    def tau(self) -> int:
        return len(self.triples)

    def is_matching(self, chosen) -> bool:
        picked = [self.triples[i] for i in chosen]
        return len(picked) == self.q and all(
            len({tr[j] for tr in picked}) == self.q for j in range(3))

    def perfect_matching(self) -> tuple[int, ...] | None:
        """Indices of q disjoint triples, by brute force (fine for tiny q)."""
        for chosen in itertools.combinations(range(self.tau), self.q):
            if self.is_matching(chosen):
                return chosen
        return None


def parse_3dm(text: str) -> ThreeDMInstance:
    """``q`` on the first line, then one ``x y z`` triple per line."""
    rows = [ln.split("#", 1)[0].split() for ln in text.splitlines()]
    rows = [r for r in rows if r]
    if not rows or len(rows[0]) != 1:
        raise InstanceFormatError("3DM input must start with q")
    try:
        q = int(rows[0][0])
        triples = tuple(tuple(int(v) for v in r) for r in rows[1:])
    except ValueError:
        raise InstanceFormatError("3DM input must be integers") from None
    if any(len(r) != 3 for r in triples):
        raise InstanceFormatError("each triple needs three indices")
    try:
        return ThreeDMInstance(q, triples)
    except InvalidInstanceError as exc:
        raise InstanceFormatError(str(exc)) from None


def read_3dm(path) -> ThreeDMInstance:
    return parse_3dm(Path(path).read_text())


@dataclass(frozen=True)
class Gadget:
    """The reduction graph plus the index bookkeeping needed to build witnesses."""

    instance: Instance
    k: int
    R: float
    l: int
    f1: tuple[tuple[int, int, int], ...]   # edge ids (T_i, x), (T_i, y), (T_i, z) per triple
    f2: tuple[int, ...]
    paths: tuple[tuple[int, ...], ...]     # edge ids of P_i, from s to T_i

    def candidate(self, chosen) -> tuple[int, ...]:
        """Edges of the chosen paths plus every F1 and F2 edge (exactly k edges for q paths)."""
        edges = [e for i in chosen for e in self.paths[i]]
        edges += [e for trip in self.f1 for e in trip] + list(self.f2)
        return tuple(sorted(edges))

    def reff(self, edges) -> float:
        return effective_resistance(self.instance, self.instance.indicator(edges))


def gen_3dm(three_dm: ThreeDMInstance) -> Gadget:
    """Build the resistance-design instance for a 3DM instance.

    Vertices: s = 0, t = 1, the triple vertices T_1..T_tau, the element
    vertices x_1..x_q, y_1..y_q, z_1..z_q, then tau*l dummy vertices.  Edges:
    F1 (triple to its elements), F2 (element to t), then the paths
    s, d_{i,1}, ..., d_{i,l}, T_i.  With l = 3 tau + 3q the decision pair is
    k = q(l+1) + 3 tau + 3q and R = (3(l+1) + 2) / (3q).
    """
    q, tau = three_dm.q, three_dm.tau
    l = 3 * tau + 3 * q
    triple_v = [2 + i for i in range(tau)]
    base = 2 + tau
    elem = {(axis, j): base + axis * q + (j - 1) for axis in range(3) for j in range(1, q + 1)}
    dummy0 = base + 3 * q
    pairs: list[tuple[int, int]] = []
    f1 = []
    for i, tr in enumerate(three_dm.triples):
        ids = []
        for axis in range(3):
            ids.append(len(pairs))
            pairs.append((triple_v[i], elem[(axis, tr[axis])]))
        f1.append(tuple(ids))
    f2 = []
    for axis in range(3):
        for j in range(1, q + 1):
            f2.append(len(pairs))
            pairs.append((elem[(axis, j)], 1))
    paths = []
    for i in range(tau):
        verts = [0] + [dummy0 + i * l + j for j in range(l)] + [triple_v[i]]
        ids = []
        for a, b in zip(verts, verts[1:]):
            ids.append(len(pairs))
            pairs.append((a, b))
        paths.append(tuple(ids))
    n = dummy0 + tau * l
    k = q * (l + 1) + 3 * tau + 3 * q
    R = (3 * (l + 1) + 2) / (3 * q)
    inst = Instance(n, tuple(Edge(u, v) for u, v in pairs), 0, 1, float(k), R)
    return Gadget(inst, k, R, l, tuple(f1), tuple(f2), tuple(paths))


def matching_witness(gadget: Gadget, three_dm: ThreeDMInstance, matching=None) -> tuple[int, ...]:
    """k-edge subgraph built from a perfect matching.

    The matched paths, all F1 and all F2 edges.  The F1 edges at unmatched
    triples join element vertices that sit at equal potential, so they carry
    no current and the witness keeps Reff = (l+1)/q + 2/(3q).
    """
    chosen = three_dm.perfect_matching() if matching is None else tuple(matching)
    if chosen is None or not three_dm.is_matching(chosen):
        raise InvalidInstanceError("no perfect matching supplied or found")
    return gadget.candidate(chosen)


def path_subset_candidates(gadget: Gadget, q: int):
    """Every 'q of tau paths plus all F1, F2' candidate with its Reff."""
    for chosen in itertools.combinations(range(len(gadget.paths)), q):
        edges = gadget.candidate(chosen)
        yield chosen, edges, gadget.reff(edges)
