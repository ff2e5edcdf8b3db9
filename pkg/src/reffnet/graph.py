"""Instances, validation, connectivity and the instance text format."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InstanceFormatError

UNREACHABLE = None
SUPPORT_THRESHOLD = 1e-9


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    cost: float = 1.0
    resistance: float = 1.0

    @property
    def conductance(self) -> float:
        return 1.0 / self.resistance

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.u, self.v)


@dataclass(frozen=True)
class Instance:
    """Undirected multigraph with terminals, a budget and an optional dual target.

    Vertices are ``0..n-1``; an edge id is its position in ``edges``.
    """

    n: int
    edges: tuple[Edge, ...]
    s: int
    t: int
    budget: float = 0.0
    dual_target: float | None = None

    def __post_init__(self):
        if not isinstance(self.edges, tuple):
            object.__setattr__(self, "edges", tuple(self.edges))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def tails(self) -> np.ndarray:
        return np.array([e.u for e in self.edges], dtype=np.int64)

    @cached_property
    def heads(self) -> np.ndarray:
        return np.array([e.v for e in self.edges], dtype=np.int64)

    @cached_property
    def costs(self) -> np.ndarray:
        return np.array([e.cost for e in self.edges], dtype=float)

    @cached_property
    def resistances(self) -> np.ndarray:
        return np.array([e.resistance for e in self.edges], dtype=float)

    @cached_property
    def conductances(self) -> np.ndarray:
        return 1.0 / self.resistances

    @cached_property
    def incidence(self) -> np.ndarray:
        """Dense m x n signed incidence matrix (row e is b_e^T, +1 at u, -1 at v)."""
        B = np.zeros((self.m, self.n))
        idx = np.arange(self.m)
        B[idx, self.tails] += 1.0
        B[idx, self.heads] -= 1.0
        return B

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        """adjacency[v] lists (neighbor, edge id) pairs."""
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.n)]
        for i, e in enumerate(self.edges):
            adj[e.u].append((e.v, i))
            adj[e.v].append((e.u, i))
        return adj

    @property
    def is_unit(self) -> bool:
        return all(e.cost == 1 and e.resistance == 1 for e in self.edges)

    @property
    def total_cost(self) -> float:
        return float(self.costs.sum())

    def with_budget(self, budget: float) -> "Instance":
        return Instance(self.n, self.edges, self.s, self.t, budget, self.dual_target)

    def with_dual_target(self, target: float | None) -> "Instance":
        return Instance(self.n, self.edges, self.s, self.t, self.budget, target)

    def subgraph_cost(self, edge_ids: Iterable[int]) -> float:
        return float(sum(self.edges[i].cost for i in edge_ids))

    def indicator(self, edge_ids: Iterable[int]) -> np.ndarray:
        x = np.zeros(self.m)
        x[list(edge_ids)] = 1.0
        return x


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate(instance: Instance) -> ValidationReport:
    report = ValidationReport()
    n = instance.n
    if not isinstance(n, (int, np.integer)) or n < 1:
        report.violations.append("vertex count must be a positive integer")
        return report
    for name, v in (("source", instance.s), ("sink", instance.t)):
        if not 0 <= v < n:
            report.violations.append(f"{name} {v} out of range")
    if instance.s == instance.t:
        report.violations.append("coincident terminals")
    if not math.isfinite(instance.budget) or instance.budget < 0:
        report.violations.append("negative budget")
    if instance.dual_target is not None and not instance.dual_target > 0:
        report.violations.append("nonpositive dual target")
    for i, e in enumerate(instance.edges):
        if not (0 <= e.u < n and 0 <= e.v < n):
            report.violations.append(f"edge {i}: endpoint out of range")
        elif e.u == e.v:
            report.violations.append(f"edge {i}: self-loop")
        if not e.resistance > 0 or not math.isfinite(e.resistance):
            report.violations.append(f"edge {i}: nonpositive resistance")
        if not e.cost >= 0 or not math.isfinite(e.cost):
            report.violations.append(f"edge {i}: negative cost")
    if report.violations:
        return report
    d = shortest_path_distance(instance)
    if d is UNREACHABLE:
        report.warnings.append("terminals disconnected")
    elif instance.is_unit and instance.budget < d:
        report.warnings.append("budget below shortest path distance")
    return report


def _bfs(instance: Instance, usable=None) -> list[int | None]:
    dist: list[int | None] = [None] * instance.n
    dist[instance.s] = 0
    queue = deque([instance.s])
    while queue:
        a = queue.popleft()
        for b, i in instance.adjacency[a]:
            if dist[b] is None and (usable is None or usable[i]):
                dist[b] = dist[a] + 1
                queue.append(b)
    return dist


def shortest_path_distance(instance: Instance) -> int | None:
    """Hop distance from s to t, or ``UNREACHABLE`` (None)."""
    return _bfs(instance)[instance.t]


def shortest_path(instance: Instance, usable=None) -> list[int] | None:
    """Edge ids of a fewest-hop s-t path (ties broken by smallest edge id)."""
    parent: dict[int, tuple[int, int]] = {}
    seen = {instance.s}
    queue = deque([instance.s])
    while queue:
        a = queue.popleft()
        if a == instance.t:
            break
        for b, i in sorted(instance.adjacency[a], key=lambda p: p[1]):
            if b not in seen and (usable is None or usable[i]):
                seen.add(b)
                parent[b] = (a, i)
                queue.append(b)
    if instance.t not in seen:
        return None
    path = []
    v = instance.t
    while v != instance.s:
        v, i = parent[v]
        path.append(i)
    return path[::-1]


def st_connected_in_support(instance: Instance, x: Sequence[float],
                            threshold: float = SUPPORT_THRESHOLD) -> bool:
    x = np.asarray(x, dtype=float)
    if x.shape != (instance.m,):
        raise ValueError("x must have one entry per edge")
    return _bfs(instance, x > threshold)[instance.t] is not None


# ---------------------------------------------------------------------------
# text format


def _num(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise InstanceFormatError(f"line {lineno}: not a number: {token!r}") from None


def _int(token: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise InstanceFormatError(f"line {lineno}: not an integer: {token!r}") from None


def parse_instance(text: str) -> Instance:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((lineno, line.split()))
    if not lines:
        raise InstanceFormatError("empty instance")
    lineno, head = lines[0]
    if len(head) != 5:
        raise InstanceFormatError(f"line {lineno}: header must be 'n m s t k'")
    n, m, s, t = (_int(tok, lineno) for tok in head[:4])
    k = _num(head[4], lineno)
    body = lines[1:]
    dual_target = None
    if body and body[-1][1][0] == "R":
        lineno, toks = body.pop()
        if len(toks) != 2:
            raise InstanceFormatError(f"line {lineno}: expected 'R <value>'")
        dual_target = _num(toks[1], lineno)
    if len(body) != m:
        raise InstanceFormatError(f"expected {m} edge lines, found {len(body)}")
    edges = []
    for lineno, toks in body:
        if len(toks) != 4:
            raise InstanceFormatError(f"line {lineno}: expected 'u v cost resistance'")
        edges.append(Edge(_int(toks[0], lineno), _int(toks[1], lineno),
                          _num(toks[2], lineno), _num(toks[3], lineno)))
    inst = Instance(n, tuple(edges), s, t, k, dual_target)
    report = validate(inst)
    if not report.ok:
        raise InstanceFormatError("; ".join(report.violations))
    return inst


def format_instance(instance: Instance) -> str:
    out = [f"{instance.n} {instance.m} {instance.s} {instance.t} {instance.budget:.17g}"]
    for e in instance.edges:
        out.append(f"{e.u} {e.v} {e.cost:.17g} {e.resistance:.17g}")
    if instance.dual_target is not None:
        out.append(f"R {instance.dual_target:.17g}")
    return "\n".join(out) + "\n"


def read_instance(path) -> Instance:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InstanceFormatError(str(exc)) from None
    return parse_instance(text)


def write_instance(instance: Instance, path) -> None:
    Path(path).write_text(format_instance(instance))
