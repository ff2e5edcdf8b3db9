"""Path decompositions of unit s-t flows and the short-path filter."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .electrical import ElectricalFlow
from .errors import EmptyResultError, NotAUnitFlowError
from .graph import Instance

DUST = 1e-11
CONSERVATION_TOL = 1e-8


@dataclass(frozen=True)
class PathDecomposition:
    paths: tuple[tuple[int, ...], ...]          # edge ids, s to t
    vertices: tuple[tuple[int, ...], ...]       # vertex sequences, s to t
    weights: np.ndarray

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.paths)

    def edge_loads(self, m: int) -> np.ndarray:
        """sum_p v_p chi_p."""
        out = np.zeros(m)
        for p, w in zip(self.paths, self.weights):
            out[list(p)] += w
        return out

    def subset(self, keep) -> "PathDecomposition":
        keep = list(keep)
        return PathDecomposition(tuple(self.paths[i] for i in keep),
                                 tuple(self.vertices[i] for i in keep),
                                 self.weights[keep])

    def to_json(self) -> dict:
        return {"paths": [list(p) for p in self.paths],
                "weights": [float(w) for w in self.weights]}


@dataclass(frozen=True)
class ShortPathConfig:
    c_parameter: float
    alpha: float
    fractional_value: float
    fractional_edges: frozenset[int]

    def __post_init__(self):
        if not self.c_parameter > 1:
            raise ValueError("c_parameter must exceed 1")

    @property
    def threshold(self) -> float:
        """Paths with at least this many fractional edges are long."""
        return self.c_parameter * self.alpha * self.fractional_value


def check_unit_flow(instance: Instance, signed: np.ndarray, tol: float = CONSERVATION_TOL):
    net = np.zeros(instance.n)
    np.add.at(net, instance.tails, signed)
    np.add.at(net, instance.heads, -signed)
    want = np.zeros(instance.n)
    want[instance.s], want[instance.t] = 1.0, -1.0
    err = float(np.max(np.abs(net - want)))
    if err > tol:
        raise NotAUnitFlowError(f"conservation violated by {err:.3g}")


def decompose(instance: Instance, flow) -> PathDecomposition:
    """Peel s-t paths off a unit flow.

    ``flow`` is an ``ElectricalFlow`` or a signed per-edge vector (positive
    means u -> v).  Each walk follows the outgoing residual edge of largest
    remaining flow (smallest id on ties); the path weight is its bottleneck,
    so every peel empties at least one edge.
    """
    signed = flow.signed if isinstance(flow, ElectricalFlow) else np.asarray(flow, float)
    check_unit_flow(instance, signed)
    residual = np.abs(signed)
    residual[residual < DUST] = 0.0
    out_edges: list[list[tuple[int, int]]] = [[] for _ in range(instance.n)]
    for e, (a, b) in enumerate(zip(instance.tails.tolist(), instance.heads.tolist())):
        if signed[e] > 0:
            out_edges[a].append((e, b))
        elif signed[e] < 0:
            out_edges[b].append((e, a))

    s, t = instance.s, instance.t
    paths, verts, weights = [], [], []
    for _ in range(2 * instance.m + 2):
        if not any(residual[e] > 0 for e, _ in out_edges[s]):
            break
        v, edge_path, vertex_path, seen = s, [], [s], {s}
        while v != t:
            live = [(e, b) for e, b in out_edges[v] if residual[e] > 0]
            if not live:
                break
            e, b = min(live, key=lambda p: (-residual[p[0]], p[0]))
            if b in seen:
                raise NotAUnitFlowError("flow contains a directed cycle")
            edge_path.append(e)
            vertex_path.append(b)
            seen.add(b)
            v = b
        if v != t:
            # Stranded on floating-point dust; discard the last edge's residue.
            residual[edge_path[-1]] = 0.0
            continue
        w = float(min(residual[e] for e in edge_path))
        residual[edge_path] -= w
        residual[residual < DUST] = 0.0
        paths.append(tuple(edge_path))
        verts.append(tuple(vertex_path))
        weights.append(w)
    return PathDecomposition(tuple(paths), tuple(verts), np.array(weights))


def short_path_filter(decomposition: PathDecomposition,
                      config: ShortPathConfig) -> PathDecomposition:
    """Keep the paths with fewer than c * alpha * x_F fractional edges."""
    threshold = config.threshold
    keep = [i for i, p in enumerate(decomposition.paths)
            if sum(e in config.fractional_edges for e in p) < threshold]
    if not keep:
        raise EmptyResultError("every path in the decomposition is long")
    return decomposition.subset(keep)


def integral_paths(decomposition: PathDecomposition, integral_edges) -> PathDecomposition:
    """Paths that use integral edges only."""
    integral = set(integral_edges)
    keep = [i for i, p in enumerate(decomposition.paths) if integral.issuperset(p)]
    return decomposition.subset(keep)
