"""Exhaustive solvers for small instances, used as ground truth in tests.

By Rayleigh monotonicity adding an edge never raises Reff(s,t), so the
primal optimum is attained by an affordable edge set that cannot be
extended; with unit costs those are exactly the min(k, m)-subsets.  Only
such maximal sets are enumerated unless ``prune=False``.  Subsets are
evaluated in batches with a vectorised Laplacian solve, and enumeration stops
early once the incumbent reaches Reff of the whole graph, which no subgraph
can beat.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .electrical import batch_effective_resistance, effective_resistance, electrical_flow
from .errors import InfeasibleError, InvalidInstanceError, TooLargeError
from .graph import Instance

DEFAULT_LIMIT = 2 ** 24
BATCH = 4096
REL = 1e-12


@dataclass(frozen=True)
class OracleResult:
    optimum: float
    witness: tuple[int, ...]
    explored: int
    cost: float
    reff: float

    def to_json(self) -> dict:
        return {"optimum": self.optimum, "witness": list(self.witness),
                "explored": self.explored, "cost": self.cost, "reff": self.reff}


def _bits(masks: np.ndarray, m: int) -> np.ndarray:
    return ((masks[:, None] >> np.arange(m, dtype=np.int64)) & 1).astype(float)


def _mask_batches(m: int):
    total = 1 << m
    for lo in range(0, total, BATCH):
        yield _bits(np.arange(lo, min(total, lo + BATCH), dtype=np.int64), m)


def _combination_batches(m: int, size: int):
    it = itertools.combinations(range(m), size)
    while True:
        chunk = list(itertools.islice(it, BATCH))
        if not chunk:
            return
        X = np.zeros((len(chunk), m))
        rows = np.repeat(np.arange(len(chunk)), size)
        X[rows, np.array(chunk, dtype=np.int64).ravel()] = 1.0
        yield X


def _touches_terminals(instance: Instance, X: np.ndarray) -> np.ndarray:
    """Cheap necessary condition for s-t connectivity."""
    at_s = (instance.tails == instance.s) | (instance.heads == instance.s)
    at_t = (instance.tails == instance.t) | (instance.heads == instance.t)
    return (X[:, at_s].sum(1) > 0) & (X[:, at_t].sum(1) > 0)


def _check_size(count: int, limit: int):
    if count > limit:
        raise TooLargeError(f"{count} subsets exceed the enumeration limit {limit}")


def oracle_primal(instance: Instance, limit: int = DEFAULT_LIMIT, prune: bool = True,
                  budget: float | None = None) -> OracleResult:
    """Minimum Reff(s,t) over edge sets of total cost at most k."""
    m, c = instance.m, instance.costs
    k = instance.budget if budget is None else float(budget)
    slack = k + 1e-9 * max(1.0, abs(k))
    unit_cost = bool(np.all(c == 1))
    if prune and unit_cost:
        size = min(int(math.floor(slack)), m)
        _check_size(math.comb(m, size), limit)
        batches = _combination_batches(m, size)
    else:
        _check_size(1 << m, limit)
        batches = _mask_batches(m)
    floor = effective_resistance(instance) if prune else -math.inf

    best, witness, explored = math.inf, None, 0
    for X in batches:
        cost = X @ c
        keep = cost <= slack
        if prune and not unit_cost:
            cheapest_missing = np.where(X > 0, np.inf, c).min(axis=1)
            keep &= cost + cheapest_missing > slack
        if prune:
            keep &= _touches_terminals(instance, X)
        X = X[keep]
        if len(X) == 0:
            continue
        vals = batch_effective_resistance(instance, X)
        explored += len(X)
        i = int(np.argmin(vals))
        if vals[i] < best * (1 - REL):
            best, witness = float(vals[i]), X[i]
        if prune and best <= floor * (1 + REL):
            break
    if witness is None:
        return OracleResult(math.inf, (), explored, 0.0, math.inf)
    edges = _trim(instance, witness)
    reff = effective_resistance(instance, instance.indicator(edges))
    return OracleResult(best, edges, explored, instance.subgraph_cost(edges), reff)


def _trim(instance: Instance, row: np.ndarray) -> tuple[int, ...]:
    """Witness edges that carry current; the rest do not affect Reff."""
    flow = electrical_flow(instance, row).flow
    return tuple(int(e) for e in np.flatnonzero((row > 0) & (flow > 1e-12)))


def oracle_dual(instance: Instance, limit: int = DEFAULT_LIMIT, prune: bool = True,
                target: float | None = None) -> OracleResult:
    """Minimum total cost over edge sets with Reff(s,t) <= R."""
    R = instance.dual_target if target is None else target
    if R is None:
        raise InvalidInstanceError("instance has no dual target R")
    if effective_resistance(instance) > R * (1 + 1e-9):
        raise InfeasibleError("even the whole graph misses the target R")
    m, c = instance.m, instance.costs
    tol = R * (1 + 1e-9)
    explored = 0
    if prune and np.all(c == 1):
        _check_size(1 << m, limit)
        for size in range(1, m + 1):
            hit, hit_val = None, math.inf
            for X in _combination_batches(m, size):
                X = X[_touches_terminals(instance, X)]
                if len(X) == 0:
                    continue
                vals = batch_effective_resistance(instance, X)
                explored += len(X)
                ok = np.flatnonzero(vals <= tol)
                if len(ok):
                    j = ok[np.argmin(vals[ok])]
                    if vals[j] < hit_val:
                        hit, hit_val = X[j], float(vals[j])
            if hit is not None:
                edges = tuple(int(e) for e in np.flatnonzero(hit))
                return OracleResult(float(size), edges, explored, float(size), hit_val)
        raise AssertionError("unreachable: the whole graph meets R")

    _check_size(1 << m, limit)
    best_cost, best_val, witness = math.inf, math.inf, None
    for X in _mask_batches(m):
        vals = batch_effective_resistance(instance, X)
        explored += len(X)
        cost = X @ c
        ok = np.flatnonzero(vals <= tol)
        if len(ok) == 0:
            continue
        order = np.lexsort((vals[ok], cost[ok]))
        j = ok[order[0]]
        if (cost[j], vals[j]) < (best_cost, best_val):
            best_cost, best_val, witness = float(cost[j]), float(vals[j]), X[j]
    edges = tuple(int(e) for e in np.flatnonzero(witness))
    return OracleResult(best_cost, edges, explored, best_cost, best_val)


def oracle_profile(instance: Instance, limit: int = DEFAULT_LIMIT) -> np.ndarray:
    """Unit-cost optimum for every integral budget at once.

    Entry ``k`` is the minimum Reff(s,t) over edge sets of size at most ``k``
    (``inf`` when no such set connects s and t), for ``k = 0..m``.  Every
    subset is evaluated once, so this is cheaper than ``m`` primal calls.
    """
    m = instance.m
    _check_size(1 << m, limit)
    by_size = np.full(m + 1, np.inf)
    for X in _mask_batches(m):
        vals = batch_effective_resistance(instance, X)
        sizes = X.sum(axis=1).astype(np.int64)
        np.minimum.at(by_size, sizes, vals)
    return np.minimum.accumulate(by_size)
