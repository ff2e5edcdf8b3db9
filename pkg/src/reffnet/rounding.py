"""Randomized rounding of fractional solutions into subgraphs.

``path_round`` samples ``T = floor(1/alpha)`` paths of a flow decomposition
and adds them to the integral edges.  The drivers below wrap it with the
fallbacks and retry loops that turn the per-attempt success probability into
a near-certain guarantee:

* ``approximate``: cost <= k and Reff <= 8 times the fractional optimum.
* ``short_path_round``: large-budget regime, ratio 2 + O(eps).
* ``dual_round``: cost minimisation subject to Reff <= R.

Trial ``i`` of a run seeded with ``seed`` draws from its own Philox stream,
so every outcome can be replayed from ``(seed, attempts - 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cp import (FractionalSolution, OptimalityCertificate, SolverConfig,
                 extract_certificate, solve_cp, solve_dcp)
from .electrical import effective_resistance, electrical_flow
from .errors import (BadCertificateError, InfeasibleError, InvalidInstanceError,
                     NotUnitInstanceError, RegimeViolationError, RoundingFailedError)
from .flows import (PathDecomposition, ShortPathConfig, decompose, integral_paths,
                    short_path_filter)
from .graph import Edge, Instance, shortest_path, shortest_path_distance

ATTEMPT_CONSTANT = 50
DEFAULT_ETA = 0.1
SLACK = 1e-9


@dataclass
class RoundingOutcome:
    chosen_edges: tuple[int, ...]
    multiplicities: tuple[int, ...]
    cost: float
    reff: float
    T: int | None = None
    alpha: float | None = None
    seed: int = 0
    attempts: int = 0
    paths_sampled: tuple[int, ...] = ()
    mode: str = "path-round"
    fractional_objective: float | None = None
    fractional_cost: float | None = None
    extras: dict = field(default_factory=dict)

    @property
    def edge_count(self) -> int:
        return int(sum(self.multiplicities))

    def to_json(self) -> dict:
        out = {"mode": self.mode,
               "edges": list(self.chosen_edges),
               "multiplicities": list(self.multiplicities),
               "cost": self.cost, "reff": self.reff,
               "T": self.T, "alpha": self.alpha,
               "seed": self.seed, "attempts": self.attempts}
        if self.fractional_objective is not None:
            out["fractional_objective"] = self.fractional_objective
        if self.fractional_cost is not None:
            out["fractional_cost"] = self.fractional_cost
        out.update(self.extras)
        return out


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent stream for trial ``trial`` of run ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


def rounds_for(alpha: float) -> int:
    """T = floor(1/alpha), never below one."""
    if not alpha > 0 or alpha > 1 + SLACK:
        raise BadCertificateError(f"alpha={alpha!r} outside (0, 1]")
    return max(1, math.floor(1.0 / alpha + SLACK))


def _require_unit(instance: Instance):
    if not instance.is_unit:
        raise NotUnitInstanceError("rounding guarantees need unit costs and resistances")


def _outcome_for(instance: Instance, edges, **kw) -> RoundingOutcome:
    edges = tuple(sorted(set(int(e) for e in edges)))
    return RoundingOutcome(edges, (1,) * len(edges), instance.subgraph_cost(edges),
                           effective_resistance(instance, instance.indicator(edges)), **kw)


def path_round(instance: Instance, x, cert: OptimalityCertificate,
               decomposition: PathDecomposition, seed: int, trial: int = 0) -> RoundingOutcome:
    """One round: E_I plus T paths drawn with probability proportional to weight."""
    T = rounds_for(cert.alpha)
    chosen = set(cert.integral_edges)
    picks: tuple[int, ...] = ()
    if len(decomposition):
        p = decomposition.weights / decomposition.weights.sum()
        picks = tuple(int(i) for i in trial_rng(seed, trial).choice(len(p), size=T, p=p))
        for i in picks:
            chosen.update(decomposition.paths[i])
    objective = getattr(x, "objective", None)
    return _outcome_for(instance, chosen, T=T, alpha=cert.alpha, seed=seed,
                        attempts=1, paths_sampled=picks, fractional_objective=objective)


def _shortest_path_outcome(instance: Instance, seed: int, mode="shortest-path") -> RoundingOutcome:
    path = shortest_path(instance)
    if path is None:
        raise InfeasibleError("s and t are disconnected")
    return _outcome_for(instance, path, seed=seed, mode=mode)


def _solved(instance: Instance, sol: FractionalSolution, config: SolverConfig):
    cert = extract_certificate(instance, sol, config)
    decomp = decompose(instance, electrical_flow(instance, sol.values))
    return cert, decomp


def _retry(instance, sol, cert, decomp, seed, cap, accept, mode) -> RoundingOutcome:
    for attempt in range(cap):
        out = path_round(instance, sol, cert, decomp, seed, trial=attempt)
        if accept(out):
            out.attempts = attempt + 1
            out.mode = mode
            out.fractional_cost = sol.cost
            return out
    raise RoundingFailedError(f"no acceptable rounding in {cap} attempts (seed {seed})")


def _small_alpha_or_integral(instance, sol, cert, decomp, seed, mode):
    """The two deterministic branches shared by all drivers, or None."""
    if cert.all_integral:
        out = _outcome_for(instance, cert.integral_edges, alpha=cert.alpha, seed=seed,
                           mode=f"{mode}:integral", fractional_objective=sol.objective)
    elif cert.alpha <= 1.0 / (4 * instance.m):
        paths = integral_paths(decomp, cert.integral_edges)
        edges = {e for p in paths.paths for e in p}
        if not edges:
            return None
        out = _outcome_for(instance, edges, alpha=cert.alpha, seed=seed,
                           mode=f"{mode}:integral-paths", fractional_objective=sol.objective)
    else:
        return None
    out.fractional_cost = sol.cost
    return out


def approximate(instance: Instance, config: SolverConfig | None = None,
                seed: int = 0) -> RoundingOutcome:
    """Integral subgraph with cost <= k and Reff <= 8 * fractional optimum."""
    _require_unit(instance)
    config = config or SolverConfig()
    k = instance.budget
    d = shortest_path_distance(instance)
    if d is None:
        raise InfeasibleError("s and t are disconnected")
    if k < d:
        raise RegimeViolationError(f"budget {k} below shortest path distance {d}")
    if k <= 2 * d:
        return _shortest_path_outcome(instance, seed)

    sol = solve_cp(instance, config, budget=k / 2)
    cert, decomp = _solved(instance, sol, config)
    out = _small_alpha_or_integral(instance, sol, cert, decomp, seed, "approx")
    if out is not None:
        return out
    target = 4 * sol.objective * (1 + SLACK)
    return _retry(instance, sol, cert, decomp, seed,
                  math.ceil(ATTEMPT_CONSTANT / cert.alpha),
                  lambda o: o.cost <= k + SLACK and o.reff <= target, "approx")


def short_path_round(instance: Instance, epsilon: float, config: SolverConfig | None = None,
                     seed: int = 0, eta: float = DEFAULT_ETA) -> RoundingOutcome:
    """Large-budget rounding through short paths only (c = 1/epsilon).

    Requires ``k >= 2 d_st / epsilon**10`` and ``epsilon <= eta``.
    """
    _require_unit(instance)
    config = config or SolverConfig()
    if not 0 < epsilon <= eta:
        raise RegimeViolationError(f"epsilon={epsilon} must lie in (0, {eta}]")
    k = instance.budget
    d = shortest_path_distance(instance)
    if d is None:
        raise InfeasibleError("s and t are disconnected")
    if k < 2 * d / epsilon ** 10:
        raise RegimeViolationError(f"budget {k} below 2 d_st / eps^10 = {2 * d / epsilon ** 10:.6g}")

    sol = solve_cp(instance, config, budget=k / (1 + epsilon))
    cert, decomp = _solved(instance, sol, config)
    out = _small_alpha_or_integral(instance, sol, cert, decomp, seed, "short-path")
    if out is not None:
        return out
    x_F = float(sol.values[list(cert.fractional_edges)].sum())
    spc = ShortPathConfig(1.0 / epsilon, cert.alpha, x_F, frozenset(cert.fractional_edges))
    short = short_path_filter(decomp, spc)
    target = (2 + 10 * epsilon) * sol.objective * (1 + SLACK)
    out = _retry(instance, sol, cert, short, seed, math.ceil(ATTEMPT_CONSTANT / epsilon),
                 lambda o: o.cost <= k + SLACK and o.reff <= target, "short-path")
    out.extras = {"epsilon": epsilon, "short_paths": len(short), "short_weight": short.total_weight}
    return out


def _dual_bicriteria(instance: Instance, R: float, config: SolverConfig, seed: int,
                     mode: str) -> RoundingOutcome:
    d = shortest_path_distance(instance)
    if d is None:
        raise InfeasibleError("s and t are disconnected")
    if d <= R * (1 + SLACK):
        # Unit resistances: a shortest path already meets the target.
        return _shortest_path_outcome(instance, seed, mode=f"{mode}:shortest-path")
    sol = solve_dcp(instance, config, target=R)
    cert, decomp = _solved(instance, sol, config)
    out = _small_alpha_or_integral(instance, sol, cert, decomp, seed, mode)
    if out is not None and out.reff <= 4 * R * (1 + SLACK):
        return out
    cap = 2 * sol.cost * (1 + SLACK)
    alpha = cert.alpha
    return _retry(instance, sol, cert, decomp, seed, math.ceil(ATTEMPT_CONSTANT / alpha),
                  lambda o: o.cost <= cap and o.reff <= 4 * R * (1 + SLACK), mode)


def four_copies(instance: Instance, copies: int = 4) -> Instance:
    """Multigraph with ``copies`` parallel copies of every edge; copy j of e is edge copies*e + j."""
    edges = tuple(Edge(e.u, e.v, e.cost, e.resistance) for e in instance.edges for _ in range(copies))
    return Instance(instance.n, edges, instance.s, instance.t, instance.budget * copies,
                    instance.dual_target)


def dual_round(instance: Instance, config: SolverConfig | None = None, seed: int = 0,
               allow_copies: bool = False) -> RoundingOutcome:
    """Round the cost-minimisation relaxation with target ``instance.dual_target``.

    Without copies the result has cost <= 2 * fractional cost and Reff <= 4R.
    With copies the relaxation is solved on a four-copy multigraph at R/4 and
    the rounded multiset meets Reff <= R with at most four copies per edge.
    """
    _require_unit(instance)
    config = config or SolverConfig()
    R = instance.dual_target
    if R is None:
        raise InvalidInstanceError("instance has no dual target R")
    if not allow_copies:
        return _dual_bicriteria(instance, R, config, seed, "dual")

    d = shortest_path_distance(instance)
    if d is not None and d <= R * (1 + SLACK):
        return _shortest_path_outcome(instance, seed, mode="dual-copies:shortest-path")
    multi = four_copies(instance).with_dual_target(R / 4)
    out = _dual_bicriteria(multi, R / 4, config, seed, "dual-copies")
    counts: dict[int, int] = {}
    for e in out.chosen_edges:
        counts[e // 4] = counts.get(e // 4, 0) + 1
    edges = tuple(sorted(counts))
    out.chosen_edges = edges
    out.multiplicities = tuple(counts[e] for e in edges)
    return out


@dataclass
class TrialStatistics:
    """Per-trial fractional-edge counts and resistances of ``path_round``."""

    fractional_counts: np.ndarray
    reffs: np.ndarray
    T: int
    alpha: float
    fractional_value: float
    objective: float

    @property
    def budget_bound(self) -> float:
        return self.T * self.alpha * self.fractional_value

    @property
    def reff_bound(self) -> float:
        T, a = self.T, self.alpha
        return (1 - 1 / T + 1 / (T * a)) * self.objective


def sample_trials(instance: Instance, sol: FractionalSolution, cert: OptimalityCertificate,
                  decomposition: PathDecomposition, trials: int, seed: int = 0) -> TrialStatistics:
    frac = set(cert.fractional_edges)
    counts = np.empty(trials)
    reffs = np.empty(trials)
    for i in range(trials):
        out = path_round(instance, sol, cert, decomposition, seed, trial=i)
        counts[i] = sum(e in frac for e in out.chosen_edges)
        reffs[i] = out.reff
    x_F = float(sol.values[list(cert.fractional_edges)].sum()) if frac else 0.0
    return TrialStatistics(counts, reffs, rounds_for(cert.alpha), cert.alpha, x_F, sol.objective)
