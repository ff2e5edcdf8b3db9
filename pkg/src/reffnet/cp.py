"""Convex relaxation of budgeted s-t effective resistance minimisation.

    minimise    Reff_x(s,t)
    subject to  sum_e c_e x_e <= k,  0 <= x_e <= 1

solved by projected gradient descent (Barzilai-Borwein trial steps with
Armijo backtracking along the projection arc).  Iteration stops once the
Frank-Wolfe gap, an upper bound on the distance to the optimum, falls below
the relative tolerance.  The cost-minimisation variant
(``solve_dcp``) bisects the budget around the same solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .electrical import (effective_resistance, electrical_flow, lipschitz_extension, potentials, reff_hessian,
                         value_and_gradient)
from .errors import (InfeasibleError, InvalidInstanceError, NoConvergenceError,
                     NotOptimalError, NotUnitInstanceError)
from .graph import Instance, shortest_path, shortest_path_distance

ARMIJO = 1e-4
PROJECTION_ROUNDS = 100
PROJECTION_GAP = 1e-12
# Coordinates below this are snapped to zero after each projection.  Residue
# of order 1e-12 would otherwise keep dangling vertices attached and produce
# gradients on edges that cannot carry current.
SUPPORT_FLOOR = 1e-9
RESTARTS = 8
RESTART_MIX = 0.1
# A stalled descent is accepted once its certified relative gap is this small;
# degenerate optimal faces make the last digits of the gap very slow to close.
STALL_GAP = 1e-5
WARM_ROUNDS = 200
WARM_STALL = 1e-7
CERTIFY_EVERY = 8
NEWTON_ROUNDS = 40
NEWTON_BACKTRACK = 12
NEWTON_MAX_VERTICES = 400
CERTIFIED, STALLED, NOT_CONVERGED = "certified", "stalled", "not-converged"


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    objective_tolerance: float = 1e-10
    step_shrink: float = 0.5
    integral_threshold: float = 1 - 1e-4
    zero_threshold: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if not self.objective_tolerance > 0:
            raise ValueError("objective_tolerance must be positive")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if not 0 < self.zero_threshold < self.integral_threshold < 1:
            raise ValueError("need 0 < zero_threshold < integral_threshold < 1")


@dataclass
class FractionalSolution:
    values: np.ndarray
    budget: float
    cost: float
    objective: float
    iterations: int = 0
    converged: bool = True

    def scaled(self, factor: float) -> "FractionalSolution":
        return FractionalSolution(self.values * factor, self.budget * factor,
                                  self.cost * factor, self.objective / factor,
                                  self.iterations, self.converged)


@dataclass
class OptimalityCertificate:
    """Flow-conductance ratio of a solved unit instance.

    ``alpha`` satisfies f_e = alpha x_e on the fractional edges and f_e >= alpha
    on the integral ones.  When no fractional edge carries current the
    solution is integral and ``alpha`` is the smallest current on an integral
    edge (``all_integral`` is then set).
    """

    alpha: float
    mu: float
    fractional_edges: tuple[int, ...]
    integral_edges: tuple[int, ...]
    max_ratio_deviation: float
    all_integral: bool = False
    zero_flow_edges: tuple[int, ...] = field(default=())

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "mu": self.mu,
                "fractional_edges": list(self.fractional_edges),
                "integral_edges": list(self.integral_edges),
                "max_ratio_deviation": self.max_ratio_deviation,
                "all_integral": self.all_integral}


@dataclass(frozen=True)
class DualBounds:
    d_st: int | None
    primal_lower: float | None    # d_st^2 / k, any fractional objective
    dual_lower: float | None      # d_st^2 / R, any fractional cost
    alpha_sq_upper: float | None  # d_st / k
    dual_alpha_sq_upper: float | None  # R / d_st


def project_box_knapsack(y: np.ndarray, c: np.ndarray, k: float) -> np.ndarray:
    """Euclidean projection onto {0 <= x <= 1, c.x <= k} for c >= 0.

    The projection is clamp(y - lam c, 0, 1) with the smallest lam >= 0 that
    meets the budget.  lam is bracketed by bisection; once both bracket ends
    clamp the same coordinates the root is solved for in closed form.
    """
    z = np.clip(y, 0.0, 1.0)
    if c @ z <= k:
        return z
    pos = c > 0
    lo, hi = 0.0, float(np.max(y[pos] / c[pos]))

    def pattern(lam):
        w = y - lam * c
        return (w > 0).astype(np.int8) + (w >= 1)

    p_lo, p_hi = pattern(lo), pattern(hi)
    for _ in range(PROJECTION_ROUNDS):
        if np.array_equal(p_lo, p_hi):
            free = p_lo == 1
            denom = c[free] @ c[free]
            if denom > 0:
                top = c[p_lo == 2].sum()
                lam = (c[free] @ y[free] + top - k) / denom
                if lo <= lam <= hi:
                    hi = lam
            break
        if hi - lo <= PROJECTION_GAP:
            break
        mid = 0.5 * (lo + hi)
        if c @ np.clip(y - mid * c, 0.0, 1.0) > k:
            lo, p_lo = mid, pattern(mid)
        else:
            hi, p_hi = mid, pattern(mid)
    return np.clip(y - hi * c, 0.0, 1.0)


def frank_wolfe_gap(g: np.ndarray, x: np.ndarray, c: np.ndarray, k: float) -> float:
    """max over feasible z of g.(x - z); bounds f(x) - f* from above for convex f."""
    z = np.zeros_like(x)
    z[(c == 0) & (g < 0)] = 1.0
    cand = np.flatnonzero((c > 0) & (g < 0))
    cand = cand[np.argsort(g[cand] / c[cand], kind="stable")]
    spent = np.cumsum(c[cand])
    full = spent <= k
    z[cand[full]] = 1.0
    if not full.all():
        nxt = cand[np.argmin(full)]
        z[nxt] = (k - (spent[full][-1] if full.any() else 0.0)) / c[nxt]
    return float(g @ (x - z))


def _initial_point(instance: Instance, k: float) -> np.ndarray:
    c = instance.costs
    x = np.full(instance.m, min(1.0, k / c.sum()))
    value, _ = value_and_gradient(instance, x)
    if math.isfinite(value):
        return x
    # Seed a shortest path at full weight, spread what is left uniformly.
    path = shortest_path(instance)
    x = np.zeros(instance.m)
    x[path] = 1.0
    rest = k - c @ x
    if rest < 0:
        return np.clip(x * k / (c @ x), 0.0, 1.0)
    others = x == 0
    if others.any() and c[others].sum() > 0:
        x[others] = min(1.0, rest / c[others].sum())
    return x


def waterfill(a: np.ndarray, c: np.ndarray, k: float) -> np.ndarray:
    """argmin sum a_e / x_e over {0 < x <= 1, c.x <= k}, i.e. x_e = min(1, sqrt(a_e / (mu c_e)))."""
    x = np.ones_like(a)
    if c @ x <= k:
        return x
    a = np.maximum(a, 1e-300)
    cc = np.maximum(c, 1e-300)

    def x_of(mu):
        with np.errstate(divide="ignore", over="ignore"):
            return np.minimum(1.0, np.sqrt(a / (mu * cc)))

    lo = hi = 1.0
    while c @ x_of(hi) > k:
        hi *= 4.0
    while c @ x_of(lo) <= k and lo > 1e-250:
        lo /= 4.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if c @ x_of(mid) > k:
            lo = mid
        else:
            hi = mid
        if hi <= lo * (1 + 1e-15):
            break
    return x_of(hi)


def alternating_warm_start(instance: Instance, x: np.ndarray, k: float,
                           rounds: int | None = None) -> np.ndarray:
    """Alternate electrical flow and water-filled x.

    Each half-step minimises sum f_e^2 / (w_e x_e) over one block, so the
    energy never increases and x never reaches zero on an edge carrying
    current.  This finds the right support quickly but converges slowly
    close to the optimum, where projected gradient takes over.
    """
    c, w = instance.costs, instance.conductances
    prev = math.inf
    for _ in range(WARM_ROUNDS if rounds is None else rounds):
        flow = electrical_flow(instance, x)
        if flow.reff > prev * (1 - WARM_STALL):
            break
        prev = flow.reff
        x = waterfill(flow.flow ** 2 / w, c, k)
    return x


def solve_cp(instance: Instance, config: SolverConfig | None = None,
             budget: float | None = None, x0=None) -> FractionalSolution:
    """Minimise Reff_x(s,t) over the box-knapsack set with budget ``budget``."""
    config = config or SolverConfig()
    k = instance.budget if budget is None else float(budget)
    c = instance.costs
    if shortest_path_distance(instance) is None:
        raise InfeasibleError("s and t are disconnected")
    if c.sum() <= k:
        x = np.ones(instance.m)
        value, _ = value_and_gradient(instance, x)
        return FractionalSolution(x, k, float(c @ x), value, 0, True)
    if k <= 0:
        x = (c == 0).astype(float)
        value, _ = value_and_gradient(instance, x)
        if not math.isfinite(value):
            raise InfeasibleError("budget 0 cannot connect s and t")
        return FractionalSolution(x, k, 0.0, value, 0, True)

    if x0 is not None:
        x = project_box_knapsack(np.asarray(x0, dtype=float), c, k)
        x[x < SUPPORT_FLOOR] = 0.0
        if not math.isfinite(value_and_gradient(instance, x)[0]):
            x = _initial_point(instance, k)
    else:
        x = alternating_warm_start(instance, _initial_point(instance, k), k)
    uniform = np.full(instance.m, min(1.0, k / c.sum()))
    its, best = 0, None
    for _ in range(RESTARTS + 1):
        x, f, used, status = _descend(instance, x, k, config.objective_tolerance, config,
                                      config.max_iterations - its)
        its += used
        if status != CERTIFIED:
            x, f = newton_polish(instance, x, k, config.objective_tolerance)
        gap = _relative_gap(instance, x, k)
        if best is None or f < best[1]:
            best = (x, f, gap)
        if status == CERTIFIED or best[2] <= STALL_GAP or its >= config.max_iterations:
            break
        # Stuck on a kink with a large certified gap: pull back into the interior.
        x = (1 - RESTART_MIX) * best[0] + RESTART_MIX * uniform
    x, f, gap = best
    converged = gap <= STALL_GAP or gap <= config.objective_tolerance
    if not converged:
        raise NoConvergenceError(f"no convergence after {its} iterations (gap {gap:.3g})",
                                 FractionalSolution(x, k, float(c @ x), f, its, False))
    x, f = _spend_slack(instance, x, k, f)
    return FractionalSolution(x, k, float(c @ x), f, its, True)


def _spend_slack(instance: Instance, x: np.ndarray, k: float, f: float):
    """Make the budget tight without changing the objective.

    An optimum with slack has zero gradient on every edge below 1, so those
    edges carry no current; raising them (in id order) leaves Reff unchanged
    by Rayleigh monotonicity and only makes the budget constraint tight.
    """
    c = instance.costs
    slack = k - float(c @ x)
    if slack <= 1e-9 * max(1.0, k):
        return x, f
    x = x.copy()
    for e in np.flatnonzero(x < 1):
        if slack <= 0:
            break
        if c[e] <= 0:
            x[e] = 1.0
            continue
        step = min(1.0 - x[e], slack / c[e])
        x[e] += step
        slack -= step * c[e]
    value, _ = value_and_gradient(instance, x)
    return x, min(f, value)


def newton_polish(instance: Instance, x: np.ndarray, k: float, tol: float,
                  rounds: int = NEWTON_ROUNDS):
    """Active-set Newton steps on the face picked out by projected gradient.

    Edges strictly inside (0, 1) are free; integral edges whose marginal
    value per unit cost falls below that of the free edges are released, as
    are zero edges (inside the component of s) whose marginal value exceeds
    it.  Each step solves the equality-constrained Newton system with the
    exact Hessian and moves as far as the box allows.  Returns the best point
    seen and its objective.
    """
    c = instance.costs
    f, g = value_and_gradient(instance, x, extend=True)
    if instance.n > NEWTON_MAX_VERTICES:
        return x, f
    for _ in range(rounds):
        if certified_gap(instance, x, k) <= tol:
            break
        free = (x > 0) & (x < 1)
        if not free.any():
            break
        ratio = -g / np.where(c > 0, c, np.inf)
        mu = float(np.median(ratio[free]))
        phi = potentials(instance, x)
        inside = ~np.isnan(phi[instance.tails]) & ~np.isnan(phi[instance.heads])
        active = free | ((x >= 1) & (ratio < mu)) | ((x <= 0) & (ratio > mu) & inside)
        d = None
        for _ in range(instance.m):
            F = np.flatnonzero(active)
            H = reff_hessian(instance, x, F)
            cf = c[F]
            K = np.block([[H, cf[:, None]], [cf[None, :], np.zeros((1, 1))]])
            rhs = np.concatenate([-g[F], [k - c @ x]])
            sol = np.linalg.lstsq(K, rhs, rcond=1e-13)[0]
            d = np.zeros_like(x)
            d[F] = sol[:-1]
            stuck = ((x <= 0) & (d < 0)) | ((x >= 1) & (d > 0))
            if not stuck.any():
                break
            active &= ~stuck
            d = None
        if d is None or not np.any(d):
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            limits = np.where(d < 0, -x / d, np.where(d > 0, (1 - x) / d, np.inf))
        tau = min(1.0, float(limits.min()))
        for _ in range(NEWTON_BACKTRACK):
            y = np.clip(x + tau * d, 0.0, 1.0)
            y[y < SUPPORT_FLOOR] = 0.0
            fy = effective_resistance(instance, y)
            if fy <= f:
                break
            tau *= 0.5
        else:
            break
        x, f = y, fy
        g = value_and_gradient(instance, x, extend=True)[1]
    return x, f


def knapsack_threshold(g: np.ndarray, c: np.ndarray, k: float) -> float:
    """Largest budget multiplier consistent with the greedy fractional knapsack on -g.

    When an item is split it is that item's value per unit cost; when the
    budget runs out exactly at an item boundary, any value between the last
    item taken and the next one is valid and the larger is returned.
    """
    ratio = -g / np.where(c > 0, c, np.inf)
    order = np.argsort(-ratio, kind="stable")
    order = order[ratio[order] > 0]
    if len(order) == 0:
        return 0.0
    spent = np.cumsum(c[order])
    over = np.flatnonzero(spent > k * (1 + 1e-12))
    if len(over) == 0:
        # Budget slack unless the positive-value items use it up exactly.
        return float(ratio[order[-1]]) if spent[-1] >= k * (1 - 1e-12) else 0.0
    i = over[0]
    if i > 0 and spent[i - 1] >= k * (1 - 1e-12):
        return float(ratio[order[i - 1]])
    return float(ratio[order[i]])


def certified_gap(instance: Instance, x: np.ndarray, k: float) -> float:
    """Relative duality gap (f - lower bound) / f, never below the true one.

    Any potential vector phi yields the lower bound (phi_s - phi_t)^2 /
    max_{z feasible} sum_e z_e w_e (phi_u - phi_v)^2 on the optimum.  Inside the
    component of s the electrical potentials are used; vertices cut off from
    it get the Lipschitz completion with edge lengths sqrt(mu c_e / w_e), which
    keeps their edges at or below the budget multiplier mu whenever no
    detour through them pays for itself.
    """
    c, w = instance.costs, instance.conductances
    phi = potentials(instance, x)
    if phi is None:
        return math.inf
    f = float(phi[instance.s])
    if np.isnan(phi).any():
        drop = np.nan_to_num(phi[instance.tails] - phi[instance.heads], nan=0.0)
        mu = knapsack_threshold(-w * drop ** 2, c, k)
        phi = lipschitz_extension(instance, phi, np.sqrt(mu * c / w))
    g = -w * (phi[instance.tails] - phi[instance.heads]) ** 2
    return frank_wolfe_gap(g, x, c, k) / abs(f)


_relative_gap = certified_gap


def _descend(instance: Instance, x: np.ndarray, k: float, tol: float,
             config: SolverConfig, max_iters: int):
    """Projected gradient descent; returns (x, f, iterations, status).

    Gradients use potentials extended harmonically to vertices cut off from
    s, so a detour through vertices whose edges all sit at zero still shows
    up as a descent direction.
    """
    c = instance.costs

    def fg(z):
        return value_and_gradient(instance, z, extend=True)

    f, g = fg(x)
    step = 1.0 / max(float(np.max(np.abs(g))), 1e-300)
    for it in range(max_iters):
        if frank_wolfe_gap(g, x, c, k) <= tol * abs(f) or (
                it % CERTIFY_EVERY == 0 and certified_gap(instance, x, k) <= tol):
            return x, f, it, CERTIFIED
        while True:
            y = project_box_knapsack(x - step * g, c, k)
            y[y < SUPPORT_FLOOR] = 0.0
            d = y - x
            if np.max(np.abs(d)) <= 1e-15:
                return x, f, it + 1, STALLED
            fy, gy = fg(y)
            if fy <= f + ARMIJO * (g @ d):
                break
            step *= config.step_shrink
            if step < 1e-300:
                return x, f, it + 1, STALLED
        sy = d @ (gy - g)
        x, f, g = y, fy, gy
        step = (d @ d) / sy if sy > 0 else step / config.step_shrink
    return x, f, max_iters, NOT_CONVERGED


def solve_dcp(instance: Instance, config: SolverConfig | None = None,
              target: float | None = None, rounds: int = 60) -> FractionalSolution:
    """Minimise c.x subject to Reff_x(s,t) <= R by bisection over the budget."""
    config = config or SolverConfig()
    R = instance.dual_target if target is None else target
    if R is None:
        raise InvalidInstanceError("instance has no dual target R")
    if shortest_path_distance(instance) is None:
        raise InfeasibleError("s and t are disconnected")
    full = solve_cp(instance, config, budget=instance.total_cost)
    if full.objective > R:
        raise InfeasibleError(f"Reff of the whole graph {full.objective:.6g} exceeds R={R:.6g}")
    lo = 0.0
    if instance.is_unit:
        lo = dual_bounds(instance.with_dual_target(R)).dual_lower or 0.0
    hi, best = instance.total_cost, full
    for _ in range(rounds):
        if hi - lo <= config.objective_tolerance * hi:
            break
        mid = 0.5 * (lo + hi)
        sol = solve_cp(instance, config, budget=mid, x0=best.values * (mid / hi))
        if sol.objective <= R:
            hi, best = mid, sol
        else:
            lo = mid
    return best


def extract_certificate(instance: Instance, solution, config: SolverConfig | None = None,
                        strict: bool = True) -> OptimalityCertificate:
    """Classify edges and recover the flow-conductance ratio of a solved CP.

    Raises ``NotOptimalError`` (certificate attached) when the ratio spread on
    fractional edges exceeds 1e-2 or an integral edge carries visibly less
    than ``alpha``; pass ``strict=False`` to get the certificate regardless.
    """
    if not instance.is_unit:
        raise NotUnitInstanceError("certificates need unit costs and resistances")
    config = config or SolverConfig()
    x = np.asarray(getattr(solution, "values", solution), dtype=float)
    f = electrical_flow(instance, x).flow
    integral = x >= config.integral_threshold
    fractional = (x > config.zero_threshold) & ~integral
    ratios = f[fractional] / x[fractional]
    zero_flow: tuple[int, ...] = ()
    if fractional.any() and ratios.max() <= 1e-9:
        # Fractional edges carry no current: drop them, the solution is integral.
        zero_flow = tuple(int(e) for e in np.flatnonzero(fractional))
        fractional = np.zeros_like(fractional)
    E_F = tuple(int(e) for e in np.flatnonzero(fractional))
    E_I = tuple(int(e) for e in np.flatnonzero(integral))
    if not E_F:
        carrying = f[integral][f[integral] > 1e-12]
        alpha = float(carrying.min())
        return OptimalityCertificate(alpha, alpha ** 2, E_F, E_I, 0.0, True, zero_flow)
    ratios = f[fractional] / x[fractional]
    alpha = float(np.median(ratios))
    deviation = float(np.max(np.abs(ratios - alpha)) / alpha)
    cert = OptimalityCertificate(alpha, alpha ** 2, E_F, E_I, deviation, False, zero_flow)
    if strict:
        if deviation > 1e-2:
            raise NotOptimalError(f"ratio deviation {deviation:.3g} > 1e-2", cert)
        if np.any(f[integral] < alpha * (1 - 1e-3)):
            raise NotOptimalError("an integral edge carries less than alpha", cert)
    return cert


def dual_bounds(instance: Instance) -> DualBounds:
    d = shortest_path_distance(instance)
    k, R = instance.budget, instance.dual_target
    if d is None:
        return DualBounds(None, None, None, None, None)
    return DualBounds(
        d_st=d,
        primal_lower=d * d / k if k > 0 else None,
        dual_lower=d * d / R if R else None,
        alpha_sq_upper=d / k if k > 0 else None,
        dual_alpha_sq_upper=R / d if R else None,
    )
