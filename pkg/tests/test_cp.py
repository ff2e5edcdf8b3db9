import math

import numpy as np
import pytest
from scipy.optimize import minimize

from helpers import PARALLEL2, TWO_PATHS_3, make, path
from reffnet.cp import (SolverConfig, certified_gap, dual_bounds, extract_certificate,
                        project_box_knapsack, solve_cp, solve_dcp)
from reffnet.electrical import effective_resistance
from reffnet.errors import (InfeasibleError, NotOptimalError, NotUnitInstanceError)
from reffnet.generators import gen_dual_gap, gen_random, gen_two_paths
from reffnet.graph import shortest_path_distance


def test_config_validation():
    for bad in (dict(max_iterations=0), dict(objective_tolerance=0), dict(step_shrink=1),
                dict(zero_threshold=0.5, integral_threshold=0.4)):
        with pytest.raises(ValueError):
            SolverConfig(**bad)


def test_projection_properties():
    rng = np.random.default_rng(0)
    for _ in range(200):
        m = int(rng.integers(1, 12))
        y = rng.normal(0.5, 1.0, m)
        c = rng.uniform(0.0, 3.0, m)
        k = float(rng.uniform(0, c.sum()))
        x = project_box_knapsack(y, c, k)
        assert x.min() >= 0 and x.max() <= 1 and c @ x <= k * (1 + 1e-9) + 1e-12
        # Variational inequality: (y - x).(z - x) <= 0 for feasible z.
        for _ in range(5):
            z = project_box_knapsack(rng.uniform(0, 1, m), c, k)
            assert (y - x) @ (z - x) <= 1e-8


def test_single_path():
    sol = solve_cp(path(3, k=3))
    assert np.allclose(sol.values, 1) and sol.objective == pytest.approx(3)


def test_two_parallel_edges_equal_split():
    sol = solve_cp(make(PARALLEL2, k=1))
    assert np.allclose(sol.values, 0.5)
    # x = (1/2, 1/2) is two conductance-1/2 edges in parallel: Reff 1.
    assert sol.objective == pytest.approx(1.0)


def test_two_paths_uniform():
    sol = solve_cp(make(TWO_PATHS_3, k=4))
    assert np.allclose(sol.values, 2 / 3, atol=1e-6)
    assert sol.objective == pytest.approx(2.25, rel=1e-9)
    assert sol.objective == pytest.approx(dual_bounds(make(TWO_PATHS_3, k=4)).primal_lower)


def test_two_paths_grid_search_oracle():
    # Symmetry reduces the program to a split of the budget between the two paths.
    splits = np.linspace(0.0, 4.0, 40001)
    vals = [3 / (a / 3) * 3 / (b / 3) / (3 / (a / 3) + 3 / (b / 3)) if 0 < a < 4 else math.inf
            for a, b in zip(splits, 4 - splits)]
    assert min(vals) == pytest.approx(solve_cp(make(TWO_PATHS_3, k=4)).objective, rel=1e-6)


def test_large_two_paths_near_quarter_k():
    k = 200
    sol = solve_cp(gen_two_paths(k))
    assert sol.objective == pytest.approx((k + 2) ** 2 / (4 * k), rel=1e-8)
    assert sol.objective / (k / 4) < 1.03


def test_infeasible():
    with pytest.raises(InfeasibleError):
        solve_cp(make([(0, 2), (3, 1)], n=4, k=2))
    with pytest.raises(InfeasibleError):
        solve_cp(make(PARALLEL2, k=0))


def _slsqp(inst, k, starts=6, seed=0):
    rng = np.random.default_rng(seed)
    c = inst.costs
    best = math.inf
    for _ in range(starts):
        x0 = rng.uniform(0.2, 1, inst.m)
        x0 *= min(1, k / (c @ x0))
        res = minimize(lambda x: effective_resistance(inst, np.clip(x, 1e-9, 1)), x0,
                       method="SLSQP", bounds=[(1e-9, 1)] * inst.m,
                       constraints=[{"type": "ineq", "fun": lambda x: k - c @ x}],
                       options={"ftol": 1e-13, "maxiter": 500})
        if res.success or res.status == 9:
            best = min(best, effective_resistance(inst, np.clip(res.x, 1e-9, 1)))
    return best


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_matches_independent_optimizer():
    for seed in range(12):
        inst = gen_random(7, 0.5, 100 + seed, weighted=seed % 2 == 1)
        sol = solve_cp(inst)
        ref = _slsqp(inst, inst.budget)
        # The reference is a local method: ours must never be worse, and should agree.
        assert sol.objective <= ref * (1 + 1e-6)
        assert sol.objective == pytest.approx(ref, rel=1e-4)


def test_feasibility_tightness_and_bounds():
    for seed in range(25):
        inst = gen_random(int(6 + seed % 5), 0.45, 200 + seed)
        sol = solve_cp(inst)
        x, k = sol.values, inst.budget
        assert x.min() >= -1e-12 and x.max() <= 1 + 1e-12
        assert inst.costs @ x <= k * (1 + 1e-9)
        if inst.total_cost > k:
            assert inst.costs @ x == pytest.approx(k, abs=1e-6)
        d = shortest_path_distance(inst)
        assert sol.objective >= d * d / k - 1e-6
        assert certified_gap(inst, x, k) <= 1e-5


def test_monotone_and_halving():
    for seed in range(10):
        inst = gen_random(7, 0.5, 300 + seed)
        d = shortest_path_distance(inst)
        ks = np.linspace(d, inst.m, 5)
        vals = [solve_cp(inst, budget=k).objective for k in ks]
        assert all(a >= b - 1e-8 for a, b in zip(vals, vals[1:]))
        k = ks[-2]
        assert solve_cp(inst, budget=k / 2).objective <= 2 * solve_cp(inst, budget=k).objective + 1e-6


def test_certificate_examples():
    inst = make(PARALLEL2, k=1)
    cert = extract_certificate(inst, solve_cp(inst))
    assert cert.alpha == pytest.approx(1) and cert.fractional_edges == (0, 1)

    p = path(3, k=3)
    cert = extract_certificate(p, solve_cp(p))
    assert cert.all_integral and cert.fractional_edges == () and cert.alpha == pytest.approx(1)

    inst = make(TWO_PATHS_3, k=4)
    cert = extract_certificate(inst, solve_cp(inst))
    assert cert.alpha == pytest.approx(0.75, rel=1e-6)
    assert cert.alpha ** 2 <= 3 / 4 and cert.mu == pytest.approx(9 / 16, rel=1e-6)


def test_certificate_refuses_weighted_and_bad_points():
    with pytest.raises(NotUnitInstanceError):
        extract_certificate(make(PARALLEL2, k=1, res=[1, 2]), np.array([0.5, 0.5]))
    # Any split of two parallel edges has equal ratios; uneven x along a path does not.
    inst = make(TWO_PATHS_3, k=4)
    bad = np.array([0.9, 0.5, 0.5, 0.6, 0.6, 0.6])
    with pytest.raises(NotOptimalError) as info:
        extract_certificate(inst, bad)
    assert info.value.certificate.max_ratio_deviation > 1e-2
    assert extract_certificate(inst, bad, strict=False).alpha > 0


def test_dcp_examples():
    assert solve_dcp(make(PARALLEL2, R=1.0)).cost == pytest.approx(1, rel=1e-6)
    assert solve_dcp(make(PARALLEL2, R=0.5)).cost == pytest.approx(2, rel=1e-6)
    with pytest.raises(InfeasibleError):
        solve_dcp(make(PARALLEL2, R=0.4))


def test_dcp_gap_family():
    n, eps = 6, 0.5
    inst = gen_dual_gap(n, eps)
    sol = solve_dcp(inst)
    assert sol.cost == pytest.approx(1 + eps, rel=1e-5)
    assert effective_resistance(inst, sol.values) <= inst.dual_target * (1 + 1e-6)
    assert sol.values[-1] == pytest.approx(1, abs=1e-4)
    assert np.allclose(sol.values[:-1], eps / (n - 1), rtol=1e-3)


def test_dual_bounds_formulas():
    b = dual_bounds(path(3, k=4).with_dual_target(3.0))
    assert b.d_st == 3 and b.primal_lower == 9 / 4 and b.dual_lower == 3 and b.alpha_sq_upper == 3 / 4
