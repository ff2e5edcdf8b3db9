import math

import numpy as np
import pytest

from helpers import PARALLEL2, TWO_PATHS_3, make, path
from reffnet.cp import OptimalityCertificate, extract_certificate, solve_cp
from reffnet.electrical import effective_resistance, electrical_flow
from reffnet.errors import (BadCertificateError, InfeasibleError, InvalidInstanceError,
                            NotUnitInstanceError, RegimeViolationError)
from reffnet.flows import decompose
from reffnet.generators import gen_parallel_paths, gen_random, gen_two_paths
from reffnet.graph import shortest_path_distance
from reffnet.rounding import (approximate, dual_round, four_copies, path_round, rounds_for,
                              sample_trials, short_path_round, trial_rng)


def _solved(inst, budget=None):
    sol = solve_cp(inst, budget=budget)
    cert = extract_certificate(inst, sol)
    return sol, cert, decompose(inst, electrical_flow(inst, sol.values))


def test_rounds_for():
    assert rounds_for(0.3) == 3
    assert rounds_for(1.0) == 1
    assert rounds_for(0.25) == 4
    for a in (0.01, 0.07, 0.3, 0.5, 0.9):
        T = rounds_for(a)
        assert 1 / a >= T >= 1 / (2 * a)
    for bad in (0.0, -1.0, 1.5):
        with pytest.raises(BadCertificateError):
            rounds_for(bad)


def test_trial_streams_independent_and_reproducible():
    a = trial_rng(7, 0).random(5)
    assert np.array_equal(a, trial_rng(7, 0).random(5))
    assert not np.array_equal(a, trial_rng(7, 1).random(5))


def test_all_integral_returns_support():
    p = path(3, k=3)
    sol, cert, d = _solved(p)
    for seed in range(5):
        out = path_round(p, sol, cert, d, seed)
        assert out.chosen_edges == (0, 1, 2) and out.reff == pytest.approx(3)


def test_parallel_edges_round_to_one_edge():
    inst = make(PARALLEL2, k=1)
    sol, cert, d = _solved(inst)
    assert cert.alpha == pytest.approx(1)
    for seed in range(10):
        out = path_round(inst, sol, cert, d, seed)
        assert out.T == 1 and len(out.chosen_edges) == 1
        # x = (1/2, 1/2) has Reff 1 and either single edge also has Reff 1.
        assert out.reff == pytest.approx(1)
        assert out.reff <= 2 * sol.objective


def test_path_round_deterministic_and_connected():
    inst = gen_random(9, 0.4, 11)
    sol, cert, d = _solved(inst)
    a = path_round(inst, sol, cert, d, seed=3, trial=2)
    b = path_round(inst, sol, cert, d, seed=3, trial=2)
    assert a.chosen_edges == b.chosen_edges
    assert set(cert.integral_edges) <= set(a.chosen_edges)
    for t in range(50):
        assert math.isfinite(path_round(inst, sol, cert, d, 0, t).reff)


def test_bicriteria_event_frequency():
    inst = gen_two_paths(12)
    sol, cert, d = _solved(inst)
    N = 400
    wins = 0
    for t in range(N):
        out = path_round(inst, sol, cert, d, 1, t)
        wins += out.cost <= 2 * inst.budget and out.reff <= 4 * sol.objective
    assert wins >= max(cert.alpha / 10, 5 / N) * N


def test_expected_reff_at_most_twice():
    inst = gen_random(9, 0.45, 7)
    sol, cert, d = _solved(inst)
    assert cert.fractional_edges
    st = sample_trials(inst, sol, cert, d, 1000, seed=2)
    se = st.reffs.std(ddof=1) / math.sqrt(len(st.reffs))
    assert st.reffs.mean() <= 2 * sol.objective + 3 * se


def test_approximate_examples():
    out = approximate(path(4, k=6))
    assert out.reff == 4 and out.cost == 4
    k = 40
    inst = gen_two_paths(k)
    out = approximate(inst, seed=0)
    frac = solve_cp(inst).objective
    assert out.cost <= k and out.reff == pytest.approx(k / 2 + 1)
    assert 1.8 < out.reff / frac <= 2


def test_approximate_errors():
    with pytest.raises(RegimeViolationError):
        approximate(path(3, k=2))
    with pytest.raises(NotUnitInstanceError):
        approximate(make(PARALLEL2, k=1, costs=[1, 2]))
    with pytest.raises(InfeasibleError):
        approximate(make([(0, 2), (3, 1)], n=4, k=2))


def test_approximate_random_sweep():
    from reffnet.oracle import oracle_primal
    for i in range(25):
        inst = gen_random(7, 0.5, 900 + i)
        d = shortest_path_distance(inst)
        for k in range(d, inst.m + 1, 2):
            inst_k = inst.with_budget(k)
            out = approximate(inst_k, seed=i)
            assert out.cost <= k
            assert out.reff <= 8 * oracle_primal(inst_k).optimum * (1 + 1e-9)


def test_short_path_regime_and_bound():
    eps = 0.5
    with pytest.raises(RegimeViolationError):
        short_path_round(gen_parallel_paths([2] * 10), eps, eta=0.5)
    with pytest.raises(RegimeViolationError):
        short_path_round(gen_parallel_paths([2] * 10, budget=10_000), eps)   # eps > default eta
    inst = gen_parallel_paths([2] * 2100 + [3] * 50, budget=4096)
    out = short_path_round(inst, eps, seed=0, eta=0.5)
    frac = solve_cp(inst).objective
    assert out.cost <= 4096
    assert out.reff <= (2 + 10 * eps) * (1 + eps) * frac


def test_short_path_parameter_arithmetic():
    assert rounds_for(0.01) == 100
    from reffnet.flows import ShortPathConfig
    cfg = ShortPathConfig(1 / 0.1, 0.01, 7.0, frozenset())
    assert cfg.threshold == pytest.approx(10 * 0.01 * 7.0)


def test_dual_examples():
    out = dual_round(make(PARALLEL2, R=1.0))
    assert out.cost == 1 and out.reff == 1
    out = dual_round(make(PARALLEL2, R=0.5))
    assert out.chosen_edges == (0, 1) and out.reff == pytest.approx(0.5)
    out = dual_round(make(PARALLEL2, R=0.5), allow_copies=True)
    assert max(out.multiplicities) <= 4 and out.reff <= 0.5 + 1e-12
    with pytest.raises(InvalidInstanceError):
        dual_round(make(PARALLEL2))
    with pytest.raises(InfeasibleError):
        dual_round(make(PARALLEL2, R=0.3))


def test_four_copies_layout():
    inst = make([(0, 2), (2, 1)], k=2)
    multi = four_copies(inst)
    assert multi.m == 8 and multi.budget == 8
    assert all(multi.edges[4 * e + j].endpoints == inst.edges[e].endpoints
               for e in range(2) for j in range(4))
    assert effective_resistance(multi) == pytest.approx(effective_resistance(inst) / 4)


def test_outcome_json():
    out = approximate(gen_two_paths(8), seed=5)
    js = out.to_json()
    for key in ("edges", "multiplicities", "cost", "reff", "T", "alpha", "seed", "attempts"):
        assert key in js
    assert js["seed"] == 5
