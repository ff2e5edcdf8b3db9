import math

import numpy as np
import pytest

from helpers import PARALLEL2, TRIANGLE, TWO_PATHS_3, make
from reffnet.electrical import effective_resistance
from reffnet.errors import InfeasibleError, TooLargeError
from reffnet.generators import gen_dual_gap, gen_random
from reffnet.oracle import oracle_dual, oracle_primal, oracle_profile


def test_primal_examples():
    r = oracle_primal(make(TRIANGLE, k=2))
    assert r.optimum == pytest.approx(1) and r.witness == (0,)
    assert oracle_primal(make(TRIANGLE, k=3)).optimum == pytest.approx(2 / 3)
    assert oracle_primal(make(TWO_PATHS_3, k=4)).optimum == pytest.approx(3)


def test_witness_invariants_weighted():
    for seed in range(20):
        inst = gen_random(6, 0.6, seed, weighted=True)
        r = oracle_primal(inst)
        assert r.cost <= inst.budget
        assert r.reff == pytest.approx(r.optimum, rel=1e-9)


def test_pruned_equals_unpruned():
    for seed in range(40):
        inst = gen_random(6, 0.55, 40 + seed, weighted=seed % 2 == 0)
        if inst.m > 12:
            continue
        a = oracle_primal(inst)
        b = oracle_primal(inst, prune=False)
        assert a.optimum == pytest.approx(b.optimum, rel=1e-12)
        assert a.explored <= b.explored


def test_full_budget_is_whole_graph():
    for seed in range(10):
        inst = gen_random(7, 0.5, 60 + seed)
        assert oracle_primal(inst.with_budget(inst.m)).optimum == pytest.approx(effective_resistance(inst))


def test_profile_agrees_with_primal():
    inst = gen_random(7, 0.5, 3)
    prof = oracle_profile(inst)
    for k in range(inst.m + 1):
        assert prof[k] == pytest.approx(oracle_primal(inst.with_budget(k)).optimum)


def test_limit():
    with pytest.raises(TooLargeError):
        oracle_primal(make([(0, 1)] * 30, k=15))
    with pytest.raises(TooLargeError):
        oracle_primal(gen_random(7, 0.6, 1), limit=4)


def test_dual_examples():
    assert oracle_dual(make(PARALLEL2, R=1.0)).optimum == 1
    assert oracle_dual(make(PARALLEL2, R=0.5)).optimum == 2
    with pytest.raises(InfeasibleError):
        oracle_dual(make(PARALLEL2, R=0.4))


@pytest.mark.parametrize("n", [4, 5, 7])
def test_dual_gap_family(n):
    inst = gen_dual_gap(n, 0.5)
    r = oracle_dual(inst)
    assert r.optimum == n and r.reff <= inst.dual_target


def test_dual_pruned_equals_unpruned():
    for seed in range(15):
        inst = gen_random(6, 0.5, 80 + seed)
        inst = inst.with_dual_target(effective_resistance(inst) * 1.4)
        assert oracle_dual(inst).optimum == oracle_dual(inst, prune=False).optimum
