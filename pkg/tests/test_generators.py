import numpy as np
import pytest

from reffnet.cp import solve_cp
from reffnet.electrical import effective_resistance
from reffnet.errors import InstanceFormatError, InvalidInstanceError
from reffnet.generators import (ThreeDMInstance, connected_graph_corpus, enumerate_sp_networks,
                                gen_3dm, gen_dual_gap, gen_gap_cost, gen_gap_resistance,
                                gen_parallel_paths, gen_random, gen_random_sp, gen_two_paths,
                                matching_witness, network_instance, parse_3dm,
                                path_subset_candidates)
from reffnet.graph import shortest_path_distance, validate
from reffnet.oracle import oracle_primal
from reffnet.sp import recognize_sp, sp_reff


def test_gap_cost():
    inst = gen_gap_cost(6)
    x = np.r_[np.zeros(4), 0.5, 0.5]
    assert effective_resistance(inst, x) == pytest.approx(4)
    assert inst.costs @ x == pytest.approx(1)
    assert oracle_primal(inst).optimum == pytest.approx(4)
    assert oracle_primal(gen_gap_cost(9)).optimum == pytest.approx(7)
    with pytest.raises(InvalidInstanceError):
        gen_gap_cost(3)


def test_gap_resistance():
    n, big = 5, 100.0
    inst = gen_gap_resistance(n, big)
    assert oracle_primal(inst).optimum == pytest.approx(big)
    x = np.r_[np.full(n - 1, (n - 2) / (n - 1)), 0.0]
    assert effective_resistance(inst, x) == pytest.approx((n - 1) ** 2 / (n - 2))
    assert solve_cp(inst).objective <= (n - 1) ** 2 / (n - 2) + 1e-9


def test_two_paths():
    inst = gen_two_paths(4)
    assert oracle_primal(inst).optimum == pytest.approx(3)
    assert solve_cp(inst).objective == pytest.approx(2.25)
    with pytest.raises(InvalidInstanceError):
        gen_two_paths(5)


def test_dual_gap_and_parallel_paths():
    inst = gen_dual_gap(6, 0.5)
    assert inst.dual_target == pytest.approx(25 / 25.5)
    pp = gen_parallel_paths([1, 2, 3])
    assert pp.m == 6 and shortest_path_distance(pp) == 1


def test_random_determinism_and_ranges():
    assert gen_random(8, 0.4, 3) == gen_random(8, 0.4, 3)
    for seed in range(30):
        inst = gen_random(8, 0.4, seed)
        assert shortest_path_distance(inst) is not None and validate(inst).ok
        w = gen_random(8, 0.4, seed, weighted=True)
        assert np.all((w.resistances >= 1) & (w.resistances <= 16))
        assert set(w.costs) <= {1.0, 2.0, 3.0, 4.0}


def test_random_sp_is_sp():
    for seed in range(40):
        inst = gen_random_sp(1 + seed % 12, seed, weighted=seed % 2 == 0)
        assert validate(inst).ok
        recognize_sp(inst)


def test_sp_network_counts():
    # Series-parallel networks with m unlabeled edges (MacMahon's count).
    want = [1, 2, 4, 10, 24, 66, 180, 522, 1532, 4624]
    assert [len(enumerate_sp_networks(m)) for m in range(1, 11)] == want


def test_sp_networks_realise():
    for m in range(1, 8):
        seen = set()
        for net in enumerate_sp_networks(m):
            inst = network_instance(net, m)
            assert inst.m == m and validate(inst).ok
            tree = recognize_sp(inst)
            assert sp_reff(tree, inst.resistances) == pytest.approx(effective_resistance(inst))
            seen.add(net)
        assert len(seen) == len(enumerate_sp_networks(m))


def test_connected_corpus():
    graphs = list(connected_graph_corpus(6))
    assert len(graphs) == 142      # connected graphs on 2..6 vertices: 1+2+6+21+112
    with pytest.raises(InvalidInstanceError):
        next(connected_graph_corpus(8))


@pytest.mark.parametrize("q", [1, 2, 3])
@pytest.mark.parametrize("tau", [1, 2, 3, 4, 5])
def test_3dm_structure(q, tau):
    rng = np.random.default_rng(q * 10 + tau)
    triples = tuple(tuple(int(v) for v in rng.integers(1, q + 1, 3)) for _ in range(tau))
    g = gen_3dm(ThreeDMInstance(q, triples))
    l = 3 * tau + 3 * q
    assert g.l == l
    assert g.instance.n == 2 + tau + 3 * q + tau * l
    assert g.instance.m == 3 * tau + 3 * q + tau * (l + 1)
    assert g.k == q * (l + 1) + 3 * tau + 3 * q
    assert g.R == pytest.approx((3 * (l + 1) + 2) / (3 * q))
    assert validate(g.instance).ok


def test_3dm_smallest():
    tdm = ThreeDMInstance(1, ((1, 1, 1),))
    g = gen_3dm(tdm)
    assert (g.instance.n, g.instance.m, g.k) == (12, 13, 13)
    assert g.R == pytest.approx(23 / 3)
    w = matching_witness(g, tdm)
    assert len(w) == 13 and g.reff(w) == pytest.approx(23 / 3, abs=1e-9)


def test_3dm_yes_witness_formula():
    tdm = ThreeDMInstance(3, ((1, 1, 1), (2, 2, 2), (3, 3, 3), (1, 2, 3), (2, 3, 1)))
    g = gen_3dm(tdm)
    w = matching_witness(g, tdm)
    l = g.l
    assert len(w) == g.k
    assert g.reff(w) == pytest.approx((l + 1) / 3 + 2 / 9, abs=1e-9)


def test_3dm_no_instance():
    tdm = parse_3dm("2\n1 1 1\n1 2 2\n2 2 1\n")
    assert tdm.perfect_matching() is None
    g = gen_3dm(tdm)
    cands = list(path_subset_candidates(g, 2))
    assert len(cands) == 3
    assert all(len(e) == g.k and r > g.R for _, e, r in cands)
    with pytest.raises(InvalidInstanceError):
        matching_witness(g, tdm)


def test_3dm_parse_errors():
    for bad in ("", "x\n", "2\n1 1\n", "2\n1 1 3\n"):
        with pytest.raises(InstanceFormatError):
            parse_3dm(bad)
