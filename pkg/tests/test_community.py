import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sociosem.bigraph import Graph, GraphError
from sociosem.community import (
    POLARIZED, PROPAGATED, SEED, UNASSIGNED, PolarizationScore, assign_polarized,
    canonical_labels, label_propagation, louvain, modularity, polarization, read_assignment,
    write_assignment,
)
from sociosem.synth import erdos_renyi, ring_of_cliques

from oracles import modularity_double_loop, polarization_counting, random_graph_adj


def two_cliques(size=4):
    edges = [(f"a{i}", f"a{j}") for i in range(size) for j in range(i + 1, size)]
    edges += [(f"b{i}", f"b{j}") for i in range(size) for j in range(i + 1, size)]
    return Graph.from_edges(edges)


def star(leaves, center="c", prefix="l"):
    return [(center, f"{prefix}{i}") for i in range(leaves)]


def test_single_block_modularity_is_zero():
    g = erdos_renyi(30, 0.2, seed=1)
    assert modularity(g, np.zeros(g.n)) == pytest.approx(0.0, abs=1e-15)


def test_two_cliques_modularity():
    g = two_cliques()
    labels = [0] * 4 + [1] * 4
    assert modularity(g, labels) == 0.5
    assert modularity_double_loop(g.adj.toarray(), labels) == pytest.approx(0.5, abs=1e-15)


def test_modularity_needs_edges():
    with pytest.raises(GraphError):
        modularity(Graph.from_indices(("a", "b"), [], []), [0, 1])


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_modularity_matches_double_loop(seed, k):
    rng = np.random.default_rng(seed)
    adj = random_graph_adj(rng, 25, 0.2) * rng.integers(1, 4, (25, 25))
    adj = np.triu(adj, 1)
    adj = adj + adj.T
    if adj.sum() == 0:
        return
    g = Graph.from_dense(adj)
    labels = rng.integers(0, k, 25)
    assert modularity(g, labels) == pytest.approx(modularity_double_loop(adj, labels), abs=1e-12)


def test_canonical_labels():
    assert canonical_labels([5, 5, 2, 9, 9, 9]).tolist() == [1, 1, 2, 0, 0, 0]


def test_louvain_two_cliques():
    res = louvain(two_cliques(), runs=10, seed=0)
    assert len(set(res.labels.tolist())) == 2
    assert res.modularity == 0.5


def test_louvain_ring_of_cliques():
    g, planted = ring_of_cliques(30, 10)
    res = louvain(g, runs=5, seed=3)
    q_planted = modularity_double_loop(g.adj.toarray(), planted)
    assert res.modularity == pytest.approx(q_planted, abs=1e-12)
    assert res.modularity > 0.8
    # same partition as the planted one, up to renaming
    pairs = set(zip(res.labels.tolist(), planted.tolist()))
    assert len(pairs) == 30


def test_louvain_complete_graph():
    g = Graph.from_dense(np.ones((8, 8)) - np.eye(8))
    res = louvain(g, runs=5)
    assert set(res.labels.tolist()) == {0}


def test_louvain_deterministic_and_consistent():
    g = erdos_renyi(80, 0.06, seed=4)
    a = louvain(g, runs=8, seed=11)
    b = louvain(g, runs=8, seed=11)
    assert np.array_equal(a.labels, b.labels)
    assert a.modularity == max(a.run_modularities)
    assert a.modularity == pytest.approx(modularity_double_loop(g.adj.toarray(), a.labels),
                                         abs=1e-12)


def test_louvain_weighted():
    # heavy edges inside {0,1,2} and {3,4,5}, light ones across
    adj = np.ones((6, 6)) - np.eye(6)
    adj[:3, :3] *= 10
    adj[3:, 3:] *= 10
    res = louvain(Graph.from_dense(adj), runs=5)
    assert res.labels[:3].tolist() == [res.labels[0]] * 3
    assert res.labels[0] != res.labels[3]


def _full_graph():
    edges = star(4, "u1", "s") + [("u2", "s0"), ("u2", "s1"), ("u2", "s2"), ("u2", "t0")]
    edges += [("u3", "x")]
    return Graph.from_edges(edges)


SEEDS = {"s0": 1, "s1": 1, "s2": 1, "s3": 1, "t0": 2}


def test_polarization_examples():
    scores = {s.user: s for s in polarization(_full_graph(), SEEDS)}
    assert scores["u1"].rho == 1.0 and scores["u1"].target_community == 1
    assert scores["u2"].rho == 0.75 and scores["u2"].target_community == 1
    assert "u3" not in scores  # no labelled neighbours
    assert scores["u2"].shares == {1: 0.75, 2: 0.25}


def test_polarization_all_denominator():
    scores = {s.user: s for s in polarization(_full_graph(), {"s0": 1, "s1": 1}, users=["u2"],
                                                denominator="all")}
    assert scores["u2"].rho == 0.5


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_polarization_matches_counting(seed):
    rng = np.random.default_rng(seed)
    adj = random_graph_adj(rng, 40, 0.15)
    g = Graph.from_dense(adj)
    seeds = {g.ids[i]: int(rng.integers(0, 3)) for i in rng.choice(40, 12, replace=False)}
    for denominator in ("labeled", "all"):
        got = {s.user: (s.rho, s.target_community) for s in polarization(g, seeds, denominator=denominator)}
        want = {}
        for i, u in enumerate(g.ids):
            if u in seeds:
                continue
            r = polarization_counting([g.ids[j] for j in g.neighbors(i)], seeds, denominator)
            if r is not None:
                want[u] = r
        assert got == want


def test_assign_boundary():
    scores = [PolarizationScore("a", 0.9, 1), PolarizationScore("b", 0.89, 1),
              PolarizationScore("c", float(np.nextafter(0.9, 0)), 2), PolarizationScore("d", 1.0, 3)]
    assert assign_polarized(scores, 0.9) == {"a": 1, "d": 3}


def test_assign_threshold_validation():
    with pytest.raises(ValueError):
        assign_polarized([], 0.0)


def test_propagation_two_cliques():
    g = two_cliques(5)
    ca = label_propagation(g, {"a0": 0, "b0": 1}, runs=20, seed=1)
    assert all(ca.labels[f"a{i}"] == 0 for i in range(5))
    assert all(ca.labels[f"b{i}"] == 1 for i in range(5))
    assert ca.provenance["a0"] == SEED and ca.provenance["a3"] == PROPAGATED


def test_propagation_unreachable_is_unassigned():
    g = Graph.from_edges([("a", "b"), ("c", "d")], ids=["z"])
    ca = label_propagation(g, {"a": 0}, runs=5)
    assert ca.labels["b"] == 0
    assert ca.provenance["c"] == UNASSIGNED and "c" not in ca.labels
    assert ca.provenance["z"] == UNASSIGNED


def test_propagation_seeds_never_change():
    g = Graph.from_edges(star(6, "hub", "x") + [("x0", "s")])
    ca = label_propagation(g, {"s": 7, "hub": 3}, runs=10)
    assert ca.labels["s"] == 7 and ca.labels["hub"] == 3


def test_propagation_hints_are_mutable():
    g = two_cliques(5)
    ca = label_propagation(g, {"a0": 0, "b0": 1}, initial_labels={"a1": 1}, runs=10)
    assert ca.labels["a1"] == 0
    assert ca.provenance["a1"] == POLARIZED


def test_propagation_planted_recovery():
    rng = np.random.default_rng(0)
    n, k = 400, 4
    planted = np.repeat(np.arange(k), n // k)
    p = np.where(planted[:, None] == planted[None, :], 0.08, 0.003)
    adj = np.triu(rng.random((n, n)) < p, 1)
    g = Graph.from_dense((adj | adj.T).astype(float))
    seeds = {g.ids[i]: int(planted[i]) for i in range(0, n, 25)}
    ca = label_propagation(g, seeds, runs=30, seed=2)
    hit = sum(ca.labels.get(g.ids[i]) == planted[i] for i in range(n))
    assert hit / n >= 0.9


def test_propagation_deterministic():
    g = erdos_renyi(60, 0.08, seed=9)
    seeds = {"0": 0, "1": 1, "2": 2}
    a = label_propagation(g, seeds, runs=15, seed=5)
    b = label_propagation(g, seeds, runs=15, seed=5)
    assert a.labels == b.labels and a.sweeps == b.sweeps


def test_unique_seed_labels_mode():
    g = two_cliques(5)
    ca = label_propagation(g, {"a0": 0, "a1": 0, "b0": 1}, runs=10, unique_seed_labels=True)
    assert all(ca.labels[f"a{i}"] == 0 for i in range(5))
    assert all(ca.labels[f"b{i}"] == 1 for i in range(5))


def test_assignment_csv_round_trip(tmp_path):
    g = two_cliques(4)
    ca = label_propagation(g, {"a0": 0, "b0": 1}, runs=5)
    ca.rho = {"a1": 0.95}
    ca.modularity = 0.5
    write_assignment(ca, tmp_path / "c.csv", tmp_path / "c.json")
    back = read_assignment(tmp_path / "c.csv", tmp_path / "c.json")
    assert back.labels == ca.labels and back.provenance == ca.provenance
    assert back.rho == ca.rho and back.modularity == 0.5
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "node_id,label,provenance,rho"
