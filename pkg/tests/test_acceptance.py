"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through the ``criterion`` fixture; the
lines are repeated in the terminal summary of the pytest run.
"""
import csv
import json
import os
import subprocess
import sys
import time
from collections import Counter

import numpy as np
import pytest

from sociosem.bigraph import BipartiteGraph, Graph, naive_projection
from sociosem.cli import main
from sociosem.community import assign_polarized, louvain, modularity, polarization
from sociosem.corpus import build_merge_map, levenshtein
from sociosem.mesoscale import (
    core_periphery, core_shell_jaccard, k_core_decompose, split_surprise,
)
from sociosem.metrics import betweenness, h_index
from sociosem.nullmodel import expected_degrees, fit_bicm, sample_graph
from sociosem.projection import n_pairs, poisson_binomial_tail, validated_projection
from sociosem.synth import (
    BlockmodelConfig, PlantedConfig, generate_bipartite_blockmodel, planted_core_periphery,
    ring_of_cliques,
)

from oracles import (
    betweenness_bfs, coreness_by_deletion, h_index_scan, modularity_double_loop,
    pb_tail_enumerate, pb_tail_rational, polarization_counting, random_graph_adj,
)


def test_c01_bicm_degree_reproduction(criterion):
    with criterion(1, "BiCM reproduces degrees to 1e-8 on 50 random graphs, < 10 s per fit"):
        rng = np.random.default_rng(101)
        worst, slowest = 0.0, 0.0
        for _ in range(50):
            n_top, n_bottom = int(rng.integers(20, 501)), int(rng.integers(20, 1001))
            density = rng.uniform(0.005, 0.2)
            g = BipartiteGraph.from_dense(rng.random((n_top, n_bottom)) < density).drop_isolated()
            t0 = time.perf_counter()
            sol = fit_bicm(g)
            slowest = max(slowest, time.perf_counter() - t0)
            kt, hb = expected_degrees(sol)
            resid = max(np.abs(kt - g.top_degrees()).max(), np.abs(hb - g.bottom_degrees()).max())
            worst = max(worst, resid)
        print(f"  worst residual {worst:.2e}, slowest fit {slowest:.3f} s")
        assert worst <= 1e-8
        assert slowest < 10


def test_c02_poisson_binomial_exactness(criterion):
    with criterion(2, "Poisson-Binomial tails: exact vs enumeration, long lists vs 1e6-sample MC"):
        rng = np.random.default_rng(202)
        worst = 0.0
        for _ in range(200):
            probs = rng.random(int(rng.integers(0, 16)))
            if rng.random() < 0.3:
                probs[rng.random(len(probs)) < 0.3] = rng.choice([0.0, 1.0])
            for v in range(len(probs) + 1):
                worst = max(worst, abs(poisson_binomial_tail(probs, v) - pb_tail_enumerate(probs, v)))
        print(f"  worst enumeration gap {worst:.1e}")
        assert worst <= 1e-12

        # All tail values of one list share a single Monte Carlo sample, so the
        # checks are correlated; five points per list keep the chance that an
        # exact implementation trips a 3 SE band near 1% per list.
        n_samples, chunk = 1_000_000, 20_000
        worst_z = 0.0
        for length in (30, 300, 2000):
            probs = rng.random(length) * rng.uniform(0.05, 1.0)
            hist = np.zeros(length + 2, dtype=np.int64)
            for _ in range(n_samples // chunk):
                sums = (rng.random((chunk, length)) < probs).sum(axis=1)
                hist[:length + 1] += np.bincount(sums, minlength=length + 1)
            emp_tail = hist[::-1].cumsum()[::-1] / n_samples  # P(S >= v)
            mean, sd = probs.sum(), np.sqrt((probs * (1 - probs)).sum())
            vs = np.unique(np.clip(np.round(mean + sd * np.arange(-2, 3)), 0, length).astype(int))
            if length == 300:
                exact_all = pb_tail_rational(probs)
                assert all(abs(poisson_binomial_tail(probs, v) - exact_all[v]) <= 1e-12
                           for v in range(length + 1))
            for v in vs:
                exact = poisson_binomial_tail(probs, int(v))
                se = np.sqrt(exact * (1 - exact) / n_samples)
                gap = abs(emp_tail[v] - exact)
                assert gap <= 3 * se + 1e-12, (length, v, exact, emp_tail[v])
                if se > 0:
                    worst_z = max(worst_z, gap / se)
        print(f"  largest Monte Carlo deviation {worst_z:.2f} standard errors")


def test_c03_fdr_calibration(criterion):
    with criterion(3, "FDR calibration on BiCM-sampled graphs: >= 95 of 100 within bound"):
        rng = np.random.default_rng(303)
        base = BipartiteGraph.from_dense(rng.random((120, 200)) < 0.08).drop_isolated()
        sol = fit_bicm(base)
        ok = 0
        fractions = []
        for _ in range(100):
            g = sample_graph(sol, rng, base.top_ids, base.bottom_ids).drop_isolated()
            vp = validated_projection(g, fit_bicm(g), "bottom", 0.01)
            n = n_pairs(g.n_bottom)
            frac = vp.n_validated / n
            fractions.append(frac)
            ok += frac <= 0.01 + 3 * np.sqrt(0.01 / n)
        print(f"  {ok}/100 within bound, max validated fraction {max(fractions):.2e}")
        assert ok >= 95


def _test_bipartite_graphs():
    rng = np.random.default_rng(404)
    out = []
    for seed in range(5):
        out.append(generate_bipartite_blockmodel(BlockmodelConfig(p_in=0.7, seed=seed))[0])
    for _ in range(10):
        shape = (int(rng.integers(10, 80)), int(rng.integers(10, 80)))
        out.append(BipartiteGraph.from_dense(rng.random(shape) < rng.uniform(0.05, 0.5)))
    return [g.drop_isolated() for g in out if g.n_edges]


def test_c04_validated_subset_of_naive(criterion):
    with criterion(4, "validated projection is a subset of the naive one; V* = 0 never validated"):
        total = 0
        for g in _test_bipartite_graphs():
            sol = fit_bicm(g)
            for layer in ("bottom", "top"):
                naive = naive_projection(g, layer).edge_set()
                for t in (0.01, 0.1, 0.5, 0.99):
                    vp = validated_projection(g, sol, layer, t)
                    assert vp.graph.edge_set() <= naive
                    assert all(p.v_observed > 0 for p in vp.pairs)
                    total += vp.n_validated
        print(f"  {total} validated links checked")
        assert total > 0


def test_c05_modularity_oracle(criterion):
    with criterion(5, "Louvain Q equals double-loop Q to 1e-12; two 4-cliques give Q = 0.5"):
        clique = [(a, b) for a in range(4) for b in range(a + 1, 4)]
        two = Graph.from_indices(tuple(map(str, range(8))),
                                 [a for a, _ in clique] + [a + 4 for a, _ in clique],
                                 [b for _, b in clique] + [b + 4 for _, b in clique])
        res = louvain(two, runs=20, seed=0)
        assert len(set(res.labels.tolist())) == 2 and res.modularity == 0.5
        graphs = [ring_of_cliques(12, 6)[0]]
        rng = np.random.default_rng(505)
        for _ in range(10):
            adj = random_graph_adj(rng, int(rng.integers(20, 120)), rng.uniform(0.03, 0.2))
            if adj.sum():
                graphs.append(Graph.from_dense(adj))
        for g in graphs:
            res = louvain(g, runs=20, seed=1)
            oracle = modularity_double_loop(g.adj.toarray(), res.labels)
            assert abs(res.modularity - oracle) <= 1e-12
            assert abs(modularity(g, res.labels) - oracle) <= 1e-12


# --- end-to-end pipeline runs ------------------------------------------------------


@pytest.fixture(scope="module")
def default_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    t0 = time.perf_counter()
    assert main(["synth", "--output-dir", str(d)]) == 0
    return d, time.perf_counter() - t0


@pytest.fixture(scope="module")
def pipeline_run(default_corpus, tmp_path_factory):
    d, synth_seconds = default_corpus
    out = tmp_path_factory.mktemp("run1")
    t0 = time.perf_counter()
    code = main(["run", "--input", str(d / "corpus.jsonl"), "--output-dir", str(out),
                 "--message-retweets", str(d / "message_retweets.csv")])
    return out, code, synth_seconds + time.perf_counter() - t0


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_c06_planted_recovery(criterion, default_corpus, pipeline_run):
    with criterion(6, "default synthetic corpus: >= 90% of non-verified users recovered, < 5 min"):
        d, _ = default_corpus
        out, code, seconds = pipeline_run
        assert code == 0
        cfg = PlantedConfig()
        assert cfg.n_communities == 4 and cfg.intra_retweet_prob == 0.05
        assert cfg.inter_retweet_prob == 0.001
        truth = {r["node_id"]: int(r["planted_label"]) for r in _read_csv(d / "ground_truth.csv")}
        nonverified = sorted(u for u in truth if u.startswith("u"))
        assert len(nonverified) >= 2000
        rows = _read_csv(out / "windows" / "all" / "communities" / "communities.csv")
        found = {r["node_id"]: r["label"] for r in rows if r["label"] != ""}
        votes = {}
        for u, lab in found.items():
            votes.setdefault(lab, Counter())[truth[u]] += 1
        mapping = {lab: c.most_common(1)[0][0] for lab, c in votes.items()}
        big = [lab for lab, c in votes.items() if sum(c.values()) >= 50]
        assert len({mapping[lab] for lab in big}) == len(big) == 4
        hits = sum(u in found and mapping[found[u]] == truth[u] for u in nonverified)
        acc = hits / len(nonverified)
        print(f"  recovered {acc:.4f} of {len(nonverified)} non-verified users in {seconds:.0f} s")
        assert acc >= 0.9
        assert seconds < 300


def test_c07_polarization_boundary(criterion):
    with criterion(7, "polarization: rho = 0.9 assigned, 0.9 - eps not; rho matches counting"):
        def star_config(k_in, k_out, name):
            edges = [(name, f"{name}_a{i}") for i in range(k_in)]
            edges += [(name, f"{name}_b{i}") for i in range(k_out)]
            seeds = {f"{name}_a{i}": 1 for i in range(k_in)}
            seeds.update({f"{name}_b{i}": 2 for i in range(k_out)})
            return edges, seeds

        edges, seeds = [], {}
        cases = {"x9_1": (9, 1), "x27_3": (27, 3), "x90_10": (90, 10),
                 "x8_1": (8, 1), "x899_101": (899, 101), "x17_2": (17, 2)}
        for name, (a, b) in cases.items():
            e, s = star_config(a, b, name)
            edges += e
            seeds.update(s)
        g = Graph.from_edges(edges)
        scores = polarization(g, seeds, users=list(cases))
        assigned = assign_polarized(scores, 0.9)
        assert set(assigned) == {"x9_1", "x27_3", "x90_10"}
        assert all(c == 1 for c in assigned.values())
        eps = float(np.nextafter(0.9, 0))
        from sociosem.community import PolarizationScore
        assert assign_polarized([PolarizationScore("e", eps, 1)], 0.9) == {}
        assert assign_polarized([PolarizationScore("e", 0.9, 1)], 0.9) == {"e": 1}

        rng = np.random.default_rng(707)
        checked = 0
        for _ in range(20):
            adj = random_graph_adj(rng, 60, 0.1)
            g = Graph.from_dense(adj)
            labelled = rng.choice(60, 20, replace=False)
            seeds = {g.ids[i]: int(rng.integers(0, 4)) for i in labelled}
            for denominator in ("labeled", "all"):
                for s in polarization(g, seeds, denominator=denominator):
                    nbrs = [g.ids[j] for j in g.neighbors(g.index()[s.user])]
                    assert (s.rho, s.target_community) == polarization_counting(nbrs, seeds, denominator)
                    checked += 1
        print(f"  {checked} polarization values equal the counting oracle")


def test_c08_betweenness_oracle(criterion):
    with criterion(8, "betweenness equals BFS path counting to 1e-12 on 30 graphs; star center 1"):
        rng = np.random.default_rng(808)
        worst = 0.0
        for _ in range(30):
            adj = random_graph_adj(rng, int(rng.integers(3, 61)), rng.uniform(0.03, 0.3))
            g = Graph.from_dense(adj)
            bc = betweenness(g)
            got = np.array([bc[i] for i in g.ids])
            worst = max(worst, np.abs(got - betweenness_bfs(adj)).max())
        print(f"  worst gap {worst:.1e}")
        assert worst <= 1e-12
        star = betweenness(Graph.from_edges([("c", f"l{i}") for i in range(9)]))
        assert star["c"] == 1.0 and all(star[f"l{i}"] == 0.0 for i in range(9))


def test_c09_kcore_oracle(criterion):
    with criterion(9, "coreness equals iterative deletion on 30 graphs; 4-clique coreness 3"):
        rng = np.random.default_rng(909)
        for _ in range(30):
            adj = random_graph_adj(rng, int(rng.integers(2, 101)), rng.uniform(0.02, 0.4))
            dec = k_core_decompose(Graph.from_dense(adj))
            assert np.array_equal(dec.coreness, coreness_by_deletion(adj))
        clique = Graph.from_dense(np.ones((4, 4)) - np.eye(4))
        assert k_core_decompose(clique).coreness.tolist() == [3, 3, 3, 3]


def test_c10_core_shell_agreement(criterion):
    with criterion(10, "planted core-periphery: Jaccard(core, shell) > 0.6, surprise beats baselines"):
        for seed in range(10):
            g, _ = planted_core_periphery(n_core=30, n_periphery=100, seed=seed)
            dec = k_core_decompose(g)
            split = core_periphery(g, seed=seed)
            jac = core_shell_jaccard(split, dec)
            all_core = split_surprise(g, np.ones(g.n, dtype=bool))
            max_shell = split_surprise(g, dec.coreness == dec.max_coreness)
            print(f"  seed {seed}: jaccard {jac:.3f}, surprise {split.surprise:.1f} "
                  f"(all-core {all_core:.1f}, max-shell {max_shell:.1f})")
            assert jac > 0.6
            assert split.surprise <= all_core and split.surprise <= max_shell


def test_c11_h_index(criterion):
    with criterion(11, "h-index equals sort-and-scan on 1000 lists; [5,3,3,1] gives 3"):
        rng = np.random.default_rng(1111)
        for _ in range(1000):
            counts = rng.integers(0, rng.integers(1, 300), size=int(rng.integers(0, 200))).tolist()
            assert h_index(counts) == h_index_scan(counts)
        assert h_index([5, 3, 3, 1]) == 3


def _tree_bytes(root):
    out = {}
    for base, _, files in os.walk(root):
        for f in files:
            p = os.path.join(base, f)
            rel = os.path.relpath(p, root)
            if rel != "run_log.json":  # wall-clock timings only
                with open(p, "rb") as fh:
                    out[rel] = fh.read()
    return out


def test_c12_determinism(criterion, default_corpus, pipeline_run, tmp_path):
    with criterion(12, "two runs with the same config and seed are byte-identical"):
        d, _ = default_corpus
        first, code, _ = pipeline_run
        assert code == 0
        env = dict(os.environ, PYTHONHASHSEED="12345")
        proc = subprocess.run(
            [sys.executable, "-m", "sociosem.cli", "run", "--input", str(d / "corpus.jsonl"),
             "--output-dir", str(tmp_path), "--message-retweets", str(d / "message_retweets.csv")],
            env=env, capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        a, b = _tree_bytes(first), _tree_bytes(tmp_path)
        assert sorted(a) == sorted(b)
        differing = [k for k in a if a[k] != b[k]]
        print(f"  {len(a)} files compared, {len(differing)} differ")
        assert not differing
        manifest = json.loads(a["manifest.json"])
        assert set(manifest["outputs"]) == set(a) - {"manifest.json"}


def _planted_vocabulary(rng, n_total=10_000):
    """Well-separated base words plus one- and two-edit variants."""
    from rapidfuzz import process
    from rapidfuzz.distance import Levenshtein

    letters = np.array(list("abcdefghijklmnopqrstuvwxyz"))
    bases = []
    while len(bases) < 2000:
        w = "".join(rng.choice(letters, int(rng.integers(12, 17))))
        # variants of different bases must stay more than two edits apart
        if not bases or process.extractOne(w, bases, scorer=Levenshtein.distance,
                                           score_cutoff=6) is None:
            bases.append(w)

    def edit(w):
        i = int(rng.integers(len(w)))
        c = str(rng.choice(letters))
        kind = int(rng.integers(3))
        if kind == 0:
            return w[:i] + c + w[i + 1:]
        if kind == 1:
            return w[:i] + w[i + 1:]
        return w[:i] + c + w[i:]

    counts = {b: int(rng.integers(20, 200)) for b in bases}
    while len(counts) < n_total:
        b = bases[int(rng.integers(len(bases)))]
        v = edit(b)
        if rng.random() < 0.3:
            v = edit(v)
        if v not in counts and levenshtein(v, b) <= 2:
            counts[v] = int(rng.integers(1, 10))
    return counts


def _union_find_classes(words, k):
    from rapidfuzz import process
    from rapidfuzz.distance import Levenshtein

    parent = list(range(len(words)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for lo in range(0, len(words), 1000):
        block = process.cdist(words[lo:lo + 1000], words, scorer=Levenshtein.distance,
                              score_cutoff=k, dtype=np.int32, workers=-1)
        for i, j in zip(*np.nonzero(block <= k)):
            a, b = find(lo + int(i)), find(int(j))
            if a != b:
                parent[a] = b
    classes = {}
    for i, w in enumerate(words):
        classes.setdefault(find(i), set()).add(w)
    return {frozenset(c) for c in classes.values()}


def test_c13_levenshtein_merging(criterion):
    with criterion(13, "merge map on 1e4 hashtags equals O(n^2) union-find; invariants hold"):
        counts = _planted_vocabulary(np.random.default_rng(1313))
        assert len(counts) == 10_000
        mm = build_merge_map(counts, max_distance=2)
        words = sorted(counts)
        got = {frozenset(c) for c in mm.classes().values()}
        want = _union_find_classes(words, 2)
        print(f"  {len(got)} classes, oracle {len(want)}")
        assert got == want
        for canon, members in mm.classes().items():
            assert mm(canon) == canon
            best = min(members, key=lambda w: (-counts[w], w))
            assert canon == best
            assert all(levenshtein(canon, w) <= 2 for w in members)
            assert mm.frequency[canon] == sum(counts[w] for w in members)
        assert all(mm(mm(w)) == mm(w) for w in words)
