"""Partisan community detection.

Three steps: Louvain (best of many reshuffled runs) on the validated
projection of verified users; polarization-index assignment of non-verified
users; repeated label propagation over the full retweet network.
"""
import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .bigraph import GraphError

logger = logging.getLogger(__name__)

SEED, POLARIZED, PROPAGATED, UNASSIGNED = "seed", "polarized", "propagated", "unassigned"


def _label_array(g, labels):
    if isinstance(labels, dict):
        return np.array([labels[node] for node in g.ids])
    arr = np.asarray(labels)
    if arr.shape != (g.n,):
        raise ValueError("labels must cover every node")
    return arr


def modularity(g, labels):
    """Newman modularity of a partition (edge weights honoured)."""
    lab = _label_array(g, labels)
    two_m = float(g.adj.data.sum())
    if two_m <= 0:
        raise GraphError("modularity is undefined on a graph without edges")
    _, lab = np.unique(lab, return_inverse=True)
    coo = g.adj.tocoo()
    same = lab[coo.row] == lab[coo.col]
    internal = np.bincount(lab[coo.row[same]], weights=coo.data[same], minlength=lab.max() + 1)
    tot = np.bincount(lab, weights=g.strengths(), minlength=lab.max() + 1)
    return float(internal.sum() / two_m - ((tot / two_m) ** 2).sum())


def canonical_labels(labels):
    """Relabel 0..K-1 by descending size, ties by first member index."""
    labels = np.asarray(labels)
    uniq, inverse, counts = np.unique(labels, return_inverse=True, return_counts=True)
    first = np.full(len(uniq), len(labels))
    np.minimum.at(first, inverse, np.arange(len(labels)))
    order = np.lexsort((first, -counts))
    remap = np.empty(len(uniq), dtype=np.int64)
    remap[order] = np.arange(len(uniq))
    return remap[inverse]


@dataclass
class LouvainResult:
    labels: np.ndarray
    modularity: float
    run_modularities: np.ndarray

    def as_dict(self, g):
        return {node: int(c) for node, c in zip(g.ids, self.labels)}


def _louvain_once(indptr, indices, weights, k, two_m, rng):
    n = len(k)
    member = np.arange(n, dtype=np.int64)
    ip, ix, wt, kk = indptr, indices, weights, k
    while True:
        nl = len(kk)
        comm = np.arange(nl, dtype=np.int64)
        tot = kk.astype(np.float64).copy()
        order = rng.permutation(nl).astype(np.int64)
        moves = kernels.louvain_move(ip, ix, wt, kk, order, comm, tot, two_m)
        if moves == 0:
            break
        _, comm = np.unique(comm, return_inverse=True)
        member = comm[member]
        nc = int(comm.max()) + 1
        if nc == nl:
            break
        a = sp.csr_matrix((wt, ix, ip), shape=(nl, nl))
        p = sp.csr_matrix((np.ones(nl), (np.arange(nl), comm)), shape=(nl, nc))
        agg = (p.T @ a @ p).tocsr()
        agg.sort_indices()
        ip = agg.indptr.astype(np.int64)
        ix = agg.indices.astype(np.int64)
        wt = agg.data.astype(np.float64)
        kk = np.asarray(agg.sum(axis=1)).ravel()
    return member


def louvain(g, runs=1000, seed=0):
    """Best-modularity partition over ``runs`` Louvain runs with shuffled node order."""
    if g.n_edges == 0:
        raise GraphError("Louvain needs a graph with edges")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    rng = np.random.default_rng(seed)
    indptr, indices, weights = g.csr_arrays()
    k = g.strengths()
    two_m = float(k.sum())
    best, best_q = None, -np.inf
    qs = np.empty(runs)
    for r in range(runs):
        member = _louvain_once(indptr, indices, weights, k, two_m, rng)
        q = modularity(g, member)
        qs[r] = q
        if q > best_q:
            best, best_q = member, q
    labels = canonical_labels(best)
    return LouvainResult(labels, modularity(g, labels), qs)


# --- polarization --------------------------------------------------------------


@dataclass(frozen=True)
class PolarizationScore:
    user: str
    rho: float
    target_community: int
    shares: dict = field(default_factory=dict, compare=False)


def polarization(full_graph, seed_labels, users=None, denominator="labeled"):
    """Polarization index of each candidate user.

    For user ``u`` with neighbour set ``N(u)`` the share of community ``c``
    is ``|N(u) & C_c| / |N(u)|`` and ``rho = max_c share``. With
    ``denominator="labeled"`` only labelled neighbours enter ``|N(u)|``;
    ``"all"`` uses every neighbour. Users without labelled neighbours are
    omitted. ``users`` defaults to every unlabelled node.
    """
    if denominator not in ("labeled", "all"):
        raise ValueError("denominator must be 'labeled' or 'all'")
    index = full_graph.index()
    if users is None:
        users = [node for node in full_graph.ids if node not in seed_labels]
    out = []
    for u in users:
        i = index.get(u)
        if i is None:
            continue
        nbrs = [full_graph.ids[j] for j in full_graph.neighbors(i)]
        counts = Counter(seed_labels[v] for v in nbrs if v in seed_labels)
        if not counts:
            continue
        total = sum(counts.values()) if denominator == "labeled" else len(nbrs)
        shares = {c: counts[c] / total for c in sorted(counts)}
        target = min(counts, key=lambda c: (-counts[c], c))
        out.append(PolarizationScore(u, shares[target], int(target), shares))
    return out


def assign_polarized(scores, threshold=0.9):
    """Users whose polarization index reaches ``threshold`` (inclusive)."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    return {s.user: s.target_community for s in scores if s.rho >= threshold}


# --- label propagation ---------------------------------------------------------


@dataclass
class CommunityAssignment:
    labels: dict  # node -> community id (assigned nodes only)
    provenance: dict  # node -> seed / polarized / propagated / unassigned
    rho: dict = field(default_factory=dict)
    modularity: float | None = None
    run_count: int = 0
    sweeps: list = field(default_factory=list)

    def sizes(self):
        return dict(sorted(Counter(self.labels.values()).items()))

    def summary(self):
        sizes = self.sizes()
        return {
            "n_communities": len(sizes),
            "sizes": {str(c): n for c, n in sizes.items()},
            "Q": self.modularity,
            "runs": self.run_count,
        }


def label_propagation(g, fixed_seeds, initial_labels=None, runs=1000, seed=0, weighted=True,
                      unique_seed_labels=False, max_sweeps=100):
    """Majority-vote label propagation repeated ``runs`` times.

    ``fixed_seeds`` (node -> community) never change. ``initial_labels`` are
    starting hints that may be overwritten. Each node ends with the label it
    held most often across runs (ties to the smaller id); nodes never reached
    stay unassigned.

    With ``unique_seed_labels`` every seed starts from its own label, and
    labels are mapped back to the seed's community when votes are counted.
    """
    initial_labels = initial_labels or {}
    index = g.index()
    communities = sorted(set(fixed_seeds.values()) | set(initial_labels.values()))
    cid = {c: i for i, c in enumerate(communities)}
    n = g.n
    start = np.full(n, -1, dtype=np.int64)
    fixed = np.zeros(n, dtype=np.uint8)
    seeds_in_graph = sorted((index[u], c) for u, c in fixed_seeds.items() if u in index)
    if unique_seed_labels:
        to_comm = np.array([cid[c] for _, c in seeds_in_graph] + [cid[c] for c in communities],
                           dtype=np.int64)
        for lab, (i, _) in enumerate(seeds_in_graph):
            start[i] = lab
        offset = len(seeds_in_graph)
        hint_of = lambda c: offset + cid[c]  # noqa: E731
    else:
        to_comm = np.arange(len(communities), dtype=np.int64)
        for i, c in seeds_in_graph:
            start[i] = cid[c]
        hint_of = cid.__getitem__
    for i, _ in seeds_in_graph:
        fixed[i] = 1
    for u, c in initial_labels.items():
        i = index.get(u)
        if i is not None and not fixed[i]:
            start[i] = hint_of(c)
    n_labels = len(to_comm)

    indptr, indices, weights = g.csr_arrays()
    if not weighted:
        weights = np.ones_like(weights)
    run_seeds = np.random.SeedSequence(seed).generate_state(max(runs, 1), dtype=np.uint64)
    votes = np.zeros((n, max(len(communities), 1)), dtype=np.int64)
    sweeps = []
    rows = np.arange(n)
    for r in range(runs):
        lab = start.copy()
        sweeps.append(int(kernels.lp_run(indptr, indices, weights, lab, fixed, n_labels,
                                         int(run_seeds[r]), max_sweeps)))
        ok = lab >= 0
        np.add.at(votes, (rows[ok], to_comm[lab[ok]]), 1)

    labels, provenance = {}, {}
    for u, c in fixed_seeds.items():
        labels[u] = c
        provenance[u] = SEED
    for i, node in enumerate(g.ids):
        if node in fixed_seeds:
            continue
        if votes[i].sum() == 0:
            provenance[node] = UNASSIGNED
            continue
        labels[node] = communities[int(np.argmax(votes[i]))]
        provenance[node] = POLARIZED if node in initial_labels else PROPAGATED
    return CommunityAssignment(labels, provenance, run_count=runs, sweeps=sweeps)


def write_assignment(ca, csv_path, json_path, nodes=None):
    nodes = nodes if nodes is not None else sorted(ca.provenance)
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "label", "provenance", "rho"])
        for node in nodes:
            lab = ca.labels.get(node)
            rho = ca.rho.get(node)
            w.writerow([node, "" if lab is None else lab, ca.provenance.get(node, UNASSIGNED),
                        "" if rho is None else repr(rho)])
    with open(json_path, "w") as fh:
        json.dump(ca.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_assignment(csv_path, json_path=None):
    labels, provenance, rho = {}, {}, {}
    with open(csv_path, newline="") as fh:
        for r in csv.DictReader(fh):
            node = r["node_id"]
            provenance[node] = r["provenance"]
            if r["label"] != "":
                labels[node] = int(r["label"])
            if r["rho"] != "":
                rho[node] = float(r["rho"])
    q, runs = None, 0
    if json_path is not None:
        with open(json_path) as fh:
            s = json.load(fh)
        q, runs = s.get("Q"), s.get("runs", 0)
    return CommunityAssignment(labels, provenance, rho, q, runs)
