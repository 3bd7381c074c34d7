"""Mesoscale structure of semantic networks: k-cores, tiers, core-periphery."""
import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bigraph import GraphError
from .community import louvain


@dataclass(frozen=True)
class KCoreDecomposition:
    ids: tuple
    coreness: np.ndarray

    @property
    def shells(self):
        """``{c: set of node ids}`` for every coreness value present."""
        out = {}
        for node, c in zip(self.ids, self.coreness.tolist()):
            out.setdefault(c, set()).add(node)
        return dict(sorted(out.items()))

    @property
    def max_coreness(self):
        return int(self.coreness.max()) if len(self.coreness) else 0

    def innermost_shell(self):
        if not len(self.coreness):
            return set()
        return {node for node, c in zip(self.ids, self.coreness) if c == self.max_coreness}

    def core_nodes(self, k):
        """Indices of the ``k``-core."""
        return np.flatnonzero(self.coreness >= k)


def k_core_decompose(g):
    return KCoreDecomposition(g.ids, kernels.core_numbers(g.adj.indptr, g.adj.indices))


def quartile_cuts(values):
    """Nearest-rank 25/50/75% values of ``values``."""
    v = np.sort(np.asarray(values))
    n = len(v)
    return [int(v[max(math.ceil(q * n / 4), 1) - 1]) for q in (1, 2, 3)]


def quantile_tiers(dec):
    """Tier 0 (outermost) .. 4 (innermost) per node id.

    Tiers 0-3 are the coreness quartile bins; the maximum-coreness shell is
    always tier 4.
    """
    if not len(dec.coreness):
        raise GraphError("empty decomposition")
    cuts = quartile_cuts(dec.coreness)
    top = dec.max_coreness
    tiers = {}
    for node, c in zip(dec.ids, dec.coreness.tolist()):
        if c == top:
            tiers[node] = 4
        else:
            tiers[node] = sum(c > x for x in cuts)
    return tiers


# --- core-periphery --------------------------------------------------------------


@dataclass(frozen=True)
class CorePeripherySplit:
    core: frozenset
    periphery: frozenset
    surprise: float  # log P(intra-core edges >= observed); lower is better


def surprise_score(n_nodes, n_edges, core_size, core_edges):
    """Natural log of the hypergeometric upper tail for intra-core edges.

    Out of the ``C(n, 2)`` node pairs, ``C(core_size, 2)`` are core pairs;
    the graph's ``n_edges`` edges are treated as draws without replacement.
    """
    pairs = n_nodes * (n_nodes - 1) // 2
    core_pairs = core_size * (core_size - 1) // 2
    return float(kernels.log_hypergeom_tail(int(core_edges), pairs, core_pairs, int(n_edges)))


def split_surprise(g, core_mask):
    core_mask = np.asarray(core_mask, dtype=bool)
    coo = g.adj.tocoo()
    upper = coo.row < coo.col
    intra = int((core_mask[coo.row[upper]] & core_mask[coo.col[upper]]).sum())
    return surprise_score(g.n, g.n_edges, int(core_mask.sum()), intra)


def _local_search(g, mask, rng, score):
    """Greedy single-node flips in random order until no flip improves."""
    n = g.n
    ip, ix = g.adj.indptr, g.adj.indices
    m = g.n_edges
    core_nbrs = np.zeros(n, dtype=np.int64)
    for i in range(n):
        core_nbrs[i] = mask[ix[ip[i]:ip[i + 1]]].sum()
    size = int(mask.sum())
    intra = int(core_nbrs[mask].sum() // 2)
    improved = True
    while improved:
        improved = False
        for i in rng.permutation(n):
            if mask[i]:
                if size == 1:
                    continue
                s2, e2 = size - 1, intra - core_nbrs[i]
            else:
                s2, e2 = size + 1, intra + core_nbrs[i]
            cand = surprise_score(n, m, s2, e2)
            if cand < score - 1e-12:
                delta = -1 if mask[i] else 1
                mask[i] = not mask[i]
                core_nbrs[ix[ip[i]:ip[i + 1]]] += delta
                size, intra, score = s2, e2, cand
                improved = True
    return mask, score


def core_periphery(g, seed=0, restarts=20, dec=None):
    """Binary core/periphery split minimising the surprise score.

    Starts from the all-core split, the maximum-coreness shell and
    ``restarts`` random splits; keeps the best local optimum.
    """
    if g.n_edges == 0:
        raise GraphError("core-periphery split needs edges")
    ids = g.ids
    if g.n_edges == g.n * (g.n - 1) // 2:
        return CorePeripherySplit(frozenset(ids), frozenset(), 0.0)
    rng = np.random.default_rng(seed)
    dec = dec or k_core_decompose(g)
    starts = [np.ones(g.n, dtype=bool), dec.coreness == dec.max_coreness]
    for _ in range(restarts):
        mask = rng.random(g.n) < rng.uniform(0.05, 0.5)
        if not mask.any():
            mask[rng.integers(g.n)] = True
        starts.append(mask)
    best_mask, best = None, math.inf
    for mask in starts:
        mask = mask.copy()
        mask, score = _local_search(g, mask, rng, split_surprise(g, mask))
        if score < best:
            best_mask, best = mask, score
    core = frozenset(ids[i] for i in np.flatnonzero(best_mask))
    return CorePeripherySplit(core, frozenset(ids) - core, best)


def jaccard(a, b):
    a, b = set(a), set(b)
    if not a and not b:
        raise ValueError("Jaccard index undefined for two empty sets")
    return len(a & b) / len(a | b)


def core_shell_jaccard(split, dec):
    return jaccard(split.core, dec.innermost_shell())


@dataclass(frozen=True)
class ShellCommunities:
    labels: dict  # node id -> sub-community
    bridges: frozenset
    modularity: float | None


def bridge_nodes(g, labels):
    """Nodes linked to at least two sub-communities whose links outside
    their own sub-community are at least as many as those inside it."""
    lab = np.array([labels[node] for node in g.ids])
    out = set()
    for i, node in enumerate(g.ids):
        nb = lab[g.neighbors(i)]
        if len(set(nb.tolist()) | {lab[i]}) < 2:
            continue
        inside = int((nb == lab[i]).sum())
        if len(nb) - inside >= inside:
            out.add(node)
    return frozenset(out)


def innermost_subcommunities(g, dec=None, runs=1000, seed=0):
    """Louvain restricted to the innermost k-shell, plus its bridge nodes."""
    dec = dec or k_core_decompose(g)
    shell = dec.innermost_shell()
    if not shell:
        raise GraphError("innermost shell is empty")
    idx = [i for i, node in enumerate(g.ids) if node in shell]
    sub = g.subgraph(idx)
    if sub.n_edges == 0:
        return ShellCommunities({node: i for i, node in enumerate(sub.ids)}, frozenset(), None)
    res = louvain(sub, runs=runs, seed=seed)
    labels = res.as_dict(sub)
    return ShellCommunities(labels, bridge_nodes(sub, labels), res.modularity)


def write_mesoscale(path, json_path, dec, tiers, split=None, shell=None, extra=None):
    core = split.core if split is not None else frozenset()
    sublabels = shell.labels if shell is not None else {}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "coreness", "tier", "in_core", "subcommunity"])
        for node, c in zip(dec.ids, dec.coreness.tolist()):
            sc = sublabels.get(node)
            w.writerow([node, c, tiers[node], int(node in core), "" if sc is None else sc])
    summary = {
        "jaccard": core_shell_jaccard(split, dec) if split is not None and (split.core or dec.innermost_shell()) else None,
        "surprise": split.surprise if split is not None else None,
        "shell_sizes": {str(c): len(s) for c, s in dec.shells.items()},
        "bridges": sorted(shell.bridges) if shell is not None else [],
    }
    summary.update(extra or {})
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
