"""Statistically validated monopartite projection.

Each pair of same-layer nodes is tested on its number of common neighbours
(V-motifs). Under the BiCM the count is Poisson-Binomial with per-neighbour
success probability ``p[a, j] * p[b, j]``; the upper-tail p-values of all
pairs are then filtered with the Benjamini-Hochberg step-up rule.
"""
import csv
import json
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from . import kernels
from .bigraph import Graph, GraphError, cooccurrence


@dataclass(frozen=True)
class PairSignificance:
    a: int
    b: int
    v_observed: int
    p_value: float


@dataclass(frozen=True)
class ValidatedProjection:
    graph: Graph
    pairs: tuple  # PairSignificance entries that were retained
    threshold_pvalue: float
    n_hypotheses: int
    significance_level: float

    @property
    def n_validated(self):
        return len(self.pairs)

    def summary(self):
        return {
            "n_hypotheses": self.n_hypotheses,
            "t": self.significance_level,
            "threshold_pvalue": self.threshold_pvalue,
            "n_validated": self.n_validated,
        }


def poisson_binomial_tail(probs, v_star):
    """P(V >= v_star) for V a sum of independent Bernoulli(probs)."""
    probs = np.asarray(probs, dtype=np.float64)
    if v_star < 0 or v_star > len(probs):
        raise ValueError(f"v_star={v_star} outside [0, {len(probs)}]")
    if ((probs < 0) | (probs > 1)).any():
        raise ValueError("probabilities must lie in [0, 1]")
    return float(kernels.pb_tail(probs, int(v_star)))


def pair_pvalues(g, sol, layer="bottom"):
    """P-values for every co-occurring pair of ``layer`` nodes.

    Pairs without common neighbours have p-value 1 and are not listed; they
    still count as hypotheses (see :func:`n_pairs`).
    """
    if (g.n_top, g.n_bottom) != (sol.n_top, sol.n_bottom):
        raise GraphError("graph and BiCM solution dimensions differ")
    if layer == "top":
        g, sol = g.transpose(), sol.transpose()
    elif layer != "bottom":
        raise ValueError("layer must be 'top' or 'bottom'")
    v = sp.triu(cooccurrence(g, "bottom"), 1).tocoo()
    order = np.lexsort((v.col, v.row))
    a, b, vs = v.row[order], v.col[order], v.data[order].astype(np.int64)
    # rows: bottom-degree classes, columns: individual top nodes
    pcls = sol.class_probabilities().T[:, sol.top_class]
    pv = kernels.pair_tails(np.ascontiguousarray(pcls), sol.bottom_class, a, b, vs)
    return [
        PairSignificance(int(i), int(j), int(k), float(p)) for i, j, k, p in zip(a, b, vs, pv)
    ]


def n_pairs(n_nodes):
    return comb(n_nodes, 2)


def _fdr_cut(pvalues, n_hypotheses, t):
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    p = np.sort(np.asarray(pvalues, dtype=np.float64))
    if p.size == 0 or n_hypotheses == 0:
        return None
    ranks = np.arange(1, p.size + 1)
    ok = np.flatnonzero(p <= ranks * t / n_hypotheses)
    return float(p[ok[-1]]) if ok.size else None


def fdr_threshold(pvalues, n_hypotheses, t):
    """Largest sorted p-value with ``p_(i) <= i t / n``; 0 when none qualifies.

    ``pvalues`` may omit hypotheses with p = 1; they sort last and can never
    satisfy the condition for ``t < 1``.
    """
    cut = _fdr_cut(pvalues, n_hypotheses, t)
    return 0.0 if cut is None else cut


def fdr_validate(pairs, t=0.01, n_hypotheses=None, ids=None):
    """Keep the pairs whose p-value is <= the FDR threshold.

    ``n_hypotheses`` defaults to ``len(pairs)``; pass ``C(N, 2)`` when
    zero-count pairs were left out. ``ids`` names the projected nodes.
    """
    pairs = list(pairs)
    n = len(pairs) if n_hypotheses is None else int(n_hypotheses)
    if ids is None:
        top = max((max(p.a, p.b) for p in pairs), default=-1)
        ids = tuple(str(i) for i in range(top + 1))
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    if not pairs:
        return ValidatedProjection(Graph.from_indices(tuple(ids), [], []), (), 0.0, n, t)
    cut = _fdr_cut([p.p_value for p in pairs], n, t)
    kept = [] if cut is None else [p for p in pairs if p.p_value <= cut]
    threshold = 0.0 if cut is None else cut
    # deterministic report order: p ascending, then v descending, then pair
    kept.sort(key=lambda p: (p.p_value, -p.v_observed, p.a, p.b))
    graph = Graph.from_indices(tuple(ids), [p.a for p in kept], [p.b for p in kept])
    return ValidatedProjection(graph, tuple(kept), threshold, n, t)


def validated_projection(g, sol, layer="bottom", t=0.01):
    """p-values for all pairs of ``layer`` followed by FDR filtering."""
    ids = g.bottom_ids if layer == "bottom" else g.top_ids
    pairs = pair_pvalues(g, sol, layer)
    return fdr_validate(pairs, t=t, n_hypotheses=n_pairs(len(ids)), ids=ids)


def write_projection(vp, edges_path, summary_path):
    ids = vp.graph.ids
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alpha", "beta", "v_observed", "p_value"])
        w.writerows((ids[p.a], ids[p.b], p.v_observed, repr(p.p_value)) for p in vp.pairs)
    with open(summary_path, "w") as fh:
        json.dump(vp.summary(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_projection(edges_path, summary_path, ids):
    """Reload a projection written by :func:`write_projection` over node ``ids``."""
    index = {node: i for i, node in enumerate(ids)}
    with open(edges_path, newline="") as fh:
        pairs = [
            PairSignificance(index[r["alpha"]], index[r["beta"]], int(r["v_observed"]),
                             float(r["p_value"]))
            for r in csv.DictReader(fh)
        ]
    with open(summary_path) as fh:
        s = json.load(fh)
    graph = Graph.from_indices(tuple(ids), [p.a for p in pairs], [p.b for p in pairs])
    return ValidatedProjection(graph, tuple(pairs), s["threshold_pvalue"], s["n_hypotheses"], s["t"])
