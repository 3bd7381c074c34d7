"""Bipartite and monopartite graph containers.

Both containers are immutable after construction. Node identifiers are kept
as strings in registries that assign indices by first appearance; every
exported artifact uses the string ids.
"""
import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Raised for degenerate or inconsistent graph inputs."""


def _registry(ids):
    index = {}
    for node in ids:
        if node not in index:
            index[node] = len(index)
    return index


@dataclass(frozen=True, eq=False)
class BipartiteGraph:
    """Unweighted biadjacency between a top and a bottom layer.

    ``rows`` (CSR, top x bottom) and ``cols`` (CSC of the same matrix) hold
    the incidence structure ``m[i, a]`` in both orientations.
    """

    top_ids: tuple
    bottom_ids: tuple
    rows: sp.csr_matrix
    cols: sp.csc_matrix = field(repr=False)

    @classmethod
    def from_edges(cls, edges, top_ids=None, bottom_ids=None):
        """Build from ``(top_id, bottom_id)`` pairs; duplicates collapse.

        Extra ``top_ids``/``bottom_ids`` register nodes (possibly isolated)
        before the ones first seen in ``edges``.
        """
        edges = list(edges)
        top = _registry(list(top_ids or ()) + [e[0] for e in edges])
        bottom = _registry(list(bottom_ids or ()) + [e[1] for e in edges])
        if edges:
            r = np.fromiter((top[e[0]] for e in edges), dtype=np.int64, count=len(edges))
            c = np.fromiter((bottom[e[1]] for e in edges), dtype=np.int64, count=len(edges))
        else:
            r = c = np.zeros(0, dtype=np.int64)
        return cls.from_indices(tuple(top), tuple(bottom), r, c)

    @classmethod
    def from_indices(cls, top_ids, bottom_ids, r, c):
        m = sp.coo_matrix(
            (np.ones(len(r), dtype=np.int64), (np.asarray(r), np.asarray(c))),
            shape=(len(top_ids), len(bottom_ids)),
        ).tocsr()
        m.sum_duplicates()
        m = m.astype(bool).astype(np.int8)
        m.sort_indices()
        return cls(tuple(top_ids), tuple(bottom_ids), m, m.tocsc())

    @classmethod
    def from_dense(cls, matrix, top_ids=None, bottom_ids=None):
        m = np.asarray(matrix)
        top_ids = tuple(top_ids) if top_ids is not None else tuple(f"t{i}" for i in range(m.shape[0]))
        bottom_ids = (
            tuple(bottom_ids) if bottom_ids is not None else tuple(f"b{j}" for j in range(m.shape[1]))
        )
        r, c = np.nonzero(m)
        return cls.from_indices(top_ids, bottom_ids, r, c)

    @property
    def n_top(self):
        return len(self.top_ids)

    @property
    def n_bottom(self):
        return len(self.bottom_ids)

    @property
    def n_edges(self):
        return int(self.rows.nnz)

    def top_degrees(self):
        return np.diff(self.rows.indptr).astype(np.int64)

    def bottom_degrees(self):
        return np.diff(self.cols.indptr).astype(np.int64)

    def to_dense(self):
        return self.rows.toarray().astype(np.int64)

    def neighbors_of_bottom(self, a):
        return self.cols.indices[self.cols.indptr[a]:self.cols.indptr[a + 1]]

    def neighbors_of_top(self, i):
        return self.rows.indices[self.rows.indptr[i]:self.rows.indptr[i + 1]]

    def transpose(self):
        """Swap the layers."""
        t = self.rows.T.tocsr()
        t.sort_indices()
        return BipartiteGraph(self.bottom_ids, self.top_ids, t, t.tocsc())

    def drop_isolated(self):
        """Remove degree-0 nodes from both layers (order preserved)."""
        keep_t = np.flatnonzero(self.top_degrees() > 0)
        keep_b = np.flatnonzero(self.bottom_degrees() > 0)
        if len(keep_t) == self.n_top and len(keep_b) == self.n_bottom:
            return self
        sub = self.rows[keep_t][:, keep_b].tocsr()
        sub.sort_indices()
        return BipartiteGraph(
            tuple(self.top_ids[i] for i in keep_t),
            tuple(self.bottom_ids[j] for j in keep_b),
            sub,
            sub.tocsc(),
        )

    def edges(self):
        """``(top_id, bottom_id)`` pairs in row-major order."""
        coo = self.rows.tocoo()
        return [(self.top_ids[i], self.bottom_ids[j]) for i, j in zip(coo.row, coo.col)]

    def edge_set(self):
        return set(self.edges())


@dataclass(frozen=True)
class DegreeSequence:
    top: np.ndarray
    bottom: np.ndarray

    @property
    def n_edges(self):
        return int(self.top.sum())


def degrees(g):
    """Exact row and column sums of the biadjacency.

    Isolated nodes must have been dropped beforehand.
    """
    if g.n_top == 0 or g.n_bottom == 0 or g.n_edges == 0:
        raise GraphError("empty bipartite graph has no degree sequence")
    k = g.top_degrees()
    h = g.bottom_degrees()
    if (k == 0).any() or (h == 0).any():
        raise GraphError("isolated nodes present; call drop_isolated() first")
    return DegreeSequence(k, h)


def v_motif_count(g, a, b):
    """Common top-layer neighbours of bottom nodes ``a`` and ``b``."""
    if a == b:
        raise GraphError("V-motifs are defined for distinct nodes")
    na = g.neighbors_of_bottom(a)
    nb = g.neighbors_of_bottom(b)
    return int(np.intersect1d(na, nb, assume_unique=True).size)


def cooccurrence(g, layer="bottom"):
    """Sparse matrix of V-motif counts between nodes of ``layer`` (zero diagonal)."""
    m = g.rows.astype(np.int64)
    v = (m.T @ m) if layer == "bottom" else (m @ m.T)
    v = sp.csr_matrix(v)
    v.setdiag(0)
    v.eliminate_zeros()
    v.sort_indices()
    return v


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected graph: symmetric CSR adjacency without self-loops.

    ``adj.data`` carries edge weights (1.0 for unweighted graphs).
    """

    ids: tuple
    adj: sp.csr_matrix

    @classmethod
    def from_edges(cls, edges, ids=None, weighted=False):
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples.

        Repeated pairs accumulate weight when ``weighted``; otherwise they
        collapse to one unit edge. Self-loops are ignored.
        """
        edges = [e for e in edges if e[0] != e[1]]
        index = _registry(list(ids or ()) + [x for e in edges for x in e[:2]])
        if edges:
            r = np.fromiter((index[e[0]] for e in edges), dtype=np.int64, count=len(edges))
            c = np.fromiter((index[e[1]] for e in edges), dtype=np.int64, count=len(edges))
            w = np.fromiter(
                ((e[2] if len(e) > 2 else 1.0) for e in edges), dtype=np.float64, count=len(edges)
            )
        else:
            r = c = np.zeros(0, dtype=np.int64)
            w = np.zeros(0)
        return cls.from_indices(tuple(index), r, c, w, weighted=weighted)

    @classmethod
    def from_indices(cls, ids, r, c, w=None, weighted=False):
        n = len(ids)
        r = np.asarray(r, dtype=np.int64)
        c = np.asarray(c, dtype=np.int64)
        w = np.ones(len(r)) if w is None else np.asarray(w, dtype=np.float64)
        keep = r != c
        r, c, w = r[keep], c[keep], w[keep]
        a = sp.coo_matrix(
            (np.concatenate([w, w]), (np.concatenate([r, c]), np.concatenate([c, r]))),
            shape=(n, n),
        ).tocsr()
        a.sum_duplicates()
        if not weighted:
            a.data[:] = 1.0
        a.sort_indices()
        return cls(tuple(ids), a)

    @classmethod
    def from_dense(cls, matrix, ids=None):
        m = np.asarray(matrix, dtype=np.float64)
        ids = tuple(ids) if ids is not None else tuple(str(i) for i in range(m.shape[0]))
        r, c = np.nonzero(np.triu(m, 1))
        return cls.from_indices(ids, r, c, m[r, c], weighted=True)

    @property
    def n(self):
        return len(self.ids)

    @property
    def n_edges(self):
        return int(self.adj.nnz // 2)

    @property
    def total_weight(self):
        return float(self.adj.data.sum() / 2.0)

    def degrees(self):
        return np.diff(self.adj.indptr).astype(np.int64)

    def strengths(self):
        return np.asarray(self.adj.sum(axis=1)).ravel()

    def neighbors(self, i):
        return self.adj.indices[self.adj.indptr[i]:self.adj.indptr[i + 1]]

    def index(self):
        return {node: i for i, node in enumerate(self.ids)}

    def unweighted(self):
        a = self.adj.copy()
        a.data[:] = 1.0
        return Graph(self.ids, a)

    def subgraph(self, nodes):
        """Induced subgraph on ``nodes`` (indices), in the given order."""
        nodes = np.asarray(nodes, dtype=np.int64)
        sub = self.adj[nodes][:, nodes].tocsr()
        sub.sort_indices()
        return Graph(tuple(self.ids[i] for i in nodes), sub)

    def edges(self):
        """``(u_id, v_id, weight)`` with u index < v index."""
        coo = sp.triu(self.adj, 1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [
            (self.ids[coo.row[t]], self.ids[coo.col[t]], float(coo.data[t])) for t in order
        ]

    def edge_set(self):
        return {frozenset((u, v)) for u, v, _ in self.edges()}

    def csr_arrays(self):
        return (
            self.adj.indptr.astype(np.int64),
            self.adj.indices.astype(np.int64),
            self.adj.data.astype(np.float64),
        )


def naive_projection(g, layer="bottom"):
    """Link two same-layer nodes whenever they share at least one neighbour."""
    v = cooccurrence(g, layer)
    ids = g.bottom_ids if layer == "bottom" else g.top_ids
    coo = sp.triu(v, 1).tocoo()
    return Graph.from_indices(ids, coo.row, coo.col)


# --- CSV interchange -------------------------------------------------------


def write_bipartite(g, edges_path, nodes_path):
    with open(edges_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["layer_top_id", "layer_bottom_id"])
        w.writerows(g.edges())
    with open(nodes_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["layer", "index", "node_id"])
        w.writerows(("top", i, node) for i, node in enumerate(g.top_ids))
        w.writerows(("bottom", j, node) for j, node in enumerate(g.bottom_ids))


def read_bipartite(edges_path, nodes_path):
    top, bottom = [], []
    with open(nodes_path, newline="") as fh:
        for row in csv.DictReader(fh):
            (top if row["layer"] == "top" else bottom).append(row["node_id"])
    with open(edges_path, newline="") as fh:
        edges = [(row["layer_top_id"], row["layer_bottom_id"]) for row in csv.DictReader(fh)]
    return BipartiteGraph.from_edges(edges, top_ids=top, bottom_ids=bottom)


def write_graph(g, path, weighted=False, nodes_path=None):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "weight"] if weighted else ["source", "target"])
        for u, v, x in g.edges():
            w.writerow([u, v, repr(x)] if weighted else [u, v])
    if nodes_path is not None:
        with open(nodes_path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "node_id"])
            w.writerows(enumerate(g.ids))


def read_graph(path, nodes_path=None):
    ids = None
    if nodes_path is not None:
        with open(nodes_path, newline="") as fh:
            ids = [row["node_id"] for row in csv.DictReader(fh)]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        weighted = "weight" in (reader.fieldnames or ())
        edges = [
            (row["source"], row["target"], float(row["weight"]) if weighted else 1.0)
            for row in reader
        ]
    return Graph.from_edges(edges, ids=ids, weighted=weighted)

