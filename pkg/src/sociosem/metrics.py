"""Descriptive statistics: betweenness, per-community structure, h-index, activity."""
import csv
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels

TABLE1_COLUMNS = ("community", "N_u", "N_e", "k_mean", "k_norm", "rho_mean", "mu_r", "mu_m")


def betweenness(g, normalized=True):
    """Unweighted shortest-path betweenness over unordered node pairs.

    Normalised by ``(N - 1)(N - 2) / 2``; pairs without a path add nothing.
    """
    n = g.n
    if n < 3:
        return {node: 0.0 for node in g.ids}
    raw = kernels.brandes(g.adj.indptr, g.adj.indices) / 2.0
    if normalized:
        raw = raw / ((n - 1) * (n - 2) / 2.0)
    return dict(zip(g.ids, raw.tolist()))


@dataclass
class CommunityStats:
    community: int
    n_users: int
    n_edges: int
    mean_degree: float
    normalized_mean_degree: float | None
    mean_polarization: float | None
    self_ref_retweets: float | None
    self_ref_mentions: float | None

    def row(self):
        return [self.community, self.n_users, self.n_edges, self.mean_degree,
                self.normalized_mean_degree, self.mean_polarization,
                self.self_ref_retweets, self.self_ref_mentions]


def _self_reference(counts, members, community_of, c, denominator):
    inside = total = 0
    for (src, dst), n in counts.items():
        if denominator == "performed":
            if src not in members:
                continue
        elif dst not in members:  # "received"
            continue
        total += n
        if community_of.get(src) == c and community_of.get(dst) == c:
            inside += n
    return inside / total if total else None


def community_stats(full_graph, labels, retweet_counts=None, mention_counts=None, rho=None,
                    mu_denominator="performed"):
    """Per-community structural and self-reference statistics.

    ``labels`` maps node id to community; ``retweet_counts``/``mention_counts``
    map directed ``(source, target)`` pairs to counts. ``mu_denominator``
    selects whether a community's interactions are those its members
    performed (default) or received.
    """
    if mu_denominator not in ("performed", "received"):
        raise ValueError("mu_denominator must be 'performed' or 'received'")
    retweet_counts = retweet_counts or {}
    mention_counts = mention_counts or {}
    rho = rho or {}
    g = full_graph.unweighted()
    index = g.index()
    groups = defaultdict(list)
    for node, c in labels.items():
        groups[c].append(node)
    out = []
    for c in sorted(groups):
        members = set(groups[c])
        idx = sorted(index[u] for u in members if u in index)
        sub = g.subgraph(idx)
        n_u = len(members)
        n_e = sub.n_edges
        k_mean = 2.0 * n_e / n_u
        deg = np.zeros(n_u, dtype=np.int64)
        deg[: sub.n] = sub.degrees()
        k_norm = None
        if n_u > 1 and deg.max() > deg.min():
            k_norm = float((k_mean - deg.min()) / (deg.max() - deg.min()))
        rhos = [rho[u] for u in sorted(members) if u in rho]
        out.append(CommunityStats(
            c, n_u, n_e, k_mean, k_norm,
            float(np.mean(rhos)) if rhos else None,
            _self_reference(retweet_counts, members, labels, c, mu_denominator),
            _self_reference(mention_counts, members, labels, c, mu_denominator),
        ))
    return out


def write_table1(stats, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TABLE1_COLUMNS)
        for s in stats:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v)
                        for v in s.row()])


def h_index(counts):
    """Largest h such that h messages have at least h retweets each."""
    h = 0
    for i, c in enumerate(sorted(counts, reverse=True), 1):
        if c < 0:
            raise ValueError("retweet counts must be non-negative")
        if c >= i:
            h = i
        else:
            break
    return h


def user_h_indices(message_retweets):
    """``{user: [count per message]} -> {user: h}``, ranked by h then id."""
    scores = {u: h_index(c) for u, c in message_retweets.items()}
    return dict(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))


@dataclass
class ActivityRow:
    window: str
    community: int
    tweets: int
    users: int


def activity_series(records, windows, labels):
    """Tweets and distinct active authors per window and community."""
    communities = sorted(set(labels.values()))
    rows = []
    for w in windows:
        tweets = defaultdict(int)
        users = defaultdict(set)
        for r in records:
            if r.timestamp not in w:
                continue
            c = labels.get(r.author_id)
            if c is None:
                continue
            tweets[c] += 1
            users[c].add(r.author_id)
        rows.extend(ActivityRow(w.label, c, tweets[c], len(users[c])) for c in communities)
    return rows


def write_activity(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["window", "community", "tweets", "users"])
        w.writerows(list(asdict(r).values()) for r in rows)


def write_betweenness(bc, path, top=None):
    ranked = sorted(bc.items(), key=lambda kv: (-kv[1], kv[0]))
    if top is not None:
        ranked = ranked[:top]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node_id", "betweenness"])
        w.writerows((node, repr(v)) for node, v in ranked)
