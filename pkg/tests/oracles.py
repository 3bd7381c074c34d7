"""Brute-force reference implementations used as test oracles.

Deliberately naive and independent of the package internals.
"""
import itertools
import math
from collections import deque
from fractions import Fraction
from functools import lru_cache

import numpy as np


def pb_tail_enumerate(probs, v):
    """P(sum >= v) by summing over all 2^n outcomes."""
    total = 0.0
    n = len(probs)
    for bits in itertools.product((0, 1), repeat=n):
        if sum(bits) < v:
            continue
        p = 1.0
        for b, q in zip(bits, probs):
            p *= q if b else 1.0 - q
        total += p
    return total


def pb_tail_rational(probs):
    """All tails P(sum >= v), v = 0..n, by a DP in exact rational arithmetic."""
    dist = [Fraction(1)]
    for p in probs:
        p = Fraction(float(p))
        new = [Fraction(0)] * (len(dist) + 1)
        for k, d in enumerate(dist):
            new[k] += d * (1 - p)
            new[k + 1] += d * p
        dist = new
    tails = [Fraction(0)] * (len(dist) + 1)
    for v in range(len(dist) - 1, -1, -1):
        tails[v] = tails[v + 1] + dist[v]
    return [float(t) for t in tails[:-1]]


def pb_tail_monte_carlo(probs, v, n_samples, rng):
    probs = np.asarray(probs)
    hits = 0
    chunk = 20000
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        draws = (rng.random((m, len(probs))) < probs).sum(axis=1)
        hits += int((draws >= v).sum())
        done += m
    return hits / n_samples


def levenshtein_recursive(a, b):
    @lru_cache(maxsize=None)
    def d(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        return min(d(i - 1, j) + 1, d(i, j - 1) + 1, d(i - 1, j - 1) + (a[i - 1] != b[j - 1]))

    return d(len(a), len(b))


def modularity_double_loop(adj, labels):
    """Q = 1/2m sum_ij (A_ij - k_i k_j / 2m) delta(c_i, c_j)."""
    adj = np.asarray(adj, dtype=float)
    k = adj.sum(axis=1)
    two_m = k.sum()
    q = 0.0
    n = len(adj)
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                q += adj[i, j] - k[i] * k[j] / two_m
    return q / two_m


def betweenness_bfs(adj):
    """Normalised betweenness from explicit BFS path counts for every pair."""
    adj = np.asarray(adj)
    n = len(adj)
    nbrs = [np.flatnonzero(adj[i]).tolist() for i in range(n)]

    def bfs(s):
        dist = [-1] * n
        sigma = [0] * n
        dist[s] = 0
        sigma[s] = 1
        q = deque([s])
        while q:
            u = q.popleft()
            for w in nbrs[u]:
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    q.append(w)
                if dist[w] == dist[u] + 1:
                    sigma[w] += sigma[u]
        return dist, sigma

    info = [bfs(s) for s in range(n)]
    out = np.zeros(n)
    for s in range(n):
        for t in range(s + 1, n):
            ds, ss = info[s]
            if ds[t] <= 0:
                continue
            dt, st = info[t]
            for v in range(n):
                if v in (s, t) or ds[v] < 0 or dt[v] < 0:
                    continue
                if ds[v] + dt[v] == ds[t]:
                    out[v] += ss[v] * st[v] / ss[t]
    if n >= 3:
        out /= (n - 1) * (n - 2) / 2
    return out


def coreness_by_deletion(adj):
    """Coreness via repeated k-core extraction by iterative deletion."""
    adj = np.asarray(adj, dtype=bool)
    n = len(adj)
    core = np.zeros(n, dtype=int)
    k = 0
    while True:
        alive = np.ones(n, dtype=bool)
        changed = True
        while changed:
            changed = False
            deg = (adj & alive[None, :]).sum(axis=1)
            kill = alive & (deg < k)
            if kill.any():
                alive &= ~kill
                changed = True
        if not alive.any():
            break
        core[alive] = k
        k += 1
    return core


def h_index_scan(counts):
    s = sorted(counts, reverse=True)
    h = 0
    while h < len(s) and s[h] >= h + 1:
        h += 1
    return h


def polarization_counting(neighbors, seed_labels, denominator="labeled"):
    """rho and target community by direct counting, ties to the smaller label."""
    labelled = [seed_labels[v] for v in neighbors if v in seed_labels]
    if not labelled:
        return None
    best = None
    for c in sorted(set(labelled)):
        cnt = labelled.count(c)
        if best is None or cnt > best[1]:
            best = (c, cnt)
    total = len(labelled) if denominator == "labeled" else len(neighbors)
    return best[1] / total, best[0]


def merge_classes_quadratic(words, k, distance):
    """Union-find over every pair with ``distance(a, b) <= k``."""
    parent = list(range(len(words)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in distance(words, k):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    groups = {}
    for i, w in enumerate(words):
        groups.setdefault(find(i), set()).add(w)
    return {frozenset(g) for g in groups.values()}


def hypergeom_log_tail_exact(l, pop, succ, draws):
    """ln P(X >= l) using exact integer binomials."""
    num = sum(math.comb(succ, i) * math.comb(pop - succ, draws - i)
              for i in range(l, min(succ, draws) + 1))
    if num == 0:
        return -math.inf
    # math.log accepts arbitrarily large integers
    return math.log(num) - math.log(math.comb(pop, draws))


def random_graph_adj(rng, n, p):
    a = np.triu(rng.random((n, n)) < p, 1)
    return (a | a.T).astype(int)
