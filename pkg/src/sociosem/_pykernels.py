"""Pure-Python reference kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
and the same floating point operation order, so both backends return
bit-identical results (``log_hypergeom_tail`` excepted: CPython ships its own
``lgamma``, so the two agree to rounding only). Keep the files in lockstep.
"""
import math

import numpy as np

_MASK64 = 0xFFFFFFFFFFFFFFFF


class SplitMix64:
    """Minimal splitmix64 stream shared by both kernel backends."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n):
        return self.next() % n


def levenshtein(a, b):
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cost = 0 if ca == cb else 1
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost))
        prev = cur
    return prev[-1]


def levenshtein_bounded(a, b, k):
    """Edit distance if it is <= k, otherwise k + 1 (banded DP)."""
    la, lb = len(a), len(b)
    if abs(la - lb) > k:
        return k + 1
    if a == b:
        return 0
    big = k + 1
    prev = [j if j <= k else big for j in range(lb + 1)]
    for i in range(1, la + 1):
        lo = max(1, i - k)
        hi = min(lb, i + k)
        cur = [big] * (lb + 1)
        if i <= k:
            cur[0] = i
        row_min = cur[0]
        ca = a[i - 1]
        for j in range(lo, hi + 1):
            cost = 0 if ca == b[j - 1] else 1
            v = prev[j - 1] + cost
            if prev[j] + 1 < v:
                v = prev[j] + 1
            if cur[j - 1] + 1 < v:
                v = cur[j - 1] + 1
            if v > big:
                v = big
            cur[j] = v
            if v < row_min:
                row_min = v
        if row_min > k:
            return big
        prev = cur
    return prev[lb] if prev[lb] <= k else big


def pb_tail(probs, v):
    """P(sum of independent Bernoulli(probs) >= v).

    The PMF below ``v`` is advanced one trial at a time; mass crossing into
    ``v`` is absorbed and summed with Kahan compensation, so the upper tail
    is never formed as ``1 - lower``.
    """
    if v <= 0:
        return 1.0
    ps = [float(p) for p in probs]
    dp = [0.0] * v
    dp[0] = 1.0
    tail = 0.0
    comp = 0.0
    seen = 0
    for p in ps:
        if p <= 0.0:
            continue
        q = 1.0 - p
        add = dp[v - 1] * p - comp
        t = tail + add
        comp = (t - tail) - add
        tail = t
        seen += 1
        hi = seen if seen < v - 1 else v - 1
        for k in range(hi, 0, -1):
            dp[k] = dp[k] * q + dp[k - 1] * p
        dp[0] = dp[0] * q
    return tail


def pair_tails(pcls, cls, a, b, v):
    """Poisson-Binomial tails for many node pairs.

    ``pcls[c, j]`` is the link probability between a projected-layer node of
    degree class ``c`` and opposite-layer node ``j``.
    """
    pcls = np.asarray(pcls, dtype=np.float64)
    rows = [row.tolist() for row in pcls]
    cls = np.asarray(cls).tolist()
    out = np.empty(len(a), dtype=np.float64)
    for t, (ia, ib, vs) in enumerate(zip(np.asarray(a).tolist(), np.asarray(b).tolist(),
                                         np.asarray(v).tolist())):
        ra, rb = rows[cls[ia]], rows[cls[ib]]
        out[t] = pb_tail([pa * pb for pa, pb in zip(ra, rb)], vs)
    return out


def core_numbers(indptr, indices):
    """Batagelj-Zaversnik bucket peeling."""
    indptr = np.asarray(indptr).tolist()
    indices = np.asarray(indices).tolist()
    n = len(indptr) - 1
    deg = [indptr[i + 1] - indptr[i] for i in range(n)]
    md = max(deg) if n else 0
    bins = [0] * (md + 1)
    for d in deg:
        bins[d] += 1
    start = 0
    for d in range(md + 1):
        num = bins[d]
        bins[d] = start
        start += num
    pos = [0] * n
    vert = [0] * n
    for u in range(n):
        pos[u] = bins[deg[u]]
        vert[pos[u]] = u
        bins[deg[u]] += 1
    for d in range(md, 0, -1):
        bins[d] = bins[d - 1]
    if md >= 0 and n:
        bins[0] = 0
    for i in range(n):
        u = vert[i]
        for e in range(indptr[u], indptr[u + 1]):
            w = indices[e]
            if deg[w] > deg[u]:
                dw = deg[w]
                pw = pos[w]
                ps = bins[dw]
                x = vert[ps]
                if x != w:
                    pos[w], pos[x] = ps, pw
                    vert[ps], vert[pw] = w, x
                bins[dw] += 1
                deg[w] -= 1
    return np.asarray(deg, dtype=np.int64)


def brandes(indptr, indices):
    """Unnormalized betweenness, each unordered pair counted twice."""
    indptr = np.asarray(indptr).tolist()
    indices = np.asarray(indices).tolist()
    n = len(indptr) - 1
    bc = [0.0] * n
    for s in range(n):
        sigma = [0.0] * n
        dist = [-1] * n
        delta = [0.0] * n
        sigma[s] = 1.0
        dist[s] = 0
        order = [s]
        head = 0
        while head < len(order):
            u = order[head]
            head += 1
            du = dist[u] + 1
            for e in range(indptr[u], indptr[u + 1]):
                w = indices[e]
                if dist[w] < 0:
                    dist[w] = du
                    order.append(w)
                if dist[w] == du:
                    sigma[w] += sigma[u]
        for idx in range(len(order) - 1, 0, -1):
            w = order[idx]
            dw = dist[w] - 1
            coeff = (1.0 + delta[w]) / sigma[w]
            for e in range(indptr[w], indptr[w + 1]):
                u = indices[e]
                if dist[u] == dw:
                    delta[u] += sigma[u] * coeff
            bc[w] += delta[w]
    return np.asarray(bc, dtype=np.float64)


def louvain_move(indptr, indices, weights, k, order, comm, tot, m2, max_passes=1000):
    """Local-moving phase of Louvain; mutates ``comm`` and ``tot`` in place.

    Returns the number of node moves performed.
    """
    ip = np.asarray(indptr).tolist()
    ix = np.asarray(indices).tolist()
    wt = np.asarray(weights, dtype=np.float64).tolist()
    kk = np.asarray(k, dtype=np.float64).tolist()
    od = np.asarray(order).tolist()
    cm = comm.tolist()
    tt = tot.tolist()
    n = len(ip) - 1
    nw = [0.0] * n
    touched = []
    moves = 0
    for _ in range(max_passes):
        moved = 0
        for i in od:
            ci = cm[i]
            for e in range(ip[i], ip[i + 1]):
                j = ix[e]
                if j == i:
                    continue
                c = cm[j]
                if nw[c] == 0.0:
                    touched.append(c)
                nw[c] += wt[e]
            ki = kk[i]
            tt[ci] -= ki
            best = ci
            best_gain = nw[ci] - tt[ci] * ki / m2
            for c in touched:
                gain = nw[c] - tt[c] * ki / m2
                if gain - best_gain > 1e-10:
                    best = c
                    best_gain = gain
            tt[best] += ki
            if best != ci:
                cm[i] = best
                moved += 1
            for c in touched:
                nw[c] = 0.0
            touched.clear()
        moves += moved
        if moved == 0:
            break
    comm[:] = cm
    tot[:] = tt
    return moves


def _label_scores(ip, ix, wt, lab, u, score, touched):
    for e in range(ip[u], ip[u + 1]):
        lb = lab[ix[e]]
        if lb < 0:
            continue
        if score[lb] == 0.0:
            touched.append(lb)
        score[lb] += wt[e]


def lp_run(indptr, indices, weights, labels, fixed, n_labels, seed, max_sweeps=100):
    """One asynchronous label-propagation run; mutates ``labels``.

    Ties on the weighted majority are resolved by deleting uniformly random
    labelled incident edges until a single label wins. The run stops once
    every free node holds one of its majority labels, or after
    ``max_sweeps`` sweeps. Returns the number of sweeps.
    """
    ip = np.asarray(indptr).tolist()
    ix = np.asarray(indices).tolist()
    wt = np.asarray(weights, dtype=np.float64).tolist()
    lab = labels.tolist()
    fx = np.asarray(fixed).tolist()
    n = len(ip) - 1
    rng = SplitMix64(seed)
    free = [u for u in range(n) if not fx[u]]
    score = [0.0] * max(n_labels, 1)
    touched = []
    alive_lab = []
    alive_w = []
    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        for i in range(len(free) - 1, 0, -1):
            j = rng.below(i + 1)
            free[i], free[j] = free[j], free[i]
        for u in free:
            _label_scores(ip, ix, wt, lab, u, score, touched)
            if touched:
                best = -1.0
                nbest = 0
                winner = -1
                for c in touched:
                    s = score[c]
                    if s > best:
                        best = s
                        nbest = 1
                        winner = c
                    elif s == best:
                        nbest += 1
                if nbest > 1:
                    alive_lab.clear()
                    alive_w.clear()
                    for e in range(ip[u], ip[u + 1]):
                        lb = lab[ix[e]]
                        if lb >= 0:
                            alive_lab.append(lb)
                            alive_w.append(wt[e])
                    while nbest > 1:
                        r = rng.below(len(alive_lab))
                        score[alive_lab[r]] -= alive_w[r]
                        alive_lab[r] = alive_lab[-1]
                        alive_w[r] = alive_w[-1]
                        alive_lab.pop()
                        alive_w.pop()
                        best = -1.0
                        nbest = 0
                        for c in touched:
                            s = score[c]
                            if s > best:
                                best = s
                                nbest = 1
                                winner = c
                            elif s == best:
                                nbest += 1
                lab[u] = winner
                for c in touched:
                    score[c] = 0.0
                touched.clear()
        stable = True
        for u in free:
            _label_scores(ip, ix, wt, lab, u, score, touched)
            if touched:
                best = -1.0
                for c in touched:
                    if score[c] > best:
                        best = score[c]
                if lab[u] < 0 or score[lab[u]] != best:
                    stable = False
                for c in touched:
                    score[c] = 0.0
                touched.clear()
            if not stable:
                break
        if stable:
            break
    labels[:] = lab
    return sweeps


def log_hypergeom_tail(l, pop, succ, draws):
    """log P(X >= l) for X ~ Hypergeometric(pop, succ, draws)."""
    lo = max(0, draws - (pop - succ))
    hi = min(succ, draws)
    if l <= lo:
        return 0.0
    if l > hi:
        return -math.inf
    norm = _lbinom(pop, draws)
    mode = ((draws + 1) * (succ + 1)) // (pop + 2)

    def lterm(x):
        return _lbinom(succ, x) + _lbinom(pop - succ, draws - x) - norm

    if l > mode:
        first = lterm(l)
        acc = 0.0
        for x in range(l, hi + 1):
            d = lterm(x) - first
            if d < -45.0:
                break
            acc += math.exp(d)
        return first + math.log(acc)
    first = lterm(l - 1)
    acc = 0.0
    for x in range(l - 1, lo - 1, -1):
        d = lterm(x) - first
        if d < -45.0:
            break
        acc += math.exp(d)
    lower = math.exp(first) * acc
    if lower >= 1.0:
        return -math.inf
    return math.log1p(-lower)


def _lbinom(n, k):
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)
