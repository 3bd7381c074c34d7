# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels. Mirrors ``_pykernels`` operation for operation."""
import numpy as np
cimport numpy as cnp
from libc.math cimport lgamma, exp, log, log1p, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()


cdef inline uint64_t _next(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15ULL
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBULL
    return z ^ (z >> 31)


def levenshtein(str a, str b):
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    cdef Py_ssize_t la = len(a), lb = len(b), i, j
    if lb == 0:
        return la
    cdef cnp.int64_t[::1] prev = np.arange(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] cur = np.empty(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] tmp
    cdef int64_t v, cost
    cdef Py_UCS4 ca
    for i in range(1, la + 1):
        cur[0] = i
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            v = prev[j - 1] + cost
            if prev[j] + 1 < v:
                v = prev[j] + 1
            if cur[j - 1] + 1 < v:
                v = cur[j - 1] + 1
            cur[j] = v
        tmp = prev
        prev = cur
        cur = tmp
    return int(prev[lb])


def levenshtein_bounded(str a, str b, int k):
    cdef Py_ssize_t la = len(a), lb = len(b), i, j, lo, hi
    if abs(la - lb) > k:
        return k + 1
    if a == b:
        return 0
    cdef int64_t big = k + 1, v, cost, row_min
    cdef cnp.int64_t[::1] prev = np.empty(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] cur = np.empty(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] tmp
    cdef Py_UCS4 ca
    for j in range(lb + 1):
        prev[j] = j if j <= k else big
    for i in range(1, la + 1):
        lo = i - k if i - k > 1 else 1
        hi = i + k if i + k < lb else lb
        for j in range(lb + 1):
            cur[j] = big
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
        tmp = prev
        prev = cur
        cur = tmp
    return int(prev[lb]) if prev[lb] <= k else int(big)


cdef double _pb_tail_row(const double* pa, const double* pb, Py_ssize_t n,
                         int64_t v, double* dp) nogil:
    cdef double tail = 0.0, comp = 0.0, add, t, p, q
    cdef int64_t seen = 0, hi, k
    cdef Py_ssize_t j
    if v <= 0:
        return 1.0
    for k in range(v):
        dp[k] = 0.0
    dp[0] = 1.0
    for j in range(n):
        p = pa[j] * pb[j] if pb != NULL else pa[j]
        if p <= 0.0:
            continue
        q = 1.0 - p
        add = dp[v - 1] * p - comp
        t = tail + add
        comp = (t - tail) - add
        tail = t
        seen += 1
        hi = seen if seen < v - 1 else v - 1
        k = hi
        while k > 0:
            dp[k] = dp[k] * q + dp[k - 1] * p
            k -= 1
        dp[0] = dp[0] * q
    return tail


def pb_tail(probs, long v):
    if v <= 0:
        return 1.0
    cdef cnp.float64_t[::1] ps = np.ascontiguousarray(probs, dtype=np.float64)
    cdef cnp.float64_t[::1] dp = np.empty(v, dtype=np.float64)
    cdef Py_ssize_t n = ps.shape[0]
    if n == 0:
        return 0.0
    return _pb_tail_row(&ps[0], NULL, n, v, &dp[0])


def pair_tails(pcls, cls, a, b, v):
    cdef cnp.float64_t[:, ::1] P = np.ascontiguousarray(pcls, dtype=np.float64)
    cdef cnp.int64_t[::1] cl = np.ascontiguousarray(cls, dtype=np.int64)
    cdef cnp.int64_t[::1] aa = np.ascontiguousarray(a, dtype=np.int64)
    cdef cnp.int64_t[::1] bb = np.ascontiguousarray(b, dtype=np.int64)
    cdef cnp.int64_t[::1] vv = np.ascontiguousarray(v, dtype=np.int64)
    cdef Py_ssize_t m = aa.shape[0], n = P.shape[1], t
    out = np.empty(m, dtype=np.float64)
    cdef cnp.float64_t[::1] o = out
    cdef int64_t vmax = 1
    for t in range(m):
        if vv[t] > vmax:
            vmax = vv[t]
    cdef cnp.float64_t[::1] dp = np.empty(vmax, dtype=np.float64)
    if n == 0:
        for t in range(m):
            o[t] = 1.0 if vv[t] <= 0 else 0.0
        return out
    with nogil:
        for t in range(m):
            o[t] = _pb_tail_row(&P[cl[aa[t]], 0], &P[cl[bb[t]], 0], n, vv[t], &dp[0])
    return out


def core_numbers(indptr, indices):
    cdef cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1, i, u, w, e, d
    deg_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] deg = deg_arr
    cdef int64_t md = 0, start, num, dw, pw, ps, x
    for i in range(n):
        deg[i] = ip[i + 1] - ip[i]
        if deg[i] > md:
            md = deg[i]
    if n == 0:
        return deg_arr
    cdef cnp.int64_t[::1] bins = np.zeros(md + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] pos = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[::1] vert = np.zeros(n, dtype=np.int64)
    for i in range(n):
        bins[deg[i]] += 1
    start = 0
    for d in range(md + 1):
        num = bins[d]
        bins[d] = start
        start += num
    for u in range(n):
        pos[u] = bins[deg[u]]
        vert[pos[u]] = u
        bins[deg[u]] += 1
    d = md
    while d > 0:
        bins[d] = bins[d - 1]
        d -= 1
    bins[0] = 0
    for i in range(n):
        u = vert[i]
        for e in range(ip[u], ip[u + 1]):
            w = ix[e]
            if deg[w] > deg[u]:
                dw = deg[w]
                pw = pos[w]
                ps = bins[dw]
                x = vert[ps]
                if x != w:
                    pos[w] = ps
                    pos[x] = pw
                    vert[ps] = w
                    vert[pw] = x
                bins[dw] += 1
                deg[w] -= 1
    return deg_arr


def brandes(indptr, indices):
    cdef cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1, s, u, w, e, head, tailq, idx
    bc_arr = np.zeros(n, dtype=np.float64)
    if n == 0:
        return bc_arr
    cdef cnp.float64_t[::1] bc = bc_arr
    cdef cnp.float64_t[::1] sigma = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] delta = np.empty(n, dtype=np.float64)
    cdef cnp.int64_t[::1] dist = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] order = np.empty(n, dtype=np.int64)
    cdef int64_t du, dw
    cdef double coeff
    with nogil:
        for s in range(n):
            for u in range(n):
                sigma[u] = 0.0
                dist[u] = -1
                delta[u] = 0.0
            sigma[s] = 1.0
            dist[s] = 0
            order[0] = s
            head = 0
            tailq = 1
            while head < tailq:
                u = order[head]
                head += 1
                du = dist[u] + 1
                for e in range(ip[u], ip[u + 1]):
                    w = ix[e]
                    if dist[w] < 0:
                        dist[w] = du
                        order[tailq] = w
                        tailq += 1
                    if dist[w] == du:
                        sigma[w] += sigma[u]
            idx = tailq - 1
            while idx > 0:
                w = order[idx]
                dw = dist[w] - 1
                coeff = (1.0 + delta[w]) / sigma[w]
                for e in range(ip[w], ip[w + 1]):
                    u = ix[e]
                    if dist[u] == dw:
                        delta[u] += sigma[u] * coeff
                bc[w] += delta[w]
                idx -= 1
    return bc_arr


def louvain_move(indptr, indices, weights, k, order, cnp.int64_t[::1] comm,
                 cnp.float64_t[::1] tot, double m2, long max_passes=1000):
    cdef cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef cnp.float64_t[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.float64_t[::1] kk = np.ascontiguousarray(k, dtype=np.float64)
    cdef cnp.int64_t[::1] od = np.ascontiguousarray(order, dtype=np.int64)
    cdef Py_ssize_t n = ip.shape[0] - 1, t, i, j, e, c, ci, best, nt, q
    cdef cnp.float64_t[::1] nw = np.zeros(max(n, 1), dtype=np.float64)
    cdef cnp.int64_t[::1] touched = np.empty(max(n, 1), dtype=np.int64)
    cdef double ki, gain, best_gain
    cdef long moves = 0, moved, p
    with nogil:
        for p in range(max_passes):
            moved = 0
            for t in range(od.shape[0]):
                i = od[t]
                ci = comm[i]
                nt = 0
                for e in range(ip[i], ip[i + 1]):
                    j = ix[e]
                    if j == i:
                        continue
                    c = comm[j]
                    if nw[c] == 0.0:
                        touched[nt] = c
                        nt += 1
                    nw[c] += wt[e]
                ki = kk[i]
                tot[ci] -= ki
                best = ci
                best_gain = nw[ci] - tot[ci] * ki / m2
                for q in range(nt):
                    c = touched[q]
                    gain = nw[c] - tot[c] * ki / m2
                    if gain - best_gain > 1e-10:
                        best = c
                        best_gain = gain
                tot[best] += ki
                if best != ci:
                    comm[i] = best
                    moved += 1
                for q in range(nt):
                    nw[touched[q]] = 0.0
            moves += moved
            if moved == 0:
                break
    return moves


cdef inline Py_ssize_t _label_scores(const cnp.int64_t* ip, const cnp.int64_t* ix,
                                     const double* wt, const cnp.int64_t* lab,
                                     Py_ssize_t u, double* score,
                                     cnp.int64_t* touched) nogil:
    cdef Py_ssize_t e, nt = 0
    cdef cnp.int64_t lb
    for e in range(ip[u], ip[u + 1]):
        lb = lab[ix[e]]
        if lb < 0:
            continue
        if score[lb] == 0.0:
            touched[nt] = lb
            nt += 1
        score[lb] += wt[e]
    return nt


def lp_run(indptr, indices, weights, cnp.int64_t[::1] labels, fixed, long n_labels,
           seed, long max_sweeps=100):
    cdef cnp.int64_t[::1] ip = np.ascontiguousarray(indptr, dtype=np.int64)
    cdef cnp.int64_t[::1] ix = np.ascontiguousarray(indices, dtype=np.int64)
    cdef cnp.float64_t[::1] wt = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.uint8_t[::1] fx = np.ascontiguousarray(fixed, dtype=np.uint8)
    cdef Py_ssize_t n = ip.shape[0] - 1, i, j, u, e, q, nt, nfree = 0, nalive, r, tmp
    cdef uint64_t state = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef cnp.int64_t[::1] free = np.empty(max(n, 1), dtype=np.int64)
    cdef cnp.float64_t[::1] score = np.zeros(max(n_labels, 1), dtype=np.float64)
    cdef cnp.int64_t[::1] touched = np.empty(max(n_labels, 1), dtype=np.int64)
    cdef long maxdeg = 1
    for u in range(n):
        if ip[u + 1] - ip[u] > maxdeg:
            maxdeg = ip[u + 1] - ip[u]
    cdef cnp.int64_t[::1] alive_lab = np.empty(maxdeg, dtype=np.int64)
    cdef cnp.float64_t[::1] alive_w = np.empty(maxdeg, dtype=np.float64)
    cdef double best, s
    cdef long nbest, sweeps = 0
    cdef cnp.int64_t winner, c, lb
    cdef bint stable
    for u in range(n):
        if not fx[u]:
            free[nfree] = u
            nfree += 1
    if n == 0:
        return 0
    with nogil:
        while sweeps < max_sweeps:
            sweeps += 1
            i = nfree - 1
            while i > 0:
                j = <Py_ssize_t>(_next(&state) % <uint64_t>(i + 1))
                tmp = free[i]
                free[i] = free[j]
                free[j] = tmp
                i -= 1
            for q in range(nfree):
                u = free[q]
                nt = _label_scores(&ip[0], &ix[0], &wt[0], &labels[0], u, &score[0], &touched[0])
                if nt == 0:
                    continue
                best = -1.0
                nbest = 0
                winner = -1
                for r in range(nt):
                    c = touched[r]
                    s = score[c]
                    if s > best:
                        best = s
                        nbest = 1
                        winner = c
                    elif s == best:
                        nbest += 1
                if nbest > 1:
                    nalive = 0
                    for e in range(ip[u], ip[u + 1]):
                        lb = labels[ix[e]]
                        if lb >= 0:
                            alive_lab[nalive] = lb
                            alive_w[nalive] = wt[e]
                            nalive += 1
                    while nbest > 1:
                        r = <Py_ssize_t>(_next(&state) % <uint64_t>nalive)
                        score[alive_lab[r]] -= alive_w[r]
                        alive_lab[r] = alive_lab[nalive - 1]
                        alive_w[r] = alive_w[nalive - 1]
                        nalive -= 1
                        best = -1.0
                        nbest = 0
                        for r in range(nt):
                            c = touched[r]
                            s = score[c]
                            if s > best:
                                best = s
                                nbest = 1
                                winner = c
                            elif s == best:
                                nbest += 1
                labels[u] = winner
                for r in range(nt):
                    score[touched[r]] = 0.0
            stable = True
            for q in range(nfree):
                u = free[q]
                nt = _label_scores(&ip[0], &ix[0], &wt[0], &labels[0], u, &score[0], &touched[0])
                if nt > 0:
                    best = -1.0
                    for r in range(nt):
                        if score[touched[r]] > best:
                            best = score[touched[r]]
                    if labels[u] < 0 or score[labels[u]] != best:
                        stable = False
                    for r in range(nt):
                        score[touched[r]] = 0.0
                if not stable:
                    break
            if stable:
                break
    return sweeps


cdef inline double _lbinom(double n, double k) nogil:
    return lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0)


def log_hypergeom_tail(long l, long pop, long succ, long draws):
    cdef long lo = draws - (pop - succ)
    if lo < 0:
        lo = 0
    cdef long hi = succ if succ < draws else draws
    if l <= lo:
        return 0.0
    if l > hi:
        return -INFINITY
    cdef double norm = _lbinom(pop, draws)
    cdef long mode = ((draws + 1) * (succ + 1)) // (pop + 2)
    cdef double first, acc = 0.0, d, lower
    cdef long x
    if l > mode:
        first = _lbinom(succ, l) + _lbinom(pop - succ, draws - l) - norm
        for x in range(l, hi + 1):
            d = (_lbinom(succ, x) + _lbinom(pop - succ, draws - x) - norm) - first
            if d < -45.0:
                break
            acc += exp(d)
        return first + log(acc)
    first = _lbinom(succ, l - 1) + _lbinom(pop - succ, draws - l + 1) - norm
    x = l - 1
    while x >= lo:
        d = (_lbinom(succ, x) + _lbinom(pop - succ, draws - x) - norm) - first
        if d < -45.0:
            break
        acc += exp(d)
        x -= 1
    lower = exp(first) * acc
    if lower >= 1.0:
        return -INFINITY
    return log1p(-lower)
