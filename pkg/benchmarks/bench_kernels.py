"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Both backends are imported directly, so the comparison does not depend on
``SOCIOSEM_PURE_PYTHON``. Outputs of the two backends are cross-checked
before timing.
"""
import argparse
import string
import time

import numpy as np
import scipy.sparse as sp

from sociosem import _pykernels

try:
    from sociosem import _ckernels
except ImportError:
    _ckernels = None


def random_graph(rng, n, mean_degree):
    m = int(n * mean_degree / 2)
    r = rng.integers(0, n, m)
    c = rng.integers(0, n, m)
    keep = r != c
    a = sp.coo_matrix((np.ones(keep.sum()), (r[keep], c[keep])), shape=(n, n)).tocsr()
    a = ((a + a.T) > 0).astype(np.float64).tocsr()
    a.sort_indices()
    return a


def cases(rng, scale):
    n = max(50, int(2000 * scale))
    g = random_graph(rng, n, 8)
    small = random_graph(rng, max(50, int(400 * scale)), 6)
    ip, ix, wt = g.indptr.astype(np.int64), g.indices.astype(np.int64), g.data
    k = np.asarray(g.sum(axis=1)).ravel()
    letters = np.array(list(string.ascii_lowercase))
    words = ["".join(rng.choice(letters, int(rng.integers(6, 14)))) for _ in range(400)]
    pairs = list(zip(words[::2], words[1::2]))
    probs = rng.random(max(100, int(2000 * scale))) * 0.3
    vt = int(probs.sum())
    n_top, n_cls = 300, 40
    pcls = rng.random((n_cls, n_top)) * 0.3
    cls = rng.integers(0, n_cls, 500)
    a = rng.integers(0, 500, 3000)
    b = rng.integers(0, 500, 3000)
    v = rng.integers(1, 20, 3000)
    seeds = np.full(n, -1, dtype=np.int64)
    seeds[rng.choice(n, n // 20, replace=False)] = rng.integers(0, 4, n // 20)
    fixed = (seeds >= 0).astype(np.uint8)
    order = rng.permutation(n).astype(np.int64)

    def louvain(mod):
        comm = np.arange(n, dtype=np.int64)
        tot = k.copy()
        mod.louvain_move(ip, ix, wt, k, order, comm, tot, float(k.sum()))
        return comm

    def lp(mod):
        lab = seeds.copy()
        mod.lp_run(ip, ix, wt, lab, fixed, 4, 12345)
        return lab

    return {
        "levenshtein (200 pairs)": lambda m: [m.levenshtein(x, y) for x, y in pairs],
        "levenshtein_bounded k=2": lambda m: [m.levenshtein_bounded(x, y, 2) for x, y in pairs],
        f"pb_tail (n={len(probs)})": lambda m: m.pb_tail(probs, vt),
        "pair_tails (3000 pairs)": lambda m: m.pair_tails(pcls, cls, a, b, v),
        f"core_numbers (n={n})": lambda m: m.core_numbers(ip, ix),
        f"brandes (n={small.shape[0]})": lambda m: m.brandes(small.indptr.astype(np.int64),
                                                             small.indices.astype(np.int64)),
        f"louvain_move (n={n})": louvain,
        f"lp_run (n={n})": lp,
        "log_hypergeom_tail": lambda m: [m.log_hypergeom_tail(40 + i, 4950, 435, 300)
                                         for i in range(50)],
    }


def best_of(fn, mod, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(mod)
        times.append(time.perf_counter() - t0)
    return min(times)


def same(x, y, rtol):
    if isinstance(x, list):
        return all(same(a, b, rtol) for a, b in zip(x, y))
    return np.allclose(np.asarray(x, dtype=float), np.asarray(y, dtype=float), rtol=rtol,
                       atol=1e-12)


# lgamma differences between libm and CPython reach ~1e-11 on large log-binomials
RTOL = {"log_hypergeom_tail": 1e-9}


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="input size multiplier")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}")
    for name, fn in cases(rng, args.scale).items():
        if not same(fn(_pykernels), fn(_ckernels), RTOL.get(name, 1e-12)):
            raise SystemExit(f"backends disagree on {name}")
        tp = best_of(fn, _pykernels, args.repeat)
        tc = best_of(fn, _ckernels, args.repeat)
        print(f"{name:32s} {tp:12.5f} {tc:12.5f} {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
