"""Bipartite Configuration Model.

The maximum-entropy ensemble with both degree sequences fixed on average
gives independent links with ``p[i, a] = x[i] y[a] / (1 + x[i] y[a])``.
The multipliers solve

    k[i] = sum_a x[i] y[a] / (1 + x[i] y[a])
    h[a] = sum_i x[i] y[a] / (1 + x[i] y[a])

Nodes with equal degree share a multiplier, so the system is solved over
distinct degree values with multiplicities. Rows or columns whose degree
saturates the opposite layer are pinned to ``p = 1`` before solving.
"""
import csv
import json
import logging
from dataclasses import dataclass

import numpy as np

from .bigraph import BipartiteGraph, DegreeSequence, GraphError

logger = logging.getLogger(__name__)


class ConvergenceError(RuntimeError):
    """The solver did not reach the requested degree residual."""

    def __init__(self, message, residual, iterations):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SolverConfig:
    tolerance: float = 1e-8
    max_iterations: int = 10000
    # fixed-point sweeps before switching to Newton steps
    fixed_point_sweeps: int = 200

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass(frozen=True)
class BicmSolution:
    """Fitted multipliers.

    ``x``/``y`` are per node; ``np.inf`` marks a pinned full-degree node and
    ``0.0`` a node whose residual degree is zero after pinning.
    """

    x: np.ndarray
    y: np.ndarray
    residual: float
    iterations: int
    top_class: np.ndarray
    bottom_class: np.ndarray
    x_class: np.ndarray
    y_class: np.ndarray

    @property
    def n_top(self):
        return len(self.x)

    @property
    def n_bottom(self):
        return len(self.y)

    def class_probabilities(self):
        """Link probabilities between top and bottom degree classes."""
        return _prob(self.x_class[:, None], self.y_class[None, :])

    def probability_matrix(self):
        return self.class_probabilities()[np.ix_(self.top_class, self.bottom_class)]

    def transpose(self):
        return BicmSolution(
            self.y, self.x, self.residual, self.iterations,
            self.bottom_class, self.top_class, self.y_class, self.x_class,
        )


def _prob(x, y):
    with np.errstate(invalid="ignore", over="ignore"):
        xy = x * y
        p = xy / (1.0 + xy)
    return np.where(np.isinf(x) | np.isinf(y), 1.0, p)


def link_probability(sol, i, a):
    """``x_i y_a / (1 + x_i y_a)``; 1 for pinned nodes."""
    return float(_prob(np.float64(sol.x[i]), np.float64(sol.y[a])))


def _classes(values):
    uniq, inverse, counts = np.unique(values, return_inverse=True, return_counts=True)
    return uniq.astype(np.float64), inverse.astype(np.int64), counts.astype(np.float64)


def _pin_full(k, h):
    """Iteratively pin saturated rows/columns; returns masks and residual degrees."""
    k = k.astype(np.int64).copy()
    h = h.astype(np.int64).copy()
    full_t = np.zeros(len(k), dtype=bool)
    full_b = np.zeros(len(h), dtype=bool)
    while True:
        free_t = ~full_t
        free_b = ~full_b
        new_t = free_t & (k == free_b.sum()) & (k > 0)
        new_b = free_b & (h == free_t.sum()) & (h > 0)
        if not new_t.any() and not new_b.any():
            break
        # a pinned row links to every free column, and vice versa
        if new_t.any():
            full_t |= new_t
            h[free_b] -= int(new_t.sum())
            k[new_t] = 0
        if new_b.any():
            full_b |= new_b
            k[~full_t] -= int(new_b.sum())
            h[new_b] = 0
    return full_t, full_b, k, h


def _residual(xc, yc, kc, hc, ct, cb):
    p = _prob(xc[:, None], yc[None, :])
    rt = np.abs(p @ cb - kc)
    rb = np.abs(ct @ p - hc)
    return max(rt.max(initial=0.0), rb.max(initial=0.0))


def _fixed_point(xc, yc, kc, hc, ct, cb):
    den = (yc[None, :] / (1.0 + xc[:, None] * yc[None, :])) @ cb
    xc = kc / den
    den = ct @ (xc[:, None] / (1.0 + xc[:, None] * yc[None, :]))
    yc = hc / den
    return xc, yc


def _newton(xc, yc, kc, hc, ct, cb):
    """One Newton step in log-multipliers with backtracking on the residual."""
    nt = len(xc)
    p = _prob(xc[:, None], yc[None, :])
    v = p * (1.0 - p)
    f = np.concatenate([p @ cb - kc, ct @ p - hc])
    jac = np.zeros((nt + len(yc), nt + len(yc)))
    jac[:nt, :nt] = np.diag(v @ cb)
    jac[:nt, nt:] = v * cb[None, :]
    jac[nt:, :nt] = (v * ct[:, None]).T
    jac[nt:, nt:] = np.diag(ct @ v)
    # singular along the x -> cx, y -> y/c gauge; lstsq picks the min-norm step
    step = np.linalg.lstsq(jac, -f, rcond=None)[0]
    base = np.abs(f).max()
    lx, ly = np.log(xc), np.log(yc)
    t = 1.0
    for _ in range(30):
        nx_, ny_ = np.exp(lx + t * step[:nt]), np.exp(ly + t * step[nt:])
        if _residual(nx_, ny_, kc, hc, ct, cb) < base:
            return nx_, ny_
        t *= 0.5
    return xc, yc


def _gauge(xc, yc, ct, cb):
    """Fix the scale freedom: equal mean log-multiplier on both layers."""
    if len(xc) == 0 or len(yc) == 0:
        return xc, yc
    mx = (ct @ np.log(xc)) / ct.sum()
    my = (cb @ np.log(yc)) / cb.sum()
    c = np.exp((my - mx) / 2.0)
    return xc * c, yc / c


def fit_bicm(d, cfg=None):
    """Solve the degree constraints for the multipliers.

    Raises :class:`ConvergenceError` when the degree residual stays above
    ``cfg.tolerance`` after ``cfg.max_iterations`` updates.
    """
    cfg = cfg or SolverConfig()
    if isinstance(d, BipartiteGraph):
        d = DegreeSequence(d.top_degrees(), d.bottom_degrees())
    k = np.asarray(d.top, dtype=np.int64)
    h = np.asarray(d.bottom, dtype=np.int64)
    if len(k) == 0 or len(h) == 0 or (k < 1).any() or (h < 1).any():
        raise GraphError("degree sequence must be non-empty with all degrees >= 1")
    if k.sum() != h.sum():
        raise GraphError("top and bottom degree sums differ")
    if (k > len(h)).any() or (h > len(k)).any():
        raise GraphError("degree exceeds opposite layer size")

    full_t, full_b, kr, hr = _pin_full(k, h)
    free_t = np.flatnonzero(~full_t & (kr > 0))
    free_b = np.flatnonzero(~full_b & (hr > 0))

    x = np.zeros(len(k))
    y = np.zeros(len(h))
    x[full_t] = np.inf
    y[full_b] = np.inf

    iterations = 0
    if len(free_t) and len(free_b):
        kc, tinv, ct = _classes(kr[free_t])
        hc, binv, cb = _classes(hr[free_b])
        # zero-residual free nodes sit outside the solved block with x = 0;
        # the block only sees the other free nodes
        total = float(kr[free_t].sum())
        xc = kc / np.sqrt(total)
        yc = hc / np.sqrt(total)
        res = _residual(xc, yc, kc, hc, ct, cb)
        while res > cfg.tolerance and iterations < cfg.max_iterations:
            if iterations < cfg.fixed_point_sweeps:
                xc, yc = _fixed_point(xc, yc, kc, hc, ct, cb)
            else:
                nx_, ny_ = _newton(xc, yc, kc, hc, ct, cb)
                if nx_ is xc:  # Newton stalled; keep sweeping
                    nx_, ny_ = _fixed_point(xc, yc, kc, hc, ct, cb)
                xc, yc = nx_, ny_
            iterations += 1
            res = _residual(xc, yc, kc, hc, ct, cb)
        xc, yc = _gauge(xc, yc, ct, cb)
        x[free_t] = xc[tinv]
        y[free_b] = yc[binv]

    sol = _finalize(x, y, iterations)
    residual = _full_residual(sol, k, h)
    sol = BicmSolution(sol.x, sol.y, residual, iterations, sol.top_class, sol.bottom_class,
                       sol.x_class, sol.y_class)
    if not np.isfinite(residual) or residual > cfg.tolerance:
        raise ConvergenceError(
            f"BiCM did not converge: residual {residual:.3e} after {iterations} iterations",
            residual, iterations,
        )
    logger.debug("BiCM converged: residual %.3e, %d iterations", residual, iterations)
    return sol


def _finalize(x, y, iterations):
    xc, tcls = np.unique(x, return_inverse=True)
    yc, bcls = np.unique(y, return_inverse=True)
    return BicmSolution(x, y, np.nan, iterations, tcls.astype(np.int64), bcls.astype(np.int64),
                        xc, yc)


def _full_residual(sol, k, h):
    p = sol.class_probabilities()
    tcount = np.bincount(sol.top_class, minlength=len(sol.x_class)).astype(np.float64)
    bcount = np.bincount(sol.bottom_class, minlength=len(sol.y_class)).astype(np.float64)
    kt = (p @ bcount)[sol.top_class]
    hb = (tcount @ p)[sol.bottom_class]
    return float(max(np.abs(kt - k).max(), np.abs(hb - h).max()))


def expected_degrees(sol):
    p = sol.class_probabilities()
    tcount = np.bincount(sol.top_class, minlength=len(sol.x_class)).astype(np.float64)
    bcount = np.bincount(sol.bottom_class, minlength=len(sol.y_class)).astype(np.float64)
    return (p @ bcount)[sol.top_class], (tcount @ p)[sol.bottom_class]


def sample_graph(sol, rng, top_ids=None, bottom_ids=None):
    """Draw one graph with independent Bernoulli links.

    ``rng`` is a :class:`numpy.random.Generator` (or an int seed).
    """
    rng = np.random.default_rng(rng)
    p = sol.probability_matrix()
    m = rng.random(p.shape) < p
    return BipartiteGraph.from_dense(m, top_ids=top_ids, bottom_ids=bottom_ids)


def write_solution(sol, g, top_path, bottom_path, summary_path):
    for path, ids, mult in ((top_path, g.top_ids, sol.x), (bottom_path, g.bottom_ids, sol.y)):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["node_id", "multiplier"])
            w.writerows((node, repr(float(v))) for node, v in zip(ids, mult))
    summary = {
        "residual": sol.residual,
        "iterations": sol.iterations,
        "L": g.n_edges,
        "N_top": g.n_top,
        "N_bottom": g.n_bottom,
    }
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_solution(top_path, bottom_path, summary_path):
    def load(path):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return [r["node_id"] for r in rows], np.array([float(r["multiplier"]) for r in rows])

    top_ids, x = load(top_path)
    bottom_ids, y = load(bottom_path)
    with open(summary_path) as fh:
        summary = json.load(fh)
    sol = _finalize(x, y, summary["iterations"])
    sol = BicmSolution(sol.x, sol.y, summary["residual"], summary["iterations"],
                       sol.top_class, sol.bottom_class, sol.x_class, sol.y_class)
    return sol, top_ids, bottom_ids
