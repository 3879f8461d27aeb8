"""Shared helpers: quadrature oracle and chunked moment accumulators."""

import numpy as np
from hypothesis import settings

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")

QUAD_NODES = 2**16


def quad_grid() -> np.ndarray:
    """Nodes of the composite trapezoid rule on [0, 1]."""
    return np.linspace(0.0, 1.0, QUAD_NODES + 1)


def trapezoid_inner(fv: np.ndarray, gv: np.ndarray, x: np.ndarray) -> float:
    """Trapezoid approximation of the L2 inner product on [0, 1]."""
    return float(np.trapezoid(fv * gv, x))


def cross_moment_stats(x, w, K, chunk=1 << 16):
    """Means and standard errors of phi_k(X) psi_l(W) for all k, l <= K.

    Independent of the estimator implementation: accumulates first and
    second moments of the products via direct trig evaluation.
    """
    two_pi = 2.0 * np.pi
    root2 = np.sqrt(2.0)
    ks = np.arange(1, K + 1)
    j = (ks + 1) // 2
    n = x.size
    s1 = np.zeros((K, K))
    s2 = np.zeros((K, K))

    def table(values):
        ang = two_pi * np.multiply.outer(values, j.astype(float))
        return np.where(ks % 2 == 1, root2 * np.cos(ang), root2 * np.sin(ang))

    for i0 in range(0, n, chunk):
        sl = slice(i0, min(i0 + chunk, n))
        bx = table(x[sl])
        bw = table(w[sl])
        s1 += bx.T @ bw
        s2 += (bx * bx).T @ (bw * bw)
    mean = s1 / n
    var = s2 / n - mean**2
    return mean, np.sqrt(np.maximum(var, 0.0) / n)


def binned_means(values, bins_on, n_bins):
    """Per-bin means, standard errors, and counts of values grouped by bins_on."""
    idx = np.minimum((bins_on * n_bins).astype(int), n_bins - 1)
    means = np.empty(n_bins)
    stderrs = np.empty(n_bins)
    counts = np.empty(n_bins, dtype=int)
    for b in range(n_bins):
        sel = values[idx == b]
        counts[b] = sel.size
        means[b] = sel.mean()
        stderrs[b] = sel.std(ddof=1) / np.sqrt(sel.size)
    return means, stderrs, counts
