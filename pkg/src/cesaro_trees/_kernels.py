"""Linear-time sweeps over BFS-ordered parent arrays.

BFS order is a topological order (parents precede children), so one forward
sweep propagates ancestor sums downward and one reverse sweep accumulates
descendant sums upward.  Each vertex sums in a fixed order, which keeps the
results bitwise reproducible.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def ancestor_mean(parent, depth, f, out):
    """out(v) = (1/(dep v + 1)) * sum_j f(par^j v); returns the ancestor sums S."""
    n = out.shape[0]
    S = np.empty(n, dtype=out.dtype)
    for v in range(n):
        p = parent[v]
        s = f[v]
        if p >= 0:
            s = s + S[p]
        S[v] = s
        out[v] = s / (depth[v] + 1)
    return S


@njit(cache=True)
def descendant_sum(parent, depth, g, out):
    """out(u) = sum over descendants-or-self v of g(v)/(dep v + 1)."""
    n = out.shape[0]
    for v in range(n):
        out[v] = g[v] / (depth[v] + 1)
    for v in range(n - 1, 0, -1):
        out[parent[v]] += out[v]


@njit(cache=True)
def shifted_lower_solve(parent, depth, b, lam, out):
    """Solve (C - lam) x = b by forward substitution."""
    n = out.shape[0]
    S = np.empty(n, dtype=out.dtype)
    for v in range(n):
        p = parent[v]
        w = 1.0 / (depth[v] + 1)
        sp = 0.0j
        if p >= 0:
            sp = S[p]
        x = (b[v] - sp * w) / (w - lam)
        out[v] = x
        S[v] = x + sp


@njit(cache=True)
def shifted_upper_solve(parent, depth, b, mu, out):
    """Solve (C* - mu) y = b by backward substitution."""
    n = out.shape[0]
    acc = np.zeros(n, dtype=out.dtype)
    for v in range(n - 1, -1, -1):
        w = 1.0 / (depth[v] + 1)
        y = (b[v] - acc[v]) / (w - mu)
        out[v] = y
        p = parent[v]
        if p >= 0:
            acc[p] += y * w + acc[v]
