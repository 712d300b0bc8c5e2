"""Independent reference computations used by the test-suite.

None of these call into the package's numerical code paths.
"""

import itertools
import math

import numpy as np
import scipy.linalg


def vertex_enumeration(A, b, c, tol=1e-9):
    """Best basic feasible solution of ``min c^T x, Ax = b, x >= 0``.

    Returns ``(value, x)`` or ``(None, None)`` when no vertex is feasible.
    Assumes a bounded problem.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    c = np.asarray(c, float)
    m, n = A.shape
    best_value, best_x = None, None
    for cols in itertools.combinations(range(n), m):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.any(xb < -tol):
            continue
        x = np.zeros(n)
        x[list(cols)] = xb
        value = float(c @ x)
        if best_value is None or value < best_value:
            best_value, best_x = value, x
    return best_value, best_x


def inequality_vertex_enumeration(A, b, c, tol=1e-9):
    """Best vertex of ``min c^T x, Ax >= b, x >= 0`` by choosing ``n`` active rows."""
    A = np.asarray(A, float)
    m, n = A.shape
    G = np.vstack([A, np.eye(n)])
    h = np.concatenate([b, np.zeros(n)])
    best = None
    for rows in itertools.combinations(range(m + n), n):
        sub = G[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, h[list(rows)])
        if np.all(G @ x >= h - tol):
            value = float(c @ x)
            best = value if best is None else min(best, value)
    return best


def hsd_matrix(A, b, c, x0, s0, y0):
    """The embedded constraint matrix over ``(y, x, tau, theta, s, k)`` and its right-hand side.

    Written out from scratch so residuals can be checked with one mat-vec.
    """
    A = np.asarray(A, float)
    m, n = A.shape
    b_bar = b - A @ x0
    c_bar = c - A.T @ y0 - s0
    z_bar = c @ x0 + 1 - b @ y0
    gap0 = x0 @ s0 + 1
    size = m + 2 * n + 3
    K = np.zeros((m + n + 2, size))
    iy, ix, it, ith, is_, ik = 0, m, m + n, m + n + 1, m + n + 2, m + 2 * n + 2
    K[:m, ix:ix + n] = A
    K[:m, it] = -b
    K[:m, ith] = b_bar
    K[m:m + n, iy:iy + m] = -A.T
    K[m:m + n, it] = c
    K[m:m + n, ith] = -c_bar
    K[m:m + n, is_:is_ + n] = -np.eye(n)
    K[m + n, iy:iy + m] = b
    K[m + n, ix:ix + n] = -c
    K[m + n, ith] = z_bar
    K[m + n, ik] = -1
    K[m + n + 1, ix:ix + n] = s0
    K[m + n + 1, is_:is_ + n] = x0
    K[m + n + 1, it] = 1
    K[m + n + 1, ik] = 1
    K[m + n + 1, ith] = -gap0
    rhs = np.zeros(m + n + 2)
    rhs[-1] = gap0
    return K, rhs


def nullspace_projection(C, p0):
    """Closest point to ``p0`` in ``{p : C p = 0}`` via an SVD null-space basis."""
    N = scipy.linalg.null_space(np.asarray(C, float))
    return N @ (N.T @ p0)


def epsilon_prime_reference(x0, s0, x1, s1):
    """Loop-based evaluation of the corrector error threshold."""
    size = len(x0)
    dot = lambda u, v: sum(ui * vi for ui, vi in zip(u, v))
    num = (2 - math.sqrt(2)) / 8 * dot(x0, s0) / size
    a = sum((x1[i] * s0[i]) ** 2 for i in range(size)) - dot(x1, s0) ** 2 / size
    b = sum((x0[i] * s1[i]) ** 2 for i in range(size)) - dot(x0, s1) ** 2 / size
    den = math.sqrt(max(a, 0)) + math.sqrt(max(b, 0)) - (dot(x1, s0) + dot(x0, s1)) / (4 * size)
    return math.inf if den <= 0 else num / den


def merged_chisquare(counts, probs, min_expected=5.0):
    """Chi-square p-value after merging bins with small expected counts."""
    from scipy.stats import chisquare

    counts = np.asarray(counts, float)
    expected = np.asarray(probs, float) * counts.sum()
    order = np.argsort(expected)
    obs_bins, exp_bins = [], []
    acc_o = acc_e = 0.0
    for i in order:
        acc_o += counts[i]
        acc_e += expected[i]
        if acc_e >= min_expected:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_bins:
            obs_bins[-1] += acc_o
            exp_bins[-1] += acc_e
        else:
            obs_bins.append(acc_o)
            exp_bins.append(acc_e)
    if len(obs_bins) < 2:
        return 1.0
    return float(chisquare(obs_bins, exp_bins).pvalue)
