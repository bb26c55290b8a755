"""Pure-Python (numpy/scipy) implementations of the numerical kernels.

Used when the compiled extension is unavailable or ``BATWB_PURE_PYTHON=1``.
"""

import numpy as np
from scipy.linalg import solve_banded


def tridiag_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system.

    ``lower[0]`` and ``upper[-1]`` are ignored.
    """
    n = len(diag)
    if n == 0:
        return np.empty(0)
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return solve_banded((1, 1), ab, np.asarray(rhs, dtype=float),
                        check_finite=False)


def implicit_diffusion(c, cap, cond, src, dt, g_left=0.0, c_left=0.0):
    """One backward-Euler step of a conservative 1-D diffusion balance.

    ``cap[i] * dc_i/dt = sum_faces cond * (c_j - c_i) + src[i]``, with an
    optional conductance ``g_left`` from node 0 to a fixed value ``c_left``.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    ab = np.zeros((3, n))
    diag = cap / dt
    diag[:-1] += cond
    diag[1:] += cond
    diag[0] += g_left
    ab[0, 1:] = -cond
    ab[1] = diag
    ab[2, :-1] = -cond
    rhs = cap * c / dt + src
    rhs[0] += g_left * c_left
    return solve_banded((1, 1), ab, rhs, check_finite=False)


def best_split(x, y, min_leaf):
    """Best variance-reduction split of presorted ``(x, y)``.

    Returns ``(score, pos)`` with left child ``[:pos]``; score is
    ``S_l**2/n_l + S_r**2/n_r`` (larger is better). ``pos == -1`` when no
    admissible split exists.
    """
    n = len(x)
    min_leaf = max(int(min_leaf), 1)
    if n < 2:
        return -np.inf, -1
    csum = np.cumsum(y)
    total = csum[-1]
    i = np.arange(1, n)
    left = csum[:-1]
    right = total - left
    score = left * left / i + right * right / (n - i)
    ok = (i >= min_leaf) & (n - i >= min_leaf) & (x[:-1] < x[1:])
    if not ok.any():
        return -np.inf, -1
    score = np.where(ok, score, -np.inf)
    k = int(np.argmax(score))
    return float(score[k]), int(i[k])
