"""Independent reference computations used by the tests.

None of these import the package; they recompute results by other means
(exact rational arithmetic, brute-force grids, direct loops).
"""
from fractions import Fraction

import numpy as np

GRID = np.linspace(-10.0, 10.0, 201)
GRID_STEP = GRID[1] - GRID[0]


def ols_exact(xs, ys):
    """Slope and intercept of least squares in exact rational arithmetic."""
    x = [Fraction(float(v)) for v in xs]
    y = [Fraction(float(v)) for v in ys]
    n = len(x)
    xm, ym = sum(x) / n, sum(y) / n
    sxx = sum((a - xm) ** 2 for a in x)
    sxy = sum((a - xm) * (b - ym) for a, b in zip(x, y))
    slope = sxy / sxx
    return slope, ym - slope * xm


def loglik(b0, b1, xs, ys):
    b0 = np.asarray(b0, float)[..., None]
    b1 = np.asarray(b1, float)[..., None]
    eta = b0 + b1 * np.asarray(xs, float)
    return np.sum(ys * eta - np.logaddexp(0.0, eta), axis=-1)


def logistic_grid(xs, ys):
    """Best (b0, b1) on the 201 x 201 grid over [-10, 10]^2 and its log-likelihood."""
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    ll = loglik(GRID[:, None], GRID[None, :], xs, ys)
    i, j = np.unravel_index(np.argmax(ll), ll.shape)
    return GRID[i], GRID[j], ll[i, j]


def sessions_by_loop(actors, times, timeout):
    """(session_index, session_length) per row via a plain loop over sorted rows."""
    order = sorted(range(len(actors)), key=lambda i: (actors[i], times[i]))
    index = [0] * len(actors)
    groups = []
    prev = None
    for i in order:
        if prev is None or actors[i] != actors[prev] or times[i] - times[prev] > timeout:
            groups.append([])
        groups[-1].append(i)
        prev = i
    length = [0] * len(actors)
    for g in groups:
        for k, i in enumerate(g, start=1):
            index[i] = k
            length[i] = len(g)
    return index, length, groups
