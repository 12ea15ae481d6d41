"""Pure-numpy kernels. Reference twins of the numba versions in ``_numba``."""
import numpy as np


def session_positions(new_actor, ts, timeout):
    """Split rows (already sorted by actor, then time) into sessions.

    ``new_actor[i]`` is true where row i starts a new actor block. Returns
    ``(session_id, session_index, session_length)`` as int64 arrays; ids are
    0-based and ascend in row order, indices are 1-based.
    """
    n = ts.shape[0]
    if n == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    starts = new_actor.copy()
    starts[0] = True
    starts[1:] |= np.diff(ts) > timeout
    session_id = np.cumsum(starts, dtype=np.int64) - 1
    first = np.flatnonzero(starts)
    lengths = np.diff(np.append(first, n))
    session_index = np.arange(n, dtype=np.int64) - first[session_id] + 1
    return session_id, session_index, lengths[session_id].astype(np.int64)


def grouped_cumsum(first_values, increments, new_group):
    """Running sum that restarts at every ``new_group`` row.

    At a group's first row the output is ``first_values[i]``; later rows add
    ``increments[i]`` to the previous output. Sweeps by position within group
    so every addition happens in the same order as a sequential loop.
    """
    n = increments.shape[0]
    out = np.zeros(n, dtype=np.float64)
    if n == 0:
        return out
    starts = np.flatnonzero(new_group)
    group = np.cumsum(new_group) - 1
    pos = np.arange(n) - starts[group]
    out[starts] = first_values[starts]
    order = np.argsort(pos, kind="stable")
    counts = np.bincount(pos)
    bounds = np.cumsum(counts)
    for k in range(1, counts.shape[0]):
        rows = order[bounds[k - 1]:bounds[k]]
        out[rows] = out[rows - 1] + increments[rows]
    return out


def logistic_newton(z, y, b0, b1, max_iter, tol, guard):
    """Newton iterations for a two-parameter logistic fit on standardised ``z``.

    Returns ``(b0, b1, iterations, status, info00, info01, info11)`` where
    status is 0 converged, 1 hit max_iter, 2 slope beyond ``guard``, 3 singular
    information. The info entries are the observed information at the final
    parameters.
    """
    status = 1
    it = 0
    i00 = i01 = i11 = 0.0
    for it in range(1, max_iter + 1):
        eta = b0 + b1 * z
        p = 1.0 / (1.0 + np.exp(-eta))
        w = p * (1.0 - p)
        r = y - p
        g0 = r.sum()
        g1 = (r * z).sum()
        i00 = w.sum()
        i01 = (w * z).sum()
        i11 = (w * z * z).sum()
        det = i00 * i11 - i01 * i01
        if not det > 1e-300:
            status = 3
            break
        s0 = (i11 * g0 - i01 * g1) / det
        s1 = (i00 * g1 - i01 * g0) / det
        b0 += s0
        b1 += s1
        if abs(b1) > guard:
            status = 2
            break
        if np.sqrt(s0 * s0 + s1 * s1) < tol:
            status = 0
            break
    eta = b0 + b1 * z
    p = 1.0 / (1.0 + np.exp(-eta))
    w = p * (1.0 - p)
    i00 = w.sum()
    i01 = (w * z).sum()
    i11 = (w * z * z).sum()
    return b0, b1, it, status, i00, i01, i11
