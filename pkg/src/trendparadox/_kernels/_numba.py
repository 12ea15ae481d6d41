"""numba-compiled kernels; same signatures and results as ``_numpy``."""
import numpy as np
from numba import njit


@njit(cache=True)
def session_positions(new_actor, ts, timeout):
    n = ts.shape[0]
    session_id = np.empty(n, dtype=np.int64)
    session_index = np.empty(n, dtype=np.int64)
    session_length = np.empty(n, dtype=np.int64)
    sid = -1
    start = 0
    for i in range(n):
        if i == 0 or new_actor[i] or ts[i] - ts[i - 1] > timeout:
            if sid >= 0:
                for j in range(start, i):
                    session_length[j] = i - start
            sid += 1
            start = i
        session_id[i] = sid
        session_index[i] = i - start + 1
    for j in range(start, n):
        session_length[j] = n - start
    return session_id, session_index, session_length


@njit(cache=True)
def grouped_cumsum(first_values, increments, new_group):
    n = increments.shape[0]
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        if new_group[i]:
            out[i] = first_values[i]
        else:
            out[i] = out[i - 1] + increments[i]
    return out


@njit(cache=True)
def logistic_newton(z, y, b0, b1, max_iter, tol, guard):
    n = z.shape[0]
    status = 1
    it = 0
    for it in range(1, max_iter + 1):
        g0 = 0.0
        g1 = 0.0
        i00 = 0.0
        i01 = 0.0
        i11 = 0.0
        for k in range(n):
            p = 1.0 / (1.0 + np.exp(-(b0 + b1 * z[k])))
            w = p * (1.0 - p)
            r = y[k] - p
            g0 += r
            g1 += r * z[k]
            i00 += w
            i01 += w * z[k]
            i11 += w * z[k] * z[k]
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
    i00 = 0.0
    i01 = 0.0
    i11 = 0.0
    for k in range(n):
        p = 1.0 / (1.0 + np.exp(-(b0 + b1 * z[k])))
        w = p * (1.0 - p)
        i00 += w
        i01 += w * z[k]
        i11 += w * z[k] * z[k]
    return b0, b1, it, status, i00, i01, i11
