"""Two-parameter trend fits (linear and logistic) and covariate binning."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels

SEPARATION_GUARD = 30.0
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-8

# RSS below this fraction of the total sum of squares counts as an exact fit
_EXACT_FIT_RTOL = 1e-28


class FitError(ValueError):
    """A fit precondition failed. ``reason`` is a short machine-readable tag."""

    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class TrendFit:
    model: str
    slope: float
    intercept: float
    slope_stderr: float
    statistic: float
    p_value: float
    n: int
    converged: bool = True
    iterations: int = 0

    @property
    def sign(self) -> int:
        return int(np.sign(self.slope))

    def significant(self, alpha: float) -> bool:
        return self.p_value < alpha


def two_sided_p(statistic: float) -> float:
    """Two-sided p-value of a standard-normal statistic."""
    if math.isnan(statistic):
        return 1.0
    return math.erfc(abs(statistic) / math.sqrt(2.0))


def _check_xy(xs, ys):
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise FitError("shape", f"xs and ys must be 1-d of equal length, got {x.shape} and {y.shape}")
    if x.shape[0] < 3:
        raise FitError("too_few", f"need at least 3 observations, got {x.shape[0]}")
    if np.all(x == x[0]):
        raise FitError("constant_x", "xs has zero variance; no trend is defined")
    return x, y


def fit_linear(xs, ys) -> TrendFit:
    """Ordinary least squares ``y ~ slope*x + intercept`` with a Wald test."""
    x, y = _check_xy(xs, ys)
    n = x.shape[0]
    xm = float(x.mean())
    dx = x - xm
    sxx = float(dx @ dx)
    if np.all(y == y[0]):
        return TrendFit("linear", 0.0, float(y[0]), 0.0, 0.0, 1.0, n)
    ym = float(y.mean())
    dy = y - ym
    slope = float(dx @ dy) / sxx
    intercept = float(ym - slope * xm)
    resid = dy - slope * dx
    rss = float(resid @ resid)
    syy = float(dy @ dy)
    if rss <= _EXACT_FIT_RTOL * syy:
        stat = math.copysign(math.inf, slope) if slope != 0.0 else 0.0
        return TrendFit("linear", slope, intercept, 0.0, stat, 0.0 if slope else 1.0, n)
    se = math.sqrt(rss / (n - 2) / sxx)
    stat = slope / se
    return TrendFit("linear", slope, intercept, se, stat, two_sided_p(stat), n)


def fit_logistic(xs, ys, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> TrendFit:
    """Maximum-likelihood ``logit P(y=1) = intercept + slope*x`` by Newton's method.

    Iterates on standardised x and maps back. Stops when the step norm drops
    below ``tol``. Separation shows up as ``converged=False`` with the slope
    left where the guard tripped.
    """
    x, y = _check_xy(xs, ys)
    if not np.all((y == 0) | (y == 1)):
        raise FitError("non_binary", "logistic outcome must be 0/1")
    n = x.shape[0]
    ybar = y.mean()
    if ybar == 0.0 or ybar == 1.0:
        raise FitError("one_class", "logistic fit needs both outcome classes")
    m = x.mean()
    s = x.std()
    z = (x - m) / s
    # the slope guard applies in raw units; on standardised x it also caps at
    # the same logit scale so large-scale covariates cannot run forever
    guard = SEPARATION_GUARD * min(s, 1.0)
    b0, b1, it, status, i00, i01, i11 = _kernels.logistic_newton(
        np.ascontiguousarray(z), np.ascontiguousarray(y),
        math.log(ybar / (1.0 - ybar)), 0.0, int(max_iter), float(tol), float(guard),
    )
    slope = float(b1 / s)
    intercept = float(b0 - b1 * m / s)
    det = i00 * i11 - i01 * i01
    if det > 1e-300 and i00 > 0:
        se = float(math.sqrt(i00 / det) / s)
    else:
        se = math.inf
    stat = slope / se if se > 0 else 0.0
    return TrendFit("logistic", slope, intercept, se, stat, two_sided_p(stat), n,
                    converged=status == 0, iterations=int(it))


def fit_trend(xs, ys, outcome_kind: str, **kw) -> TrendFit:
    """Logistic for binary outcomes, linear otherwise."""
    if outcome_kind == "binary":
        return fit_logistic(xs, ys, **kw)
    return fit_linear(xs, ys)


# -- binning ---------------------------------------------------------------

@dataclass(frozen=True)
class Binning:
    method: str
    k_requested: int
    edges: tuple[float, ...]
    labels: tuple[str, ...]
    assignment: np.ndarray

    @property
    def k_effective(self) -> int:
        return len(self.labels)

    def members(self, b: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == b)

    def counts(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.k_effective)


def _num(v: float) -> str:
    return format(float(v), ".12g")


def _interval_binning(method, k, values, edges) -> Binning:
    edges = np.unique(edges)
    if edges.shape[0] == 1:
        labels = (f"[{_num(edges[0])}, {_num(edges[0])}]",)
        return Binning(method, k, tuple(map(float, edges)), labels,
                       np.zeros(values.shape[0], dtype=np.int64))
    inner = edges[1:-1]
    assignment = np.searchsorted(inner, values, side="right").astype(np.int64)
    labels = []
    for i in range(edges.shape[0] - 1):
        close = "]" if i == edges.shape[0] - 2 else ")"
        labels.append(f"[{_num(edges[i])}, {_num(edges[i + 1])}{close}")
    return Binning(method, k, tuple(map(float, edges)), tuple(labels), assignment)


def _check_bins(values, k):
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("cannot bin an empty sequence")
    return v


def quantile_bins(values, k: int) -> Binning:
    """Bins bounded by the i/k empirical quantiles (linear interpolation).

    Bins are left-closed except the last. Coincident edges merge, so heavy
    ties yield fewer than ``k`` bins.
    """
    v = _check_bins(values, k)
    edges = np.quantile(v, np.linspace(0.0, 1.0, k + 1))
    return _interval_binning("quantile", k, v, edges)


def equal_width_bins(values, k: int) -> Binning:
    v = _check_bins(values, k)
    edges = np.linspace(v.min(), v.max(), k + 1)
    return _interval_binning("equal_width", k, v, edges)


def distinct_bins(values) -> Binning:
    """One bin per distinct value, ordered ascending (numeric or lexicographic)."""
    v = np.asarray(values)
    if v.size == 0:
        raise ValueError("cannot bin an empty sequence")
    uniq, assignment = np.unique(v, return_inverse=True)
    if v.dtype.kind in "iub":
        labels = tuple(str(int(u)) for u in uniq)
        edges = tuple(float(u) for u in uniq)
    elif v.dtype.kind == "f":
        labels = tuple(_num(u) for u in uniq)
        edges = tuple(float(u) for u in uniq)
    else:
        labels = tuple(str(u) for u in uniq)
        edges = ()
    return Binning("distinct", len(labels), edges, labels,
                   assignment.astype(np.int64).ravel())
