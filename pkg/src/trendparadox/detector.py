"""Search for Simpson's pairs: trends that reverse or vanish under disaggregation."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .trend import Binning, FitError, TrendFit, distinct_bins, fit_trend, quantile_bins

SIGNIFICANCE_RULE = (
    "subgroup slopes count as opposite/same only when p < alpha; "
    "a sign-coherent reversal (opposite-signed slope mass >= tau_reversal) "
    "also yields Reversal"
)
P_VALUE_NOTE = "raw two-sided normal-approximation p-values; no multiple-comparison correction"


class Verdict(str, Enum):
    REVERSAL = "Reversal"
    DISAPPEARANCE = "Disappearance"
    CONSISTENT = "Consistent"
    MIXED = "Mixed"
    NO_AGGREGATE_TREND = "NoAggregateTrend"
    INSUFFICIENT_DATA = "InsufficientData"

    def __str__(self):
        return self.value


PARADOX_VERDICTS = frozenset({Verdict.REVERSAL, Verdict.DISAPPEARANCE})


class DetectorError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    alpha: float = 0.05
    k_bins: int = 5
    min_subgroup_n: int = 30
    tau_reversal: float = 0.8
    tau_disappear: float = 0.8

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DetectorError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.k_bins < 1:
            raise DetectorError(f"k_bins must be >= 1, got {self.k_bins}")
        if self.min_subgroup_n < 1:
            raise DetectorError(f"min_subgroup_n must be >= 1, got {self.min_subgroup_n}")
        for name in ("tau_reversal", "tau_disappear"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise DetectorError(f"{name} must lie in (0, 1], got {v}")


@dataclass(frozen=True)
class Subgroup:
    label: str
    rows: np.ndarray


@dataclass(frozen=True)
class SkippedSubgroup:
    label: str
    n: int
    reason: str


@dataclass(frozen=True)
class Disaggregation:
    z_name: str
    method: str
    groups: list[Subgroup]
    skipped: list[SkippedSubgroup]


@dataclass(frozen=True)
class SubgroupTrend:
    bin_label: str
    n: int
    weight: float
    fit: TrendFit
    note: str = ""


@dataclass(frozen=True)
class SimpsonsPairReport:
    x_name: str
    z_name: str
    model: str
    aggregate: TrendFit | None
    subgroups: list[SubgroupTrend]
    skipped: list[SkippedSubgroup]
    opposite_mass: float
    insignificant_mass: float
    same_mass: float
    sign_opposite_mass: float
    verdict: Verdict
    score: float
    config: DetectorConfig
    disaggregation: str = ""
    diagnostic: str = ""
    significance_rule: str = field(default=SIGNIFICANCE_RULE)
    p_values: str = field(default=P_VALUE_NOTE)


def _covariate(d: Dataset, name: str):
    spec = d.spec(name)
    if spec.role != "covariate":
        raise DetectorError(f"{name!r} is a {spec.role}, not a covariate")
    return spec


def disaggregate(d: Dataset, z_name: str, config: DetectorConfig) -> Disaggregation:
    """Partition rows by ``z``.

    Categorical and binary z, and count z with at most ``k_bins`` distinct
    values, get one subgroup per value; anything else is split into
    ``k_bins`` quantile bins. Subgroups under ``min_subgroup_n`` rows are
    dropped into ``skipped``.
    """
    try:
        spec = _covariate(d, z_name)
    except KeyError:
        raise DetectorError(f"unknown variable {z_name!r}") from None
    values = d[z_name]
    if values.shape[0] == 0:
        raise DetectorError("zero qualifying subgroups: dataset is empty")
    binning: Binning
    if spec.kind in ("categorical", "binary"):
        binning = distinct_bins(values)
    elif spec.kind == "count" and np.unique(values).shape[0] <= config.k_bins:
        binning = distinct_bins(values)
    else:
        binning = quantile_bins(values, config.k_bins)
    order = np.argsort(binning.assignment, kind="stable")
    counts = binning.counts()
    bounds = np.concatenate([[0], np.cumsum(counts)])
    groups, skipped = [], []
    for b, label in enumerate(binning.labels):
        n = int(counts[b])
        if n < config.min_subgroup_n:
            skipped.append(SkippedSubgroup(label, n, f"n < min_subgroup_n ({config.min_subgroup_n})"))
            continue
        groups.append(Subgroup(label, order[bounds[b]:bounds[b + 1]]))
    if not groups:
        raise DetectorError(
            f"zero qualifying subgroups for {z_name!r} (all smaller than {config.min_subgroup_n})"
        )
    return Disaggregation(z_name, binning.method, groups, skipped)


def _flat_fit(model: str, y: np.ndarray) -> TrendFit:
    # constant outcome inside a subgroup: a perfectly flat trend
    level = float(y[0])
    if model == "logistic":
        intercept = math.inf if level == 1.0 else -math.inf
        return TrendFit(model, 0.0, intercept, math.inf, 0.0, 1.0, int(y.shape[0]), converged=False)
    return TrendFit(model, 0.0, level, 0.0, 0.0, 1.0, int(y.shape[0]))


def _insufficient(x_name, z_name, model, config, diagnostic, aggregate=None, skipped=()):
    return SimpsonsPairReport(
        x_name, z_name, model, aggregate, [], list(skipped), 0.0, 0.0, 0.0, 0.0,
        Verdict.INSUFFICIENT_DATA, 0.0, config, diagnostic=diagnostic,
    )


def classify(aggregate: TrendFit, subgroups: Sequence[SubgroupTrend], config: DetectorConfig):
    """Return ``(verdict, score, masses)`` for an aggregate fit and its subgroup fits."""
    agg_sign = aggregate.sign
    opposite = insignificant = same = sign_opposite = 0.0
    for sg in subgroups:
        sign = sg.fit.sign
        if sg.fit.p_value >= config.alpha:
            insignificant += sg.weight
        elif sign == -agg_sign:
            opposite += sg.weight
        else:
            same += sg.weight
        if sign != 0 and sign == -agg_sign:
            sign_opposite += sg.weight
    masses = dict(opposite_mass=opposite, insignificant_mass=insignificant,
                  same_mass=same, sign_opposite_mass=sign_opposite)
    if aggregate.p_value >= config.alpha or agg_sign == 0:
        return Verdict.NO_AGGREGATE_TREND, 0.0, masses
    score = opposite + 0.5 * insignificant
    if opposite >= config.tau_reversal or sign_opposite >= config.tau_reversal:
        verdict = Verdict.REVERSAL
    elif insignificant >= config.tau_disappear:
        verdict = Verdict.DISAPPEARANCE
    elif same >= config.tau_reversal:
        verdict = Verdict.CONSISTENT
    else:
        verdict = Verdict.MIXED
    return verdict, score, masses


def analyze_pair(d: Dataset, x_name: str, z_name: str,
                 config: DetectorConfig | None = None) -> SimpsonsPairReport:
    """Compare the outcome-vs-x trend on all rows with its trend inside each z subgroup."""
    config = config or DetectorConfig()
    if x_name == z_name:
        raise DetectorError("x and z must be distinct variables")
    out_spec = d.outcome_spec
    if out_spec is None:
        raise DetectorError("dataset has no outcome variable")
    for name in (x_name, z_name):
        try:
            _covariate(d, name)
        except KeyError:
            raise DetectorError(f"unknown variable {name!r}") from None
    if not d.spec(x_name).numeric:
        raise DetectorError(f"trend variable {x_name!r} must be numeric")
    model = "logistic" if out_spec.kind == "binary" else "linear"
    x = d[x_name].astype(np.float64)
    y = d[out_spec.name].astype(np.float64)

    try:
        aggregate = fit_trend(x, y, out_spec.kind)
    except FitError as exc:
        return _insufficient(x_name, z_name, model, config, f"aggregate fit: {exc}")
    try:
        parts = disaggregate(d, z_name, config)
    except DetectorError as exc:
        return _insufficient(x_name, z_name, model, config, str(exc), aggregate)

    skipped = list(parts.skipped)
    fitted = []
    for g in parts.groups:
        xs, ys = x[g.rows], y[g.rows]
        try:
            fit, note = fit_trend(xs, ys, out_spec.kind), ""
        except FitError as exc:
            if exc.reason == "one_class":
                fit, note = _flat_fit(model, ys), "constant outcome"
            else:
                skipped.append(SkippedSubgroup(g.label, int(g.rows.shape[0]), str(exc)))
                continue
        fitted.append((g.label, int(g.rows.shape[0]), fit, note))
    if not fitted:
        return _insufficient(x_name, z_name, model, config,
                             "no subgroup admits a trend fit", aggregate, skipped)
    total = sum(n for _, n, _, _ in fitted)
    subgroups = [SubgroupTrend(label, n, n / total, fit, note) for label, n, fit, note in fitted]
    verdict, score, masses = classify(aggregate, subgroups, config)
    return SimpsonsPairReport(
        x_name, z_name, model, aggregate, subgroups, skipped,
        verdict=verdict, score=score, config=config,
        disaggregation=parts.method, **masses,
    )


def scan(d: Dataset, x_candidates: Sequence[str], z_candidates: Sequence[str],
         config: DetectorConfig | None = None, workers: int = 1) -> list[SimpsonsPairReport]:
    """Analyse every ordered pair (x, z) with x != z.

    Reports are sorted by descending score, then by (x_name, z_name); the
    order does not depend on ``workers``.
    """
    config = config or DetectorConfig()
    if not x_candidates or not z_candidates:
        raise DetectorError("candidate lists must be non-empty")
    pairs = [(x, z) for x in dict.fromkeys(x_candidates)
             for z in dict.fromkeys(z_candidates) if x != z]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            reports = list(pool.map(lambda p: analyze_pair(d, p[0], p[1], config), pairs))
    else:
        reports = [analyze_pair(d, x, z, config) for x, z in pairs]
    reports.sort(key=lambda r: (-r.score, r.x_name, r.z_name))
    return reports
