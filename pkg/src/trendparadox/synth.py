"""Seedable generators of heterogeneous populations with known ground truth."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .dataset import Dataset, actor, covariate, outcome, timestamp
from .detector import Verdict
from .sessionize import SESSION_INDEX, SESSION_LENGTH, sessionize


class SynthError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """What the generator knows: the hidden subgroup of every row and the
    verdict a correct detector should reach for ``(x_name, z_name)``."""

    hidden_labels: np.ndarray
    x_name: str
    z_name: str
    expected_verdict: Verdict
    params: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "x_name": self.x_name,
            "z_name": self.z_name,
            "expected_verdict": self.expected_verdict.value,
            "params": self.params,
            "note": self.note,
            "hidden_labels": [str(v) for v in self.hidden_labels],
        }


def _ids(prefix: str, idx: np.ndarray, n: int) -> np.ndarray:
    width = len(str(max(n - 1, 0)))
    return np.char.add(prefix, np.char.zfill(idx.astype(str), width))


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _trend_verdict(aggregate_sign: int, within_signs) -> Verdict:
    within_signs = list(within_signs)
    if aggregate_sign == 0:
        return Verdict.NO_AGGREGATE_TREND
    if not within_signs:
        return Verdict.INSUFFICIENT_DATA
    if all(s == -aggregate_sign for s in within_signs):
        return Verdict.REVERSAL
    if all(s == 0 for s in within_signs):
        return Verdict.DISAPPEARANCE
    if all(s == aggregate_sign for s in within_signs):
        return Verdict.CONSISTENT
    return Verdict.MIXED


# -- admissions ----------------------------------------------------------------

DEFAULT_ADMISSIONS = {
    (1, "A"): (100, 30),
    (0, "A"): (5, 1),
    (1, "B"): (5, 4),
    (0, "B"): (100, 70),
}


def gen_admissions(counts: Mapping[tuple[int, str], tuple[int, int]] | None = None,
                   seed: int = 0) -> tuple[Dataset, GroundTruth]:
    """One row per applicant with exact cell frequencies.

    ``counts`` maps ``(group, department)`` to ``(applicants, accepted)``;
    group is the trend variable ``applicant_group`` (0/1). The seed only
    shuffles row order; timestamps are evenly spaced minutes.
    """
    counts = dict(DEFAULT_ADMISSIONS if counts is None else counts)
    if not counts:
        raise SynthError("counts must not be empty")
    groups, depts, admitted = [], [], []
    for (g, dept), (n, k) in sorted(counts.items(), key=lambda kv: (str(kv[0][1]), kv[0][0])):
        if g not in (0, 1):
            raise SynthError(f"group must be 0 or 1, got {g!r}")
        if n <= 0 or k < 0 or k > n:
            raise SynthError(f"infeasible cell {(g, dept)}: {k} accepted of {n} applicants")
        groups += [g] * n
        depts += [str(dept)] * n
        admitted += [1] * k + [0] * (n - k)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(groups))
    n = len(groups)
    schema = (actor("applicant"), timestamp("t"), covariate("applicant_group", "binary"),
              covariate("department", "categorical"), outcome("admitted", "binary"))
    data = Dataset(schema, {
        "applicant": np.array([f"a{i:05d}" for i in range(n)]),
        "t": np.arange(n, dtype=np.float64) * 60.0,
        "applicant_group": np.asarray(groups)[order],
        "department": np.asarray(depts)[order],
        "admitted": np.asarray(admitted)[order],
    })

    def rate_diff(cells):
        tot = {0: [0, 0], 1: [0, 0]}
        for (g, _), (cn, ck) in cells:
            tot[g][0] += cn
            tot[g][1] += ck
        if tot[0][0] == 0 or tot[1][0] == 0:
            return None
        return Fraction(tot[1][1], tot[1][0]) - Fraction(tot[0][1], tot[0][0])

    agg = rate_diff(counts.items())
    within = []
    for dept in sorted({str(d) for _, d in counts}):
        diff = rate_diff([c for c in counts.items() if str(c[0][1]) == dept])
        if diff is not None:
            within.append(_sign(diff))
    expected = Verdict.INSUFFICIENT_DATA if agg is None else _trend_verdict(_sign(agg), within)
    truth = GroundTruth(
        data["department"], "applicant_group", "department", expected,
        {"counts": {f"{g}|{d}": list(v) for (g, d), v in sorted(counts.items(), key=str)},
         "seed": seed},
        "department is both the hidden label and a declared covariate",
    )
    return data, truth


# -- survivor bias ---------------------------------------------------------------

def gen_survivor(n_actors: int = 10000, frac_incorrigible: float = 0.5,
                 p_reoffend: float = 0.9, p_reformed: float = 0.0, periods: int = 10,
                 seed: int = 0, expose_subgroup: bool = True) -> tuple[Dataset, GroundTruth]:
    """Recidivism-style population with two constant-rate subgroups.

    Every period each still-free actor emits a row (``period`` = 1, 2, ...)
    and reoffends with its subgroup's fixed probability; reoffenders leave.
    The aggregate rate falls only because incorrigibles are removed first.
    With ``expose_subgroup`` the hidden label is declared as covariate
    ``subgroup``; in real data it would be unobservable.
    """
    if periods < 2:
        raise SynthError(f"periods must be >= 2, got {periods}")
    if n_actors < 1:
        raise SynthError(f"n_actors must be >= 1, got {n_actors}")
    for name, p in (("frac_incorrigible", frac_incorrigible), ("p_reoffend", p_reoffend),
                    ("p_reformed", p_reformed)):
        if not 0.0 <= p <= 1.0:
            raise SynthError(f"{name} must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    incorrigible = rng.random(n_actors) < frac_incorrigible
    rate = np.where(incorrigible, p_reoffend, p_reformed)
    hits = rng.random((n_actors, periods)) < rate[:, None]
    emitted = np.where(hits.any(axis=1), hits.argmax(axis=1) + 1, periods)
    who = np.repeat(np.arange(n_actors), emitted)
    start = np.cumsum(emitted) - emitted
    period = np.arange(who.shape[0]) - np.repeat(start, emitted)
    y = hits[who, period].astype(np.int64)
    label = np.where(incorrigible[who], "incorrigible", "reformed")

    cols = {
        "person": _ids("p", who, n_actors),
        "t": (period * 30 * 86400).astype(np.float64),
        "period": period + 1,
        "reoffended": y,
    }
    schema = [actor("person"), timestamp("t"), covariate("period", "count")]
    if expose_subgroup:
        schema.append(covariate("subgroup", "categorical"))
        cols["subgroup"] = label
    schema.append(outcome("reoffended", "binary"))
    data = Dataset(tuple(schema), cols)

    present = [p for p, f in ((p_reoffend, frac_incorrigible), (p_reformed, 1 - frac_incorrigible))
               if f > 0]
    if all(p == 0.0 for p in present) or all(p == 1.0 for p in present):
        expected = Verdict.INSUFFICIENT_DATA
    elif len(present) == 1 or p_reoffend == p_reformed:
        expected = Verdict.NO_AGGREGATE_TREND
    else:
        expected = Verdict.DISAPPEARANCE
    truth = GroundTruth(
        label, "period", "subgroup", expected,
        {"n_actors": n_actors, "frac_incorrigible": frac_incorrigible,
         "p_reoffend": p_reoffend, "p_reformed": p_reformed, "periods": periods,
         "seed": seed, "expose_subgroup": expose_subgroup},
        "subgroup is unobservable in real recidivism data; exposed here as an oracle",
    )
    return data, truth


def surviving_incorrigible_share(frac: float, p_reoffend: float, p_reformed: float,
                                 period: int) -> float:
    """Expected incorrigible share among actors still free at ``period`` (1-based)."""
    a = frac * (1 - p_reoffend) ** (period - 1)
    b = (1 - frac) * (1 - p_reformed) ** (period - 1)
    return a / (a + b) if a + b > 0 else math.nan


# -- sessions ----------------------------------------------------------------------

def session_acceptance(base_intercept, base_per_len, decline, index, length):
    return base_intercept + base_per_len * length - decline * index


def expected_index_slope(max_len, base_intercept, base_per_len, decline) -> float:
    """Least-squares slope of expected acceptance on session index over all rows.

    Each (index, length) cell with index <= length carries equal expected row
    count when lengths are uniform, so the population trend is the
    equal-weight regression over those cells.
    """
    t, p = [], []
    for L in range(1, max_len + 1):
        for i in range(1, L + 1):
            t.append(i)
            p.append(session_acceptance(base_intercept, base_per_len, decline, i, L))
    t, p = np.asarray(t, float), np.asarray(p, float)
    dt = t - t.mean()
    return float(dt @ (p - p.mean()) / (dt @ dt))


def gen_sessions(n_actors: int = 10000, max_len: int = 5, base_intercept: float = 0.2,
                 base_per_len: float = 0.035, decline: float = 0.015, gap_minutes: float = 10.0,
                 seed: int = 0, sessions_per_actor: int = 20, timeout: float = 3600.0,
                 length_scope: str = "actor") -> tuple[Dataset, GroundTruth]:
    """Question-answering style activity where session length confounds position.

    Each actor draws a session length L uniform on 1..max_len and produces
    ``sessions_per_actor`` sessions of exactly L events. Event t of a session
    is accepted with probability ``base_intercept + base_per_len*L - decline*t``.
    Within-session gaps are whole seconds in [0.5, 1.5] x ``gap_minutes``;
    gaps between sessions are whole seconds in [1.5, 24] x ``timeout``. The
    returned data are already sessionized with ``timeout``.

    With ``length_scope="session"`` every session draws its own length, so
    actors are exchangeable and no actor-level trait links length to quality.
    """
    if length_scope not in ("actor", "session"):
        raise SynthError(f"length_scope must be 'actor' or 'session', got {length_scope!r}")
    if n_actors < 1 or max_len < 1 or sessions_per_actor < 1:
        raise SynthError("n_actors, max_len and sessions_per_actor must be >= 1")
    if not gap_minutes > 0 or 1.5 * gap_minutes * 60.0 > timeout:
        raise SynthError(f"gap_minutes must be positive with 1.5*gap_minutes*60 <= timeout ({timeout})")
    for L in range(1, max_len + 1):
        for i in range(1, L + 1):
            p = session_acceptance(base_intercept, base_per_len, decline, i, L)
            if not 0.0 < p < 1.0:
                raise SynthError(f"acceptance probability {p:.4g} at index {i}, length {L} "
                                 "is outside (0, 1)")
    rng = np.random.default_rng(seed)
    if length_scope == "actor":
        L = rng.integers(1, max_len + 1, n_actors)
        sess_len = np.repeat(L, sessions_per_actor)
    else:
        sess_len = rng.integers(1, max_len + 1, n_actors * sessions_per_actor)
    sess_start = np.cumsum(sess_len) - sess_len
    n_rows = int(sess_len.sum())
    who = np.repeat(np.arange(n_actors), sessions_per_actor)
    per = np.bincount(who, weights=sess_len, minlength=n_actors).astype(np.int64)
    who = np.repeat(who, sess_len)
    start = np.cumsum(per) - per
    Lr = np.repeat(sess_len, sess_len)
    index = np.arange(n_rows) - np.repeat(sess_start, sess_len) + 1
    p = session_acceptance(base_intercept, base_per_len, decline, index, Lr)
    y = (rng.random(n_rows) < p).astype(np.int64)
    short = np.rint(rng.uniform(0.5, 1.5, n_rows) * gap_minutes * 60.0)
    long = np.ceil(rng.uniform(1.5, 24.0, n_rows) * timeout)
    gap_after = np.where(index < Lr, short, long)
    offsets = rng.integers(0, 86400, n_actors).astype(np.float64)
    before = np.concatenate([[0.0], np.cumsum(gap_after)[:-1]])
    t = before - before[start][who] + offsets[who]

    hidden = "_length_trait"
    base = Dataset(
        (actor("user"), timestamp("t"), covariate(hidden, "count"), outcome("accepted", "binary")),
        {"user": _ids("u", who, n_actors), "t": t, hidden: Lr, "accepted": y},
    )
    data = sessionize(base, timeout).data
    labels = data[hidden].astype(str)
    data = data.drop([hidden])

    agg = expected_index_slope(max_len, base_intercept, base_per_len, decline)
    agg_sign = 0 if abs(agg) < 1e-12 else _sign(agg)
    within = [_sign(-decline)] * (max_len - 1)
    truth = GroundTruth(
        labels, SESSION_INDEX, SESSION_LENGTH,
        _trend_verdict(agg_sign, within),
        {"n_actors": n_actors, "max_len": max_len, "base_intercept": base_intercept,
         "base_per_len": base_per_len, "decline": decline, "gap_minutes": gap_minutes,
         "seed": seed, "sessions_per_actor": sessions_per_actor, "timeout": timeout,
         "length_scope": length_scope, "expected_aggregate_slope": agg},
        "hidden label is the generating session length",
    )
    return data, truth


GENERATORS = {
    "admissions": gen_admissions,
    "survivor": gen_survivor,
    "sessions": gen_sessions,
}
