"""Randomisation strategies and the replicate-based shuffle test.

Every strategy is a pure function of ``(data, seed)``. Permutations are drawn
by giving each row an independent uniform key from ``numpy.random.Generator``
(PCG64) and sorting rows by key within their group; this yields a uniformly
random permutation of each group. Replicate ``r`` of a test seeded with ``s``
draws from ``SeedSequence([s, r])``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from . import _kernels
from .dataset import Dataset, DatasetError, actor_order
from .detector import DetectorConfig, SimpsonsPairReport, Verdict, analyze_pair
from .sessionize import (
    DEFAULT_TIMEOUT,
    SESSION_COLUMNS,
    SESSION_ID,
    SessionizedDataset,
    is_session_feature,
    sessionize,
)

PI_PERSIST = 0.9
PI_DISAPPEAR = 0.8


class ShuffleError(ValueError):
    pass


@dataclass(frozen=True)
class IntervalShuffle:
    name = "intervals"


@dataclass(frozen=True)
class WithinSessionShuffle:
    name = "within-session"


@dataclass(frozen=True)
class AttributeShuffle:
    attribute: str
    scope: str = "global"
    name = "attribute"

    def __post_init__(self):
        if self.scope not in ("global", "per_actor"):
            raise ShuffleError(f"scope must be 'global' or 'per_actor', got {self.scope!r}")


ShuffleStrategy = Union[IntervalShuffle, WithinSessionShuffle, AttributeShuffle]


def parse_strategy(text: str) -> ShuffleStrategy:
    """Parse ``intervals``, ``within-session`` or ``attribute:<col>[:per-actor]``."""
    if text == "intervals":
        return IntervalShuffle()
    if text == "within-session":
        return WithinSessionShuffle()
    if text.startswith("attribute:"):
        parts = text.split(":")
        if len(parts) == 2 and parts[1]:
            return AttributeShuffle(parts[1])
        if len(parts) == 3 and parts[1] and parts[2] in ("per-actor", "per_actor", "global"):
            return AttributeShuffle(parts[1], parts[2].replace("-", "_"))
    raise ShuffleError(f"unrecognised strategy {text!r}")


def strategy_label(s: ShuffleStrategy) -> str:
    if isinstance(s, AttributeShuffle):
        return f"attribute:{s.attribute}:{s.scope}"
    return s.name


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if int(seed) < 0:
        raise ShuffleError(f"seed must be non-negative, got {seed}")
    return np.random.default_rng(int(seed))


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(r)])))


def grouped_permutation(group: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Permutation mapping each position to a random source row of the same group.

    ``group`` must be sorted (contiguous groups). ``out[i]`` is the row whose
    value moves to position i.
    """
    keys = rng.random(group.shape[0])
    # same result as np.lexsort((keys, group)); two stable passes are faster
    by_key = np.argsort(keys, kind="stable")
    return by_key[np.argsort(group[by_key], kind="stable")]


def shuffle_intervals(d: Dataset, seed) -> Dataset:
    """Permute each actor's inter-event gaps and rebuild its timestamps.

    Each actor keeps its first timestamp and its event order; only the time
    column changes, and rows stay where they were in ``d``.
    """
    d.require_roles("actor", "timestamp")
    rng = _rng(seed)
    order = actor_order(d)
    ids = d[d.actor_spec.name][order]
    ts = d[d.time_spec.name][order]
    n = ts.shape[0]
    if n == 0:
        return d
    new_actor = np.ones(n, dtype=bool)
    new_actor[1:] = ids[1:] != ids[:-1]
    gaps = np.zeros(n)
    gaps[1:] = np.diff(ts)
    inner = np.flatnonzero(~new_actor)
    group = np.cumsum(new_actor)[inner]
    perm = grouped_permutation(group, rng)
    shuffled = gaps.copy()
    shuffled[inner] = gaps[inner[perm]]
    rebuilt = _kernels.grouped_cumsum(ts, shuffled, new_actor)
    out = np.empty(n)
    out[order] = rebuilt
    return d.replace_columns({d.time_spec.name: out})


def _attribute_columns(d: Dataset) -> list[str]:
    return [v.name for v in d.schema
            if v.role in ("covariate", "outcome") and v.name not in SESSION_COLUMNS]


def shuffle_within_sessions(sd: SessionizedDataset, seed) -> Dataset:
    """Permute the covariate+outcome tuples among the rows of each session.

    Timestamps, actors and the session columns stay fixed.
    """
    if not isinstance(sd, SessionizedDataset):
        raise ShuffleError("within-session shuffle needs sessionized data")
    rng = _rng(seed)
    d = sd.data
    perm = grouped_permutation(d[SESSION_ID], rng)
    return d.replace_columns({name: d[name][perm] for name in _attribute_columns(d)})


def shuffle_attribute(d: Dataset, attribute: str, scope: str = "global", seed=0) -> Dataset:
    """Permute one covariate column, over all rows or within each actor's rows."""
    try:
        spec = d.spec(attribute)
    except KeyError:
        raise ShuffleError(f"unknown attribute {attribute!r}") from None
    if spec.role != "covariate":
        raise ShuffleError(f"{attribute!r} is a {spec.role}, not a covariate")
    rng = _rng(seed)
    values = d[attribute]
    if scope == "global":
        return d.replace_columns({attribute: values[rng.permutation(values.shape[0])]})
    if scope != "per_actor":
        raise ShuffleError(f"scope must be 'global' or 'per_actor', got {scope!r}")
    d.require_roles("actor")
    _, codes = np.unique(d[d.actor_spec.name], return_inverse=True)
    codes = codes.ravel()
    by_actor = np.argsort(codes, kind="stable")
    perm = grouped_permutation(codes[by_actor], rng)
    out = values.copy()
    out[by_actor] = values[by_actor[perm]]
    return d.replace_columns({attribute: out})


# -- shuffle test ------------------------------------------------------------

class ShuffleVerdict(str, Enum):
    PARADOX_INDICATED = "ParadoxIndicated"
    NOT_INDICATED = "NotIndicated"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ReplicateSummary:
    replicate: int
    aggregate_slope: float | None
    aggregate_p: float | None
    persists: bool
    insignificant_mass: float | None
    opposite_mass: float | None
    verdict: Verdict


@dataclass(frozen=True)
class ShuffleReport:
    strategy: ShuffleStrategy
    replicates: int
    seed: int
    original: SimpsonsPairReport
    aggregate_persistence: float
    mean_disappearance_mass: float
    per_replicate: list[ReplicateSummary]
    verdict: ShuffleVerdict
    pi_persist: float = PI_PERSIST
    pi_disappear: float = PI_DISAPPEAR
    timeout: float | None = None
    resessionized: bool = field(default=False)


def shuffle_verdict(persistence: float, disappearance: float,
                    pi_persist: float = PI_PERSIST, pi_disappear: float = PI_DISAPPEAR):
    """Rule of thumb: a paradox is indicated when the aggregate trend survives
    shuffling while the disaggregated trends vanish. A trend the shuffle kills
    in aggregate is not indicated; persistence without disappearance is
    inconclusive.
    """
    persists = persistence >= pi_persist
    disappears = disappearance >= pi_disappear
    if persists and disappears:
        return ShuffleVerdict.PARADOX_INDICATED
    if not persists:
        return ShuffleVerdict.NOT_INDICATED
    return ShuffleVerdict.INCONCLUSIVE


def _prepare(d: Dataset, x_name: str, z_name: str, strategy: ShuffleStrategy, timeout: float):
    needs_sessions = (is_session_feature(x_name) or is_session_feature(z_name)
                      or isinstance(strategy, WithinSessionShuffle))
    if isinstance(strategy, (IntervalShuffle, WithinSessionShuffle)):
        try:
            d.require_roles("actor", "timestamp")
        except DatasetError as exc:
            raise ShuffleError(f"{strategy.name} shuffle: {exc}") from None
    if isinstance(strategy, AttributeShuffle):
        if strategy.attribute not in d and not is_session_feature(strategy.attribute):
            raise ShuffleError(f"unknown attribute {strategy.attribute!r}")
        if strategy.scope == "per_actor" and d.actor_spec is None:
            raise ShuffleError("per-actor attribute shuffle needs an actor variable")
        if is_session_feature(strategy.attribute):
            needs_sessions = True
    if needs_sessions:
        return sessionize(d, timeout)
    return d


def _apply(strategy: ShuffleStrategy, data, rng, timeout):
    if isinstance(strategy, IntervalShuffle):
        base = data.data if isinstance(data, SessionizedDataset) else data
        shuffled = shuffle_intervals(base, rng)
        if isinstance(data, SessionizedDataset):
            return sessionize(shuffled, timeout).data
        return shuffled
    if isinstance(strategy, WithinSessionShuffle):
        return shuffle_within_sessions(data, rng)
    base = data.data if isinstance(data, SessionizedDataset) else data
    return shuffle_attribute(base, strategy.attribute, strategy.scope, rng)


def shuffle_test(d: Dataset, x_name: str, z_name: str, strategy: ShuffleStrategy,
                 replicates: int, seed: int, config: DetectorConfig | None = None,
                 timeout: float = DEFAULT_TIMEOUT, pi_persist: float = PI_PERSIST,
                 pi_disappear: float = PI_DISAPPEAR) -> ShuffleReport:
    """Re-run :func:`analyze_pair` on ``replicates`` randomised copies of ``d``.

    Data are sessionized first when x or z is a session feature, and again
    after every interval shuffle since moved gaps redraw session boundaries.
    """
    config = config or DetectorConfig()
    if int(replicates) < 1:
        raise ShuffleError(f"replicates must be >= 1, got {replicates}")
    if int(seed) < 0:
        raise ShuffleError(f"seed must be non-negative, got {seed}")
    data = _prepare(d, x_name, z_name, strategy, timeout)
    frame = data.data if isinstance(data, SessionizedDataset) else data
    original = analyze_pair(frame, x_name, z_name, config)
    if original.verdict is Verdict.INSUFFICIENT_DATA:
        raise ShuffleError(f"pair ({x_name}, {z_name}) is not analyzable: {original.diagnostic}")
    orig_sign = original.aggregate.sign

    summaries = []
    for r in range(int(replicates)):
        shuffled = _apply(strategy, data, replicate_rng(seed, r), timeout)
        rep = analyze_pair(shuffled, x_name, z_name, config)
        agg = rep.aggregate
        persists = bool(agg is not None and agg.p_value < config.alpha and agg.sign == orig_sign)
        has_groups = bool(rep.subgroups)
        summaries.append(ReplicateSummary(
            r,
            None if agg is None else agg.slope,
            None if agg is None else agg.p_value,
            persists,
            rep.insignificant_mass if has_groups else None,
            rep.opposite_mass if has_groups else None,
            rep.verdict,
        ))
    persistence = sum(s.persists for s in summaries) / len(summaries)
    masses = [s.insignificant_mass for s in summaries if s.insignificant_mass is not None]
    disappearance = float(np.mean(masses)) if masses else 0.0
    return ShuffleReport(
        strategy, int(replicates), int(seed), original, persistence, disappearance, summaries,
        shuffle_verdict(persistence, disappearance, pi_persist, pi_disappear),
        pi_persist, pi_disappear,
        timeout if isinstance(data, SessionizedDataset) else None,
        isinstance(strategy, IntervalShuffle) and isinstance(data, SessionizedDataset),
    )


__all__ = [
    "AttributeShuffle", "IntervalShuffle", "WithinSessionShuffle", "ShuffleStrategy",
    "ShuffleReport", "ShuffleVerdict", "ReplicateSummary", "ShuffleError",
    "parse_strategy", "shuffle_intervals", "shuffle_within_sessions", "shuffle_attribute",
    "shuffle_test", "shuffle_verdict", "replicate_rng", "grouped_permutation",
]
