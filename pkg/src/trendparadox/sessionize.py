"""Split each actor's event stream into sessions by an inactivity timeout."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .dataset import Dataset, DatasetError, VariableSpec, actor_blocks, sort_by_actor_time

DEFAULT_TIMEOUT = 3600.0

SESSION_ID = "session_id"
SESSION_INDEX = "session_index"
SESSION_LENGTH = "session_length"
SESSION_COLUMNS = (SESSION_ID, SESSION_INDEX, SESSION_LENGTH)


@dataclass(frozen=True)
class Session:
    actor_id: str
    start_ts: float
    end_ts: float
    row_indices: tuple[int, ...]

    @property
    def length(self) -> int:
        return len(self.row_indices)


@dataclass(frozen=True, eq=False)
class SessionizedDataset:
    """Actor/time-sorted data with ``session_id``, ``session_index`` and
    ``session_length`` appended as count covariates.

    ``row_indices`` of each :class:`Session` refer to rows of :attr:`data`.
    """

    data: Dataset
    timeout: float

    @property
    def base(self) -> Dataset:
        return self.data.drop(SESSION_COLUMNS)

    @cached_property
    def _starts(self) -> np.ndarray:
        return np.flatnonzero(self.data[SESSION_INDEX] == 1)

    @property
    def n_sessions(self) -> int:
        return int(self._starts.shape[0])

    @cached_property
    def sessions(self) -> list[Session]:
        ids = self.data[self.data.actor_spec.name]
        ts = self.data[self.data.time_spec.name]
        bounds = np.append(self._starts, self.data.n_rows)
        out = []
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            out.append(Session(str(ids[lo]), float(ts[lo]), float(ts[hi - 1]),
                               tuple(range(int(lo), int(hi)))))
        return out


def is_session_feature(name: str) -> bool:
    return name in SESSION_COLUMNS


def sessionize(d: Dataset, timeout: float = DEFAULT_TIMEOUT) -> SessionizedDataset:
    """Segment ``d`` into sessions.

    A new session starts at an actor's first event and at every event whose gap
    from the actor's previous event is strictly greater than ``timeout``; a gap
    equal to the timeout stays in the same session. Existing session columns
    are recomputed.
    """
    if not timeout > 0:
        raise DatasetError(f"timeout must be positive, got {timeout!r}")
    d.require_roles("actor", "timestamp")
    d = sort_by_actor_time(d.drop(c for c in SESSION_COLUMNS if c in d))
    ts = np.ascontiguousarray(d[d.time_spec.name], dtype=np.float64)
    sid, sidx, slen = _kernels.session_positions(actor_blocks(d), ts, float(timeout))
    for name, values in ((SESSION_ID, sid), (SESSION_INDEX, sidx), (SESSION_LENGTH, slen)):
        d = d.with_column(VariableSpec(name, "covariate", "count"), values)
    return SessionizedDataset(d, float(timeout))
