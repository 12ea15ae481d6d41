import numpy as np
import pytest

from trendparadox.dataset import Dataset, actor, covariate, outcome, timestamp


@pytest.fixture
def write_text(tmp_path):
    def _write(name, text):
        p = tmp_path / name
        p.write_text(text, encoding="utf-8")
        return p
    return _write


def event_frame(actors, times, y=None, **covs):
    """Small Dataset with actor ``user``, timestamp ``t`` and outcome ``y``."""
    n = len(actors)
    y = np.zeros(n, dtype=int) if y is None else y
    schema = [actor("user"), timestamp("t")]
    schema += [covariate(k, "continuous") for k in covs]
    schema.append(outcome("y", "binary"))
    return Dataset(tuple(schema), {"user": actors, "t": times, "y": y, **covs})


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion and fail on a miss."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def check(number, title, passed, detail):
        line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
        lines.append(line)
        print(line)
        assert passed, line
    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
