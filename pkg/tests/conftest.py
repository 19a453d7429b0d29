import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cospeech.scene import Scene, SceneObject  # noqa: E402


@pytest.fixture
def room():
    return Scene([
        SceneObject("floor", (0, -0.05, 1.5), scale=(6, 0.1, 6), manipulatable=False),
        SceneObject("wall", (0, 1.5, 2.5), scale=(6, 3, 0.1), manipulatable=False),
        SceneObject("table", (0, 0.375, 0.9), scale=(1.6, 0.75, 0.6), manipulatable=False),
        SceneObject("Starry Night", (0.8, 0.765, 0.9), scale=(0.73, 0.92, 0.03),
                    color=(0.1, 0.2, 0.5)),
        SceneObject("red cube", (-0.5, 0.77, 0.8), scale=(0.04, 0.04, 0.04), color=(1, 0, 0)),
        SceneObject("lamp", (0.5, 0.9, 0.8), scale=(0.1, 0.3, 0.1), color=(1, 1, 0)),
    ])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ---------------------------------------------------------------- acceptance report

SUITE_BUDGET_S = 60.0
_VERDICTS = pytest.StashKey[dict]()
_STARTED = pytest.StashKey[float]()


def pytest_configure(config):
    config.stash[_VERDICTS] = {}
    config.stash[_STARTED] = time.perf_counter()


@pytest.fixture
def verdict(request):
    """Record one acceptance criterion: ``verdict(n, ok, detail)``, then assert ``ok``."""
    table = request.config.stash[_VERDICTS]

    def record(n, ok, detail):
        table[n] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter, config):
    table = config.stash[_VERDICTS]
    if not table:
        return
    elapsed = time.perf_counter() - config.stash[_STARTED]
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(table):
        ok, detail = table[n]
        if n == 8:
            ok = ok and elapsed < SUITE_BUDGET_S
            detail += f"; session {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)"
        tr.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
