import numpy as np
import pytest

from bcil.episode import downsample
from bcil.tasks import make_task
from bcil.teleop import run_demo


@pytest.fixture(scope="session")
def draw_demo():
    return run_demo(make_task("draw", angle_deg=20.0), seed=1)


@pytest.fixture(scope="session")
def write_demos():
    """Training demos of the write analogue (three heights, two operators each)."""
    return [run_demo(make_task("write", height_mm=h), seed=s) for h in (35.0, 55.0, 75.0) for s in (1, 2)]


@pytest.fixture(scope="session")
def write_data(write_demos):
    return [downsample(ep) for ep in write_demos]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary ------------------------------------------------------------

ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    """Log one measured part of an acceptance criterion for the summary."""
    ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[n]
        ok = all(p[0] for p in parts)
        tr.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: " + "; ".join(p[1] for p in parts))
