import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcil.episode import COLUMNS, Episode
from bcil.errors import NoCycles, TaskMismatch, TooShort, UnsupportedVariant
from bcil.metrics import (cycle_deviation, metric_corridor, metric_cycle_variance, metric_open_loop,
                          metric_sync, write_cycles, zigzag)
from bcil.seqmodel import Normalizer, get_variant
from bcil.tasks import letter_path, make_task


def episode(theta, meta=None, master=None):
    theta = np.asarray(theta, dtype=float)
    table = np.zeros((theta.shape[0], len(COLUMNS)))
    table[:, 0] = np.arange(theta.shape[0])
    table[:, 1:4] = theta
    if master is not None:
        table[:, 10:19] = master
    return Episode(table, dict(meta or {}))


# -- synchronization -------------------------------------------------------------

def test_sync_hand_example():
    n = 1000
    ep = episode(np.zeros((n, 3)), master=np.zeros((n, 9)))
    ep.table[:, 10:13] = [0.01, -0.02, 0.0]
    ep.table[:, 16:19] = [1.0, 0.0, 0.5]
    ep.table[:, 7:10] = [-0.9, 0.0, -0.5]
    ep.table[600, 11] = 0.05
    s = metric_sync(ep)
    np.testing.assert_allclose(s.mean_pos_err, [0.01, (0.02 * 499 + 0.05) / 500, 0.0])
    np.testing.assert_allclose(s.max_pos_err, [0.01, 0.05, 0.0])
    np.testing.assert_allclose(s.mean_force_sum, [0.1, 0.0, 0.0], atol=1e-15)


def test_sync_needs_data_after_transient():
    with pytest.raises(TooShort):
        metric_sync(episode(np.zeros((100, 3))))


# -- open loop -------------------------------------------------------------------

class Echo:
    def __init__(self, name):
        self.variant = get_variant(name)
        self.normalizer = Normalizer(np.full(18, -1.0), np.full(18, 1.0))

    def initial_state(self):
        return None

    def step(self, x, state):
        return np.array(x), state


def test_open_loop_of_a_still_episode_is_zero():
    ep = episode(np.full((400, 3), 0.3), master=np.full((400, 9), 0.1))
    assert metric_open_loop(Echo("SM2SM"), ep, 10) == 0.0
    assert metric_open_loop(Echo("S2S"), ep, 19) == 0.0


def test_open_loop_measures_drift():
    th = np.zeros((400, 3))
    th[20:, 0] = 0.2                  # one jump after the first 20 ms row
    ep = episode(th)
    # normalized jump 0.1 on one of nine columns at every step
    assert metric_open_loop(Echo("S2S"), ep, 5) == pytest.approx(0.01 / 9)


def test_open_loop_errors():
    ep = episode(np.zeros((400, 3)))
    with pytest.raises(UnsupportedVariant):
        metric_open_loop(Echo("S2M"), ep, 5)
    with pytest.raises(TooShort):
        metric_open_loop(Echo("S2S"), ep, 20)
    with pytest.raises(TooShort):
        metric_open_loop(Echo("S2S"), ep, 0)


# -- draw ------------------------------------------------------------------------

def _slide(task, depth, s0, s1, n=3000):
    wall = task.environment
    s = np.linspace(s0, s1, n)
    a = np.array(wall.anchor)
    p = a + np.outer(s, wall.tangent) + depth * np.array(wall.normal)
    return np.column_stack([p, np.full(n, 0.2)])


@pytest.mark.parametrize("angle", [0.0, 30.0, -20.0])
def test_draw_corridor(angle):
    task = make_task("draw", angle_deg=angle, shift=0.05)
    assert metric_corridor(episode(_slide(task, 0.02, 0.0, 0.4)), task).success
    short = metric_corridor(episode(_slide(task, 0.02, 0.0, 0.1)), task)
    assert short.diagnostics == ["short-arc"]
    assert metric_corridor(episode(_slide(task, -0.05, 0.0, 0.4)), task).diagnostics == ["no-contact"]
    assert "out-of-band" in metric_corridor(episode(_slide(task, 0.10, 0.0, 0.4)), task).diagnostics


def test_draw_arc_must_be_one_contact_run():
    task = make_task("draw")
    a, b = _slide(task, 0.02, 0.0, 0.2, 1000), _slide(task, 0.02, 0.2, 0.4, 1000)
    lift = _slide(task, -0.1, 0.2, 0.2, 200)
    res = metric_corridor(episode(np.vstack([a, lift, b])), task)
    assert res.diagnostics == ["short-arc"]
    assert res.values["arc"] == pytest.approx(0.2)


def test_joint_limit_is_out_of_band():
    task = make_task("draw")
    th = _slide(task, 0.02, 0.0, 0.4)
    th[-1, 2] = math.pi
    assert "out-of-band" in metric_corridor(episode(th), task).diagnostics
    ep = episode(_slide(task, 0.02, 0.0, 0.4), {"clamped_ticks": "3"})
    assert not metric_corridor(ep, task).success


def test_task_mismatch():
    with pytest.raises(TaskMismatch):
        metric_corridor(episode(np.zeros((10, 3)), {"task": "erase"}), make_task("draw"))
    with pytest.raises(TaskMismatch):
        metric_corridor(episode(np.zeros((10, 3)), {"task": "write", "task.letter": "B"}),
                        make_task("write", letter="A"))


# -- erase -----------------------------------------------------------------------

def _strokes(task, amp=0.33, period=1.0, depth=0.02, seconds=8.0):
    t = np.arange(int(seconds * 1000)) * 1e-3
    q1 = amp * (2 / math.pi) * np.arcsin(np.sin(2 * math.pi * t / period))
    pos = task.initial_pose[1]
    return np.column_stack([q1, np.full_like(t, pos + depth), np.full_like(t, 0.1)])


def test_erase_corridor():
    task = make_task("erase")
    res = metric_corridor(episode(_strokes(task)), task)
    assert res.success, res.diagnostics
    assert res.values["reversals"] == 16


def test_erase_failures():
    task = make_task("erase")
    th = _strokes(task)
    th[3000:6000] = th[3000]
    assert metric_corridor(episode(th), task).diagnostics == ["stopped"]
    assert metric_corridor(episode(_strokes(task, amp=0.5)), task).diagnostics == ["out-of-band"]
    assert metric_corridor(episode(_strokes(task, depth=-0.05)), task).diagnostics == ["no-contact"]


def test_zigzag():
    assert zigzag([0, 1, 0, 1, 0], 0.5) == [1, 2, 3]
    assert zigzag([0, 0.1, 0.0, 0.1, 0.0], 0.5) == []
    assert zigzag([0, 1, 0.9, 1.2, 0], 0.5) == [3]


# -- write -----------------------------------------------------------------------

def _letter_loop(task, cycles=6, per_cycle=3000, offset=(0.0, 0.0)):
    path = letter_path(task.params["letter"])
    seg = np.hypot(*np.diff(path, axis=0).T)
    s = np.concatenate([[0], np.cumsum(seg)]) / seg.sum()
    u = (np.arange(cycles * per_cycle) / per_cycle) % 1.0
    xz = np.column_stack([np.interp(u, s, path[:, 0]), np.interp(u, s, path[:, 1])]) + offset
    return np.column_stack([xz[:, 0], np.full(len(u), task.initial_pose[1]), xz[:, 1]])


def test_write_corridor_and_cycles():
    task = make_task("write", duration=18.0)
    th = _letter_loop(task)
    ep = episode(th)
    assert len(write_cycles(ep, task)) == 6
    res = metric_corridor(ep, task)
    assert res.success, res.diagnostics
    assert metric_cycle_variance(ep, task) < 1e-3


def test_write_failures():
    task = make_task("write")
    assert metric_corridor(episode(_letter_loop(task, cycles=3)), task).diagnostics == ["out-of-band"]
    assert metric_corridor(episode(_letter_loop(task, offset=(0.0, 0.2))), task).diagnostics == ["no-cycles"]
    still = np.tile(task.initial_pose, (5000, 1))
    assert metric_corridor(episode(still), task).diagnostics == ["stopped"]


def test_cycle_deviation_examples():
    a = np.zeros((50, 3))
    assert cycle_deviation([a, a + 0.1]) == pytest.approx(0.1)
    assert cycle_deviation([a, a + 0.1, a + 0.2]) == pytest.approx((0.1 + 0.2 + 0.1) / 3)
    with pytest.raises(NoCycles):
        cycle_deviation([a])
    with pytest.raises(TaskMismatch):
        metric_cycle_variance(episode(np.zeros((10, 3))), make_task("draw"))


@settings(deadline=None, max_examples=30)
@given(st.integers(50, 400), st.integers(50, 400))
def test_cycle_deviation_ignores_sampling_rate(n1, n2):
    def cyc(n):
        u = np.linspace(0, 1, n)
        return np.column_stack([u, u ** 2, np.zeros(n)])
    assert cycle_deviation([cyc(n1), cyc(n2)]) < 1e-4
