import numpy as np
import pytest

from bcil.autonomy import AutonomyConfig, VirtualMasterState, build_input, command_from_output, run_autonomous
from bcil.control import RobotState9
from bcil.episode import downsample
from bcil.errors import DimensionMismatch, NonFinite
from bcil.seqmodel import Normalizer, fit_normalizer, get_variant
from bcil.tasks import make_task
from bcil.teleop import run_demo


class Replay:
    """Plays recorded master rows back as if they were predictions."""

    def __init__(self, master_rows, normalizer, variant="S2M", offset=0):
        self.rows = np.asarray(master_rows)
        self.normalizer = normalizer
        self.variant = get_variant(variant)
        self.offset = offset
        self.inputs = []

    def initial_state(self):
        return 0

    def step(self, x, k):
        self.inputs.append(np.array(x))
        y = self.normalizer.normalize(self.rows[min(k + self.offset, len(self.rows) - 1)], range(9, 18))
        if self.variant.name == "SM2SM":
            y = np.concatenate([x[:9], y])
        return y, k + 1


class Identity:
    """S2S stand-in that predicts the slave state it was given."""

    def __init__(self, normalizer):
        self.normalizer = normalizer
        self.variant = get_variant("S2S")

    def initial_state(self):
        return None

    def step(self, x, state):
        return np.array(x), state


class Exploding(Identity):
    def step(self, x, state):
        return np.full(9, np.nan), state


def _norm():
    lo = np.r_[[-np.pi] * 3, [-5.0] * 3, [-10.0] * 3]
    return Normalizer(np.r_[lo, lo], -np.r_[lo, lo])


@pytest.mark.parametrize("kind,kw", [("draw", {"angle_deg": 20.0}), ("write", {})])
def test_replaying_the_master_reproduces_the_slave(kind, kw):
    task = make_task(kind, **kw)
    ep = run_demo(task, seed=1)
    seq = downsample(ep)
    norm = fit_normalizer([seq])
    a = run_autonomous(Replay(seq.rows[:, 9:], norm, offset=1), task, AutonomyConfig(initial_jitter=0))
    assert np.abs(a.slave[:, :3] - ep.slave[:, :3]).max() < 0.02


def test_replay_at_every_tick_reproduces_the_slave_command(draw_demo):
    task = make_task("draw", angle_deg=20.0)
    norm = fit_normalizer([downsample(draw_demo)])
    a = run_autonomous(Replay(draw_demo.master, norm), task,
                       AutonomyConfig(prediction_ticks=1, initial_jitter=0))
    np.testing.assert_allclose(a.ref_s, draw_demo.ref_s, atol=1e-9)


def test_identity_model_holds_the_pose():
    task = make_task("free", duration=5.0)
    a = run_autonomous(Identity(_norm()), task, AutonomyConfig(initial_jitter=0))
    drift = np.abs(a.slave[:, :3] - np.asarray(task.initial_pose)).max()
    assert drift < 0.01


def test_prediction_cadence():
    task = make_task("erase", duration=8.0)
    a = run_autonomous(Identity(_norm()), task, AutonomyConfig(initial_jitter=0))
    assert len(a) == 8000
    assert a.meta["predictions"] == "400"
    # command is held between predictions
    held = a.master[:, :3].reshape(400, 20, 3)
    assert np.all(held == held[:, :1])


def test_seeded_runs_are_identical_and_seeds_differ():
    task = make_task("free", duration=1.0)
    a = run_autonomous(Identity(_norm()), task, seed=4)
    b = run_autonomous(Identity(_norm()), task, seed=4)
    c = run_autonomous(Identity(_norm()), task, seed=5)
    assert a.table.tobytes() == b.table.tobytes()
    assert a.table.tobytes() != c.table.tobytes()
    assert a.meta["mode"] == "autonomous" and a.meta["task"] == "free"


def test_sm2sm_feeds_back_its_master_prediction():
    task = make_task("draw", angle_deg=20.0, duration=0.2)
    ep = run_demo(task, seed=1)
    norm = fit_normalizer([downsample(ep)])
    model = Replay(downsample(ep).rows[:, 9:], norm, "SM2SM", offset=1)
    run_autonomous(model, task, AutonomyConfig(initial_jitter=0))
    x = np.array(model.inputs)
    assert x.shape == (10, 18)
    # first call: the virtual master starts at the measured slave
    np.testing.assert_allclose(norm.denormalize(x[0, 9:], range(9, 18)),
                               norm.denormalize(x[0, :9], range(9)), atol=1e-12)
    # later calls: the master half is the previous prediction
    for k in range(1, 10):
        expected = norm.normalize(downsample(ep).rows[k, 9:], range(9, 18))
        np.testing.assert_allclose(x[k, 9:], expected, atol=1e-12)


def test_wiring_helpers():
    norm = _norm()
    s = RobotState9(np.array([0.1, 0.2, 0.3]), np.zeros(3), np.ones(3))
    x = build_input(get_variant("SM2SM"), s, VirtualMasterState(s), norm)
    assert x.shape == (18,)
    with pytest.raises(ValueError):
        build_input(get_variant("SM2SM"), s, None, norm)
    y = np.linspace(0, 1, 18)
    cmd = command_from_output(get_variant("SM2SM"), y, norm)
    np.testing.assert_allclose(cmd.as_vector(), norm.denormalize(y[9:], range(9, 18)))
    with pytest.raises(DimensionMismatch):
        command_from_output(get_variant("S2M"), y, norm)


def test_non_finite_prediction_is_reported_with_tick():
    with pytest.raises(NonFinite):
        run_autonomous(Exploding(_norm()), make_task("free", duration=0.1), AutonomyConfig(initial_jitter=0))


def test_duration_cap_and_bad_period():
    with pytest.raises(ValueError):
        run_autonomous(Identity(_norm()), make_task("free"), AutonomyConfig(max_duration=1.0))
    with pytest.raises(ValueError):
        AutonomyConfig(prediction_ticks=0)
