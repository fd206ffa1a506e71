"""Autonomous operation: a sequence model stands in for the master and its controller.

Every ``prediction_ticks`` control ticks the slave's response (encoder angle,
pseudo-differentiated velocity, RFOB torque) is normalized, fed through one
model step, and the denormalized prediction becomes the command of the slave's
4ch law until the next prediction (zero-order hold). The slave front end and
control law are the ones used in demonstrations.

Anything with ``variant``, ``normalizer``, ``initial_state()`` and
``step(x, state) -> (y, state)`` can drive the loop; tests use scripted
stand-ins with that interface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import ControlGains, RobotFrontEnd, RobotState9, slave_ref_autonomous
from .episode import COLUMNS, Episode
from .errors import DimensionMismatch, NonFinite
from .plant import CONTROL_DT, PlantParams, PlantState, step_plant
from .seqmodel.variants import BOTH, MASTER, SLAVE, ModelVariant
from .tasks import TaskSpec
from .teleop import config_hash, initial_disturbance


@dataclass(frozen=True)
class AutonomyConfig:
    prediction_ticks: int = 20       # model period in control ticks (20 ms at 1 ms)
    control_dt: float = CONTROL_DT
    max_duration: float = 60.0       # s
    initial_jitter: float = 0.01     # rad, seeded perturbation of the start pose

    def __post_init__(self):
        if int(self.prediction_ticks) != self.prediction_ticks or self.prediction_ticks < 1:
            raise ValueError("prediction period must be a whole number of control ticks")

    @property
    def prediction_period(self) -> float:
        return self.prediction_ticks * self.control_dt


@dataclass
class VirtualMasterState:
    """Most recent master prediction, in engineering units."""

    master: RobotState9


def build_input(variant: ModelVariant, measured_slave: RobotState9,
                vm: VirtualMasterState | None, normalizer) -> np.ndarray:
    slave = measured_slave.as_vector()
    if variant.inputs == SLAVE:
        return normalizer.normalize(slave, SLAVE)
    if variant.inputs == BOTH:
        if vm is None:
            raise ValueError("SM2SM input needs a virtual master state")
        return normalizer.normalize(np.concatenate([slave, vm.master.as_vector()]), BOTH)
    raise DimensionMismatch(f"unsupported input wiring for {variant.name}")


def command_from_output(variant: ModelVariant, y, normalizer) -> RobotState9:
    y = np.asarray(y, dtype=float)
    if y.shape != (variant.n_out,):
        raise DimensionMismatch(f"{variant.name} output must have {variant.n_out} values, got {y.shape}")
    if variant.outputs == SLAVE:
        return RobotState9.from_vector(normalizer.denormalize(y, SLAVE))
    if variant.outputs == MASTER:
        return RobotState9.from_vector(normalizer.denormalize(y, MASTER))
    if variant.outputs == BOTH:
        return RobotState9.from_vector(normalizer.denormalize(y[9:], MASTER))
    raise DimensionMismatch(f"unsupported output wiring for {variant.name}")


def run_autonomous(model, task: TaskSpec, cfg: AutonomyConfig = AutonomyConfig(), seed: int = 0,
                   gains: ControlGains = ControlGains(), params: PlantParams = PlantParams(),
                   duration: float | None = None) -> Episode:
    """Drive the slave with ``model`` on ``task`` and record every control tick.

    The master columns of the returned episode hold the command in force at
    each tick (the virtual master); ``ref_m`` is zero.
    """
    duration = task.duration if duration is None else duration
    if duration > cfg.max_duration:
        raise ValueError(f"duration {duration} s exceeds max_duration {cfg.max_duration} s")
    dt = cfg.control_dt
    n = int(round(duration / dt))
    variant = model.variant
    normalizer = model.normalizer
    rng = np.random.default_rng(seed)
    theta0 = np.asarray(task.initial_pose, dtype=float)
    if cfg.initial_jitter:
        theta0 = theta0 + rng.uniform(-cfg.initial_jitter, cfg.initial_jitter, 3)
    slave = PlantState.at_rest(theta0)
    fe = RobotFrontEnd(gains, params, dt, initial_disturbance(params, theta0, task.environment))
    state = model.initial_state()
    vm = None
    cmd = None
    table = np.zeros((n, len(COLUMNS)))
    clamped = 0
    predictions = 0
    for k in range(n):
        ss = fe.measure(slave.theta)
        if k % cfg.prediction_ticks == 0:
            if vm is None:
                vm = VirtualMasterState(RobotState9(ss.theta.copy(), ss.dtheta.copy(), ss.tau.copy()))
            x = build_input(variant, ss, vm, normalizer)
            y, state = model.step(x, state)
            if not np.all(np.isfinite(y)):
                raise NonFinite("model produced a non-finite prediction", k)
            cmd = command_from_output(variant, y, normalizer)
            vm = VirtualMasterState(cmd)
            predictions += 1
        u = fe.actuate(slave_ref_autonomous(cmd, ss, gains, params))
        try:
            slave, dis = step_plant(slave, u, task.environment, params, dt, k * dt)
        except NonFinite as exc:
            raise NonFinite("autonomous run diverged", k) from exc
        clamped += slave.clamped
        row = table[k]
        row[0] = float(k)
        row[1:10] = ss.as_vector()
        row[10:19] = cmd.as_vector()
        row[19:22] = u
        row[25:28] = dis
    meta = {"mode": "autonomous", "variant": variant.name, "seed": str(seed),
            "config": config_hash(gains, params), "predictions": str(predictions),
            "prediction_ticks": str(cfg.prediction_ticks), "clamped_ticks": str(int(clamped))}
    if hasattr(model, "config"):
        meta["model"] = model.config.label
    meta.update(task.metadata())
    meta["duration"] = repr(float(duration))
    return Episode(table, meta)
