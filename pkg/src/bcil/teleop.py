"""Scripted 4ch bilateral demonstrations.

A virtual operator holds the master through a spring-damper hand impedance
around a piecewise-cubic reference. The reference carries seeded low-pass
jitter, which is how the master ends up with the larger fluctuations seen in
human-operated masters. Both robots run the same front end (pseudo-diff, DOB,
RFOB); the slave touches the task environment.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import tasks as T
from .control import ControlGains, RobotFrontEnd, RobotState9, bilateral_refs
from .episode import COLUMNS, Episode
from .errors import NonFinite
from .plant import CONTROL_DT, PlantParams, PlantState, gravity_torque, step_plant

JITTER_CUTOFF = 5.0   # rad/s


@dataclass(frozen=True)
class OperatorModel:
    times: tuple
    points: tuple                      # one (q1, q2, q3) per time
    kh: tuple = (1.0, 0.8, 0.4)        # N*m/rad
    bh: tuple = (0.04, 0.08, 0.015)    # N*m*s/rad
    jitter: float = 0.01               # RMS of the reference jitter, rad
    seed: int = 0

    def __post_init__(self):
        if any(k < 0 for k in self.kh) or any(b < 0 for b in self.bh):
            raise ValueError("hand stiffness and damping must be non-negative")
        if len(self.times) != len(self.points) or len(self.times) < 2:
            raise ValueError("need at least two waypoints with matching times")
        spline = PchipInterpolator(np.asarray(self.times, float),
                                   np.asarray(self.points, float), axis=0, extrapolate=False)
        object.__setattr__(self, "_spline", spline)
        object.__setattr__(self, "_dspline", spline.derivative())
        object.__setattr__(self, "_tables", {})

    @property
    def end(self) -> float:
        return float(self.times[-1])

    def reference(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        tc = min(max(t, self.times[0]), self.end)
        q = np.asarray(self._spline(tc), dtype=float)
        dq = np.asarray(self._dspline(tc), dtype=float) if t < self.end else np.zeros(3)
        return q, dq

    def tables(self, n: int, dt: float = CONTROL_DT) -> tuple[np.ndarray, np.ndarray]:
        """Reference (jitter included) and its rate on the first ``n`` ticks."""
        key = (n, dt)
        if key not in self._tables:
            t = np.arange(n) * dt
            tc = np.clip(t, self.times[0], self.end)
            q = np.asarray(self._spline(tc), dtype=float)
            dq = np.asarray(self._dspline(tc), dtype=float)
            dq[t >= self.end] = 0.0
            self._tables[key] = (q + self.jitter_table(n, dt), dq)
        return self._tables[key]

    def jitter_table(self, n: int, dt: float = CONTROL_DT) -> np.ndarray:
        if self.jitter == 0.0:
            return np.zeros((n, 3))
        rng = np.random.default_rng(self.seed)
        white = rng.standard_normal((n, 3))
        a = math.exp(-JITTER_CUTOFF * dt)
        # stationary start: unit-variance white noise through the lag has variance (1-a)/(1+a)
        out = np.empty((n, 3))
        y = white[0] * math.sqrt((1.0 - a) / (1.0 + a))
        for k in range(n):
            out[k] = y
            y = a * y + (1.0 - a) * white[k]
        rms = math.sqrt((1.0 - a) / (1.0 + a))
        return out * (self.jitter / rms)


def operator_torque(op: OperatorModel, master: RobotState9, t: float) -> np.ndarray:
    """Hand torque on the master: impedance around the jittered reference."""
    k = int(math.floor(t / CONTROL_DT + 1e-9))
    q, dq = op.tables(k + 1)
    return (np.asarray(op.kh) * (q[k] - master.theta)
            + np.asarray(op.bh) * (dq[k] - master.dtheta))


class _HandContact:
    """Presents the operator as an environment acting on the master plant."""

    def __init__(self, op: OperatorModel, n: int):
        self.kh = np.asarray(op.kh)
        self.bh = np.asarray(op.bh)
        self.q, self.dq = op.tables(n)
        self.k = 0

    def torque(self, theta, dtheta, t: float) -> np.ndarray:
        return (self.kh * (self.q[self.k] - np.asarray(theta))
                + self.bh * (self.dq[self.k] - np.asarray(dtheta)))


# -- operators for the task analogues ------------------------------------------

def make_operator(task: T.TaskSpec, seed: int = 0, jitter: float = 0.01, **kw) -> OperatorModel:
    """Scripted operator for ``task``; ``seed`` also sets a +-5 % tempo variation."""
    rng = np.random.default_rng([seed, 7919])
    tempo = float(rng.uniform(0.95, 1.05))
    builder = {"draw": _draw_waypoints, "erase": _erase_waypoints,
               "write": _write_waypoints, "free": _free_waypoints}[task.kind]
    times, points = builder(task, tempo)
    return OperatorModel(tuple(times), tuple(map(tuple, points)), jitter=jitter, seed=seed, **kw)


def _draw_waypoints(task: T.TaskSpec, tempo: float):
    wall = task.environment
    n = np.array(wall.normal)
    tg = np.array(wall.tangent)
    q3 = task.initial_pose[2]
    start = np.array(task.initial_pose[:2])
    contact = np.array(wall.anchor) + T.PRESS_DEPTH * n
    end = contact + 0.5 * tg
    t_touch = 0.8 * tempo
    t_end = max(min(2.8 * tempo, task.duration), t_touch + 0.1)
    pts2 = [start, start, contact, end, end]
    times = [0.0, 0.15, t_touch, t_end, max(task.duration, t_end) + 0.1]
    return times, [(p[0], p[1], q3) for p in pts2]


def _erase_waypoints(task: T.TaskSpec, tempo: float):
    x0, pos, q3 = task.initial_pose
    press = pos + T.PRESS_DEPTH
    half = 0.5 * T.ERASE_PERIOD * tempo
    times = [0.0, 0.3]
    points = [(x0, pos, q3), (x0, press, q3)]
    t, side = 0.3, 1.0
    while t < task.duration + half:
        t += half
        times.append(t)
        points.append((side * 0.25, press, q3))
        side = -side
    return times, points


def _write_waypoints(task: T.TaskSpec, tempo: float):
    keys = T.LETTERS[task.params["letter"]]
    pos = task.initial_pose[1]
    down, up = pos + T.PRESS_DEPTH, pos - T.LIFT
    period = T.WRITE_PERIOD * tempo
    pen_time = 0.15 * tempo
    n_keys = len(keys)
    changes = sum(keys[i][2] != keys[i - 1][2] for i in range(n_keys))
    seg = [math.dist(keys[i][:2], keys[(i + 1) % n_keys][:2]) for i in range(n_keys)]
    move_time = period - changes * pen_time
    x0, z0, _ = keys[0]
    times = [0.0, 0.2]
    points = [(x0, pos, z0), (x0, down, z0)]
    t, pen = 0.2, True
    while t < task.duration + period:
        for i in range(n_keys):
            x, z, pen_next = keys[i]
            if pen_next != pen:
                t += pen_time
                times.append(t)
                points.append((x, down if pen_next else up, z))
                pen = pen_next
            xn, zn, _ = keys[(i + 1) % n_keys]
            t += move_time * seg[i] / sum(seg)
            times.append(t)
            points.append((xn, down if pen else up, zn))
    return times, points


def _free_waypoints(task: T.TaskSpec, tempo: float):
    p = np.array(task.initial_pose)
    times = np.arange(0.0, task.duration + 0.6, 0.5)
    amp = np.array([0.12, 0.10, 0.08])
    w = 2 * math.pi * 0.25 / tempo
    points = [p + amp * np.sin(w * t + np.array([0.0, 1.0, 2.0])) * min(1.0, t) for t in times]
    return list(times), points


# -- demonstrations -------------------------------------------------------------

def config_hash(gains: ControlGains, params: PlantParams) -> str:
    return hashlib.sha256(repr((gains, params)).encode()).hexdigest()[:16]


def initial_disturbance(params: PlantParams, theta0, env) -> np.ndarray:
    """Static disturbance at rest: what the observers are started with."""
    state = PlantState.at_rest(theta0)
    return gravity_torque(params, theta0) - env.torque(state.theta, state.dtheta, 0.0)


def run_demo(task: T.TaskSpec, op: OperatorModel | None = None,
             gains: ControlGains = ControlGains(), params: PlantParams = PlantParams(),
             seed: int = 0) -> Episode:
    """Simulate one 4ch bilateral demonstration and record it every 1 ms."""
    if op is None:
        op = make_operator(task, seed)
    dt = CONTROL_DT
    n = int(round(task.duration / dt))
    theta0 = np.asarray(task.initial_pose, dtype=float)
    hand = _HandContact(op, n)
    master = PlantState.at_rest(theta0)
    slave = PlantState.at_rest(theta0)
    fe_m = RobotFrontEnd(gains, params, dt, initial_disturbance(params, theta0, hand))
    fe_s = RobotFrontEnd(gains, params, dt, initial_disturbance(params, theta0, task.environment))
    table = np.empty((n, len(COLUMNS)))
    clamped = 0
    for k in range(n):
        t = k * dt
        ms = fe_m.measure(master.theta)
        ss = fe_s.measure(slave.theta)
        ref_m, ref_s = bilateral_refs(ms, ss, gains, params)
        u_m = fe_m.actuate(ref_m)
        u_s = fe_s.actuate(ref_s)
        hand.k = k
        try:
            master, _ = step_plant(master, u_m, hand, params, dt, t)
            slave, dis = step_plant(slave, u_s, task.environment, params, dt, t)
        except NonFinite as exc:
            raise NonFinite("demonstration diverged", k) from exc
        clamped += master.clamped or slave.clamped
        row = table[k]
        row[0] = float(k)
        row[1:10] = ss.as_vector()
        row[10:19] = ms.as_vector()
        row[19:22] = u_s
        row[22:25] = u_m
        row[25:28] = dis
    if not np.all(np.isfinite(table)):
        raise NonFinite("non-finite value recorded", int(np.argmax(~np.isfinite(table).all(1))))
    meta = {"mode": "demo", "seed": str(seed), "config": config_hash(gains, params),
            "operator_seed": str(op.seed), "jitter": repr(float(op.jitter)),
            "clamped_ticks": str(int(clamped))}
    meta.update(task.metadata())
    return Episode(table, meta)
