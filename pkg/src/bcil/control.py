"""Velocity estimation, disturbance/reaction-force observers and the 4ch law.

All filters are first-order lags ``c/(s+c)`` discretized with ``a = exp(-c dt)``.
Every robot owns one :class:`RobotFrontEnd` that turns encoder angles into the
response triple (angle, velocity, reaction torque) and adds disturbance
compensation to the controller output. Demonstration and autonomous runs share
this class and :func:`bilateral_refs`, so the slave side is the same arithmetic
in both modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import CONTROL_DT, PlantParams


@dataclass(frozen=True)
class ControlGains:
    kp: float = 121.0      # 1/s^2
    kd: float = 22.0       # 1/s
    kf: float = 1.00
    g: float = 40.0        # pseudo-differentiation cutoff, rad/s
    g_dob: float = 40.0
    g_rfob: float = 40.0

    def __post_init__(self):
        for name in ("kp", "kd", "kf", "g", "g_dob", "g_rfob"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RobotState9:
    """Response values of one robot: angles, velocities, torques."""

    theta: np.ndarray
    dtheta: np.ndarray
    tau: np.ndarray

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.theta, self.dtheta, self.tau])

    @classmethod
    def from_vector(cls, v) -> "RobotState9":
        v = np.asarray(v, dtype=float)
        if v.shape != (9,):
            raise ValueError(f"expected 9 values, got shape {v.shape}")
        return cls(v[0:3].copy(), v[3:6].copy(), v[6:9].copy())

    @classmethod
    def zeros(cls) -> "RobotState9":
        return cls(np.zeros(3), np.zeros(3), np.zeros(3))


class Lpf1:
    """First-order low-pass, exact for inputs held constant between ticks.

    The sample passed at tick k-1 is held over (t[k-1], t[k]]; the first
    sample initializes the output.
    """

    def __init__(self, cutoff: float, dt: float = CONTROL_DT):
        if cutoff <= 0:
            raise ValueError("cutoff must be positive")
        self.cutoff = cutoff
        self.dt = dt
        self.a = math.exp(-cutoff * dt)
        self.y = None
        self._u = None

    @property
    def initialized(self) -> bool:
        return self.y is not None

    def reset(self, value) -> None:
        self.y = np.array(value, dtype=float)
        self._u = self.y.copy()

    def update(self, u) -> np.ndarray:
        u = np.array(u, dtype=float)
        if self.y is None:
            self.reset(u)
        else:
            self.y = self.a * self.y + (1.0 - self.a) * self._u
            self._u = u
        return self.y.copy()


class PseudoDiff:
    """Band-limited differentiator g*s/(s+g) on a sampled angle stream.

    The inner lag is discretized exactly for an input that is linear between
    samples (first-order hold), so a ramp yields its slope with no
    sample-delay bias. The first sample initializes the state (zero output).
    """

    def __init__(self, cutoff: float, dt: float = CONTROL_DT):
        if cutoff <= 0:
            raise ValueError("cutoff must be positive")
        self.cutoff = cutoff
        self.dt = dt
        self.a = math.exp(-cutoff * dt)
        self._ramp = 1.0 - (1.0 - self.a) / (cutoff * dt)
        self.x = None
        self._prev = None

    def update(self, theta) -> np.ndarray:
        theta = np.array(theta, dtype=float)
        if self.x is None:
            self.x = theta.copy()
        else:
            self.x = (self.a * self.x + (1.0 - self.a) * self._prev
                      + self._ramp * (theta - self._prev))
        self._prev = theta
        return self.cutoff * (theta - self.x)


def pseudo_diff(state: PseudoDiff, theta_sample, dt: float = CONTROL_DT) -> np.ndarray:
    if not math.isclose(dt, state.dt):
        raise ValueError("pseudo_diff must be called at its construction period")
    return state.update(theta_sample)


class DobState:
    """Velocity-form disturbance observer.

        d(zeta)/dt = g (tau + g J dth - zeta),   dis_hat = zeta - g J dth

    which equals ``g/(s+g) (tau - J dd(th))`` without differentiating twice.
    ``tau`` passed to :meth:`update` is the torque applied over the tick that
    just elapsed (held constant); the velocity is taken as linear between
    samples, so both parts of the input are discretized exactly.
    """

    def __init__(self, cutoff: float, inertia, dt: float = CONTROL_DT):
        self.cutoff = cutoff
        self.J = np.asarray(inertia, dtype=float)
        self.dt = dt
        self.a = math.exp(-cutoff * dt)
        self._ramp = 1.0 - (1.0 - self.a) / (cutoff * dt)
        self.zeta = None
        self._gjv = None

    def reset(self, dis_hat, dtheta) -> None:
        self._gjv = self.cutoff * self.J * np.asarray(dtheta, float)
        self.zeta = np.asarray(dis_hat, dtype=float) + self._gjv

    def update(self, tau_ref, dtheta_res) -> np.ndarray:
        gjv = self.cutoff * self.J * np.asarray(dtheta_res, dtype=float)
        tau = np.asarray(tau_ref, dtype=float)
        if self.zeta is None:
            self.zeta = tau + gjv
        else:
            self.zeta = (self.a * self.zeta + (1.0 - self.a) * (tau + self._gjv)
                         + self._ramp * (gjv - self._gjv))
        self._gjv = gjv
        if not np.all(np.isfinite(self.zeta)):
            raise FloatingPointError("disturbance observer diverged")
        return self.zeta - gjv


def dob_update(state: DobState, tau_ref, dtheta_res, J=None, dt: float = CONTROL_DT) -> np.ndarray:
    if J is not None and not np.allclose(J, state.J):
        raise ValueError("inertia differs from the observer's")
    if not math.isclose(dt, state.dt):
        raise ValueError("dob_update must be called at its construction period")
    return state.update(tau_ref, dtheta_res)


def rfob_torque(tau_dis_hat, state, params: PlantParams) -> np.ndarray:
    """Reaction torque: estimated disturbance minus modeled friction and gravity.

    ``state`` is anything with ``theta`` and ``dtheta`` attributes.
    """
    th, dth = state.theta, state.dtheta
    G1, G2, G3 = params.G
    return np.array([tau_dis_hat[0] - params.D * dth[0],
                     tau_dis_hat[1] - G1 * math.cos(th[1]) - G2 * math.sin(th[2]),
                     tau_dis_hat[2] - G3 * math.sin(th[2])])


def _position_term(cmd: RobotState9, slave: RobotState9, gains: ControlGains,
                   params: PlantParams) -> np.ndarray:
    e = cmd.theta - slave.theta
    de = cmd.dtheta - slave.dtheta
    return 0.5 * params.inertia * (gains.kp * e + gains.kd * de)


def _force_term(cmd: RobotState9, slave: RobotState9, gains: ControlGains) -> np.ndarray:
    return 0.5 * gains.kf * (cmd.tau + slave.tau)


def bilateral_refs(master: RobotState9, slave: RobotState9, gains: ControlGains,
                   params: PlantParams) -> tuple[np.ndarray, np.ndarray]:
    """4ch torque references ``(tau_ref_m, tau_ref_s)`` for one tick."""
    pos = _position_term(master, slave, gains, params)
    force = _force_term(master, slave, gains)
    return -pos - force, pos - force


def slave_ref_autonomous(command: RobotState9, slave: RobotState9, gains: ControlGains,
                         params: PlantParams) -> np.ndarray:
    """Slave half of :func:`bilateral_refs` with the command in place of the master."""
    return _position_term(command, slave, gains, params) - _force_term(command, slave, gains)


class RobotFrontEnd:
    """Measurement and disturbance compensation for one robot.

    ``measure`` turns the encoder angle into a :class:`RobotState9`
    (pseudo-differentiated velocity, RFOB torque low-passed at ``g_rfob``);
    ``actuate`` adds the disturbance estimate to a controller reference and
    remembers the result as the torque applied over the next tick.
    """

    def __init__(self, gains: ControlGains, params: PlantParams,
                 dt: float = CONTROL_DT, dis_hat0=None):
        self.gains = gains
        self.params = params
        self.dt = dt
        self.diff = PseudoDiff(gains.g, dt)
        self.dob = DobState(gains.g_dob, params.inertia, dt)
        self.rfob_lpf = Lpf1(gains.g_rfob, dt)
        self._dis_hat0 = np.zeros(3) if dis_hat0 is None else np.asarray(dis_hat0, float)
        self.applied = None
        self.dis_hat = None

    def measure(self, theta) -> RobotState9:
        theta = np.array(theta, dtype=float)
        dtheta = self.diff.update(theta)
        if self.applied is None:
            self.dob.reset(self._dis_hat0, dtheta)
            self.dis_hat = self._dis_hat0.copy()
        else:
            self.dis_hat = self.dob.update(self.applied, dtheta)
        state = RobotState9(theta, dtheta, np.zeros(3))
        state.tau = self.rfob_lpf.update(rfob_torque(self.dis_hat, state, self.params))
        return state

    def actuate(self, tau_ref) -> np.ndarray:
        self.applied = np.asarray(tau_ref, dtype=float) + self.dis_hat
        return self.applied.copy()
