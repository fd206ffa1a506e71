"""Rigid-body joint dynamics of one 3-DOF robot and joint-space environments.

Each joint integrates independently (off-diagonal inertia neglected):

    J1 dd(th1) = tau1 - dis1 - D dth1
    J2 dd(th2) = tau2 - dis2 - G1 cos(th2) - G2 sin(th3)
    J3 dd(th3) = tau3 - dis3 - G3 sin(th3)

``dis`` is the torque the environment exerts, in disturbance sign, i.e. the
negative of the torque applied *on* the robot by a wall or by friction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFinite

SUBSTEP = 1e-4
CONTROL_DT = 1e-3
COULOMB_DEADBAND = 1e-4


@dataclass(frozen=True)
class PlantParams:
    """Identified parameters in SI units (defaults: the Touch device values)."""

    J: tuple[float, float, float] = (2.55e-3, 4.30e-3, 1.12e-3)
    G: tuple[float, float, float] = (79.0e-3, 55.0e-3, 33.0e-3)
    D: float = 4.55e-3
    joint_limits: tuple[float, float] = (-math.pi, math.pi)

    def __post_init__(self):
        if any(j <= 0 for j in self.J):
            raise ValueError("inertias must be positive")
        if self.D < 0:
            raise ValueError("viscous friction must be non-negative")
        if self.joint_limits[0] >= self.joint_limits[1]:
            raise ValueError("joint limits must satisfy lo < hi")

    @property
    def inertia(self) -> np.ndarray:
        return np.asarray(self.J, dtype=float)


@dataclass(frozen=True)
class PlantState:
    theta: np.ndarray
    dtheta: np.ndarray
    # set when the last step had to clamp a joint at its limit
    clamped: bool = False

    @classmethod
    def at_rest(cls, theta) -> "PlantState":
        return cls(np.asarray(theta, dtype=float).copy(), np.zeros(3))


def gravity_torque(params: PlantParams, theta) -> np.ndarray:
    G1, G2, G3 = params.G
    return np.array([0.0,
                     G1 * math.cos(theta[1]) + G2 * math.sin(theta[2]),
                     G3 * math.sin(theta[2])])


def friction_torque(params: PlantParams, dtheta) -> np.ndarray:
    return np.array([params.D * dtheta[0], 0.0, 0.0])


# -- environments ------------------------------------------------------------
# ``torque`` returns the torque applied ON the robot (a wall pushes back, so it
# is opposite to the penetration).  All variants are immutable values.

@dataclass(frozen=True)
class Free:
    def torque(self, theta, dtheta, t: float) -> np.ndarray:
        return np.zeros(3)


@dataclass(frozen=True)
class SpringWall:
    """Unilateral spring-damper wall on one joint.

    ``side=+1`` forbids angles above ``position``, ``side=-1`` below. The
    contact only pushes: damping cannot pull the joint back into the wall.
    """

    joint: int
    position: float
    stiffness: float
    damping: float = 0.0
    side: int = 1

    def __post_init__(self):
        if self.stiffness < 0 or self.damping < 0:
            raise ValueError("stiffness and damping must be non-negative")
        if self.side not in (1, -1):
            raise ValueError("side must be +1 or -1")

    def torque(self, theta, dtheta, t: float) -> np.ndarray:
        out = np.zeros(3)
        j = self.joint
        pen = self.side * (theta[j] - self.position)
        if pen > 0.0:
            tau = -self.side * self.stiffness * pen - self.damping * dtheta[j]
            if self.side * tau < 0.0:
                out[j] = tau
        return out


@dataclass(frozen=True)
class InclinedWall:
    """Straight wall in the plane of two joints, tilted by ``angle`` [rad].

    The wall passes through ``anchor``; its normal (-sin a, cos a) points into
    the forbidden side, so at ``angle=0`` it blocks the second joint from
    exceeding ``anchor[1]`` and the free direction along the wall is +joint 0.
    """

    joints: tuple[int, int]
    anchor: tuple[float, float]
    angle: float
    stiffness: float
    damping: float = 0.0

    def __post_init__(self):
        if self.stiffness < 0 or self.damping < 0:
            raise ValueError("stiffness and damping must be non-negative")

    @property
    def normal(self) -> tuple[float, float]:
        return (-math.sin(self.angle), math.cos(self.angle))

    @property
    def tangent(self) -> tuple[float, float]:
        return (math.cos(self.angle), math.sin(self.angle))

    def penetration(self, theta) -> float:
        i, j = self.joints
        nx, ny = self.normal
        return nx * (theta[i] - self.anchor[0]) + ny * (theta[j] - self.anchor[1])

    def torque(self, theta, dtheta, t: float) -> np.ndarray:
        out = np.zeros(3)
        pen = self.penetration(theta)
        if pen > 0.0:
            i, j = self.joints
            nx, ny = self.normal
            f = self.stiffness * pen + self.damping * (nx * dtheta[i] + ny * dtheta[j])
            if f > 0.0:
                out[i] = -f * nx
                out[j] = -f * ny
        return out


@dataclass(frozen=True)
class CoulombPatch:
    """Constant-level Coulomb friction on one joint inside a joint-space box.

    ``region`` holds one ``(lo, hi)`` pair per joint; ``None`` bounds are open.
    """

    joint: int
    level: float
    region: tuple = ((None, None), (None, None), (None, None))
    deadband: float = COULOMB_DEADBAND

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("friction level must be non-negative")

    def inside(self, theta) -> bool:
        for q, (lo, hi) in zip(theta, self.region):
            if lo is not None and q < lo:
                return False
            if hi is not None and q > hi:
                return False
        return True

    def torque(self, theta, dtheta, t: float) -> np.ndarray:
        out = np.zeros(3)
        v = dtheta[self.joint]
        if abs(v) >= self.deadband and self.inside(theta):
            out[self.joint] = -self.level * math.copysign(1.0, v)
        return out


@dataclass(frozen=True)
class Composite:
    items: tuple = field(default_factory=tuple)

    def torque(self, theta, dtheta, t: float) -> np.ndarray:
        out = np.zeros(3)
        for item in self.items:
            out += item.torque(theta, dtheta, t)
        return out


def env_torque(env, state: PlantState, t: float) -> np.ndarray:
    """Torque the environment applies on the robot at ``state``."""
    return env.torque(state.theta, state.dtheta, t)


def step_plant(state: PlantState, tau_ref, env, params: PlantParams,
               dt: float = CONTROL_DT, t: float = 0.0,
               substep: float = SUBSTEP) -> tuple[PlantState, np.ndarray]:
    """Advance one control tick with ``tau_ref`` held constant.

    Semi-implicit Euler on ``ceil(dt / substep)`` equal substeps. Returns the
    new state and the environment disturbance torque averaged over the tick.
    """
    if not 0.0 < dt <= CONTROL_DT:
        raise ValueError(f"dt must lie in (0, 1e-3], got {dt}")
    n = max(1, math.ceil(dt / substep - 1e-9))
    h = dt / n
    J1, J2, J3 = params.J
    G1, G2, G3 = params.G
    D = params.D
    lo, hi = params.joint_limits
    u1, u2, u3 = (float(x) for x in tau_ref)
    if not all(map(math.isfinite, (u1, u2, u3))):
        raise NonFinite("non-finite torque reference")
    q1, q2, q3 = (float(x) for x in state.theta)
    v1, v2, v3 = (float(x) for x in state.dtheta)
    free = isinstance(env, Free)
    dis_sum = np.zeros(3)
    clamped = False
    for k in range(n):
        if free:
            d1 = d2 = d3 = 0.0
        else:
            e = env.torque((q1, q2, q3), (v1, v2, v3), t + k * h)
            d1, d2, d3 = -e[0], -e[1], -e[2]
            dis_sum[0] += d1
            dis_sum[1] += d2
            dis_sum[2] += d3
        v1 += h * (u1 - d1 - D * v1) / J1
        v2 += h * (u2 - d2 - G1 * math.cos(q2) - G2 * math.sin(q3)) / J2
        v3 += h * (u3 - d3 - G3 * math.sin(q3)) / J3
        q1 += h * v1
        q2 += h * v2
        q3 += h * v3
        if not (lo <= q1 <= hi and lo <= q2 <= hi and lo <= q3 <= hi):
            clamped = True
            q1, v1 = _clamp(q1, v1, lo, hi)
            q2, v2 = _clamp(q2, v2, lo, hi)
            q3, v3 = _clamp(q3, v3, lo, hi)
    theta = np.array([q1, q2, q3])
    dtheta = np.array([v1, v2, v3])
    if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(dtheta))):
        raise NonFinite("plant state diverged")
    return PlantState(theta, dtheta, clamped), dis_sum / n


def _clamp(q: float, v: float, lo: float, hi: float) -> tuple[float, float]:
    if q > hi:
        return hi, min(v, 0.0)
    if q < lo:
        return lo, max(v, 0.0)
    return q, v
