"""Joint-space analogues of the drawing, erasing and writing tasks.

The hardware tasks are Cartesian (a pen against a ruler, an eraser on paper,
letters on paper). Without link lengths they are mapped into joint space:

* draw  -- an :class:`InclinedWall` in the (joint 1, joint 2) plane stands in
  for the ruler; its tilt is the ruler inclination and ``shift`` moves it along
  the approach direction (reference lines A/B/C).
* erase -- a :class:`SpringWall` on joint 2 is the paper surface (its position
  encodes paper height) with Coulomb friction on joint 1 while in contact; the
  operator reciprocates joint 1.
* write -- the same paper wall; a closed waypoint loop in the (joint 1, joint 3)
  plane with pen-down/pen-up moves of joint 2 is one "letter".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .plant import CoulombPatch, Composite, Free, InclinedWall, SpringWall

TASK_KINDS = ("draw", "erase", "write", "free")

WALL_STIFFNESS = 5.0     # N*m/rad
WALL_DAMPING = 0.02      # N*m*s/rad
PRESS_DEPTH = 0.08       # rad, how far the operator's reference sits inside a surface


def paper_position(height_mm: float) -> float:
    """Joint-2 angle of the paper surface for a given paper height."""
    return 0.30 + 0.004 * (height_mm - 55.0)


@dataclass(frozen=True)
class Corridor:
    """Numeric success bands; which fields matter depends on the task kind."""

    contact_band: tuple[float, float] = (-0.01, 0.06)   # penetration range counted as touching
    min_arc: float = 0.30                               # draw: required slide length, rad
    turn_center: float = 0.33                           # erase: nominal |joint-1| turnaround
    turn_band: float = 0.09                             # erase: allowed deviation of a turnaround
    stop_window: float = 1.5                            # erase: max time without a reversal, s
    contact_ratio: float = 0.8                          # erase: min share of time on the paper
    path_band: float = 0.10                             # write: max distance from the letter path
    cycles_required: int = 5                            # write
    waypoint_radius: float = 0.06                       # write: key-point visit radius


@dataclass(frozen=True)
class TaskSpec:
    name: str
    kind: str
    environment: object
    duration: float
    initial_pose: tuple[float, float, float]
    params: dict = field(default_factory=dict)
    corridor: Corridor = Corridor()

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")

    def with_duration(self, duration: float) -> "TaskSpec":
        return TaskSpec(self.name, self.kind, self.environment, duration,
                        self.initial_pose, dict(self.params), self.corridor)

    def metadata(self) -> dict:
        out = {"task": self.kind, "task_name": self.name, "duration": repr(self.duration)}
        for k, v in sorted(self.params.items()):
            out[f"task.{k}"] = repr(v) if isinstance(v, float) else str(v)
        return out


# -- draw ----------------------------------------------------------------------

DRAW_CONTACT = (-0.20, 0.35)
DRAW_JOINT3 = 0.20
DRAW_APPROACH = 0.15


def draw_task(angle_deg: float = 0.0, shift: float = 0.0, duration: float = 3.0) -> TaskSpec:
    anchor = (DRAW_CONTACT[0], DRAW_CONTACT[1] + shift)
    wall = InclinedWall((0, 1), anchor, math.radians(angle_deg), WALL_STIFFNESS, WALL_DAMPING)
    start = (DRAW_CONTACT[0], DRAW_CONTACT[1] - DRAW_APPROACH, DRAW_JOINT3)
    return TaskSpec(f"draw[{angle_deg:g}deg,{shift:+g}]", "draw", wall, duration, start,
                    {"angle_deg": float(angle_deg), "shift": float(shift)})


# -- erase ---------------------------------------------------------------------

ERASE_JOINT3 = 0.10
ERASE_FRICTION = 0.02    # N*m
ERASE_PERIOD = 1.0       # s per back-and-forth


def erase_task(height_mm: float = 55.0, duration: float = 10.0) -> TaskSpec:
    pos = paper_position(height_mm)
    paper = SpringWall(1, pos, WALL_STIFFNESS, WALL_DAMPING, side=1)
    friction = CoulombPatch(0, ERASE_FRICTION, ((None, None), (pos - 0.005, None), (None, None)))
    start = (-0.25, pos, ERASE_JOINT3)
    return TaskSpec(f"erase[{height_mm:g}mm]", "erase", Composite((paper, friction)), duration,
                    start, {"height_mm": float(height_mm)})


# -- write ---------------------------------------------------------------------

# (joint 1, joint 3, pen down on the stroke leaving this point) key points of
# one letter, visited in order and closed back onto the first point.
LETTERS = {
    "A": ((-0.20, -0.10, True), (0.00, 0.20, True), (0.20, -0.10, False),
          (-0.10, 0.03, True), (0.10, 0.03, False)),
    "B": ((-0.15, -0.15, True), (-0.15, 0.20, True), (0.12, 0.12, True),
          (-0.15, 0.02, True), (0.15, -0.08, True)),
}
WRITE_PERIOD = 3.75      # s per letter (four letters per 15 s demonstration)
LIFT = 0.10              # rad of joint-2 retraction for pen-up moves


def write_task(height_mm: float = 55.0, letter: str = "A", duration: float = 15.0) -> TaskSpec:
    if letter not in LETTERS:
        raise ValueError(f"unknown letter {letter!r}")
    pos = paper_position(height_mm)
    paper = SpringWall(1, pos, WALL_STIFFNESS, WALL_DAMPING, side=1)
    x0, z0, _ = LETTERS[letter][0]
    return TaskSpec(f"write[{letter},{height_mm:g}mm]", "write", paper, duration,
                    (x0, pos, z0), {"height_mm": float(height_mm), "letter": letter})


def letter_path(letter: str) -> np.ndarray:
    """Closed key-point polyline of a letter in the (joint 1, joint 3) plane."""
    pts = [(x, z) for x, z, _ in LETTERS[letter]]
    pts.append(pts[0])
    return np.asarray(pts, dtype=float)


def free_task(duration: float = 3.0, pose=(0.0, 0.3, 0.2)) -> TaskSpec:
    return TaskSpec("free", "free", Free(), duration, tuple(pose))


def make_task(kind: str, duration: float | None = None, **params) -> TaskSpec:
    builders = {"draw": draw_task, "erase": erase_task, "write": write_task, "free": free_task}
    if kind not in builders:
        raise ValueError(f"unknown task kind {kind!r}")
    if duration is not None:
        params["duration"] = duration
    return builders[kind](**params)


def task_from_metadata(meta: dict) -> TaskSpec:
    kind = meta.get("task")
    if kind is None:
        raise ValueError("metadata has no task")
    params = {}
    for key, value in meta.items():
        if key.startswith("task."):
            name = key[5:]
            params[name] = value if name == "letter" else float(value)
    return make_task(kind, duration=float(meta["duration"]), **params)
