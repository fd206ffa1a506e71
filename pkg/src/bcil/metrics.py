"""Episode metrics: bilateral synchronization, free-running prediction error,
task corridors and cycle-to-cycle repeatability."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .episode import Episode, downsample
from .errors import NoCycles, TaskMismatch, TooShort, UnsupportedVariant
from .seqmodel import lstm
from .tasks import LETTERS, TaskSpec, letter_path

TRANSIENT = 0.5          # s cut before synchronization statistics
ERASE_SWING = 0.10       # rad a joint-1 move must exceed to count as a stroke
LIMIT_MARGIN = 1e-9
PHASE_POINTS = 200


@dataclass(frozen=True)
class SyncStats:
    mean_pos_err: np.ndarray     # per joint, rad
    max_pos_err: np.ndarray      # per joint, rad
    mean_force_sum: np.ndarray   # per joint, N*m


def metric_sync(ep: Episode, transient: float = TRANSIENT) -> SyncStats:
    """Position tracking |θm−θs| and force balance |τm+τs| after ``transient``."""
    keep = ep.t >= transient
    if not np.any(keep):
        raise TooShort(f"episode ends before the {transient} s transient cut")
    m, s = ep.master[keep], ep.slave[keep]
    dpos = np.abs(m[:, :3] - s[:, :3])
    return SyncStats(dpos.mean(axis=0), dpos.max(axis=0),
                     np.abs(m[:, 6:9] + s[:, 6:9]).mean(axis=0))


def metric_open_loop(model, ep: Episode, horizon: int) -> float:
    """Free-run ``horizon`` steps from the first 20 ms row; normalized MSE."""
    v = model.variant
    if not v.supports_ar:
        raise UnsupportedVariant(f"{v.name} outputs cannot be fed back as inputs")
    rows = downsample(ep).rows
    if horizon < 1 or horizon > rows.shape[0] - 1:
        raise TooShort(f"horizon {horizon} needs {horizon + 1} rows, episode has {rows.shape[0]}")
    rows01 = model.normalizer.normalize(rows)
    x = rows01[0, list(v.inputs)]
    state = model.initial_state()
    preds = np.empty((horizon, v.n_out))
    for k in range(horizon):
        x, state = model.step(x, state)
        preds[k] = x
    return lstm.loss_mse(preds, rows01[1:horizon + 1][:, list(v.outputs)])


# -- corridors -------------------------------------------------------------------

@dataclass
class CorridorResult:
    success: bool
    diagnostics: list = field(default_factory=list)
    values: dict = field(default_factory=dict)


def _check_task(ep: Episode, task: TaskSpec) -> None:
    kind = ep.meta.get("task")
    if kind is not None and kind != task.kind:
        raise TaskMismatch(f"episode was recorded on {kind!r}, not {task.kind!r}")
    if task.kind == "write" and "task.letter" in ep.meta and ep.meta["task.letter"] != task.params["letter"]:
        raise TaskMismatch("episode letter differs from the task letter")


def out_of_limits(ep: Episode, limit: float = np.pi) -> bool:
    th = ep.slave[:, :3]
    return bool(np.any(np.abs(th) >= limit - LIMIT_MARGIN)) or int(ep.meta.get("clamped_ticks", "0")) > 0


def zigzag(q, swing: float) -> list[int]:
    """Indices of turning points between moves larger than ``swing``.

    Reversals smaller than ``swing`` (chatter, jitter) are ignored.
    """
    q = np.asarray(q, dtype=float)
    pivots = []
    trend, lo, hi, ext = 0, 0, 0, 0
    for i in range(1, len(q)):
        if trend == 0:
            if q[i] < q[lo]:
                lo = i
            if q[i] > q[hi]:
                hi = i
            if q[i] - q[lo] > swing:
                trend, ext = 1, i
            elif q[hi] - q[i] > swing:
                trend, ext = -1, i
        elif trend == 1:
            if q[i] > q[ext]:
                ext = i
            elif q[ext] - q[i] > swing:
                pivots.append(ext)
                trend, ext = -1, i
        else:
            if q[i] < q[ext]:
                ext = i
            elif q[i] - q[ext] > swing:
                pivots.append(ext)
                trend, ext = 1, i
    return pivots


def _draw(ep: Episode, task: TaskSpec, res: CorridorResult) -> None:
    c = task.corridor
    wall = task.environment
    th = ep.slave[:, :3]
    i, j = wall.joints
    nx, ny = wall.normal
    tx, ty = wall.tangent
    dx, dy = th[:, i] - wall.anchor[0], th[:, j] - wall.anchor[1]
    pen = nx * dx + ny * dy
    s = tx * dx + ty * dy
    touch = (pen >= c.contact_band[0]) & (pen <= c.contact_band[1])
    best = 0.0
    for on, grp in itertools.groupby(range(len(touch)), key=lambda k: touch[k]):
        if on:
            idx = list(grp)
            best = max(best, float(s[idx].max() - s[idx].min()))
    res.values.update(arc=best, contact_fraction=float(touch.mean()),
                      max_penetration=float(pen.max()))
    if pen.max() > c.contact_band[1]:
        res.diagnostics.append("out-of-band")
    if best < c.min_arc:
        res.diagnostics.append("short-arc" if touch.any() else "no-contact")


def _erase(ep: Episode, task: TaskSpec, res: CorridorResult) -> None:
    c = task.corridor
    paper = task.environment.items[0]
    th = ep.slave[:, :3]
    t = ep.t
    pen = paper.side * (th[:, paper.joint] - paper.position)
    settled = t >= TRANSIENT
    touch = (pen >= c.contact_band[0]) & (pen <= c.contact_band[1])
    contact = float(touch[settled].mean()) if settled.any() else 0.0
    piv = zigzag(th[:, 0], ERASE_SWING)
    times = np.concatenate([[t[0]], t[piv], [t[-1]]])
    gap = float(np.diff(times).max())
    turns = np.abs(th[piv, 0])
    res.values.update(reversals=len(piv), max_gap=gap, contact_fraction=contact,
                      turn_min=float(turns.min()) if piv else 0.0,
                      turn_max=float(turns.max()) if piv else 0.0)
    if gap > c.stop_window:
        res.diagnostics.append("stopped")
    if np.any(np.abs(turns - c.turn_center) > c.turn_band):
        res.diagnostics.append("out-of-band")
    if contact < c.contact_ratio:
        res.diagnostics.append("no-contact")


def _point_to_path(p: np.ndarray, path: np.ndarray) -> np.ndarray:
    """Distance from each row of ``p`` (n, 2) to the closed polyline ``path``."""
    a, b = path[:-1], path[1:]
    ab = b - a
    ap = p[:, None, :] - a[None]
    u = np.clip((ap * ab).sum(-1) / (ab * ab).sum(-1), 0.0, 1.0)
    d = ap - u[..., None] * ab
    return np.sqrt((d * d).sum(-1)).min(axis=1)


def write_cycles(ep: Episode, task: TaskSpec) -> list[tuple[int, int]]:
    """Cycle boundaries: closest approaches to the letter's first key point.

    An approach opens when the (joint 1, joint 3) point comes within the
    key-point radius and closes when it moves twice that far away.
    """
    r = task.corridor.waypoint_radius
    th = ep.slave[:, :3]
    start = np.array(LETTERS[task.params["letter"]][0][:2])
    d = np.hypot(th[:, 0] - start[0], th[:, 2] - start[1])
    marks, inside, best = [], False, 0
    for k, dk in enumerate(d):
        if not inside and dk < r:
            inside, best = True, k
        elif inside:
            if dk < d[best]:
                best = k
            if dk > 2 * r:
                marks.append(best)
                inside = False
    if inside:
        marks.append(best)
    return list(zip(marks[:-1], marks[1:]))


def _cycle_ok(th: np.ndarray, task: TaskSpec) -> bool:
    c = task.corridor
    keys = np.array([k[:2] for k in LETTERS[task.params["letter"]]])
    xz = th[:, [0, 2]]
    if _point_to_path(xz, letter_path(task.params["letter"])).max() > c.path_band:
        return False
    last = -1
    for key in keys[1:]:
        d = np.hypot(xz[:, 0] - key[0], xz[:, 1] - key[1])
        after = np.arange(len(d)) > last
        hit = np.flatnonzero(after & (d < c.waypoint_radius))
        if hit.size == 0:
            return False
        last = int(hit[0])
    return True


def _write(ep: Episode, task: TaskSpec, res: CorridorResult) -> None:
    c = task.corridor
    th = ep.slave[:, :3]
    cycles = write_cycles(ep, task)
    good = [_cycle_ok(th[a:b + 1], task) for a, b in cycles]
    run = best = 0
    for g in good:
        run = run + 1 if g else 0
        best = max(best, run)
    res.values.update(cycles=len(cycles), good_cycles=int(sum(good)), best_run=best)
    if not cycles:
        moved = np.ptp(th[ep.t >= TRANSIENT, 0]) if np.any(ep.t >= TRANSIENT) else 0.0
        res.diagnostics.append("stopped" if moved < 0.05 else "no-cycles")
    elif best < c.cycles_required:
        res.diagnostics.append("out-of-band")


def metric_corridor(ep: Episode, task: TaskSpec) -> CorridorResult:
    """Success of one episode against the joint-space corridor of ``task``."""
    _check_task(ep, task)
    res = CorridorResult(False)
    if out_of_limits(ep):
        res.diagnostics.append("out-of-band")
        res.values["joint_limit"] = True
    check = {"draw": _draw, "erase": _erase, "write": _write}.get(task.kind)
    if check is not None:
        check(ep, task, res)
    res.diagnostics = sorted(set(res.diagnostics))
    res.success = not res.diagnostics
    return res


# -- repeatability -----------------------------------------------------------------

def resample_cycle(th: np.ndarray, points: int = PHASE_POINTS) -> np.ndarray:
    src = np.linspace(0.0, 1.0, th.shape[0])
    dst = np.linspace(0.0, 1.0, points)
    return np.stack([np.interp(dst, src, th[:, j]) for j in range(th.shape[1])], axis=1)


def cycle_deviation(cycles: list[np.ndarray], points: int = PHASE_POINTS) -> float:
    """Mean pairwise RMS between cycles resampled to a common phase grid."""
    if len(cycles) < 2:
        raise NoCycles(f"need at least two cycles, got {len(cycles)}")
    grid = [resample_cycle(c, points) for c in cycles]
    rms = [float(np.sqrt(np.mean((a - b) ** 2))) for a, b in itertools.combinations(grid, 2)]
    return float(np.mean(rms))


def metric_cycle_variance(ep: Episode, task: TaskSpec, points: int = PHASE_POINTS) -> float:
    if task.kind != "write":
        raise TaskMismatch("cycle variance is defined for the write task")
    _check_task(ep, task)
    th = ep.slave[:, :3]
    cycles = [th[a:b + 1] for a, b in write_cycles(ep, task)]
    return cycle_deviation(cycles, points)
