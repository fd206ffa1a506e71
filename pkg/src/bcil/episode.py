"""Recorded 1 ms episodes, the 20 ms training sequences derived from them, and CSV I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import Malformed, TooShort

PERIOD_MS = 1
STRIDE = 20

_JOINTS = ("1", "2", "3")
SLAVE_COLS = [f"s_{q}{j}" for q in ("th", "dth", "tau") for j in _JOINTS]
MASTER_COLS = [f"m_{q}{j}" for q in ("th", "dth", "tau") for j in _JOINTS]
COLUMNS = (["t_ms"] + SLAVE_COLS + MASTER_COLS
           + [f"ref_s{j}" for j in _JOINTS] + [f"ref_m{j}" for j in _JOINTS]
           + [f"env{j}" for j in _JOINTS])
HEADER = ",".join(COLUMNS)

SLAVE = slice(1, 10)
MASTER = slice(10, 19)
REF_S = slice(19, 22)
REF_M = slice(22, 25)
ENV = slice(25, 28)


@dataclass
class Episode:
    """One run sampled every 1 ms.

    ``table`` has one row per tick with the columns in :data:`COLUMNS`.
    ``ref_*`` are the motor torques applied over the following tick (controller
    reference plus disturbance compensation); ``env`` is the environment
    torque acting on the slave in disturbance sign.
    """

    table: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.table = np.asarray(self.table, dtype=float)
        if self.table.ndim != 2 or self.table.shape[1] != len(COLUMNS):
            raise ValueError(f"episode table must have {len(COLUMNS)} columns")

    def __len__(self) -> int:
        return self.table.shape[0]

    @property
    def t(self) -> np.ndarray:
        return self.table[:, 0] * 1e-3

    @property
    def slave(self) -> np.ndarray:
        return self.table[:, SLAVE]

    @property
    def master(self) -> np.ndarray:
        return self.table[:, MASTER]

    @property
    def ref_s(self) -> np.ndarray:
        return self.table[:, REF_S]

    @property
    def ref_m(self) -> np.ndarray:
        return self.table[:, REF_M]

    @property
    def env(self) -> np.ndarray:
        return self.table[:, ENV]


@dataclass
class TrainingSequence:
    """18-dim rows (slave 9 | master 9) every ``STRIDE`` ms, in recorded order."""

    rows: np.ndarray
    stride_ms: int = STRIDE
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.rows.shape[0]


def downsample(ep: Episode, stride: int = STRIDE) -> TrainingSequence:
    if len(ep) < 2 * stride:
        raise TooShort(f"episode has {len(ep)} rows, need at least {2 * stride}")
    n = len(ep) // stride
    picked = ep.table[: n * stride : stride]
    rows = np.hstack([picked[:, SLAVE], picked[:, MASTER]])
    return TrainingSequence(rows, stride * PERIOD_MS, dict(ep.meta))


def _fmt(x: float) -> str:
    return repr(float(x))


def save_episode(ep: Episode, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    meta = dict(ep.meta)
    meta["rows"] = str(len(ep))
    lines = [f"#{k}={meta[k]}" for k in sorted(meta)]
    lines.append(HEADER)
    for row in ep.table.tolist():
        lines.append(",".join(map(_fmt, row)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def load_episode(path) -> Episode:
    meta: dict = {}
    rows = []
    header_seen = False
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.endswith("\n"):
                raise Malformed("unterminated last line (truncated file?)", lineno)
            line = raw[:-1]
            if not header_seen:
                if line.startswith("#"):
                    key, sep, value = line[1:].partition("=")
                    if not sep:
                        raise Malformed("metadata line without '='", lineno)
                    meta[key] = value
                    continue
                if line != HEADER:
                    raise Malformed("unexpected header", lineno)
                header_seen = True
                continue
            fields = line.split(",")
            if len(fields) != len(COLUMNS):
                raise Malformed(f"expected {len(COLUMNS)} fields, got {len(fields)}", lineno)
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise Malformed(str(exc), lineno) from None
    if not header_seen:
        raise Malformed("missing header")
    expected = meta.pop("rows", None)
    if expected is not None and int(expected) != len(rows):
        raise Malformed(f"metadata declares {expected} rows, file has {len(rows)}")
    table = np.asarray(rows, dtype=float).reshape(-1, len(COLUMNS))
    return Episode(table, meta)
