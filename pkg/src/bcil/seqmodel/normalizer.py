from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import EmptyDataset


@dataclass(frozen=True)
class Normalizer:
    """Per-dimension min-max scaling to [0, 1]; constant dimensions map to 0.5."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D arrays of equal length")
        if np.any(lo > hi):
            raise ValueError("normalizer needs lo <= hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def span(self) -> np.ndarray:
        return self.hi - self.lo

    def _degenerate(self) -> np.ndarray:
        return self.hi == self.lo

    def normalize(self, v, cols=None) -> np.ndarray:
        lo, span, deg = self._pick(cols)
        v = np.asarray(v, dtype=float)
        out = (v - lo) / np.where(deg, 1.0, span)
        return np.where(deg, 0.5, out)

    def denormalize(self, v01, cols=None) -> np.ndarray:
        lo, span, deg = self._pick(cols)
        v01 = np.asarray(v01, dtype=float)
        return np.where(deg, lo, v01 * span + lo)

    def _pick(self, cols):
        if cols is None:
            return self.lo, self.span, self._degenerate()
        cols = list(cols)
        return self.lo[cols], self.span[cols], self._degenerate()[cols]


def fit_normalizer(sequences) -> Normalizer:
    """Fit over every row of every sequence (arrays or objects with ``rows``)."""
    arrays = [np.asarray(getattr(s, "rows", s), dtype=float) for s in sequences]
    arrays = [a for a in arrays if a.size]
    if not arrays:
        raise EmptyDataset("cannot fit a normalizer on no data")
    data = np.vstack(arrays)
    return Normalizer(data.min(axis=0), data.max(axis=0))
