"""Piecewise-linear anneal-fraction schedules."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np


@dataclass(frozen=True)
class AnnealSchedule:
    """``points`` are (time fraction, s) pairs with time running 0 -> 1.

    Forward anneals ramp s from 0 to 1.  Reverse anneals start at s = 1, ramp
    down to ``s_min``, pause, and ramp back up; they span the same number of
    sweeps as the forward schedule they are compared against.
    """

    kind: Literal["forward", "reverse"]
    points: tuple[tuple[float, float], ...]
    total_sweeps: int = 1000
    s_min: float | None = None

    def __post_init__(self):
        if self.total_sweeps < 1:
            raise ValueError("total_sweeps must be >= 1")
        ts = [p[0] for p in self.points]
        if ts[0] != 0.0 or ts[-1] != 1.0 or any(b < a for a, b in zip(ts, ts[1:])):
            raise ValueError("schedule times must run from 0 to 1 non-decreasingly")
        if any(not 0.0 <= s <= 1.0 for _, s in self.points):
            raise ValueError("anneal fraction must lie in [0, 1]")
        if self.kind == "forward":
            ss = [p[1] for p in self.points]
            if ss[0] != 0.0 or ss[-1] != 1.0 or any(b < a for a, b in zip(ss, ss[1:])):
                raise ValueError("forward schedule must rise monotonically from 0 to 1")
        elif self.kind == "reverse":
            if self.s_min is None or not 0.0 < self.s_min <= 1.0:
                raise ValueError("reverse schedule needs s_min in (0, 1]")
            if self.points[0][1] != 1.0 or self.points[-1][1] != 1.0:
                raise ValueError("reverse schedule must start and end at s = 1")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def forward(cls, total_sweeps: int = 1000) -> "AnnealSchedule":
        return cls("forward", ((0.0, 0.0), (1.0, 1.0)), total_sweeps)

    @classmethod
    def reverse(cls, s_min: float = 0.4, total_sweeps: int = 1000,
                ramp: float = 0.25) -> "AnnealSchedule":
        """Ramp down over ``ramp`` of the run, pause, ramp up over the last ``ramp``."""
        if not 0.0 < ramp <= 0.5:
            raise ValueError("ramp must lie in (0, 0.5]")
        pts = ((0.0, 1.0), (ramp, s_min), (1.0 - ramp, s_min), (1.0, 1.0))
        return cls("reverse", pts, total_sweeps, s_min)

    def s_values(self) -> np.ndarray:
        """Anneal fraction for each sweep, endpoints included."""
        t = np.arange(self.total_sweeps) / max(self.total_sweeps - 1, 1)
        xp, fp = zip(*self.points)
        return np.interp(t, xp, fp)
