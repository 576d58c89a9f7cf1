"""Per-trial measurement log and the summary metrics derived from it."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

METRICS = (
    "wait_time",
    "num_waiting",
    "customer_dispatch_time",
    "station_dispatch_time",
    "inter_vehicle_distance",
    "total_travel_distance_km",
)


@dataclass
class TrialLog:
    """Raw measurements accumulated while a trial runs."""

    duration: float = 0.0
    waits: list = field(default_factory=list)
    customer_dispatch: list = field(default_factory=list)
    station_dispatch: list = field(default_factory=list)
    queue_area: float = 0.0  # integral of queue length over time
    distance_samples: list = field(default_factory=list)
    odometers: list = field(default_factory=list)
    created: int = 0
    completed: int = 0
    dispatch_rounds: int = 0
    fallbacks: int = 0


@dataclass
class MetricsReport:
    wait_time: float
    num_waiting: float
    customer_dispatch_time: float
    station_dispatch_time: float
    inter_vehicle_distance: float
    total_travel_distance_km: float
    served: int = 0
    created: int = 0
    dispatch_rounds: int = 0
    fallbacks: int = 0

    def values(self) -> dict:
        return {m: getattr(self, m) for m in METRICS}


def _mean(xs) -> float:
    return float(np.mean(xs)) if len(xs) else math.nan


def collect_metrics(log: TrialLog) -> MetricsReport:
    return MetricsReport(
        wait_time=_mean(log.waits),
        num_waiting=log.queue_area / log.duration if log.duration > 0 else math.nan,
        customer_dispatch_time=_mean(log.customer_dispatch),
        station_dispatch_time=_mean(log.station_dispatch),
        inter_vehicle_distance=_mean(log.distance_samples),
        total_travel_distance_km=sum(log.odometers) / 1000.0,
        served=len(log.waits),
        created=log.created,
        dispatch_rounds=log.dispatch_rounds,
        fallbacks=log.fallbacks,
    )


@dataclass
class Aggregate:
    metric: str
    mean: float
    std: float
    n: int
    values: list


def aggregate(reports: list[MetricsReport]) -> dict[str, Aggregate]:
    """Mean and sample standard deviation across trials, skipping empty trials."""
    out = {}
    for m in METRICS:
        vals = [getattr(r, m) for r in reports]
        finite = [v for v in vals if not math.isnan(v)]
        mean = float(np.mean(finite)) if finite else math.nan
        std = float(np.std(finite, ddof=1)) if len(finite) > 1 else math.nan
        out[m] = Aggregate(m, mean, std, len(finite), vals)
    return out
