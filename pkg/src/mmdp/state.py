"""Snapshot of the fleet handed to one dispatch round."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .demand import CustomerRequest
from .world import Position


@dataclass(frozen=True)
class VehicleState:
    """Position ``position`` and current trip end ``destination``.

    A vacant vehicle has ``destination == position``.
    """

    id: int
    position: Position
    destination: Position
    passenger: Optional[int] = None

    @property
    def occupied(self) -> bool:
        return self.passenger is not None


@dataclass(frozen=True)
class WorldState:
    clock: float
    vehicles: tuple[VehicleState, ...]
    stations: tuple[Position, ...]
    waiting: tuple[CustomerRequest, ...] = ()
    in_service: tuple[int, ...] = field(default=())

    @property
    def n_vehicles(self) -> int:
        return len(self.vehicles)

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    def waiting_time(self, customer: CustomerRequest) -> float:
        return self.clock - customer.request_time

    def earliest(self, n: int) -> tuple[CustomerRequest, ...]:
        """The ``n`` earliest-received waiting customers."""
        order = sorted(self.waiting, key=lambda c: (c.request_time, c.id))
        return tuple(order[:n])
