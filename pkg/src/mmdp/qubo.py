r"""QUBO builders for the dispatch round.

Two formulations share one container, :class:`QuboProblem`:

* ``build_proposed`` -- one binary per (vehicle, station) and per
  (vehicle, customer).  Every vehicle takes exactly one target, every
  customer exactly one vehicle, travel time is minimised after normalising by
  its mean, and station counts are pulled towards the per-station targets.

* ``build_vrp`` -- the two-slot routing baseline: per (vehicle, station) and
  per (vehicle, customer, slot) with slot in {1, 2}.

Energies follow

.. math::

    E(b) = c + \sum_i a_i b_i + \sum_{i<j} q_{ij} b_i b_j .
"""

from __future__ import annotations

import itertools
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .state import WorldState
from .targets import StationTargets
from .world import GridMap

Key = tuple  # ("s", i, j) | ("c", i, k) | ("ct", i, k, t)


@dataclass(frozen=True)
class QuboWeights:
    B0: float = 0.1
    B1: float = 0.3
    A2: float = 1 / 3
    B_vrp: float = 0.001
    enable_HA1: bool = True
    enable_HB1: bool = True

    def __post_init__(self):
        if self.B0 < 0 or self.B1 < 0:
            raise ValueError("B0 and B1 must be non-negative")
        if self.A2 <= 0:
            raise ValueError("A2 must be positive")
        if self.A2 >= 0.5:
            warnings.warn(f"A2={self.A2} >= 1/2: two-station VRP violations can have "
                          "non-positive constraint energy", stacklevel=3)


@dataclass(frozen=True)
class VarMap:
    """Bijection between flat variable ids and (kind, vehicle, target[, slot]) keys."""

    keys: tuple[Key, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {k: n for n, k in enumerate(self.keys)})
        if len(self._index) != len(self.keys):
            raise ValueError("duplicate variable key")

    def __len__(self):
        return len(self.keys)

    def index(self, key: Key) -> int:
        return self._index[tuple(key)]

    def key(self, idx: int) -> Key:
        return self.keys[idx]

    @classmethod
    def proposed(cls, n_veh: int, n_st: int, n_cust: int) -> "VarMap":
        keys = [("s", i, j) for i in range(n_veh) for j in range(n_st)]
        keys += [("c", i, k) for i in range(n_veh) for k in range(n_cust)]
        return cls(tuple(keys))

    @classmethod
    def vrp(cls, n_veh: int, n_st: int, n_cust: int) -> "VarMap":
        keys = [("s", i, j) for i in range(n_veh) for j in range(n_st)]
        keys += [("ct", i, k, t) for t in (1, 2) for i in range(n_veh) for k in range(n_cust)]
        return cls(tuple(keys))


@dataclass(frozen=True, eq=False)
class QuboProblem:
    n_vars: int
    linear: np.ndarray
    quadratic: dict
    offset: float
    varmap: VarMap
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float)
        if lin.shape != (self.n_vars,):
            raise ValueError("linear must have n_vars entries")
        lin.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        for (i, j) in self.quadratic:
            if not 0 <= i < j < self.n_vars:
                raise ValueError(f"quadratic key {(i, j)} is not strictly upper-triangular")
        if len(self.varmap) != self.n_vars:
            raise ValueError("varmap size does not match n_vars")

    @property
    def formulation(self) -> str:
        return self.meta.get("formulation", "raw")

    def upper_matrix(self) -> np.ndarray:
        """Dense matrix with linear terms on the diagonal and q_ij above it."""
        m = np.diag(self.linear).astype(float)
        for (i, j), c in self.quadratic.items():
            m[i, j] = c
        return m

    def energy(self, bits: Sequence[int]) -> float:
        return energy(self, bits)

    # -- serialisation ------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "n_vars": self.n_vars,
            "offset": self.offset,
            "linear": [float(v) for v in self.linear],
            "quadratic": [[int(i), int(j), float(c)] for (i, j), c in sorted(self.quadratic.items())],
            "varmap": [list(k) for k in self.varmap.keys],
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "QuboProblem":
        n = int(d["n_vars"])
        keys = d.get("varmap") or [["x", i] for i in range(n)]
        return cls(n, np.array(d["linear"], dtype=float),
                   {(int(i), int(j)): float(c) for i, j, c in d["quadratic"]},
                   float(d["offset"]), VarMap(tuple(tuple(k) for k in keys)),
                   dict(d.get("meta", {})))

    @classmethod
    def from_json(cls, text: str) -> "QuboProblem":
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_terms(cls, n_vars: int, linear: Iterable[float] | None = None,
                   quadratic: dict | None = None, offset: float = 0.0) -> "QuboProblem":
        """Plain problem without dispatch semantics (tests, CLI files)."""
        acc = _Acc(n_vars)
        if linear is not None:
            acc.lin += np.asarray(linear, dtype=float)
        for (i, j), c in (quadratic or {}).items():
            acc.pair(i, j, c)
        acc.const = offset
        return acc.build(VarMap(tuple(("x", i) for i in range(n_vars))), {"formulation": "raw"})


def energy(problem: QuboProblem, bits: Sequence[int]) -> float:
    b = np.asarray(bits, dtype=float)
    if b.shape != (problem.n_vars,):
        raise ValueError(f"expected {problem.n_vars} bits, got {b.shape}")
    e = problem.offset + float(problem.linear @ b)
    for (i, j), c in problem.quadratic.items():
        if b[i] and b[j]:
            e += c
    return e


class _Acc:
    """Collects polynomial terms, folding b_i * b_i into b_i."""

    def __init__(self, n: int):
        self.n = n
        self.lin = np.zeros(n)
        self.quad: dict[tuple[int, int], float] = {}
        self.const = 0.0

    def pair(self, i: int, j: int, c: float):
        if c == 0:
            return
        if i == j:
            self.lin[i] += c
            return
        key = (i, j) if i < j else (j, i)
        self.quad[key] = self.quad.get(key, 0.0) + c

    def product(self, c1: float, t1: list, c2: float, t2: list, scale: float = 1.0):
        """Add scale * (c1 + sum a b)(c2 + sum a b); terms are (var, coeff) lists."""
        self.const += scale * c1 * c2
        for v, a in t2:
            self.lin[v] += scale * c1 * a
        for v, a in t1:
            self.lin[v] += scale * c2 * a
        for (v1, a1), (v2, a2) in itertools.product(t1, t2):
            self.pair(v1, v2, scale * a1 * a2)

    def square(self, c: float, terms: list, scale: float = 1.0):
        self.product(c, terms, c, terms, scale)

    def build(self, varmap: VarMap, meta: dict) -> QuboProblem:
        quad = {k: v for k, v in sorted(self.quad.items()) if v != 0.0}
        return QuboProblem(self.n, self.lin.copy(), quad, float(self.const), varmap, meta)


def _customer_ids(customers) -> list[int]:
    return [int(c.id) for c in customers]


def build_proposed(state: WorldState, targets: StationTargets | None,
                   weights: QuboWeights, grid: GridMap) -> QuboProblem:
    """Assignment QUBO over ``state.waiting`` (caller truncates to N customers)."""
    veh, stations, custs = state.vehicles, state.stations, list(state.waiting)
    n_veh, n_st, n_c = len(veh), len(stations), len(custs)
    if n_c > n_veh:
        raise ValueError(f"{n_c} customers exceed {n_veh} vehicles; truncate to the earliest first")
    if weights.enable_HB1 and (targets is None or len(targets.tau) != n_st):
        raise ValueError("station targets required for H_B1")
    vm = VarMap.proposed(n_veh, n_st, n_c)
    s = lambda i, j: vm.index(("s", i, j))
    c = lambda i, k: vm.index(("c", i, k))
    acc = _Acc(len(vm))

    t_st = np.array([[grid.travel_time_via(v.position, v.destination, p) for p in stations]
                     for v in veh]).reshape(n_veh, n_st)
    t_cu = np.array([[grid.travel_time_via(v.position, v.destination, q.origin) for q in custs]
                     for v in veh]).reshape(n_veh, n_c)

    # H_A0: one target per vehicle
    for i in range(n_veh):
        terms = [(s(i, j), -1.0) for j in range(n_st)] + [(c(i, k), -1.0) for k in range(n_c)]
        acc.square(1.0, terms)
    # H_A1: one vehicle per customer
    if weights.enable_HA1:
        for k in range(n_c):
            acc.square(1.0, [(c(i, k), -1.0) for i in range(n_veh)])
    # H_B0: travel time normalised by its mean over all pairs
    total = t_st.sum() + t_cu.sum()
    t_avg = total / (n_veh * (n_st + n_c)) if n_veh * (n_st + n_c) else 0.0
    if t_avg > 0 and weights.B0:
        for i in range(n_veh):
            for j in range(n_st):
                acc.lin[s(i, j)] += weights.B0 * t_st[i, j] / t_avg
            for k in range(n_c):
                acc.lin[c(i, k)] += weights.B0 * t_cu[i, k] / t_avg
    # H_B1: station counts towards tau
    if weights.enable_HB1 and weights.B1:
        for j in range(n_st):
            acc.square(float(targets.tau[j]), [(s(i, j), -1.0) for i in range(n_veh)], weights.B1)

    meta = {
        "formulation": "proposed", "n_vehicles": n_veh, "n_stations": n_st,
        "n_customers": n_c, "customer_ids": _customer_ids(custs),
        "vehicle_ids": [int(v.id) for v in veh],
        "enable_HA1": weights.enable_HA1, "enable_HB1": weights.enable_HB1,
        "B0": weights.B0, "B1": weights.B1, "t_avg": float(t_avg),
        "tau": [float(x) for x in targets.tau] if targets is not None else None,
    }
    return acc.build(vm, meta)


def build_vrp(state: WorldState, weights: QuboWeights, grid: GridMap) -> QuboProblem:
    """Two-slot routing QUBO over ``state.waiting`` (caller truncates to 2N customers).

    Vehicles still carrying a passenger are costed from their drop-off point.
    """
    veh, stations, custs = state.vehicles, state.stations, list(state.waiting)
    n_veh, n_st, n_c = len(veh), len(stations), len(custs)
    if n_c > 2 * n_veh:
        raise ValueError(f"{n_c} customers exceed 2N = {2 * n_veh}; truncate to the earliest first")
    n1st = min(n_veh, n_c)
    vm = VarMap.vrp(n_veh, n_st, n_c)
    s = lambda i, j: vm.index(("s", i, j))
    x = lambda i, k, t: vm.index(("ct", i, k, t))
    acc = _Acc(len(vm))

    # H_A0: each customer in exactly one (vehicle, slot)
    for k in range(n_c):
        acc.square(1.0, [(x(i, k, t), -1.0) for i in range(n_veh) for t in (1, 2)])
    # H_A1: fill n1st first slots
    acc.square(float(n1st), [(x(i, k, 1), -1.0) for i in range(n_veh) for k in range(n_c)])
    for i in range(n_veh):
        st = [(s(i, j), 1.0) for j in range(n_st)]
        # H_A2: station => at most one customer, no station => two; no slot 2 with a station
        acc.product(1.0, [(v, -a) for v, a in st],
                    2.0, [(x(i, k, t), -1.0) for k in range(n_c) for t in (1, 2)], weights.A2)
        acc.product(0.0, st, 0.0, [(x(i, k, 2), 1.0) for k in range(n_c)], weights.A2)
        # H_A3: no two stations, no two customers in one slot
        for j1, j2 in itertools.combinations(range(n_st), 2):
            acc.pair(s(i, j1), s(i, j2), 1.0)
        for t in (1, 2):
            for k1, k2 in itertools.combinations(range(n_c), 2):
                acc.pair(x(i, k1, t), x(i, k2, t), 1.0)

    # H_B: travel cost of the three route patterns
    B = weights.B_vrp
    if B:
        for i, v in enumerate(veh):
            start = v.destination  # drop-off first when occupied
            lead = grid.travel_time(v.position, v.destination)
            for j, p in enumerate(stations):
                direct = lead + grid.travel_time(start, p)
                acc.product(0.0, [(s(i, j), 1.0)],
                            1.0, [(x(i, k, 1), -1.0) for k in range(n_c)], B * direct)
                for k, q in enumerate(custs):
                    acc.pair(s(i, j), x(i, k, 1), B * (lead + grid.travel_time_via(start, q.origin, p)))
            for k1, q1 in enumerate(custs):
                for k2, q2 in enumerate(custs):
                    acc.pair(x(i, k1, 1), x(i, k2, 2),
                             B * (lead + grid.travel_time_via(start, q1.origin, q2.origin)))

    meta = {
        "formulation": "vrp", "n_vehicles": n_veh, "n_stations": n_st,
        "n_customers": n_c, "customer_ids": _customer_ids(custs),
        "vehicle_ids": [int(v.id) for v in veh], "n1st": n1st,
        "A2": weights.A2, "B_vrp": B,
    }
    return acc.build(vm, meta)


# -- decoding ---------------------------------------------------------------

@dataclass
class Assignment:
    """Per-vehicle plan decoded from a bitstring.

    ``targets[i]`` is ``None``, ``("station", j)``, ``("customer", k)``, or for
    the VRP formulation ``("route", [k1, k2?], j?)``.  Indices refer to the
    problem's station/customer order.
    """

    targets: list
    feasible: bool
    violations: list = field(default_factory=list)


def decode(problem: QuboProblem, bits: Sequence[int]) -> Assignment:
    b = np.asarray(bits)
    if b.shape != (problem.n_vars,):
        raise ValueError(f"expected {problem.n_vars} bits, got {b.shape}")
    if problem.formulation == "proposed":
        return _decode_proposed(problem, b)
    if problem.formulation == "vrp":
        return _decode_vrp(problem, b)
    raise ValueError(f"cannot decode formulation {problem.formulation!r}")


def _set_keys(problem: QuboProblem, b: np.ndarray) -> list[Key]:
    return [problem.varmap.key(n) for n in np.flatnonzero(b)]


def _decode_proposed(problem: QuboProblem, b: np.ndarray) -> Assignment:
    m = problem.meta
    n_veh, n_c = m["n_vehicles"], m["n_customers"]
    per_vehicle: list[list] = [[] for _ in range(n_veh)]
    per_customer = [0] * n_c
    for key in _set_keys(problem, b):
        if key[0] == "s":
            per_vehicle[key[1]].append(("station", key[2]))
        else:
            per_vehicle[key[1]].append(("customer", key[2]))
            per_customer[key[2]] += 1
    violations = []
    targets = []
    for i, tg in enumerate(per_vehicle):
        if len(tg) == 0:
            violations.append(f"vehicle {i}: no target")
        elif len(tg) > 1:
            violations.append(f"vehicle {i}: multiple targets")
        targets.append(tg[0] if len(tg) == 1 else None)
    if m.get("enable_HA1", True):
        for k, cnt in enumerate(per_customer):
            if cnt != 1:
                violations.append(f"customer {k}: assigned to {cnt} vehicles")
    return Assignment(targets, not violations, violations)


def _decode_vrp(problem: QuboProblem, b: np.ndarray) -> Assignment:
    m = problem.meta
    n_veh, n_c, n1st = m["n_vehicles"], m["n_customers"], m["n1st"]
    st = [[] for _ in range(n_veh)]
    slot = [{1: [], 2: []} for _ in range(n_veh)]
    per_customer = [0] * n_c
    for key in _set_keys(problem, b):
        if key[0] == "s":
            st[key[1]].append(key[2])
        else:
            _, i, k, t = key
            slot[i][t].append(k)
            per_customer[k] += 1
    violations = []
    for k, cnt in enumerate(per_customer):
        if cnt != 1:
            violations.append(f"customer {k}: assigned {cnt} times")
    first = sum(len(sl[1]) for sl in slot)
    if first != n1st:
        violations.append(f"{first} first-slot customers, expected {n1st}")
    targets = []
    for i in range(n_veh):
        s1, s2 = slot[i][1], slot[i][2]
        before = len(violations)
        if len(st[i]) > 1:
            violations.append(f"vehicle {i}: multiple stations")
        for t, sl in ((1, s1), (2, s2)):
            if len(sl) > 1:
                violations.append(f"vehicle {i}: multiple slot-{t} customers")
        if st[i] and s2:
            violations.append(f"vehicle {i}: station with slot-2 customer")
        if not st[i] and len(s1) + len(s2) != 2:
            violations.append(f"vehicle {i}: no station and not two customers")
        if len(violations) == before:
            targets.append(("route", s1 + s2, st[i][0] if st[i] else None))
        else:
            targets.append(None)
    return Assignment(targets, not violations, violations)


# -- sub-Hamiltonians, evaluated term by term -------------------------------

def proposed_terms(problem: QuboProblem, bits: Sequence[int]) -> dict:
    """Constraint sub-Hamiltonians of the proposed formulation (integers)."""
    m = problem.meta
    b = np.asarray(bits, dtype=int)
    vm = problem.varmap
    n_veh, n_st, n_c = m["n_vehicles"], m["n_stations"], m["n_customers"]
    ha0 = sum((1 - sum(b[vm.index(("s", i, j))] for j in range(n_st))
               - sum(b[vm.index(("c", i, k))] for k in range(n_c))) ** 2 for i in range(n_veh))
    ha1 = sum((1 - sum(b[vm.index(("c", i, k))] for i in range(n_veh))) ** 2 for k in range(n_c))
    return {"HA0": int(ha0), "HA1": int(ha1)}


def vrp_terms(problem: QuboProblem, bits: Sequence[int]) -> dict:
    """Constraint sub-Hamiltonians of the VRP formulation (integers)."""
    m = problem.meta
    b = np.asarray(bits, dtype=int)
    vm = problem.varmap
    n_veh, n_st, n_c, n1st = m["n_vehicles"], m["n_stations"], m["n_customers"], m["n1st"]
    s = lambda i, j: b[vm.index(("s", i, j))]
    x = lambda i, k, t: b[vm.index(("ct", i, k, t))]
    ha0 = sum((1 - sum(x(i, k, t) for i in range(n_veh) for t in (1, 2))) ** 2 for k in range(n_c))
    ha1 = (n1st - sum(x(i, k, 1) for i in range(n_veh) for k in range(n_c))) ** 2
    ha2 = sum((1 - sum(s(i, j) for j in range(n_st))) * (2 - sum(x(i, k, t) for k in range(n_c) for t in (1, 2)))
              + sum(s(i, j) for j in range(n_st)) * sum(x(i, k, 2) for k in range(n_c))
              for i in range(n_veh))
    ha3 = sum(sum(s(i, j1) * s(i, j2) for j1 in range(n_st) for j2 in range(j1))
              + sum(x(i, k1, 1) * x(i, k2, 1) + x(i, k1, 2) * x(i, k2, 2)
                    for k1 in range(n_c) for k2 in range(k1))
              for i in range(n_veh))
    return {"HA0": int(ha0), "HA1": int(ha1), "HA2": int(ha2), "HA3": int(ha3)}
