"""Experiment configuration: one JSON document, defaults filled at load."""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any

from .demand import DemandModel
from .qubo import QuboWeights
from .sim import Policy, SimConfig
from .sim.policies import POLICY_KINDS
from .solver import SolverParams
from .world import GridMap, Position


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "map": {"rows": 4, "cols": 4, "cell_size": 200.0, "speed": 4.0},
    # the four inner intersections of the 4x4 grid
    "stations": [[200.0, 200.0], [400.0, 200.0], [200.0, 400.0], [400.0, 400.0]],
    "vehicles": {"count": 6, "initial_positions": None},
    "demand": {
        "request_interval": 60.0,
        # [row, col], row 0 at the bottom
        "hot_origin_cells": [[2, 2], [2, 3], [3, 2], [3, 3]],
        "hot_dest_cells": [[3, 0], [3, 1], [3, 2], [3, 3]],
        "hot_multiplier": 10.0,
    },
    "policies": list(POLICY_KINDS),
    "weights": {"B0": 0.1, "B1": 0.3, "A2": 1 / 3, "B_vrp": 0.001},
    "ablation": {"enable_HA1": False, "enable_HB1": True, "mode": "dynamic"},
    "solver": {
        "sampler": "sqa", "replicas": 16, "sweeps": 1000, "beta": 50.0,
        "gamma0": 3.0, "reads": 4, "schedule": "forward", "s_min": 0.4,
    },
    "sim": {"redispatch_on_dropoff": True, "preempt_pickups": True},
    "trials": 10,
    "trial_duration": 10000.0,
    "seed": 0,
    "sweep_b1": {"values": [0.0, 0.1, 0.3, 0.5], "policies": ["proposed_static", "proposed_dynamic"]},
    "sweep_smin": {
        "values": [0.3, 0.35, 0.4, 0.5, 0.6, 0.8, 1.0],
        "instances": 30,
        "n_vehicles": 4,
        "max_customers": 2,
        "replicas": 16, "sweeps": 1000, "beta": 50.0, "gamma0": 3.0, "reads": 10,
    },
}


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if k not in out:
            raise ConfigError(f"unknown config key {path + k!r}")
        if isinstance(out[k], dict) and isinstance(v, dict):
            out[k] = _merge(out[k], v, f"{path}{k}.")
        else:
            out[k] = v
    return out


def parse_override(item: str) -> tuple[list[str], Any]:
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not KEY=VALUE")
    key, raw = item.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(cfg: dict, overrides: list[str]) -> dict:
    cfg = copy.deepcopy(cfg)
    for item in overrides:
        keys, value = parse_override(item)
        node = cfg
        for k in keys[:-1]:
            if not isinstance(node.get(k), dict):
                raise ConfigError(f"unknown config key {'.'.join(keys)!r}")
            node = node[k]
        if keys[-1] not in node:
            raise ConfigError(f"unknown config key {'.'.join(keys)!r}")
        node[keys[-1]] = value
    return cfg


def load_config(path: str | Path | None = None, overrides: list[str] = ()) -> dict:
    """Effective config: defaults, then the file, then ``KEY=VALUE`` overrides."""
    user = {}
    if path is not None:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
    cfg = apply_overrides(_merge(DEFAULTS, user), list(overrides))
    validate(cfg)
    return cfg


def dump_config(cfg: dict) -> str:
    return json.dumps(cfg, indent=2, sort_keys=True)


# -- builders ---------------------------------------------------------------

def build_grid(cfg: dict) -> GridMap:
    m = cfg["map"]
    return GridMap(int(m["rows"]), int(m["cols"]), float(m["cell_size"]), float(m["speed"]))


def build_demand(cfg: dict, grid: GridMap | None = None) -> DemandModel:
    grid = grid or build_grid(cfg)
    d = cfg["demand"]
    interval = float(d["request_interval"])
    rate = 0.0 if interval == float("inf") or interval <= 0 else 1.0 / interval
    cells = lambda rc: [grid.cell_index(int(r), int(c)) for r, c in rc]
    return DemandModel.from_hot_cells(grid, rate, cells(d["hot_origin_cells"]),
                                      cells(d["hot_dest_cells"]), float(d["hot_multiplier"]))


def build_weights(cfg: dict, **changes) -> QuboWeights:
    w = dict(cfg["weights"])
    w.update(changes)
    return QuboWeights(B0=float(w["B0"]), B1=float(w["B1"]), A2=float(w["A2"]),
                       B_vrp=float(w["B_vrp"]),
                       enable_HA1=bool(w.get("enable_HA1", True)),
                       enable_HB1=bool(w.get("enable_HB1", True)))


def build_solver_params(cfg: dict, seed: int = 0) -> SolverParams:
    s = cfg["solver"]
    return SolverParams(replicas=int(s["replicas"]), sweeps=int(s["sweeps"]), beta=float(s["beta"]),
                        gamma0=float(s["gamma0"]), reads=int(s["reads"]), seed=seed)


def build_policy(cfg: dict, kind: str, **weight_changes) -> Policy:
    if kind not in POLICY_KINDS:
        raise ConfigError(f"unknown policy {kind!r}")
    if kind == "proposed_ablation":
        ab = cfg["ablation"]
        weight_changes = {"enable_HA1": ab["enable_HA1"], "enable_HB1": ab["enable_HB1"],
                          **weight_changes}
    s = cfg["solver"]
    schedule = s["schedule"] if kind.startswith("proposed") else "forward"
    return Policy(kind, build_weights(cfg, **weight_changes), s["sampler"],
                  build_solver_params(cfg), schedule, float(s["s_min"]),
                  cfg["ablation"]["mode"])


def build_sim_config(cfg: dict) -> SimConfig:
    grid = build_grid(cfg)
    init = cfg["vehicles"]["initial_positions"]
    return SimConfig(
        grid=grid,
        stations=tuple(Position(float(x), float(y)) for x, y in cfg["stations"]),
        demand=build_demand(cfg, grid),
        n_vehicles=int(cfg["vehicles"]["count"]),
        initial_positions=None if init is None else tuple(Position(float(x), float(y)) for x, y in init),
        duration=float(cfg["trial_duration"]),
        redispatch_on_dropoff=bool(cfg["sim"]["redispatch_on_dropoff"]),
        preempt_pickups=bool(cfg["sim"]["preempt_pickups"]),
    )


def validate(cfg: dict) -> None:
    try:
        sim = build_sim_config(cfg)
        for kind in cfg["policies"]:
            build_policy(cfg, kind)
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc
    if int(cfg["trials"]) < 1:
        raise ConfigError("trials must be >= 1")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    if cfg["solver"]["sampler"] not in ("sqa", "sa"):
        raise ConfigError("solver.sampler must be 'sqa' or 'sa'")
    if cfg["ablation"]["mode"] not in ("static", "dynamic"):
        raise ConfigError("ablation.mode must be 'static' or 'dynamic'")
    del sim
