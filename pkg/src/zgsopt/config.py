"""TOML run configuration: parsing, dotted-key overrides, and scenario construction.

A config names a built-in scenario or defines one inline::

    scenario = "numerical_A"
    output_dir = "runs/a"

    [overrides]
    T_m = 2.0
    c = 3.0

or::

    [scenario]
    name = "three_quadratics"
    x0 = [[0.0, 1.0], [2.0, 0.0], [-1.0, -1.0]]
    t_end = 2.5

    [scenario.graph]
    kind = "edges"
    edges = [[0, 1, 1.0], [1, 2, 1.0]]

    [[scenario.costs]]
    kind = "quadratic"
    Q = [[2.0, 0.0], [0.0, 1.0]]
    b = [1.0, 0.0]
"""

from __future__ import annotations

import copy
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import tomli
import tomli_w

from . import graph, scenarios
from .costs import (
    benchmark_suite_A,
    biased_observation,
    encirclement_target,
    quadratic,
    quadratic_tracking,
)
from .dynamics import AlgorithmParams
from .errors import ValidationError
from .graph import SwitchingSchedule
from .oracle import centralized_minimize, tracking_reference
from .sim import Scenario

OUTPUT_DIR_ENV = "ZGSOPT_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "zgsopt_out"

PARAM_KEYS = frozenset(f.name for f in fields(AlgorithmParams))
SCENARIO_KEYS = frozenset({"step", "t_end", "settle_tol", "zgs_tol"})
CONTROL_KEYS = frozenset({"strict_mode"})
# extra builder options accepted per built-in scenario
BUILDER_KEYS = {
    "numerical_A": {"topology", "seed", "switch_period"},
    "numerical_A_switching": {"seed", "switch_period"},
    "scale_60": {"seed", "edge_prob"},
    "disturbance": {"compensate"},
    "encirclement": {"epsilon0"},
}
INLINE_KEYS = frozenset({"seed", "epsilon0"})


class ConfigError(ValidationError):
    """Malformed or inconsistent configuration; ``line``/``column`` set for syntax errors."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        super().__init__(message)
        self.line = line
        self.column = column


@dataclass
class RunConfig:
    scenario: Union[str, dict]
    overrides: dict = field(default_factory=dict)
    output_dir: Optional[str] = None

    @property
    def scenario_name(self) -> str:
        return self.scenario if isinstance(self.scenario, str) else self.scenario.get("name", "inline")

    @property
    def strict(self) -> bool:
        return bool(self.overrides.get("strict_mode", False))

    def resolved_output_dir(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"scenario": copy.deepcopy(self.scenario)}
        if self.output_dir is not None:
            d["output_dir"] = self.output_dir
        if self.overrides:
            d["overrides"] = dict(self.overrides)
        return d

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())


def _syntax_position(exc: tomli.TOMLDecodeError):
    # tomli reports "... (at line L, column C)"
    msg = str(exc)
    if "(at line " in msg:
        tail = msg.rsplit("(at line ", 1)[1].rstrip(")")
        try:
            line, col = tail.split(", column ")
            return int(line), int(col)
        except ValueError:
            pass
    return None, None


def from_dict(data: dict) -> RunConfig:
    unknown = set(data) - {"scenario", "overrides", "output_dir"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    if "scenario" not in data:
        raise ConfigError("config needs a 'scenario' entry (built-in name or inline table)")
    scen = data["scenario"]
    if not isinstance(scen, (str, dict)):
        raise ConfigError("'scenario' must be a name or a table")
    overrides = data.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigError("'overrides' must be a table")
    out = data.get("output_dir")
    if out is not None and not isinstance(out, str):
        raise ConfigError("'output_dir' must be a string")
    cfg = RunConfig(scenario=copy.deepcopy(scen), overrides=dict(overrides), output_dir=out)
    check_override_keys(cfg)
    return cfg


def parse_text(text: str) -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line, col = _syntax_position(exc)
        raise ConfigError(f"config parse error: {exc}", line=line, column=col) from exc
    return from_dict(data)


def load(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_text(text)


def parse_value(raw: str) -> Any:
    """Interpret a command-line value as a TOML value, falling back to a bare string."""
    try:
        return tomli.loads(f"v = {raw}")["v"]
    except tomli.TOMLDecodeError:
        return raw


def apply_overrides(cfg: RunConfig, assignments) -> RunConfig:
    """Apply ``key=value`` strings with dotted keys.

    ``scenario=name`` and ``output_dir=path`` set top-level entries,
    ``scenario.graph.kind=star`` edits an inline scenario, and any other key
    (optionally prefixed ``overrides.``) lands in the override table.
    """
    cfg = RunConfig(scenario=copy.deepcopy(cfg.scenario), overrides=dict(cfg.overrides),
                    output_dir=cfg.output_dir)
    for item in assignments:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        value = parse_value(raw.strip())
        parts = key.split(".")
        if not key or any(not p for p in parts):
            raise ConfigError(f"bad override key {key!r}")
        if parts == ["scenario"]:
            cfg.scenario = value
        elif parts == ["output_dir"]:
            cfg.output_dir = str(value)
        elif parts[0] == "scenario":
            if not isinstance(cfg.scenario, dict):
                raise ConfigError(f"{key!r} needs an inline scenario table")
            node = cfg.scenario
            for p in parts[1:-1]:
                node = node.setdefault(p, {})
                if not isinstance(node, dict):
                    raise ConfigError(f"{key!r} descends into a non-table value")
            node[parts[-1]] = value
        else:
            if parts[0] == "overrides":
                parts = parts[1:]
            if len(parts) != 1:
                raise ConfigError(f"override key {key!r} is nested too deeply")
            cfg.overrides[parts[0]] = value
    check_override_keys(cfg)
    return cfg


def allowed_override_keys(cfg: RunConfig) -> frozenset:
    extra = INLINE_KEYS if isinstance(cfg.scenario, dict) else BUILDER_KEYS.get(cfg.scenario, set())
    return PARAM_KEYS | SCENARIO_KEYS | CONTROL_KEYS | frozenset(extra)


def check_override_keys(cfg: RunConfig) -> None:
    if isinstance(cfg.scenario, str) and cfg.scenario not in scenarios.SCENARIOS:
        raise ConfigError(f"unknown scenario {cfg.scenario!r}; available: {sorted(scenarios.SCENARIOS)}")
    bad = set(cfg.overrides) - allowed_override_keys(cfg)
    if bad:
        raise ConfigError(f"unknown override keys for {cfg.scenario_name!r}: {sorted(bad)}")


# ---------------------------------------------------------------------------
# scenario construction

def _graph_from_table(table: dict, n: int):
    kind = table.get("kind", "ring")
    if kind == "edges":
        return graph.build_topology(n, [tuple(e) for e in table.get("edges", [])])
    opts = {k: v for k, v in table.items() if k in ("seed", "prob", "weight")}
    try:
        return graph.named(kind, n, **opts)
    except TypeError as exc:
        raise ConfigError(f"graph {kind!r}: {exc}") from exc


def _schedule_from_table(table: dict, n: int) -> SwitchingSchedule:
    if "segments" in table:
        segs = [(float(seg["start"]), _graph_from_table(seg, n)) for seg in table["segments"]]
        return SwitchingSchedule(segs)
    return SwitchingSchedule.static(_graph_from_table(table, n))


def _costs_from_entries(entries, n: int):
    if isinstance(entries, dict):
        entries = [entries]
    costs = []
    for entry in entries:
        kind = entry.get("kind")
        if kind == "suiteA":
            costs.extend(benchmark_suite_A())
        elif kind == "quadratic":
            if "Q" not in entry:
                raise ConfigError("quadratic cost needs a 'Q' matrix")
            costs.append(quadratic(entry["Q"], entry.get("b"), name=entry.get("name", "quadratic")))
        elif kind == "tracking":
            obs, rate = biased_observation(entry.get("bias", [0.0, 0.0]))
            costs.append(quadratic_tracking(obs, rate, name=entry.get("name", "tracking")))
        else:
            raise ConfigError(f"unknown cost kind {kind!r}; use suiteA, quadratic or tracking")
    if len(costs) != n:
        raise ConfigError(f"{len(costs)} costs defined for {n} agents")
    return costs


def _inline_scenario(table: dict, overrides: dict) -> Scenario:
    for key in ("x0", "costs"):
        if key not in table:
            raise ConfigError(f"inline scenario needs '{key}'")
    x0 = np.array(table["x0"], dtype=float)
    if x0.ndim != 2:
        raise ConfigError("x0 must be a list of per-agent vectors")
    n = x0.shape[0]
    costs = _costs_from_entries(table["costs"], n)
    graph_table = table.get("graph", {"kind": "ring" if n >= 3 else "path"})
    schedule = _schedule_from_table(graph_table, n)
    defaults = {k: table[k] for k in PARAM_KEYS if k in table}
    defaults.update({k: v for k, v in overrides.items() if k in PARAM_KEYS})
    params = AlgorithmParams(**defaults)
    get = lambda k, d: overrides.get(k, table.get(k, d))  # noqa: E731
    t_end = float(get("t_end", max(2.5, params.T_m + 0.5)))
    if any(f.time_varying for f in costs):
        biases = [e.get("bias", [0.0, 0.0]) for e in table["costs"]]
        reference = tracking_reference(biases, encirclement_target)
        meta = {}
    else:
        x_star = centralized_minimize(costs, x0.mean(axis=0)).x_star
        reference = lambda t: x_star  # noqa: E731
        meta = {"x_star": x_star.tolist()}
    meta["topology"] = str(graph_table.get("kind", "ring"))
    return Scenario(
        name=str(table.get("name", "inline")), costs=costs, schedule=schedule, params=params,
        x0=x0, t_end=t_end, step=float(get("step", 1e-3)), reference=reference,
        settle_tol=float(get("settle_tol", 1e-2)), zgs_tol=float(get("zgs_tol", 5e-3)),
        epsilon0=float(get("epsilon0", 1.0)), metadata=meta,
    )


def build_scenario(cfg: RunConfig) -> Scenario:
    """Construct the :class:`Scenario` described by ``cfg`` with overrides applied."""
    check_override_keys(cfg)
    opts = {k: v for k, v in cfg.overrides.items() if k not in CONTROL_KEYS}
    try:
        if isinstance(cfg.scenario, dict):
            return _inline_scenario(cfg.scenario, opts)
        zgs_tol = opts.pop("zgs_tol", None)
        sc = scenarios.build(cfg.scenario, **opts)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"cannot build scenario {cfg.scenario_name!r}: {exc}") from exc
    if zgs_tol is not None:
        sc = replace(sc, zgs_tol=float(zgs_tol))
    return sc
