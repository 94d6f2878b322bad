"""Built-in scenarios: the six-agent benchmark, its 60-agent tiling, the
disturbed benchmark, and four-robot target encirclement.

The benchmark figures draw their graphs only pictorially, so each scenario
declares a stand-in topology and records it in ``metadata["topology"]``.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Optional

import numpy as np

from . import graph
from .costs import (
    benchmark_suite_A,
    biased_observation,
    encirclement_target,
    estimate_constants,
    aggregate_constants,
    ConvexityConstants,
    quadratic_tracking,
)
from .dynamics import AlgorithmParams, Disturbance, validate_params
from .errors import ValidationError
from .graph import SwitchingSchedule
from .oracle import centralized_minimize, tracking_reference
from .sim import Scenario

SUITE_A_X0 = np.array([[-2.0, -3.0], [-1.0, -2.0], [1.0, -1.0], [2.0, 1.0], [3.0, 2.0], [4.0, 3.0]])
ENCIRCLEMENT_BIASES = [(1.0, 1.0), (-1.0, -1.0), (0.5, 0.5), (-0.3, -0.3)]
ENCIRCLEMENT_P0 = np.array([[0.0, 0.0], [0.0, -1.0], [-1.0, 0.0], [0.0, 1.0]])

# second graph of the switching pair: the 6-ring visited in the order 0-2-4-1-3-5
ALT_RING_6 = [(0, 2), (2, 4), (4, 1), (1, 3), (3, 5), (5, 0)]


def _params(defaults: dict, overrides: dict) -> AlgorithmParams:
    fields = set(AlgorithmParams.__dataclass_fields__)
    merged = dict(defaults)
    merged.update({k: v for k, v in overrides.items() if k in fields})
    return AlgorithmParams(**merged)


def _static_reference(costs, x0):
    sol = centralized_minimize(costs, np.mean(x0, axis=0))
    x_star = sol.x_star
    return (lambda t: x_star), sol


def scenario_numerical_A(topology: str = "ring", switching: bool = False,
                         switch_period: float = 0.5, step: float = 1e-3,
                         t_end: Optional[float] = None, seed: int = 0, **overrides) -> Scenario:
    """Six agents, suite-A costs, p=0.3, eta=0.4, c=3, T_m=2.

    ``topology`` picks the stand-in graph (ring, complete, star, path,
    random_connected). ``switching`` alternates the 6-ring with a reordered
    6-ring every ``switch_period`` seconds.
    """
    params = _params(dict(eta=0.4, p=0.3, c=3.0, T_m=2.0, variant="zgs_static"), overrides)
    t_end = t_end if t_end is not None else max(2.5, params.T_m + 0.5)
    costs = benchmark_suite_A()
    if switching:
        g1 = graph.ring(6)
        g2 = graph.build_topology(6, ALT_RING_6)
        schedule = SwitchingSchedule.periodic([g1, g2], switch_period, t_end)
        label = f"switching ring/alt-ring every {switch_period}s"
    else:
        kwargs = {"seed": seed, "prob": 0.5} if topology == "random_connected" else {}
        schedule = SwitchingSchedule.static(graph.named(topology, 6, **kwargs))
        label = topology
    ref, sol = _static_reference(costs, SUITE_A_X0)
    return Scenario(
        name="numerical_A" + ("_switching" if switching else ""),
        costs=costs, schedule=schedule, params=params, x0=SUITE_A_X0.copy(),
        t_end=t_end, step=step, reference=ref,
        settle_tol=overrides.get("settle_tol", 1e-2),
        metadata={"topology": label, "x_star": sol.x_star.tolist()},
    )


def scenario_scale_60(seed: int = 7, step: float = 1e-3, t_end: Optional[float] = None,
                      edge_prob: float = 0.1, **overrides) -> Scenario:
    """Sixty agents with f_{10 i + k} = f_{i+1}, seeded G(60, 0.1), x0 uniform on [-5, 5]^2."""
    params = _params(dict(eta=0.4, p=0.3, c=3.0, T_m=2.0, variant="zgs_static"), overrides)
    t_end = t_end if t_end is not None else max(2.5, params.T_m + 0.5)
    base = benchmark_suite_A()
    costs = [base[i] for i in range(6) for _ in range(10)]
    topo = graph.random_connected(60, edge_prob, seed=seed)
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-5.0, 5.0, size=(60, 2))
    ref, sol = _static_reference(costs, x0)
    return Scenario(
        name="scale_60", costs=costs, schedule=SwitchingSchedule.static(topo), params=params,
        x0=x0, t_end=t_end, step=step, reference=ref,
        settle_tol=overrides.get("settle_tol", 2e-2),
        metadata={"topology": f"G(60, {edge_prob}) seed {seed}", "x_star": sol.x_star.tolist()},
    )


def suite_A_disturbance(amplitude: float = 0.4) -> Disturbance:
    """d_i(t) = a (sin(3t + i), cos(2t + i)) with agents numbered from 1."""
    def d(i, t):
        return amplitude * np.array([math.sin(3 * t + i + 1), math.cos(2 * t + i + 1)])
    return Disturbance(d=d, bound_D=2 * amplitude)


def scenario_disturbance(k: Optional[float] = None, compensate: bool = True, step: float = 1e-3,
                         t_end: Optional[float] = None, **overrides) -> Scenario:
    """Suite A under an additive disturbance with ``k = 1.05 H D`` by default.

    ``compensate=False`` sets ``k = 0`` (the negative control).
    """
    costs = benchmark_suite_A()
    dist = suite_A_disturbance()
    H = aggregate_constants([estimate_constants(f) for f in costs]).hess_norm1
    if k is None:
        k = 1.05 * H * dist.bound_D if compensate else 0.0
    params = _params(dict(eta=0.4, p=0.3, c=3.0, T_m=2.0, k=k, variant="disturbance"), overrides)
    t_end = t_end if t_end is not None else max(2.5, params.T_m + 0.5)
    ref, sol = _static_reference(costs, SUITE_A_X0)
    return Scenario(
        name="disturbance", costs=costs, schedule=SwitchingSchedule.static(graph.ring(6)),
        params=params, x0=SUITE_A_X0.copy(), t_end=t_end, step=step, disturbance=dist,
        reference=ref, settle_tol=overrides.get("settle_tol", 2e-2),
        metadata={"topology": "ring", "x_star": sol.x_star.tolist(), "H": H, "D": dist.bound_D},
    )


def formation_offsets(n: int = 4) -> np.ndarray:
    return np.array([[2 * math.cos(2 * math.pi * i / n), 2 * math.sin(2 * math.pi * i / n)]
                     for i in range(1, n + 1)])


def scenario_encirclement(boundary_layer: bool = False, step: float = 1e-3,
                          t_end: float = 6.0, epsilon0: float = 1.0, **overrides) -> Scenario:
    """Four robots tracking p*(t) = (2 sin t + 0.5 t, t) through biased observations.

    The decision variable is x_i = p_i - h_i, so x_i(0) = p_i(0) - h_i and the
    tracked optimum is p*(t) + mean(bias).
    """
    params = _params(dict(eta=0.5, p=0.3, c=3.0, T_m=2.0, mu=44.0, variant="time_varying",
                          boundary_layer=boundary_layer), overrides)
    costs = []
    for i, b in enumerate(ENCIRCLEMENT_BIASES):
        obs, rate = biased_observation(b)
        costs.append(quadratic_tracking(obs, rate, name=f"track{i + 1}"))
    offsets = formation_offsets(4)
    x0 = ENCIRCLEMENT_P0 - offsets
    ref = tracking_reference(ENCIRCLEMENT_BIASES, encirclement_target)
    return Scenario(
        name="encirclement", costs=costs, schedule=SwitchingSchedule.static(graph.ring(4)),
        params=params, x0=x0, t_end=t_end, step=step, reference=ref,
        settle_tol=overrides.get("settle_tol", 5e-2), epsilon0=epsilon0,
        metadata={"topology": "ring", "offsets": offsets.tolist()},
    )


SCENARIOS = {
    "numerical_A": scenario_numerical_A,
    "numerical_A_switching": lambda **kw: scenario_numerical_A(switching=True, **kw),
    "scale_60": scenario_scale_60,
    "disturbance": scenario_disturbance,
    "encirclement": scenario_encirclement,
}

DESCRIPTIONS = {
    "numerical_A": "6 agents, suite-A costs, ring stand-in graph, T_m = 2",
    "numerical_A_switching": "numerical_A over two alternating 6-rings, switch every 0.5 s",
    "scale_60": "60 agents tiling suite A, seeded random connected graph",
    "disturbance": "numerical_A with additive sinusoidal disturbance and sgn compensation",
    "encirclement": "4 robots tracking a moving target (time-varying costs)",
}


def build(name: str, **options) -> Scenario:
    if name not in SCENARIOS:
        raise ValidationError(f"unknown scenario {name!r}; available: {sorted(SCENARIOS)}")
    return SCENARIOS[name](**options)


def scenario_constants(sc: Scenario, box=None, grid: Optional[int] = None) -> ConvexityConstants:
    """Network constants for ``sc``, sampling each distinct cost once."""
    kwargs = {}
    if box is not None:
        kwargs["box"] = box
    if grid is not None:
        kwargs["grid"] = grid
    cache = {}
    for f in sc.costs:
        if id(f) not in cache:
            cache[id(f)] = estimate_constants(f, **kwargs)
    return aggregate_constants(list(cache.values()))


def validation_report(sc: Scenario, strict: bool = False, constants: Optional[ConvexityConstants] = None):
    """Run the gain-bound validator on a built scenario."""
    consts = constants if constants is not None else scenario_constants(sc)
    dist = sc.disturbance.bound_D if sc.disturbance is not None else None
    return validate_params(sc.params, consts, sc.schedule.lambda2_min, sc.n_agents,
                           sc.schedule.a_min, disturbance_bound=dist, strict=strict)
