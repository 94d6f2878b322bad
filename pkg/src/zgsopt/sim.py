"""Fixed-step forward-Euler integration and trajectory bookkeeping."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .costs import CostFunction
from .dynamics import GUARD_STEPS, AlgorithmParams, Disturbance, NetworkState, network_rhs
from .errors import DivergenceError, SingularHessianError, ValidationError
from .graph import SwitchingSchedule, topology_at


@dataclass
class Scenario:
    name: str
    costs: Sequence[CostFunction]
    schedule: SwitchingSchedule
    params: AlgorithmParams
    x0: np.ndarray
    t_end: float
    step: float = 1e-3
    disturbance: Optional[Disturbance] = None
    reference: Optional[Callable[[float], np.ndarray]] = None
    settle_tol: float = 1e-2
    zgs_tol: float = 5e-3
    epsilon0: float = 1.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x0 = np.array(self.x0, dtype=float)
        if len(self.costs) != self.schedule.n_agents:
            raise ValidationError(
                f"{len(self.costs)} costs but the topology has {self.schedule.n_agents} agents"
            )
        if self.x0.shape != (len(self.costs), self.costs[0].dim):
            raise ValidationError(f"x0 must have shape ({len(self.costs)}, {self.costs[0].dim})")
        if not self.step > 0:
            raise ValidationError("step must be positive")
        if self.t_end < self.params.T_m:
            raise ValidationError(f"t_end = {self.t_end} is shorter than T_m = {self.params.T_m}")

    @property
    def n_agents(self) -> int:
        return len(self.costs)


@dataclass
class Trajectory:
    """Per-step record; every series is indexed like ``times``.

    ``zeta_rate_sum`` is ``||sum_i zetadot_i||`` and ``zeta_rate_scale`` is
    ``sum_i ||zetadot_i||`` at each step, for checking conservation.
    """

    times: np.ndarray
    states: np.ndarray          # (T, N, n)
    sliding: np.ndarray         # (T, N, n)
    grad_sum_norm: np.ndarray
    global_cost: np.ndarray
    consensus_err: np.ndarray
    zeta_rate_sum: np.ndarray
    zeta_rate_scale: np.ndarray
    epsilon: np.ndarray         # (T, N)

    @property
    def sliding_norms(self) -> np.ndarray:
        return np.linalg.norm(self.sliding, axis=-1)

    @property
    def step_jumps(self) -> np.ndarray:
        """max_i ||x_i(t_{k+1}) - x_i(t_k)|| for each step k."""
        return np.linalg.norm(np.diff(self.states, axis=0), axis=-1).max(axis=1)

    def index_at(self, t: float) -> int:
        return int(np.argmin(np.abs(self.times - t)))

    def errors_to(self, reference: Callable[[float], np.ndarray]) -> np.ndarray:
        """max_i ||x_i(t) - reference(t)|| over the record."""
        ref = np.array([reference(t) for t in self.times])
        return np.linalg.norm(self.states - ref[:, None, :], axis=-1).max(axis=1)


def _first_time_after_last_violation(times, values, tol) -> float:
    bad = np.nonzero(values > tol)[0]
    if bad.size == 0:
        return float(times[0])
    last = bad[-1]
    if last == len(times) - 1:
        return math.inf
    return float(times[last + 1])


@dataclass
class RunSummary:
    scenario: str
    variant: str
    T_m: float
    settle_tol: float
    settle_time: float
    zgs_time: float
    within_Tm: bool
    max_step_diag: float
    final_error: float
    max_error_after_Tm: float
    final_consensus_err: float
    final_grad_sum_norm: float
    x_final_mean: list
    x_reference_final: list
    wall_clock: float = 0.0
    extras: dict = field(default_factory=dict)

    def as_dict(self, timing: bool = True) -> dict:
        """Flat key/value view; ``timing=False`` drops the wall clock so files are reproducible."""
        d = {k: v for k, v in self.__dict__.items() if k != "extras"}
        if not timing:
            d.pop("wall_clock")
        d.update(self.extras)
        return d

    def render(self, timing: bool = True) -> str:
        rows = []
        for key, val in self.as_dict(timing).items():
            if isinstance(val, float):
                val = f"{val:.10g}"
            elif isinstance(val, list):
                val = "[" + ", ".join(f"{v:.10g}" for v in val) + "]"
            rows.append(f"{key} = {val}")
        return "\n".join(rows)

    def to_json(self, timing: bool = True) -> str:
        def fix(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return v
        return json.dumps({k: fix(v) for k, v in self.as_dict(timing).items()}, indent=2, sort_keys=True)


def simulate(sc: Scenario) -> Trajectory:
    """Forward Euler with simultaneous update of x, zeta and epsilon.

    All agents are evaluated against the state frozen at the start of the
    step; the topology is re-read from the schedule every step.
    """
    params = sc.params
    params.check_ranges()
    h = sc.step
    n_steps = int(round(sc.t_end / h))
    N, n = sc.x0.shape
    T = n_steps + 1
    guard = params.guard_dt if params.guard_dt is not None else GUARD_STEPS * h

    times = np.arange(T) * h
    states = np.empty((T, N, n))
    sliding = np.empty((T, N, n))
    gsum = np.empty(T)
    gcost = np.empty(T)
    cerr = np.empty(T)
    zsum = np.empty(T)
    zscale = np.empty(T)
    eps_rec = np.empty((T, N))

    eps0 = sc.epsilon0 if (params.variant == "time_varying" and params.boundary_layer) else 0.0
    state = NetworkState.initial(sc.x0, eps0)
    for k in range(T):
        t = times[k]
        topo = topology_at(sc.schedule, t)
        try:
            der = network_rhs(state, t, sc.costs, topo, params, sc.disturbance, guard)
        except SingularHessianError as exc:
            exc.time = t
            raise
        X = state.x
        states[k] = X
        sliding[k] = der.s
        gsum[k] = np.linalg.norm((der.s - state.zeta).sum(axis=0))
        gcost[k] = sum(f.value(X[i], t) for i, f in enumerate(sc.costs))
        diff = X[:, None, :] - X[None, :, :]
        cerr[k] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff).max())
        zsum[k] = np.linalg.norm(der.zetadot.sum(axis=0))
        zscale[k] = np.linalg.norm(der.zetadot, axis=1).sum()
        eps_rec[k] = state.epsilon
        if k == T - 1:
            break
        state = NetworkState(
            x=X + h * der.xdot,
            zeta=state.zeta + h * der.zetadot,
            epsilon=np.maximum(state.epsilon + h * der.epsdot, 0.0),
        )
        if not (np.all(np.isfinite(state.x)) and np.all(np.isfinite(state.zeta))):
            raise DivergenceError(f"non-finite state at t = {times[k + 1]:.6g}", time=float(times[k + 1]))

    return Trajectory(times=times, states=states, sliding=sliding, grad_sum_norm=gsum,
                      global_cost=gcost, consensus_err=cerr, zeta_rate_sum=zsum,
                      zeta_rate_scale=zscale, epsilon=eps_rec)


def summarize(sc: Scenario, traj: Trajectory, reference: Optional[Callable] = None,
              wall_clock: float = 0.0) -> RunSummary:
    ref = reference or sc.reference
    if ref is None:
        raise ValidationError(f"scenario {sc.name!r} has no reference trajectory")
    err = traj.errors_to(ref)
    settle = _first_time_after_last_violation(traj.times, err, sc.settle_tol)
    zgs = _first_time_after_last_violation(traj.times, traj.grad_sum_norm, sc.zgs_tol)
    after = traj.times >= sc.params.T_m - 1e-12
    jumps = traj.step_jumps
    extras = {}
    if sc.params.variant == "time_varying":
        extras["boundary_layer"] = sc.params.boundary_layer
        # summed second difference of x; large values mean a chattering input
        extras["control_total_variation"] = float(np.abs(np.diff(np.diff(traj.states, axis=0), axis=0)).sum())
    return RunSummary(
        scenario=sc.name,
        variant=sc.params.variant,
        T_m=sc.params.T_m,
        settle_tol=sc.settle_tol,
        settle_time=settle,
        zgs_time=zgs,
        within_Tm=bool(settle <= sc.params.T_m),
        max_step_diag=float(jumps.max()) if jumps.size else 0.0,
        final_error=float(err[-1]),
        max_error_after_Tm=float(err[after].max()),
        final_consensus_err=float(traj.consensus_err[-1]),
        final_grad_sum_norm=float(traj.grad_sum_norm[-1]),
        x_final_mean=traj.states[-1].mean(axis=0).tolist(),
        x_reference_final=np.asarray(ref(traj.times[-1]), dtype=float).tolist(),
        wall_clock=wall_clock,
        extras=extras,
    )


def lyapunov_series(traj: Trajectory, costs: Sequence[CostFunction], x_star) -> np.ndarray:
    """V = sum_i [f_i(x*) - f_i(x_i) - grad f_i(x_i)^T (x* - x_i)] along the record."""
    x_star = np.asarray(x_star, dtype=float)
    out = np.empty(len(traj.times))
    for k, (t, X) in enumerate(zip(traj.times, traj.states)):
        out[k] = sum(
            f.value(x_star, t) - f.value(X[i], t) - np.asarray(f.gradient(X[i], t)) @ (x_star - X[i])
            for i, f in enumerate(costs)
        )
    return out


def csv_header(n_agents: int, dim: int) -> list[str]:
    cols = ["t"]
    cols += [f"x{i + 1}_{k + 1}" for i in range(n_agents) for k in range(dim)]
    cols += [f"s_norm{i + 1}" for i in range(n_agents)]
    cols += ["grad_sum_norm", "global_cost", "consensus_err"]
    return cols


def trajectory_table(traj: Trajectory) -> np.ndarray:
    T, N, n = traj.states.shape
    return np.column_stack([
        traj.times,
        traj.states.reshape(T, N * n),
        traj.sliding_norms,
        traj.grad_sum_norm,
        traj.global_cost,
        traj.consensus_err,
    ])


def write_csv(traj: Trajectory, path) -> Path:
    """Write the trajectory with 17 significant digits per value."""
    path = Path(path)
    T, N, n = traj.states.shape
    np.savetxt(path, trajectory_table(traj), delimiter=",", fmt="%.17g",
               header=",".join(csv_header(N, n)), comments="")
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
