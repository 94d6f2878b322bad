"""Right-hand sides of the sliding-manifold ZGS dynamics.

The sliding variable of agent ``i`` is carried as ``s_i = grad f_i(x_i, t) + zeta_i``
where ``zeta_i`` integrates the consensus terms from ``zeta_i(0) = 0``. Every
variant therefore returns ``(xdot, zetadot)`` and, for the boundary-layer
option, ``epsdot``.

All pairwise terms are odd in ``x_i - x_j``, so ``sum_i zetadot_i = 0`` on an
undirected graph; that is what keeps the gradient sum equal to ``sum_i s_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .costs import ConvexityConstants, CostFunction
from .errors import AssumptionError, ParameterError, SingularHessianError
from .graph import Topology

VARIANTS = ("zgs_static", "freewill", "disturbance", "time_varying")
PSI_SAFETY = 1.05
# a floor of 15 steps lets Euler blow up on the six-agent ring; 30 keeps a 2x margin
GUARD_STEPS = 30


@dataclass(frozen=True)
class AlgorithmParams:
    eta: float = 0.4
    p: float = 0.3
    T_m: float = 2.0
    c: float = 3.0
    mu: float = 0.0
    k: float = 0.0
    variant: str = "zgs_static"
    exp_clamp: float = 50.0
    deadzone: float = 1e-9
    boundary_layer: bool = False
    # floor on the free-will gain denominators; None means GUARD_STEPS * step
    guard_dt: Optional[float] = None

    def check_ranges(self) -> None:
        """Raise :class:`ParameterError` on values outside the admissible ranges."""
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if not 0 < self.eta < 1:
            raise ParameterError(f"eta must satisfy 0 < eta < 1 (got {self.eta})")
        if not self.T_m > 0:
            raise ParameterError(f"T_m must be positive (got {self.T_m})")
        if not self.c > 0:
            raise ParameterError(f"c must be positive (got {self.c})")
        if self.variant == "freewill":
            if self.k < 1:
                raise ParameterError(f"free-will variant needs k >= 1 (got {self.k})")
        elif not 0 < self.p < 0.5:
            raise ParameterError(
                f"p must satisfy 0 < p < 1/2 for predefined-time convergence (got {self.p})"
            )
        if self.mu < 0 or self.k < 0:
            raise ParameterError("mu and k must be nonnegative")
        if self.exp_clamp <= 0 or self.deadzone < 0:
            raise ParameterError("exp_clamp must be positive and deadzone nonnegative")

    @property
    def reach_gain(self) -> float:
        return 1.0 / (2 * self.p * self.eta * self.T_m)

    @property
    def consensus_gain(self) -> float:
        return 2 * self.c / (self.p * (1 - self.eta) * self.T_m)


@dataclass
class NetworkState:
    """Stacked per-agent states: ``x`` and ``zeta`` are (N, n), ``epsilon`` is (N,)."""

    x: np.ndarray
    zeta: np.ndarray
    epsilon: np.ndarray

    @classmethod
    def initial(cls, x0, epsilon0: float = 0.0) -> "NetworkState":
        x = np.array(x0, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        return cls(x=x, zeta=np.zeros_like(x), epsilon=np.full(x.shape[0], float(epsilon0)))

    def copy(self) -> "NetworkState":
        return NetworkState(self.x.copy(), self.zeta.copy(), self.epsilon.copy())


@dataclass(frozen=True)
class Disturbance:
    """Additive input disturbance d(i, t) with declared bound ||d_i(t)||_1 <= bound_D."""

    d: Callable[[int, float], np.ndarray]
    bound_D: float

    def __call__(self, i: int, t: float) -> np.ndarray:
        return np.asarray(self.d(i, t), dtype=float)

    def check_bound(self, n_agents: int, times) -> float:
        worst = max(float(np.abs(self(i, t)).sum()) for i in range(n_agents) for t in times)
        if worst > self.bound_D * (1 + 1e-12):
            raise ParameterError(f"sampled ||d||_1 = {worst:.6g} exceeds declared bound {self.bound_D}")
        return worst


@dataclass
class Derivatives:
    xdot: np.ndarray
    zetadot: np.ndarray
    epsdot: np.ndarray
    s: np.ndarray


# ---------------------------------------------------------------------------
# signum calculus

def sgn(z, deadzone: float = 0.0) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    out = np.sign(z)
    if deadzone > 0:
        out[np.abs(z) <= deadzone] = 0.0
    return out


def sig_alpha(z, alpha: float, deadzone: float = 0.0) -> np.ndarray:
    """Componentwise ``|z|^alpha sgn(z)`` with ``sig(0) = 0`` for every alpha."""
    z = np.asarray(z, dtype=float)
    mag = np.abs(z)
    live = mag > deadzone
    safe = np.where(live, mag, 1.0)
    return np.where(live, safe ** alpha * np.sign(z), 0.0)


def SGN(z, deadzone: float = 0.0) -> np.ndarray:
    """``z / ||z||`` along the last axis; zero at (or within ``deadzone`` of) the origin."""
    z = np.asarray(z, dtype=float)
    nrm = np.linalg.norm(z, axis=-1, keepdims=True)
    live = nrm > deadzone
    return np.where(live, z / np.where(live, nrm, 1.0), 0.0)


def SIG_alpha(z, alpha: float, deadzone: float = 0.0) -> np.ndarray:
    """``||z||^alpha SGN(z)`` along the last axis."""
    z = np.asarray(z, dtype=float)
    nrm = np.linalg.norm(z, axis=-1, keepdims=True)
    live = nrm > deadzone
    safe = np.where(live, nrm, 1.0)
    return np.where(live, safe ** (alpha - 1.0) * z, 0.0)


def SGN_smooth(z, eps, deadzone: float = 0.0) -> np.ndarray:
    """Boundary-layer surrogate ``z / (||z|| + eps)``."""
    z = np.asarray(z, dtype=float)
    nrm = np.linalg.norm(z, axis=-1, keepdims=True)
    eps = np.asarray(eps, dtype=float)
    eps = eps.reshape(eps.shape + (1,) * (z.ndim - eps.ndim))
    denom = nrm + eps
    live = (nrm > deadzone) & (denom > 0)
    return np.where(live, z / np.where(live, denom, 1.0), 0.0)


def _clamped_exp(arg, clamp: float):
    return np.exp(np.minimum(arg, clamp))


# ---------------------------------------------------------------------------
# building blocks; ``D`` holds differences x_i - x_j with shape (..., N, n)
# and ``W`` the matching weight rows with shape (..., N)

def power_consensus(D, W, params: AlgorithmParams, normalized: bool = False) -> np.ndarray:
    """sum_j exp((a_ij ||d_ij||^2)^p) a_ij^(1-p) sig^(1-2p)(d_ij), without the outer gain.

    ``normalized`` swaps the componentwise sig for the norm-based SIG.
    """
    p = params.p
    sq = np.einsum("...k,...k->...", D, D)
    arg = (W * sq) ** p
    weight = np.where(W > 0, _clamped_exp(arg, params.exp_clamp) * W ** (1 - p), 0.0)
    if normalized:
        shape = SIG_alpha(D, 1 - 2 * p, params.deadzone)
    else:
        shape = sig_alpha(D, 1 - 2 * p, params.deadzone)
    return np.einsum("...j,...jk->...k", weight, shape)


def sign_consensus(D, W, params: AlgorithmParams, eps=None) -> np.ndarray:
    """sum_j a_ij SGN(d_ij), or its boundary-layer surrogate when ``eps`` is given."""
    if eps is None:
        shape = SGN(D, params.deadzone)
    else:
        shape = SGN_smooth(D, eps, params.deadzone)
    return np.einsum("...j,...jk->...k", W, shape)


def reach_term(S, params: AlgorithmParams) -> np.ndarray:
    """(1 / (2 p eta T_m)) exp(||s||^(2p)) sig^(1-2p)(s), row-wise."""
    S = np.asarray(S, dtype=float)
    nrm = np.linalg.norm(S, axis=-1, keepdims=True)
    return params.reach_gain * _clamped_exp(nrm ** (2 * params.p), params.exp_clamp) * \
        sig_alpha(S, 1 - 2 * params.p, params.deadzone)


def epsilon_rate(eps, params: AlgorithmParams) -> np.ndarray:
    """Predefined-time decay of the boundary-layer width."""
    eps = np.asarray(eps, dtype=float)
    return -params.reach_gain * _clamped_exp(np.abs(eps) ** (2 * params.p), params.exp_clamp) * \
        sig_alpha(eps, 1 - 2 * params.p, params.deadzone)


def freewill_gains(t: float, params: AlgorithmParams, guard: float):
    """Reach gain k/(eta T_m - t) and consensus gain c/((1-eta) T_m - t), floored denominators."""
    reach_den = max(params.eta * params.T_m - t, guard)
    cons_den = max((1 - params.eta) * params.T_m - t, guard)
    return params.k / reach_den, params.c / cons_den


def apply_inverse_hessian(H, rhs, agents=None, t=None) -> np.ndarray:
    """Solve ``H_i y_i = rhs_i`` for every stacked agent by Cholesky."""
    H = np.asarray(H, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        bad = None
        for k in range(H.shape[0]):
            if np.any(np.linalg.eigvalsh(H[k]) <= 0):
                bad = k if agents is None else agents[k]
                break
        raise SingularHessianError(f"Hessian of agent {bad} is not positive definite", agent=bad, time=t)
    y = np.linalg.solve(L, rhs[..., None])
    return np.linalg.solve(np.swapaxes(L, -1, -2), y)[..., 0]


# ---------------------------------------------------------------------------
# full right-hand side for a subset of agents

def _evaluate(costs, rows, X, t):
    grads = np.array([costs[i].gradient(X[i], t) for i in rows], dtype=float)
    hess = np.array([costs[i].hessian(X[i], t) for i in rows], dtype=float)
    return grads, hess


def _rhs_rows(rows, state: NetworkState, costs, topo: Topology, params: AlgorithmParams,
              t: float, disturbance: Optional[Disturbance] = None,
              guard: Optional[float] = None) -> Derivatives:
    rows = np.asarray(rows, dtype=int)
    X = state.x
    Xr = X[rows]
    grads, hess = _evaluate(costs, rows, X, t)
    S = grads + state.zeta[rows]
    D = Xr[:, None, :] - X[None, :, :]
    W = topo.weights[rows]
    epsdot = np.zeros(len(rows))
    variant = params.variant

    if variant == "freewill":
        guard = guard if guard is not None else (params.guard_dt or GUARD_STEPS * 1e-3)
        k_gain, c_gain = freewill_gains(t, params, guard)
        lap = topo.laplacian
        chi = 1.0 - _clamped_exp(-(lap @ X), params.exp_clamp)
        cons = c_gain * (lap[rows] @ chi)
        reach = k_gain * (1.0 - _clamped_exp(-S, params.exp_clamp))
        xdot = -apply_inverse_hessian(hess, reach + cons, rows, t)
        return Derivatives(xdot=xdot, zetadot=cons, epsdot=epsdot, s=S)

    reach = reach_term(S, params)
    if variant == "time_varying":
        cons = params.consensus_gain * power_consensus(D, W, params, normalized=True)
        eps = None
        if params.boundary_layer:
            # pairwise mean width keeps the sign term odd when widths differ across agents
            eps = 0.5 * (state.epsilon[rows][:, None] + state.epsilon[None, :])
        cons = cons + params.mu * sign_consensus(D, W, params, eps)
        dgdt = np.array([costs[i].time_derivative(X[i], t) for i in rows], dtype=float)
        xdot = -apply_inverse_hessian(hess, reach + cons + dgdt, rows, t)
        if params.boundary_layer:
            epsdot = epsilon_rate(state.epsilon[rows], params)
        return Derivatives(xdot=xdot, zetadot=cons, epsdot=epsdot, s=S)

    cons = params.consensus_gain * power_consensus(D, W, params)
    control = reach + cons
    if variant == "disturbance":
        control = control + params.k * sgn(S, params.deadzone)
    xdot = -apply_inverse_hessian(hess, control, rows, t)
    if variant == "disturbance" and disturbance is not None:
        xdot = xdot + np.array([disturbance(i, t) for i in rows])
    return Derivatives(xdot=xdot, zetadot=cons, epsdot=epsdot, s=S)


def check_identical_hessians(costs, X, t, atol: float = 1e-9) -> None:
    H0 = np.asarray(costs[0].hessian(X[0], t))
    for i in range(1, len(costs)):
        if not np.allclose(costs[i].hessian(X[i], t), H0, rtol=0.0, atol=atol):
            raise AssumptionError(f"Hessian of agent {i} differs from agent 0 at t={t:g}")


def network_rhs(state: NetworkState, t: float, costs: Sequence[CostFunction], topo: Topology,
                params: AlgorithmParams, disturbance: Optional[Disturbance] = None,
                guard: Optional[float] = None) -> Derivatives:
    """Derivatives of every agent against the same frozen network state."""
    if params.variant == "time_varying":
        check_identical_hessians(costs, state.x, t)
    return _rhs_rows(np.arange(len(costs)), state, costs, topo, params, t, disturbance, guard)


def _single(i, state, f_i, topo, params, t, disturbance=None, guard=None):
    d = _rhs_rows([i], state, {i: f_i}, topo, params, t, disturbance, guard)
    return d.xdot[0], d.zetadot[0], d.epsdot[0]


def _require(params, variant):
    if params.variant != variant:
        raise ParameterError(f"expected variant {variant!r}, params select {params.variant!r}")


def zgs_rhs(i: int, state: NetworkState, f_i: CostFunction, topo: Topology,
            params: AlgorithmParams, t: float = 0.0):
    """(xdot_i, zetadot_i) of the static predefined-time ZGS law."""
    _require(params, "zgs_static")
    xdot, zdot, _ = _single(i, state, f_i, topo, params, t)
    return xdot, zdot


def freewill_rhs(i: int, state: NetworkState, f_i: CostFunction, topo: Topology,
                 params: AlgorithmParams, t: float = 0.0, guard: Optional[float] = None):
    """(xdot_i, zetadot_i) of the arbitrary-time law with k/(T - t) type gains."""
    _require(params, "freewill")
    xdot, zdot, _ = _single(i, state, f_i, topo, params, t, guard=guard)
    return xdot, zdot


def disturbance_rhs(i: int, state: NetworkState, f_i: CostFunction, topo: Topology,
                    params: AlgorithmParams, dist: Optional[Disturbance], t: float = 0.0,
                    hess_bound: Optional[float] = None):
    """Static law plus ``k sgn(s_i)`` inside the Hessian solve and ``d_i(t)`` outside it.

    When ``hess_bound`` is given, ``k`` is checked against ``hess_bound * dist.bound_D``.
    """
    _require(params, "disturbance")
    if hess_bound is not None and dist is not None:
        need = hess_bound * dist.bound_D
        if params.k < need:
            raise ParameterError(f"k = {params.k:g} violates k >= H*D = {need:g}")
    xdot, zdot, _ = _single(i, state, f_i, topo, params, t, disturbance=dist)
    return xdot, zdot


def timevarying_rhs(i: int, state: NetworkState, f_i: CostFunction, topo: Topology,
                    params: AlgorithmParams, t: float):
    """(xdot_i, zetadot_i, epsdot_i) of the tracking law with gradient prediction."""
    _require(params, "time_varying")
    return _single(i, state, f_i, topo, params, t)


# ---------------------------------------------------------------------------
# parameter conditions

@dataclass
class BoundCheck:
    name: str
    actual: float
    required: float
    nominal: float
    passed: bool
    note: str = ""


@dataclass
class ValidationReport:
    variant: str
    constants: ConvexityConstants
    lambda2: float
    n_agents: int
    a_min: float
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def minimal_gains(self) -> dict:
        return {c.name: c.required for c in self.checks}

    def render(self) -> str:
        k = self.constants
        lines = [
            f"variant            {self.variant}",
            f"psi_min            {k.psi:.6g}",
            f"Psi_max            {k.Psi:.6g}  (bounds use {PSI_SAFETY}x = {PSI_SAFETY * k.Psi:.6g})",
            f"omega              {k.omega:.6g}",
            f"H (||hess||_1)     {k.hess_norm1:.6g}",
            f"lambda2            {self.lambda2:.6g}",
            f"a_min              {self.a_min:.6g}",
            f"sampling box       {list(k.box)}  grid {k.grid}",
        ]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(
                f"[{status}] {c.name} = {c.actual:.6g} >= {c.required:.6g} "
                f"(nominal {c.nominal:.6g}){'  ' + c.note if c.note else ''}"
            )
        lines += [f"note: {n}" for n in self.notes]
        return "\n".join(lines)


def validate_params(params: AlgorithmParams, constants: ConvexityConstants, lambda2: float,
                    n_agents: int, a_min: float, disturbance_bound: Optional[float] = None,
                    strict: bool = False) -> ValidationReport:
    """Check ``params`` against the convergence conditions for its variant.

    ``lambda2`` should be the minimum over a switching schedule. Range
    violations always raise :class:`ParameterError`; unmet gain bounds raise
    only when ``strict`` is set.
    """
    params.check_ranges()
    if lambda2 <= 0:
        raise ParameterError("algebraic connectivity must be positive (graph disconnected?)")
    Psi_nom = constants.Psi
    Psi_req = PSI_SAFETY * constants.Psi
    report = ValidationReport(variant=params.variant, constants=constants, lambda2=lambda2,
                              n_agents=n_agents, a_min=a_min)

    def add(name, actual, nominal, required, note=""):
        report.checks.append(BoundCheck(name, float(actual), float(required), float(nominal),
                                        bool(actual >= required), note))

    if params.variant == "freewill":
        add("c", params.c, Psi_nom / lambda2 ** 2, Psi_req / lambda2 ** 2, "c >= Psi/lambda2^2")
        add("k", params.k, 1.0, 1.0, "k >= 1")
        guard = f"{params.guard_dt:g} s" if params.guard_dt is not None else f"{GUARD_STEPS} steps"
        report.notes.append(
            f"gain denominators floored at {guard}; "
            "past each deadline the gain stays frozen at its floor value"
        )
    else:
        add("c", params.c, Psi_nom / (4 * lambda2), Psi_req / (4 * lambda2), "c >= Psi/(4 lambda2)")
    if params.variant == "time_varying":
        nominal = 2 * n_agents * constants.omega * Psi_nom / (a_min * constants.psi)
        required = 2 * n_agents * constants.omega * Psi_req / (a_min * constants.psi)
        add("mu", params.mu, nominal, required, "mu >= 2 N omega Psi/(a_min psi)")
    if params.variant == "disturbance":
        D = 0.0 if disturbance_bound is None else disturbance_bound
        add("k", params.k, constants.hess_norm1 * D, constants.hess_norm1 * D, "k >= H D")

    if strict and not report.passed:
        failed = [c for c in report.checks if not c.passed]
        raise ParameterError("; ".join(f"{c.name} = {c.actual:g} < {c.required:g} ({c.note})" for c in failed))
    return report
