"""Local cost functions with closed-form derivatives.

Every cost takes ``(x, t)``; static costs ignore ``t``. Gradients and
Hessians are hand-derived, and :func:`check_derivatives` compares them with
central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConvexityError, DerivativeError, ValidationError

Vector = np.ndarray
ScalarFn = Callable[[Vector, float], float]
VectorFn = Callable[[Vector, float], Vector]
MatrixFn = Callable[[Vector, float], np.ndarray]

DEFAULT_BOX = (-5.0, 5.0)
DEFAULT_GRID = 41


@dataclass(frozen=True)
class CostFunction:
    name: str
    dim: int
    value: ScalarFn
    gradient: VectorFn
    hessian: MatrixFn
    dgrad_dt: Optional[VectorFn] = None
    time_varying: bool = False

    def time_derivative(self, x, t: float) -> Vector:
        if self.dgrad_dt is None:
            return np.zeros(self.dim)
        return self.dgrad_dt(x, t)


@dataclass(frozen=True)
class ConvexityConstants:
    """Sampled curvature constants of one cost (or the max/min over a set)."""

    psi: float
    Psi: float
    omega: float
    hess_norm1: float
    box: tuple = DEFAULT_BOX
    grid: int = DEFAULT_GRID

    def __post_init__(self):
        if not 0 < self.psi <= self.Psi:
            raise ValidationError(f"need 0 < psi <= Psi, got psi={self.psi}, Psi={self.Psi}")


def aggregate_constants(constants: Sequence[ConvexityConstants]) -> ConvexityConstants:
    """Network-level constants: min psi, max Psi, max omega, max Hessian 1-norm."""
    return ConvexityConstants(
        psi=min(c.psi for c in constants),
        Psi=max(c.Psi for c in constants),
        omega=max(c.omega for c in constants),
        hess_norm1=max(c.hess_norm1 for c in constants),
        box=constants[0].box,
        grid=constants[0].grid,
    )


# ---------------------------------------------------------------------------
# benchmark suite: six nonquadratic 2-D costs

def _f1(x, t=0.0):
    a, b = x
    return (a - 0.5) ** 2 + 2 * (b + 1.3) ** 2 - 0.5 * a * b


def _g1(x, t=0.0):
    a, b = x
    return np.array([2 * (a - 0.5) - 0.5 * b, 4 * (b + 1.3) - 0.5 * a])


def _h1(x, t=0.0):
    return np.array([[2.0, -0.5], [-0.5, 4.0]])


def _f2(x, t=0.0):
    a, b = x
    return (2 * (a + 0.7) ** 2 + 1.5 * (b + 1.7) ** 2 + 0.3 * a * b
            + 0.3 * math.sin(0.3 * a + 1.8) + 0.73 * math.cos(0.5 * b + 1))


def _g2(x, t=0.0):
    a, b = x
    return np.array([
        4 * (a + 0.7) + 0.3 * b + 0.09 * math.cos(0.3 * a + 1.8),
        3 * (b + 1.7) + 0.3 * a - 0.365 * math.sin(0.5 * b + 1),
    ])


def _h2(x, t=0.0):
    a, b = x
    return np.array([
        [4 - 0.027 * math.sin(0.3 * a + 1.8), 0.3],
        [0.3, 3 - 0.1825 * math.cos(0.5 * b + 1)],
    ])


def _f3(x, t=0.0):
    a, b = x
    return (2 * (a - 1.5) ** 2 + 2 * (b - 0.3) ** 2
            + math.log(2 + 0.1 * a * a) + math.log(4 + 0.6 * b * b))


def _g3(x, t=0.0):
    a, b = x
    return np.array([
        4 * (a - 1.5) + 0.2 * a / (2 + 0.1 * a * a),
        4 * (b - 0.3) + 1.2 * b / (4 + 0.6 * b * b),
    ])


def _h3(x, t=0.0):
    a, b = x
    da = 2 + 0.1 * a * a
    db = 4 + 0.6 * b * b
    return np.array([
        [4 + (0.4 - 0.02 * a * a) / da ** 2, 0.0],
        [0.0, 4 + (4.8 - 0.72 * b * b) / db ** 2],
    ])


def _f4(x, t=0.0):
    a, b = x
    return (0.5 * (a - 1.5) ** 2 + 1.5 * (b + 1.6) ** 2 + 0.5 * a * b
            + a / math.sqrt(2 + 0.4 * a * a) + 0.6 * b / math.sqrt(1 + b * b))


def _g4(x, t=0.0):
    a, b = x
    return np.array([
        (a - 1.5) + 0.5 * b + 2 * (2 + 0.4 * a * a) ** -1.5,
        3 * (b + 1.6) + 0.5 * a + 0.6 * (1 + b * b) ** -1.5,
    ])


def _h4(x, t=0.0):
    a, b = x
    return np.array([
        [1 - 2.4 * a * (2 + 0.4 * a * a) ** -2.5, 0.5],
        [0.5, 3 - 1.8 * b * (1 + b * b) ** -2.5],
    ])


def _f5(x, t=0.0):
    a, b = x
    return ((a - 2) ** 2 + (b - 0.9) ** 2 + 0.7 * a * b
            + 0.3 * math.exp(-0.4 * a * a) + 0.7 * math.exp(-0.5 * b * b))


def _g5(x, t=0.0):
    a, b = x
    return np.array([
        2 * (a - 2) + 0.7 * b - 0.24 * a * math.exp(-0.4 * a * a),
        2 * (b - 0.9) + 0.7 * a - 0.7 * b * math.exp(-0.5 * b * b),
    ])


def _h5(x, t=0.0):
    a, b = x
    return np.array([
        [2 + (0.192 * a * a - 0.24) * math.exp(-0.4 * a * a), 0.7],
        [0.7, 2 + (0.7 * b * b - 0.7) * math.exp(-0.5 * b * b)],
    ])


def _f6(x, t=0.0):
    a, b = x
    return 1.5 * (a - 0.8) ** 2 + 2 * (b + 1.5) ** 2


def _g6(x, t=0.0):
    a, b = x
    return np.array([3 * (a - 0.8), 4 * (b + 1.5)])


def _h6(x, t=0.0):
    return np.array([[3.0, 0.0], [0.0, 4.0]])


_SUITE_A = [
    (_f1, _g1, _h1), (_f2, _g2, _h2), (_f3, _g3, _h3),
    (_f4, _g4, _h4), (_f5, _g5, _h5), (_f6, _g6, _h6),
]

# optimum of the suite-A sum as printed alongside the benchmark
SUITE_A_OPTIMUM = np.array([0.7858, -0.9551])


def benchmark_suite_A() -> list[CostFunction]:
    """The six static benchmark costs f1..f6 on R^2."""
    return [
        CostFunction(name=f"f{k + 1}", dim=2, value=f, gradient=g, hessian=h)
        for k, (f, g, h) in enumerate(_SUITE_A)
    ]


def quadratic(Q, b=None, name: str = "quadratic") -> CostFunction:
    """f(x) = 1/2 x^T Q x + b^T x with symmetric ``Q``."""
    Q = np.array(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        raise ValidationError("Q must be square")
    if not np.allclose(Q, Q.T):
        raise ValidationError("Q must be symmetric")
    n = Q.shape[0]
    b = np.zeros(n) if b is None else np.array(b, dtype=float)
    if b.shape != (n,):
        raise ValidationError(f"b must have length {n}")
    return CostFunction(
        name=name,
        dim=n,
        value=lambda x, t=0.0: float(0.5 * x @ Q @ x + b @ x),
        gradient=lambda x, t=0.0: Q @ x + b,
        hessian=lambda x, t=0.0: Q.copy(),
    )


def centered_quadratic(Q, center, name: str = "quadratic") -> CostFunction:
    """f(x) = 1/2 (x - center)^T Q (x - center)."""
    Q = np.array(Q, dtype=float)
    center = np.array(center, dtype=float)
    return quadratic(Q, -Q @ center, name=name)


def quadratic_tracking(observation: Callable[[float], Vector],
                       observation_rate: Callable[[float], Vector],
                       name: str = "tracking") -> CostFunction:
    """f(x, t) = ||x - o(t)||^2 for an observed target ``o`` with known rate."""

    def value(x, t):
        d = np.asarray(x) - observation(t)
        return float(d @ d)

    def gradient(x, t):
        return 2.0 * (np.asarray(x) - observation(t))

    def hessian(x, t):
        return 2.0 * np.eye(len(x))

    def dgrad_dt(x, t):
        return -2.0 * np.asarray(observation_rate(t), dtype=float)

    dim = len(observation(0.0))
    return CostFunction(name=name, dim=dim, value=value, gradient=gradient,
                        hessian=hessian, dgrad_dt=dgrad_dt, time_varying=True)


def encirclement_target(t: float) -> Vector:
    """Moving source p*(t) = (2 sin t + 0.5 t, t)."""
    return np.array([2 * math.sin(t) + 0.5 * t, t])


def encirclement_target_rate(t: float) -> Vector:
    return np.array([2 * math.cos(t) + 0.5, 1.0])


def biased_observation(bias, target=encirclement_target, target_rate=encirclement_target_rate):
    bias = np.array(bias, dtype=float)
    return (lambda t: target(t) + bias), target_rate


# ---------------------------------------------------------------------------
# derivative checks and curvature constants

@dataclass
class DerivativeReport:
    name: str
    samples: int
    max_gradient_error: float
    max_hessian_error: float
    max_time_error: float = 0.0
    worst_points: dict = field(default_factory=dict)


def _sample_points(box, dim, samples, rng):
    lo, hi = box
    return rng.uniform(lo, hi, size=(samples, dim))


def check_derivatives(f: CostFunction, samples: int = 100, box=DEFAULT_BOX, seed: int = 0,
                      t_range=(0.0, 2 * math.pi), grad_rtol: float = 1e-5,
                      hess_rtol: float = 1e-4) -> DerivativeReport:
    """Central-difference check of gradient, Hessian and (if time-varying) dgrad/dt.

    Errors are relative to ``max(1, |exact component|)``. Raises
    :class:`DerivativeError` naming the first offending point and component.
    """
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    pts = _sample_points(box, f.dim, samples, rng)
    times = rng.uniform(*t_range, size=samples) if f.time_varying else np.zeros(samples)
    # value step sized so roundoff (eps |f| / hv) stays below truncation error
    hv, hg, ht = 1e-4, 1e-5, 1e-5
    eye = np.eye(f.dim)
    worst = {"gradient": (0.0, None), "hessian": (0.0, None), "time": (0.0, None)}

    def note(kind, err, where, tol):
        if err > worst[kind][0]:
            worst[kind] = (err, where)
        if err > tol:
            raise DerivativeError(
                f"{f.name}: {kind} mismatch {err:.3e} > {tol:g} at x={where[0].tolist()}, "
                f"t={where[1]:g}, component {where[2]}"
            )

    for x, t in zip(pts, times):
        g = np.asarray(f.gradient(x, t), dtype=float)
        H = np.asarray(f.hessian(x, t), dtype=float)
        for k in range(f.dim):
            fd = (f.value(x + hv * eye[k], t) - f.value(x - hv * eye[k], t)) / (2 * hv)
            note("gradient", abs(fd - g[k]) / max(1.0, abs(g[k])), (x, t, k), grad_rtol)
            col = (np.asarray(f.gradient(x + hg * eye[k], t)) - np.asarray(f.gradient(x - hg * eye[k], t))) / (2 * hg)
            for m in range(f.dim):
                note("hessian", abs(col[m] - H[m, k]) / max(1.0, abs(H[m, k])), (x, t, (m, k)), hess_rtol)
        if f.time_varying:
            dt = f.time_derivative(x, t)
            fd = (np.asarray(f.gradient(x, t + ht)) - np.asarray(f.gradient(x, t - ht))) / (2 * ht)
            for k in range(f.dim):
                note("time", abs(fd[k] - dt[k]) / max(1.0, abs(dt[k])), (x, t, k), hess_rtol)
        elif f.dgrad_dt is not None and np.any(f.time_derivative(x, t) != 0):
            raise DerivativeError(f"{f.name}: static cost reports nonzero dgrad/dt")

    return DerivativeReport(
        name=f.name,
        samples=samples,
        max_gradient_error=worst["gradient"][0],
        max_hessian_error=worst["hessian"][0],
        max_time_error=worst["time"][0],
        worst_points={k: (None if v[1] is None else (v[1][0].tolist(), float(v[1][1]), v[1][2]))
                      for k, v in worst.items()},
    )


def estimate_constants(f: CostFunction, box=DEFAULT_BOX, grid: int = DEFAULT_GRID,
                       time_grid: Optional[Sequence[float]] = None) -> ConvexityConstants:
    """Sample Hessian eigenvalues and 1-norms on a ``grid``^dim lattice over ``box``.

    ``omega`` is the largest sampled ``||d/dt grad f||_inf``, taken over
    ``time_grid`` (default 65 points on [0, 2*pi]) for time-varying costs.
    """
    if grid < 2:
        raise ValidationError("grid must be >= 2")
    lo, hi = box
    axis = np.linspace(lo, hi, grid)
    mesh = np.stack(np.meshgrid(*([axis] * f.dim), indexing="ij"), axis=-1).reshape(-1, f.dim)
    if time_grid is None:
        time_grid = np.linspace(0.0, 2 * math.pi, 65) if f.time_varying else [0.0]

    psi, Psi, h1 = math.inf, -math.inf, 0.0
    for t in (time_grid if f.time_varying else [0.0]):
        hess = np.array([f.hessian(x, t) for x in mesh])
        eig = np.linalg.eigvalsh(hess)
        lo_eig = eig[:, 0].min()
        if lo_eig <= 0:
            k = int(eig[:, 0].argmin())
            raise ConvexityError(
                f"{f.name}: Hessian not positive definite at x={mesh[k].tolist()}, t={t:g} "
                f"(lambda_min={lo_eig:.3g})"
            )
        psi = min(psi, float(lo_eig))
        Psi = max(Psi, float(eig[:, -1].max()))
        h1 = max(h1, float(np.abs(hess).sum(axis=1).max()))

    omega = 0.0
    if f.time_varying:
        for t in time_grid:
            # the rate term is evaluated on a coarser spatial subsample
            for x in mesh[:: max(1, len(mesh) // 64)]:
                omega = max(omega, float(np.abs(f.time_derivative(x, t)).max()))
    return ConvexityConstants(psi=psi, Psi=Psi, omega=omega, hess_norm1=h1, box=tuple(box), grid=grid)
