import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from zgsopt.costs import (
    SUITE_A_OPTIMUM,
    CostFunction,
    aggregate_constants,
    benchmark_suite_A,
    biased_observation,
    centered_quadratic,
    check_derivatives,
    estimate_constants,
    quadratic,
    quadratic_tracking,
)
from zgsopt.errors import ConvexityError, DerivativeError, ValidationError

a, b = sp.symbols("a b", real=True)
# the six benchmark objectives, typed in independently for a symbolic oracle
SYMBOLIC = [
    (a - 0.5) ** 2 + 2 * (b + 1.3) ** 2 - 0.5 * a * b,
    2 * (a + 0.7) ** 2 + 1.5 * (b + 1.7) ** 2 + 0.3 * a * b
    + 0.3 * sp.sin(0.3 * a + 1.8) + 0.73 * sp.cos(0.5 * b + 1),
    2 * (a - 1.5) ** 2 + 2 * (b - 0.3) ** 2 + sp.log(2 + 0.1 * a ** 2) + sp.log(4 + 0.6 * b ** 2),
    0.5 * (a - 1.5) ** 2 + 1.5 * (b + 1.6) ** 2 + 0.5 * a * b
    + a / sp.sqrt(2 + 0.4 * a ** 2) + 0.6 * b / sp.sqrt(1 + b ** 2),
    (a - 2) ** 2 + (b - 0.9) ** 2 + 0.7 * a * b
    + 0.3 * sp.exp(-0.4 * a ** 2) + 0.7 * sp.exp(-0.5 * b ** 2),
    1.5 * (a - 0.8) ** 2 + 2 * (b + 1.5) ** 2,
]


def _lambdas(expr):
    grad = [sp.diff(expr, v) for v in (a, b)]
    hess = [[sp.diff(g, v) for v in (a, b)] for g in grad]
    return (sp.lambdify((a, b), expr), sp.lambdify((a, b), grad), sp.lambdify((a, b), hess))


ORACLES = [_lambdas(e) for e in SYMBOLIC]
SUITE = benchmark_suite_A()


@pytest.mark.parametrize("k", range(6))
def test_suite_matches_symbolic_derivatives(k, rng):
    f = SUITE[k]
    val, grad, hess = ORACLES[k]
    for x in rng.uniform(-5, 5, size=(50, 2)):
        assert f.value(x) == pytest.approx(val(*x), rel=1e-12, abs=1e-12)
        np.testing.assert_allclose(f.gradient(x), grad(*x), rtol=1e-11, atol=1e-11)
        np.testing.assert_allclose(f.hessian(x), np.array(hess(*x), dtype=float), rtol=1e-11, atol=1e-11)


def test_f6_vanishes_at_its_center():
    assert SUITE[5].value(np.array([0.8, -1.5])) == 0.0


def test_f1_gradient_hand_value():
    # 2(0.5 - 0.5) - 0.5(-1.3) = 0.65 ; 4(-1.3 + 1.3) - 0.5(0.5) = -0.25
    np.testing.assert_allclose(SUITE[0].gradient(np.array([0.5, -1.3])), [0.65, -0.25], atol=1e-15)


def test_published_optimum_constant():
    assert SUITE_A_OPTIMUM.tolist() == [0.7858, -0.9551]


@pytest.mark.parametrize("k", range(6))
def test_finite_difference_check_passes(k):
    rep = check_derivatives(SUITE[k], samples=100, seed=k)
    assert rep.samples == 100
    assert rep.max_gradient_error <= 1e-5 and rep.max_hessian_error <= 1e-4


def test_quadratic_fd_error_is_roundoff():
    assert check_derivatives(SUITE[5]).max_gradient_error < 1e-9


def test_corrupted_gradient_detected():
    f = SUITE[1]
    bad = CostFunction(name="broken", dim=2, value=f.value,
                       gradient=lambda x, t=0.0: f.gradient(x) + np.array([0.1, 0.0]),
                       hessian=f.hessian)
    with pytest.raises(DerivativeError, match="gradient"):
        check_derivatives(bad)


def test_tracking_cost_time_derivative_checked():
    obs, rate = biased_observation((1.0, 1.0))
    f = quadratic_tracking(obs, rate)
    rep = check_derivatives(f, samples=40)
    assert rep.max_time_error < 1e-4
    wrong = quadratic_tracking(obs, lambda t: rate(t) + 1.0)
    with pytest.raises(DerivativeError, match="time"):
        check_derivatives(wrong, samples=40)


def test_f6_constants_exact():
    k = estimate_constants(SUITE[5])
    assert (k.psi, k.Psi, k.hess_norm1, k.omega) == (3.0, 4.0, 4.0, 0.0)
    assert k.box == (-5.0, 5.0) and k.grid == 41


def test_tracking_constants():
    obs, rate = biased_observation((0.5, 0.5))
    k = estimate_constants(quadratic_tracking(obs, rate))
    assert k.psi == pytest.approx(2.0) and k.Psi == pytest.approx(2.0)
    # sup |2 (2 cos t + 0.5)| = 5 at t = 0, which is on the time grid
    assert k.omega == pytest.approx(5.0, abs=1e-12)


def test_concave_cost_rejected():
    f = quadratic(-2.0 * np.eye(2))
    with pytest.raises(ConvexityError):
        estimate_constants(f)


def test_constants_validation_and_aggregation():
    ks = [estimate_constants(f) for f in SUITE]
    agg = aggregate_constants(ks)
    assert agg.psi == min(k.psi for k in ks)
    assert agg.Psi == max(k.Psi for k in ks)
    with pytest.raises(ValidationError):
        type(agg)(psi=2.0, Psi=1.0, omega=0.0, hess_norm1=1.0)


def test_quadratic_constructor():
    f = centered_quadratic([[2.0, 0.0], [0.0, 1.0]], [1.0, -1.0])
    np.testing.assert_allclose(f.gradient(np.array([1.0, -1.0])), 0.0)
    with pytest.raises(ValidationError):
        quadratic([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(ValidationError):
        quadratic(np.eye(2), [1.0, 2.0, 3.0])


def test_static_costs_report_zero_rate():
    assert np.all(SUITE[2].time_derivative(np.array([1.0, 2.0]), 0.3) == 0)


CONSTANTS = [estimate_constants(f) for f in SUITE]


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 5),
       st.tuples(*[st.floats(-5, 5)] * 4).filter(lambda v: math.hypot(v[0] - v[2], v[1] - v[3]) > 1e-3))
def test_strong_convexity_and_smoothness_on_random_pairs(k, pts):
    f, c = SUITE[k], CONSTANTS[k]
    x, z = np.array(pts[:2]), np.array(pts[2:])
    inner = (f.gradient(z) - f.gradient(x)) @ (z - x)
    sq = (z - x) @ (z - x)
    # grid sampling can miss the true extremes slightly, hence the 2% margin
    assert inner >= 0.98 * c.psi * sq
    assert inner <= 1.02 * c.Psi * sq
