import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epidiff import instances as inst
from epidiff.errors import PointOutsideDomainError, PreconditionError
from epidiff.extreal import INF, NEG_INF
from epidiff.oracle import (OracleEstimate, Schedule, agrees, estimate_parabolic_subderivative,
                            estimate_second_subderivative, estimate_subderivative)

SCHED = Schedule(seed=42)
norm2 = lambda X: np.sqrt(np.sum(X * X, axis=1))
half_sq = lambda X: 0.5 * np.sum(X * X, axis=1)


def _estimate(value, div=False, neg=False, pos=False):
    return OracleEstimate(value=value, level_minima=[], taus=[], divergence_flag=div,
                          trend_negative=neg, slope=math.nan, trend_positive=pos)


# ----------------------------------------------------------------------
# schedule

def test_schedule_defaults():
    s = Schedule()
    assert (s.tau0, s.ratio, s.levels, s.samples, s.radius_factor, s.seed) == (1e-2, 0.5, 14, 64, 1.0, 42)
    np.testing.assert_allclose(s.taus(), 1e-2 * 0.5 ** np.arange(14))
    assert s.replace(levels=3).levels == 3


@pytest.mark.parametrize("kw", [{"tau0": 0.0}, {"ratio": 1.0}, {"ratio": 0.0}, {"levels": 0},
                                {"samples": 0}, {"radius_factor": -1.0}])
def test_schedule_validation(kw):
    with pytest.raises(ValueError):
        Schedule(**kw)


# ----------------------------------------------------------------------
# agreement rule

def test_agrees_rules():
    assert agrees(1.0, _estimate(1.00005), 1e-4)
    assert not agrees(1.0, _estimate(1.001), 1e-4)
    assert agrees(100.0, _estimate(100.5), 1e-5, 1e-2)
    assert agrees(INF, _estimate(INF, div=True), 1e-4)
    assert agrees(INF, _estimate(1e6, pos=True), 1e-4)
    assert not agrees(INF, _estimate(3.0), 1e-4)
    assert agrees(NEG_INF, _estimate(None, neg=True), 1e-4)
    assert not agrees(NEG_INF, _estimate(-5.0), 1e-4)
    assert not agrees(1.0, _estimate(None, neg=True), 1e-4)
    assert not agrees(1.0, _estimate(INF, div=True), 1e-4)


# ----------------------------------------------------------------------
# known closed forms

@pytest.mark.parametrize("w", [[3.0, 4.0], [-1.0, 0.5], [0.0, 0.0]])
def test_norm_first_order(w):
    e = estimate_subderivative(norm2, np.zeros(2), w, SCHED, True)
    assert agrees(float(np.linalg.norm(w)), e, 1e-4)


def test_half_squared_norm_second_order():
    e = estimate_second_subderivative(half_sq, [1.0, -2.0], [1.0, -2.0], [0.5, 1.5], SCHED, True)
    assert agrees(2.5, e, 1e-5, 1e-2)


def test_indicator_divergence():
    ind = inst.indicator_nonpositive_scalar().vec
    e = estimate_subderivative(ind, [0.0], [1.0], SCHED, True)
    assert e.divergence_flag and e.value == INF
    e = estimate_parabolic_subderivative(ind, [0.0], [0.0], 0.0, [1.0], SCHED, True)
    assert e.divergence_flag


def test_staircase_trends_to_minus_infinity():
    e = estimate_second_subderivative(inst.staircase().vec, [1.0], [1.0], [1.0], SCHED, True)
    assert e.trend_negative and e.value is None


def test_staircase_parabolic():
    e = estimate_parabolic_subderivative(inst.staircase().vec, [1.0], [-1.0], -1.0, [5.0], SCHED, True)
    assert agrees(5.0, e, 1e-5, 1e-2)


def test_noncritical_direction_blows_up_like_one_over_tau():
    # |t| at 0 with v = 0: the quotient is 2|w|/tau, finite at every level
    e = estimate_second_subderivative(lambda X: np.abs(X[:, 0]), [0.0], [0.0], [1.0], SCHED, True)
    assert e.trend_positive and not e.divergence_flag
    assert agrees(INF, e, 1e-5)


def test_scalar_and_vectorized_calls_agree():
    f_scalar = lambda x: float(np.sqrt(np.sum(np.asarray(x) ** 2)))
    s = Schedule(seed=3, levels=6, samples=16)
    a = estimate_subderivative(f_scalar, np.zeros(2), [3.0, 4.0], s, False)
    b = estimate_subderivative(norm2, np.zeros(2), [3.0, 4.0], s, True)
    assert a.level_minima == pytest.approx(b.level_minima, rel=1e-12)


def test_determinism_and_seed_dependence():
    f = inst.group_scad([(0, 1), (2, 3)], 2.0, 1.0, 3.0).fast_eval
    x = np.array([0.0, 0.0, 3.0, 4.0])
    s = Schedule(seed=7, levels=6)
    a = estimate_second_subderivative(f, x, np.zeros(4), [0.3, -0.2, 1.0, 0.1], s, True)
    b = estimate_second_subderivative(f, x, np.zeros(4), [0.3, -0.2, 1.0, 0.1], s, True)
    assert a.level_minima == b.level_minima
    c = estimate_second_subderivative(f, x, np.zeros(4), [0.3, -0.2, 1.0, 0.1], s.replace(seed=8), True)
    assert c.level_minima != a.level_minima


def test_estimate_records_the_schedule():
    s = Schedule(levels=5)
    e = estimate_subderivative(norm2, np.zeros(2), [1.0, 0.0], s, True)
    assert len(e.level_minima) == len(e.taus) == 5
    np.testing.assert_allclose(e.taus, s.taus())


# ----------------------------------------------------------------------
# errors

def test_base_point_outside_domain():
    with pytest.raises(PointOutsideDomainError):
        estimate_subderivative(inst.indicator_nonpositive_scalar().vec, [1.0], [1.0], SCHED, True)


def test_parabolic_needs_finite_first_order():
    with pytest.raises(PreconditionError):
        estimate_parabolic_subderivative(half_sq, [0.0], [1.0], INF, [0.0], SCHED, True)


# ----------------------------------------------------------------------
# properties: smooth functions, where every notion reduces to Taylor coefficients

@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 20))
def test_quadratic_oracles_match_taylor(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    M = rng.standard_normal((n, n))
    H = M @ M.T + np.eye(n)
    g = rng.standard_normal(n)
    f = lambda X: 0.5 * np.einsum("ki,ij,kj->k", X, H, X) + X @ g
    x, w, z = rng.standard_normal((3, n))
    grad = H @ x + g
    s = Schedule(seed=seed)
    e1 = estimate_subderivative(f, x, w, s, True)
    assert agrees(float(grad @ w), e1, 1e-4)
    e2 = estimate_second_subderivative(f, x, grad, w, s, True)
    assert agrees(float(w @ H @ w), e2, 1e-5, 1e-2)
    e3 = estimate_parabolic_subderivative(f, x, w, float(grad @ w), z, s, True)
    assert agrees(float(w @ H @ w + grad @ z), e3, 1e-5, 1e-2)
