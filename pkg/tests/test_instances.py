import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epidiff import instances as inst
from epidiff.errors import DimensionError, EpidiffError, InvalidRecipeError
from epidiff.extreal import INF
from epidiff.inner_maps import SmoothMap, polynomial_map, qnorm

X0 = np.array([0.0, 0.0, 3.0, 4.0])
Z4 = np.zeros(4)


# ----------------------------------------------------------------------
# scalar penalties

@pytest.mark.parametrize("t, expected", [(0.5, 0.5), (2.0, 1.75), (4.0, 2.0), (-2.0, 1.75)])
def test_scad_values(t, expected):
    assert float(inst.scad_value(t, 1.0, 3.0)) == expected


@pytest.mark.parametrize("t, expected", [(0.0, 0.0), (1.0, 0.75), (5.0, 1.0), (-1.0, 0.75)])
def test_mcp_values(t, expected):
    assert inst.mcp_scalar(inst.McpParams(1.0, 2.0)).eval([t]) == expected


def test_penalty_parameter_checks():
    with pytest.raises(EpidiffError):
        inst.ScadParams(1.0, 2.0)
    with pytest.raises(EpidiffError):
        inst.ScadParams(0.0, 3.7)
    with pytest.raises(EpidiffError):
        inst.McpParams(1.0, 0.0)


def test_default_scad_parameter():
    assert inst.ScadParams().a == 3.7


@pytest.mark.parametrize("t", np.linspace(-5, 5, 41))
def test_derivative_helpers_match_pieces(t):
    scad = inst.scad_scalar(inst.ScadParams(1.0, 3.0))
    mcp = inst.mcp_scalar(inst.McpParams(1.0, 2.0))
    if t != 0.0:
        assert scad.subderivative([t], [1.0]) == pytest.approx(float(inst.scad_deriv(t, 1.0, 3.0)), abs=1e-14)
        assert mcp.subderivative([t], [1.0]) == pytest.approx(float(inst.mcp_deriv(t, 1.0, 2.0)), abs=1e-14)


# ----------------------------------------------------------------------
# group penalties (type I)

def test_group_penalty_sums_groups(gscad):
    x = np.array([1.0, 0.0, 3.0, 4.0])
    assert gscad.f_eval(x) == pytest.approx(float(inst.scad_value(1.0, 1.0, 3.0) + inst.scad_value(5.0, 1.0, 3.0)))
    np.testing.assert_allclose(gscad.fast_eval(np.vstack([x, X0])), [gscad.f_eval(x), gscad.f_eval(X0)])


def test_group_mcp_values():
    f = inst.group_mcp([(0, 1), (2,)], 2.0, 1.0, 2.0)
    assert f.f_eval(np.array([0.6, 0.8, -5.0])) == pytest.approx(0.75 + 1.0)


def test_type1_multiplier(gscad):
    np.testing.assert_array_equal(inst.type1_multiplier(gscad, X0), [1.0, 0.0])


def test_subgradient_factory(gscad):
    assert inst.is_subgradient_type1(gscad, X0, Z4)
    v = inst.subgradient_factory_type1(gscad, X0, [0.0, 0.0], [np.zeros(2), np.zeros(2)])
    np.testing.assert_array_equal(v, Z4)
    v = inst.subgradient_factory_type1(gscad, X0, [-1.0, 0.0], [np.array([1.0, 0.0]), np.zeros(2)])
    np.testing.assert_array_equal(v, [-1.0, 0.0, 0.0, 0.0])
    assert inst.is_subgradient_type1(gscad, X0, v)


@pytest.mark.parametrize("eta, zeta", [
    ([-1.0, 0.0], [np.array([0.5, 0.0]), np.zeros(2)]),   # eta < 0 needs a unit zeta
    ([2.0, 0.0], [np.array([1.0, 0.0]), np.zeros(2)]),    # |eta| above lambda
    ([0.5, 0.0], [np.array([1.0, 1.0]), np.zeros(2)]),    # zeta outside the dual ball
    ([0.5, 0.0], [np.array([1.0]), np.zeros(2)]),         # wrong block size
])
def test_subgradient_factory_rejects_bad_recipes(gscad, eta, zeta):
    with pytest.raises(InvalidRecipeError):
        inst.subgradient_factory_type1(gscad, X0, eta, zeta)


@settings(max_examples=50, deadline=None)
@given(st.floats(-1, 1), st.floats(0, 2 * math.pi), st.sampled_from([1.5, 2.0, 3.0]))
def test_factory_output_passes_the_membership_test(eta, angle, q):
    f = inst.group_scad([(0, 1), (2, 3)], q, 1.0, 3.0)
    p = q / (q - 1)
    zeta = np.array([math.cos(angle), math.sin(angle)])
    zeta /= qnorm(zeta, p)
    v = inst.subgradient_factory_type1(f, X0, [eta, 0.0], [zeta, np.zeros(2)])
    assert inst.is_subgradient_type1(f, X0, v)


# ----------------------------------------------------------------------
# q-order cones (type II)

def test_qcone_examples(soc):
    assert soc.f_eval(np.array([1.0, 0.6, 0.8])) == 0.0
    assert soc.f_second_subderivative(np.array([2.0, 0.5, 0.5]), np.zeros(3), np.array([1.0, -2.0, 0.3])) == 0.0
    assert soc.f_second_subderivative(np.zeros(3), np.array([-1.0, 1.0, 0.0]), np.array([1.0, 1.0, 0.0])) == 0.0


def test_qcone_boundary_curvature(soc):
    # x on the boundary, v = xi * grad F, w tangent: value xi <w2, Hess ||.|| w2>
    x = np.array([1.0, 0.6, 0.8])
    v = np.array([-1.0, 0.6, 0.8])
    w = np.array([0.0, 0.8, -0.6])
    assert soc.f_second_subderivative(x, v, w) == pytest.approx(1.0)


@pytest.mark.parametrize("q", [1.5, 2.0, 3.0])
def test_qcone_boundary_point_is_exact(q, rng):
    cf = inst.qcone_indicator(4, q)
    xo = inst.qcone_boundary_point(rng.standard_normal(3), q)
    assert cf.fast_eval(xo[None, :])[0] == 0.0
    assert cf.fast_eval((xo * np.longdouble(1 + 1e-12) - np.array([1e-6, 0, 0, 0], dtype=np.longdouble))[None, :])[0] == INF


def test_qcone_normal_cone(soc):
    assert inst.qcone_normal_contains(soc, np.zeros(3), np.array([-1.0, 0.5, 0.5]))
    assert not inst.qcone_normal_contains(soc, np.zeros(3), np.array([-1.0, 1.0, 1.0]))
    assert inst.qcone_normal_contains(soc, np.array([1.0, 0.6, 0.8]), np.array([-2.0, 1.2, 1.6]))
    assert not inst.qcone_normal_contains(soc, np.array([2.0, 0.6, 0.8]), np.array([-2.0, 1.2, 1.6]))
    np.testing.assert_array_equal(inst.qcone_multiplier(soc, np.array([1.0, 0.6, 0.8]), np.array([-2.0, 1.2, 1.6])), [2.0])


def test_cone_product_examples(soc):
    prod = inst.cone_product([soc, soc])
    assert prod.f_second_subderivative(np.array([2.0, 0.5, 0, 2.0, 0, 0.5]), np.zeros(6), np.ones(6)) == 0.0
    x = np.array([2.0, 0.5, 0, 0, 0, 0])
    v = np.array([0, 0, 0, -1.0, 1, 0])
    assert prod.f_second_subderivative(x, v, np.array([1.0, 1, 1, 1.0, 1, 0])) == 0.0
    assert prod.f_second_subderivative(x, v, np.array([1.0, 1, 1, 1.0, -1, 0])) == INF


def test_cone_product_block_checks(soc, gscad):
    with pytest.raises(EpidiffError):
        inst.cone_product([])
    with pytest.raises(DimensionError):
        inst.cone_product([soc, gscad])
    with pytest.raises(DimensionError):
        inst.cone_product([soc, soc]).f_eval(np.zeros(5))


# ----------------------------------------------------------------------
# smooth composites (type III)

def test_smooth_composite_examples():
    f = inst.smooth_composite(inst.scad_sum(1, inst.ScadParams(1.0, 3.0)), SmoothMap.identity(1))
    assert f.f_second_subderivative(np.array([2.0]), np.array([0.5]), np.array([1.0])) == -0.5
    g = inst.smooth_composite(inst.indicator_nonpositive(1), SmoothMap.affine([[1.0, 1.0]], [-1.0]))
    assert g.f_second_subderivative(np.array([0.5, 0.5]), np.array([2.0, 2.0]), np.array([1.0, -1.0])) == 0.0


@pytest.mark.parametrize("w1", [-1.0, 0.3, 1.5])
def test_smooth_parabola_constraint(w1):
    # delta_{R-}(x1^2 + x2 - 1) at (0, 1) with v = (0, 1): value 2 w1^2
    F = polynomial_map([[[1.0, [2, 0]], [1.0, [0, 1]], [-1.0, [0, 0]]]], 2)
    f = inst.smooth_composite(inst.indicator_nonpositive(1), F)
    assert f.f_second_subderivative(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([w1, 0.0])) == 2 * w1 ** 2


def test_smooth_composite_needs_a_regular_outer_function():
    with pytest.raises(EpidiffError):
        inst.smooth_composite(inst.staircase(), SmoothMap.identity(1))


# ----------------------------------------------------------------------
# PSD cone (type IV)

XB, VB = np.diag([0.0, -1.0, -2.0]), np.diag([1.0, 0.0, 0.0])
WP = np.zeros((3, 3))
WP[0, 1] = WP[1, 0] = 1.0


def test_psd_instance_examples():
    P = inst.psd_cone_instance(3)
    assert P.second_subderivative(XB, VB, WP) == 2.0
    assert P.second_subderivative(XB, np.zeros((3, 3)), WP) == 0.0
    assert inst.psd_cone_instance(1).second_subderivative(np.zeros((1, 1)), np.ones((1, 1)), np.zeros((1, 1))) == 0.0
    assert P.f_eval(XB) == 0.0
    assert P.f_eval(-XB) == INF


def test_psd_size_limits():
    with pytest.raises(EpidiffError):
        inst.PsdConeInstance(0)
    with pytest.raises(EpidiffError):
        inst.PsdConeInstance(65)


def test_svec_is_an_isometry(rng):
    A, B = rng.standard_normal((2, 4, 4))
    A, B = A + A.T, B + B.T
    assert inst.svec(A) @ inst.svec(B) == pytest.approx(np.sum(A * B))
    np.testing.assert_allclose(inst.smat(inst.svec(A), 4), A)
    assert inst.svec_dim(4) == inst.svec(A).size == 10


@pytest.mark.parametrize("n", [2, 3, 4])
def test_random_triples_are_critical(n, rng):
    P = inst.psd_cone_instance(n)
    for _ in range(10):
        xb, vb, w = inst.random_psd_critical_triple(n, rng)
        assert P.normal_cone_contains(xb, vb)
        assert P.critical_cone_contains(xb, vb, w)
        assert math.isfinite(P.second_subderivative(xb, vb, w))


def test_psd_fast_eval_matches_eigenvalues(rng):
    P = inst.psd_cone_instance(3)
    S = rng.standard_normal((100, 3, 3))
    S = S + S.transpose(0, 2, 1)
    expected = np.where(np.linalg.eigvalsh(S)[:, -1] <= 0, 0.0, INF)
    np.testing.assert_array_equal(P.fast_eval(np.array([inst.svec(M) for M in S])), expected)


def test_psd_oracle_on_diagonal_example():
    from epidiff.oracle import agrees

    # the quotient neighbourhood has radius tau, so w is kept small against the gap of xbar
    e = inst.psd_cone_instance(3).oracle_second_subderivative(XB, VB, 0.5 * WP)
    assert agrees(0.5, e, 1e-4, 1e-2)
