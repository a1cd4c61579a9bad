"""Built-in golden battery and seeded property suites behind ``epidiff selftest``.

Each check belongs to a suite named after the module it exercises
(``polyhedra``, ``pwtd``, ``inner_maps``, ``composite``, ``oracle``,
``instances``) or to ``properties``.  Golden checks compare against fixed
values; property checks draw from the seeded batteries.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import batteries as B
from . import instances as inst
from .composite import weak_duality_gap
from .errors import EpidiffError, InvalidRecipeError, PreconditionError
from .extreal import INF, ext_add, ext_scale, ext_sum
from .inner_maps import (
    GroupQNormMap, GroupStructure, QConeResidualMap, SmoothMap, polynomial_map,
    psd_second_subderivative, qnorm_grad,
)
from .oracle import (
    Schedule, agrees, estimate_parabolic_subderivative, estimate_second_subderivative,
    estimate_subderivative,
)
from .polyhedra import Polyhedron

SUITES = ("polyhedra", "pwtd", "inner_maps", "composite", "oracle", "instances", "properties")
HOMOGENEITY_T = (0.5, 2.0, 10.0)


@dataclass
class Check:
    suite: str
    name: str
    fn: Callable[[int], object]


@dataclass
class CheckResult:
    suite: str
    name: str
    passed: bool
    detail: str
    time_s: float


_REGISTRY: list = []


def check(suite: str, name: str):
    def deco(fn):
        _REGISTRY.append(Check(suite, name, fn))
        return fn
    return deco


def golden(suite: str, name: str, thunk: Callable[[], object], expected, tol: float = 1e-12):
    """Register a closed-form value check (``expected`` may be ``±inf`` or a bool)."""

    def fn(seed):
        got = thunk()
        if isinstance(expected, (bool, np.bool_)):
            return got == expected, f"got {got}"
        if isinstance(expected, (list, tuple, np.ndarray)):
            got = np.asarray(got, dtype=float)
            ok = got.shape == np.shape(expected) and np.allclose(got, expected, rtol=0, atol=tol)
            return ok, f"got {got.tolist()}"
        ok = got == expected or (math.isfinite(got) and abs(got - expected) <= tol * (1 + abs(expected)))
        return ok, f"got {got!r}"

    _REGISTRY.append(Check(suite, name, fn))


def raises(suite: str, name: str, thunk: Callable[[], object], exc=EpidiffError):
    def fn(seed):
        try:
            got = thunk()
        except exc as err:
            return True, f"raised {type(err).__name__}"
        return False, f"returned {got!r}"

    _REGISTRY.append(Check(suite, name, fn))


# ----------------------------------------------------------------------
# polyhedra

_I01 = Polyhedron.interval(0.0, 1.0)
_TRI = Polyhedron.from_rows([[1, 1, 1], [-1, 0, 0], [0, -1, 0]])
_NEG2 = Polyhedron.from_rows([[1, 0, 0], [0, 1, 0]])

golden("polyhedra", "contains boundary of {t <= 0}", lambda: Polyhedron.interval(hi=0.0).contains([0.0]), True)
golden("polyhedra", "1.5 not in [0,1]", lambda: _I01.contains([1.5]), False)
golden("polyhedra", "simplex boundary point", lambda: _TRI.contains([0.5, 0.5]), True)
golden("polyhedra", "T_[0,1](1) contains -1", lambda: _I01.tangent_cone_contains([1.0], [-1.0]), True)
golden("polyhedra", "T_[0,1](1) excludes +1", lambda: _I01.tangent_cone_contains([1.0], [1.0]), False)
golden("polyhedra", "simplex tangent (1,-1)", lambda: _TRI.tangent_cone_contains([0.5, 0.5], [1.0, -1.0]), True)
golden("polyhedra", "T2 with inward w is everything", lambda: _I01.second_tangent_contains([1.0], [-1.0], [9.0]), True)
golden("polyhedra", "T2 at w=0 contains z=-1", lambda: _I01.second_tangent_contains([1.0], [0.0], [-1.0]), True)
golden("polyhedra", "T2 at w=0 excludes z=+1", lambda: _I01.second_tangent_contains([1.0], [0.0], [1.0]), False)
golden("polyhedra", "T2 of orthant", lambda: _NEG2.second_tangent_contains([0.0, -1.0], [0.0, 1.0], [-3.0, 7.0]), True)
golden("polyhedra", "vertices of [0,1]", lambda: sorted(v[0] for v in _I01.vertices()), [0.0, 1.0])
golden("polyhedra", "vertices of [-1,1]", lambda: sorted(v[0] for v in Polyhedron.interval(-1.0, 1.0).vertices()), [-1.0, 1.0])
golden("polyhedra", "vertices of the simplex",
       lambda: sorted(map(tuple, _TRI.vertices())), [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)])
raises("polyhedra", "tangent cone at an outside point", lambda: _I01.tangent_cone_contains([2.0], [1.0]))


# ----------------------------------------------------------------------
# pwtd

def _stair():
    return inst.staircase()


def _scad3():
    return inst.scad_scalar(inst.ScadParams(1.0, 3.0))


def _ind():
    return inst.indicator_nonpositive_scalar()


golden("pwtd", "staircase h(0.5)", lambda: _stair().eval([0.5]), 0.5)
golden("pwtd", "SCAD at 0", lambda: inst.scad_sum(1, inst.ScadParams(1.0, 3.0)).eval([0.0]), 0.0)
golden("pwtd", "indicator at 1", lambda: _ind().eval([1.0]), INF)
golden("pwtd", "staircase J_y at 1", lambda: _stair().index_sets([1.0], [-1.0]).J_y == (1, 2), True)
golden("pwtd", "staircase J_yw, w=-1", lambda: _stair().index_sets([1.0], [-1.0]).J_yw == (1,), True)
golden("pwtd", "staircase J_yw, w=+1", lambda: _stair().index_sets([1.0], [1.0]).J_yw == (2,), True)
golden("pwtd", "J_y empty off the domain", lambda: _ind().index_sets([1.0]).J_y == (), True)
golden("pwtd", "staircase dh(1)(-2)", lambda: _stair().subderivative([1.0], [-2.0]), -2.0)
golden("pwtd", "staircase dh(1)(3)", lambda: _stair().subderivative([1.0], [3.0]), 0.0)
golden("pwtd", "indicator d(0)(1)", lambda: _ind().subderivative([0.0], [1.0]), INF)
golden("pwtd", "staircase plain curvature", lambda: _stair().second_subderivative_plain([1.0], [-1.0]), 0.0)
golden("pwtd", "SCAD plain at y=2", lambda: _scad3().second_subderivative_plain([2.0], [1.0]), -0.5)
golden("pwtd", "plain with empty J_yw", lambda: _ind().second_subderivative_plain([0.0], [1.0]), INF)
golden("pwtd", "SCAD second, critical", lambda: _scad3().second_subderivative([0.0], [1.0], [1.0]), 0.0)
golden("pwtd", "SCAD second, not critical", lambda: _scad3().second_subderivative([0.0], [0.0], [1.0]), INF)
raises("pwtd", "staircase second at the kink is rejected",
       lambda: _stair().second_subderivative([1.0], [1.0], [1.0]), PreconditionError)
golden("pwtd", "staircase parabolic w=-1 z=5", lambda: _stair().parabolic_subderivative([1.0], [-1.0], [5.0]), 5.0)
golden("pwtd", "staircase parabolic w=0 z=1", lambda: _stair().parabolic_subderivative([1.0], [0.0], [1.0]), 0.0)
golden("pwtd", "parabolic at z=0 is the plain value",
       lambda: _scad3().parabolic_subderivative([2.0], [1.0], [0.0]), -0.5)
golden("pwtd", "A at (0, 0) is [-1, 1]",
       lambda: sorted(v[0] for v in _scad3().active_multipliers([0.0], [0.0]).vertices()), [-1.0, 1.0])
golden("pwtd", "A at (0, 1) is {1}",
       lambda: [v[0] for v in _scad3().active_multipliers([0.0], [1.0]).vertices()], [1.0])
golden("pwtd", "indicator A at (0, -1) is {0}",
       lambda: [v[0] for v in _ind().active_multipliers([0.0], [-1.0]).vertices()], [0.0])
golden("pwtd", "conjugate, zstar in A", lambda: _scad3().parabolic_conjugate_value([0.0], [0.0], [1.0]), 0.0)
golden("pwtd", "conjugate, zstar outside A", lambda: _scad3().parabolic_conjugate_value([0.0], [1.0], [0.0]), INF)
golden("pwtd", "regularity witness at 0",
       lambda: list(vars(_scad3().parabolic_regularity_witness([0.0], [1.0], [1.0])).values()), [0.0, 0.0])
golden("pwtd", "regularity witness at 2",
       lambda: list(vars(_scad3().parabolic_regularity_witness([2.0], [0.5], [1.0])).values()), [-0.5, -0.5])
golden("pwtd", "regularity witness, indicator",
       lambda: list(vars(_ind().parabolic_regularity_witness([0.0], [0.0], [0.0])).values()), [0.0, 0.0])


# ----------------------------------------------------------------------
# inner_maps

def _g1(q=2.0):
    return GroupQNormMap(GroupStructure(((0, 1),), q))


golden("inner_maps", "q-norm gradient at (3,4)", lambda: qnorm_grad(np.array([3.0, 4.0]), 2.0), [0.6, 0.8])
golden("inner_maps", "dF(0)(3,4) = 5", lambda: _g1().semiderivative(np.zeros(2), np.array([3.0, 4.0]))[0], 5.0)
golden("inner_maps", "F''(0;0,(0,1)) = 1",
       lambda: _g1().parabolic(np.zeros(2), np.zeros(2), np.array([0.0, 1.0]))[0], 1.0)
golden("inner_maps", "identity map", lambda: np.concatenate([
    SmoothMap.identity(2).semiderivative(np.zeros(2), np.array([1.0, 2.0])),
    SmoothMap.identity(2).parabolic(np.zeros(2), np.array([1.0, 2.0]), np.array([3.0, 4.0]))]), [1, 2, 3, 4])


def _sq():
    return polynomial_map([[[1.0, [2, 0]]], [[1.0, [1, 1]]]], 2)


golden("inner_maps", "F=(x1^2, x1 x2): dF", lambda: _sq().semiderivative(np.array([1.0, 2.0]), np.array([1.0, 0.0])), [2, 2])
golden("inner_maps", "F=(x1^2, x1 x2): F''",
       lambda: _sq().parabolic(np.array([1.0, 2.0]), np.array([1.0, 0.0]), np.zeros(2)), [2, 0])
golden("inner_maps", "scalarized second", lambda: _sq().scalarized_second(np.ones(2), np.array([1.0, 2.0]), np.array([1.0, 0.0])), 2.0)
golden("inner_maps", "q-cone residual on the boundary",
       lambda: QConeResidualMap(3, 2.0).value(np.array([1.0, 0.0, 1.0]))[0], 0.0)
golden("inner_maps", "q-cone dF(0)", lambda: QConeResidualMap(3, 2.0).semiderivative(np.zeros(3), np.array([1.0, 1.0, 0.0]))[0], 0.0)
golden("inner_maps", "q-cone F''(0;0,z)",
       lambda: QConeResidualMap(3, 2.0).parabolic(np.zeros(3), np.zeros(3), np.array([2.0, 1.0, 1.0]))[0],
       math.sqrt(2.0) - 2.0)
_XB, _VB = np.diag([0.0, -1.0, -2.0]), np.diag([1.0, 0.0, 0.0])
_WP = np.zeros((3, 3))
_WP[0, 1] = _WP[1, 0] = 1.0
golden("inner_maps", "PSD diagonal example", lambda: psd_second_subderivative(_XB, _VB, _WP), 2.0)
golden("inner_maps", "PSD with v=0", lambda: psd_second_subderivative(_XB, np.zeros((3, 3)), _WP), 0.0)
golden("inner_maps", "PSD at xbar=0", lambda: psd_second_subderivative(
    np.zeros((2, 2)), np.diag([1.0, 0.0]), np.diag([0.0, -1.0])), 0.0)


# ----------------------------------------------------------------------
# composite

def _gs():
    return inst.group_scad([(0, 1), (2, 3)], 2.0, 1.0, 3.0)


_X0 = np.array([0.0, 0.0, 3.0, 4.0])
_Z4 = np.zeros(4)


def _soc():
    return inst.qcone_indicator(3, 2.0)


golden("composite", "group SCAD f = 2", lambda: _gs().f_eval(_X0), 2.0)
golden("composite", "SOC boundary point", lambda: _soc().f_eval(np.array([1.0, 0.6, 0.8])), 0.0)
golden("composite", "SOC outside point", lambda: _soc().f_eval(np.array([0.5, 1.0, 0.0])), INF)
golden("composite", "group SCAD df = 5", lambda: _gs().f_subderivative(_X0, np.array([3.0, 4.0, 0, 0])), 5.0)
golden("composite", "SOC df at apex", lambda: _soc().f_subderivative(np.zeros(3), np.array([1.0, 1.0, 0.0])), 0.0)
golden("composite", "df(x)(0) = 0", lambda: _gs().f_subderivative(_X0, _Z4), 0.0)
golden("composite", "SOC tangent (1,0,0)", lambda: _soc().domain_tangent_contains(np.zeros(3), np.array([1.0, 0, 0])), True)
golden("composite", "SOC not tangent (-1,0,0)", lambda: _soc().domain_tangent_contains(np.zeros(3), np.array([-1.0, 0, 0])), False)
golden("composite", "full domain tangent", lambda: _gs().domain_tangent_contains(_X0, np.array([1.0, -2, 3, 4])), True)
golden("composite", "full domain second tangent",
       lambda: _gs().domain_second_tangent_contains(_X0, np.ones(4), -np.ones(4)), True)
golden("composite", "SOC second tangent, F'' <= 0",
       lambda: _soc().domain_second_tangent_contains(np.zeros(3), np.array([1.0, 1, 0]), np.array([1.0, 0.5, 3.0])), True)
golden("composite", "SOC second tangent, F'' > 0",
       lambda: _soc().domain_second_tangent_contains(np.zeros(3), np.array([1.0, 1, 0]), np.array([0.0, 1.0, 0.0])), False)
golden("composite", "critical (0,0,1,0)", lambda: _gs().critical_cone_contains(_X0, _Z4, np.array([0, 0, 1.0, 0])), True)
golden("composite", "not critical (1,0,0,0)", lambda: _gs().critical_cone_contains(_X0, _Z4, np.array([1.0, 0, 0, 0])), False)
golden("composite", "w = 0 is critical", lambda: _gs().critical_cone_contains(_X0, _Z4, _Z4), True)
golden("composite", "group SCAD parabolic", lambda: _gs().f_parabolic_subderivative(_X0, np.array([0, 0, 1.0, 0]), _Z4), 0.0)
golden("composite", "SOC parabolic leaves T2",
       lambda: _soc().f_parabolic_subderivative(np.zeros(3), np.array([1.0, 1, 0]), np.array([0.0, 1.0, 0.0])), INF)
golden("composite", "parabolic at w=z=0", lambda: _gs().f_parabolic_subderivative(_X0, _Z4, _Z4), 0.0)
golden("composite", "multiplier candidate (1, 0)", lambda: _gs().multiplier_set(_X0, _Z4).candidate, [1.0, 0.0])
golden("composite", "multiplier set for F = I",
       lambda: inst.smooth_composite(inst.scad_sum(2), SmoothMap.identity(2)).multiplier_set(
           np.zeros(2), np.array([0.5, -0.25])).polyhedron.vertices()[0], [0.5, -0.25])
golden("composite", "interior point: multiplier 0",
       lambda: _soc().multiplier_set(np.array([2.0, 0.5, 0.5]), np.zeros(3)).candidate, [0.0])
golden("composite", "group SCAD second", lambda: _gs().f_second_subderivative(_X0, _Z4, np.array([0, 0, 1.0, 0])), 0.0)
golden("composite", "second off the critical cone", lambda: _gs().f_second_subderivative(_X0, _Z4, np.array([1.0, 0, 0, 0])), INF)
golden("composite", "SOC regularity at the apex",
       lambda: [(r := _soc().check_parabolic_regularity(np.zeros(3), np.array([-1.0, 1, 0]), np.array([1.0, 1, 0]))).lhs, r.rhs],
       [0.0, 0.0])
golden("composite", "regularity at v = w = 0",
       lambda: [(r := _gs().check_parabolic_regularity(_X0, _Z4, _Z4)).lhs, r.rhs], [0.0, 0.0])
golden("composite", "weak duality, box",
       lambda: weak_duality_gap(np.eye(1), np.zeros(1), np.zeros(1), Polyhedron.interval(-1.0, 1.0)).dual_value, 0.0)
golden("composite", "weak duality, Omega = {0}, vbar = 0",
       lambda: weak_duality_gap(np.eye(1), np.zeros(1), np.zeros(1), Polyhedron.interval(0.0, 0.0)).primal_estimate, 0.0)
golden("composite", "weak duality, Omega = {0}, vbar != 0",
       lambda: weak_duality_gap(np.eye(1), np.zeros(1), np.ones(1), Polyhedron.interval(0.0, 0.0)).dual_value, -INF)


# ----------------------------------------------------------------------
# instances

golden("instances", "SCAD(0.5)", lambda: inst.scad_value(0.5, 1.0, 3.0), 0.5)
golden("instances", "SCAD(2)", lambda: inst.scad_value(2.0, 1.0, 3.0), 1.75)
golden("instances", "SCAD(4)", lambda: inst.scad_value(4.0, 1.0, 3.0), 2.0)
golden("instances", "MCP(1)", lambda: inst.mcp_scalar(inst.McpParams(1.0, 2.0)).eval([1.0]), 0.75)
golden("instances", "MCP(5)", lambda: inst.mcp_scalar(inst.McpParams(1.0, 2.0)).eval([5.0]), 1.0)
golden("instances", "MCP(0)", lambda: inst.mcp_scalar(inst.McpParams(1.0, 2.0)).eval([0.0]), 0.0)
golden("instances", "v = 0 is a subgradient", lambda: inst.is_subgradient_type1(_gs(), _X0, _Z4), True)
golden("instances", "factory, zero recipe",
       lambda: inst.subgradient_factory_type1(_gs(), _X0, [0.0, 0.0], [np.zeros(2), np.zeros(2)]), [0, 0, 0, 0])
golden("instances", "factory, active group with rho' = 0",
       lambda: inst.subgradient_factory_type1(_gs(), np.array([3.0, 4.0, 0, 0]), [0.0, 0.0],
                                              [np.zeros(2), np.zeros(2)])[:2], [0, 0])
raises("instances", "factory rejects eta < 0 with ||zeta|| < 1",
       lambda: inst.subgradient_factory_type1(_gs(), _X0, [-1.0, 0.0], [np.array([0.5, 0.0]), np.zeros(2)]),
       InvalidRecipeError)
golden("instances", "SOC second at an interior point",
       lambda: _soc().f_second_subderivative(np.array([2.0, 0.5, 0.5]), np.zeros(3), np.array([1.0, -2.0, 0.3])), 0.0)
golden("instances", "SOC second at the apex",
       lambda: _soc().f_second_subderivative(np.zeros(3), np.array([-1.0, 1, 0]), np.array([1.0, 1, 0])), 0.0)


def _prod():
    return inst.cone_product([_soc(), _soc()])


golden("instances", "cone product, interior blocks",
       lambda: _prod().f_second_subderivative(np.array([2.0, 0.5, 0, 2.0, 0, 0.5]), np.zeros(6), np.ones(6)), 0.0)
golden("instances", "cone product, mixed blocks",
       lambda: _prod().f_second_subderivative(np.array([2.0, 0.5, 0, 0, 0, 0]), np.array([0, 0, 0, -1.0, 1, 0]),
                                              np.array([1.0, 1, 1, 1.0, 1, 0])), 0.0)
golden("instances", "cone product, one block off the cone",
       lambda: _prod().f_second_subderivative(np.array([2.0, 0.5, 0, 0, 0, 0]), np.array([0, 0, 0, -1.0, 1, 0]),
                                              np.array([1.0, 1, 1, 1.0, -1, 0])), INF)
golden("instances", "smooth F = I reduces to the PWTD value",
       lambda: inst.smooth_composite(inst.scad_sum(1, inst.ScadParams(1.0, 3.0)), SmoothMap.identity(1))
       .f_second_subderivative(np.array([2.0]), np.array([0.5]), np.array([1.0])), -0.5)
golden("instances", "affine F, polyhedral constraint",
       lambda: inst.smooth_composite(inst.indicator_nonpositive(1), SmoothMap.affine([[1.0, 1.0]], [-1.0]))
       .f_second_subderivative(np.array([0.5, 0.5]), np.array([2.0, 2.0]), np.array([1.0, -1.0])), 0.0)


def _parab():
    F = polynomial_map([[[1.0, [2, 0]], [1.0, [0, 1]], [-1.0, [0, 0]]]], 2)
    return inst.smooth_composite(inst.indicator_nonpositive(1), F)


golden("instances", "smooth example 2 w1^2",
       lambda: _parab().f_second_subderivative(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([1.5, 0.0])), 4.5)
golden("instances", "PSD instance, diagonal example", lambda: inst.psd_cone_instance(3).second_subderivative(_XB, _VB, _WP), 2.0)
golden("instances", "PSD instance, v = 0",
       lambda: inst.psd_cone_instance(3).second_subderivative(_XB, np.zeros((3, 3)), _WP), 0.0)
golden("instances", "PSD instance, n = 1",
       lambda: inst.psd_cone_instance(1).second_subderivative(np.zeros((1, 1)), np.ones((1, 1)), np.zeros((1, 1))), 0.0)


# ----------------------------------------------------------------------
# oracle

def _oracle_case(name, make, closed, atol, rtol=0.0):
    def fn(seed):
        est = make(Schedule(seed=seed))
        return agrees(closed, est, atol, rtol), f"estimate {est.value!r}"

    _REGISTRY.append(Check("oracle", name, fn))


def _stair_vec():
    return inst.staircase().vec


def _ind_vec(t):
    return inst.indicator_nonpositive_scalar().vec(t)


_oracle_case("staircase dh(1)(-1)", lambda s: estimate_subderivative(_stair_vec(), [1.0], [-1.0], s, True), -1.0, 1e-4)
_oracle_case("2-norm at 0", lambda s: estimate_subderivative(
    lambda X: np.sqrt(np.sum(X * X, axis=1)), np.zeros(2), [3.0, 4.0], s, True), 5.0, 1e-4)
_oracle_case("indicator leaves domain", lambda s: estimate_subderivative(_ind_vec, [0.0], [1.0], s, True), INF, 0.0)
_oracle_case("half squared norm", lambda s: estimate_second_subderivative(
    lambda X: 0.5 * np.sum(X * X, axis=1), [1.0, -2.0], [1.0, -2.0], [0.5, 1.5], s, True), 2.5, 1e-5, 1e-2)
_oracle_case("staircase second trends to -inf",
             lambda s: estimate_second_subderivative(_stair_vec(), [1.0], [1.0], [1.0], s, True), -INF, 0.0)
_oracle_case("group SCAD second", lambda s: estimate_second_subderivative(
    _gs().fast_eval, _X0, _Z4, [0, 0, 1.0, 0], s, True), 0.0, 1e-5, 1e-2)
_oracle_case("staircase parabolic z=5",
             lambda s: estimate_parabolic_subderivative(_stair_vec(), [1.0], [-1.0], -1.0, [5.0], s, True), 5.0, 1e-5, 1e-2)
_oracle_case("indicator parabolic z=-1",
             lambda s: estimate_parabolic_subderivative(_ind_vec, [0.0], [0.0], 0.0, [-1.0], s, True), 0.0, 1e-5, 1e-2)
_oracle_case("indicator parabolic z=+1",
             lambda s: estimate_parabolic_subderivative(_ind_vec, [0.0], [0.0], 0.0, [1.0], s, True), INF, 0.0)
_oracle_case("q-norm component parabolic", lambda s: estimate_parabolic_subderivative(
    lambda X: np.sqrt(np.sum(X * X, axis=1)), np.zeros(2), np.zeros(2), 0.0, [1.0, 1.0], s, True),
    math.sqrt(2.0), 1e-5, 1e-2)


@check("oracle", "determinism")
def _determinism(seed):
    s = Schedule(seed=seed, levels=6)
    a = estimate_subderivative(_gs().fast_eval, _X0, [3.0, 4.0, 0, 0], s, True)
    b = estimate_subderivative(_gs().fast_eval, _X0, [3.0, 4.0, 0, 0], s, True)
    return a.level_minima == b.level_minima, "level minima differ"


# ----------------------------------------------------------------------
# properties

def _same(a: float, b: float, rtol: float = 1e-12) -> bool:
    """Same extended real; finite values up to ``rtol`` relative rounding."""
    if math.isinf(a) or math.isinf(b):
        return a == b
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def homogeneity_failures(ts=HOMOGENEITY_T) -> list:
    """Golden points violating degree-1 or degree-2 positive homogeneity."""
    bad = []
    for label, deg, fn, args in B.golden_points():
        base = fn(*args)
        for t in ts:
            if deg == 1:
                scaled = fn(t * np.asarray(args[0], dtype=float))
            elif len(args) == 1:
                scaled = fn(t * np.asarray(args[0], dtype=float))
            else:
                scaled = fn(t * np.asarray(args[0], dtype=float), t * t * np.asarray(args[1], dtype=float))
            if not _same(scaled, ext_scale(t ** deg, base)):
                bad.append((label, t, base, scaled))
    return bad


@check("properties", "homogeneity on golden points")
def _homogeneity(seed):
    bad = homogeneity_failures()
    return not bad, f"{len(bad)} failures: {bad[:3]}"


def decomposition_failures(n: int, seed: int) -> list:
    """Queries where ``d²ψ(y|v)(w) != d²ψ(y)(w) + δ_crit(w)``.

    The critical-cone indicator is evaluated through the materialized
    ``dψ(y)`` rather than through ``subderivative``.
    """
    rng = np.random.default_rng(seed)
    bad = []
    for _ in range(n):
        q = B.draw_pwtd_query(rng)
        d = q.fn.derivative_function(q.y).eval(q.w)
        vw = float(q.v @ q.w)
        crit = 0.0 if math.isfinite(d) and abs(d - vw) <= 1e-8 * (1 + abs(vw)) else INF
        lhs = q.fn.second_subderivative(q.y, q.v, q.w)
        rhs = INF if crit == INF else ext_add(q.fn.second_subderivative_plain(q.y, q.w), crit)
        if lhs != rhs:
            bad.append((q.label, lhs, rhs))
    return bad


@check("properties", "second subderivative = plain + critical indicator")
def _decomposition(seed):
    bad = decomposition_failures(50, seed)
    return not bad, f"{len(bad)} failures: {bad[:3]}"


def sum_rule_failures(n: int, seed: int) -> list:
    """Queries where ``d²ψ(y)(w|z) != d²ψ(y)(w) + d(dψ(y))(w)(z)``."""
    rng = np.random.default_rng(seed)
    bad = []
    done = 0
    while done < n:
        q = B.draw_pwtd_query(rng)
        if not math.isfinite(q.fn.subderivative(q.y, q.w)):
            continue
        done += 1
        lhs = q.fn.parabolic_subderivative(q.y, q.w, q.z)
        rhs = ext_add(q.fn.second_subderivative_plain(q.y, q.w),
                      q.fn.derivative_function(q.y).subderivative(q.w, q.z))
        if lhs != rhs:
            bad.append((q.label, lhs, rhs))
    return bad


@check("properties", "parabolic sum rule")
def _sum_rule(seed):
    bad = sum_rule_failures(50, seed)
    return not bad, f"{len(bad)} failures: {bad[:3]}"


def random_cone_product(rng):
    """Cone product with 2 to 4 blocks, each interior, boundary or apex, with critical data."""
    blocks, xs, vs, ws = [], [], [], []
    for _ in range(int(rng.integers(2, 5))):
        d = B.draw_qcone(rng)
        blocks.append(d.cf)
        xs.append(d.x)
        vs.append(d.v)
        w = d.w_crit if rng.uniform() < 0.8 else d.w
        ws.append(w)
    cf = inst.cone_product(blocks)
    return cf, blocks, np.concatenate(xs), np.concatenate(vs), np.concatenate(ws), (xs, vs, ws)


def blockwise_failures(n: int, seed: int) -> list:
    """Cone products whose second subderivative is not the sum of block values."""
    rng = np.random.default_rng(seed)
    bad = []
    for _ in range(n):
        cf, blocks, x, v, w, (xs, vs, ws) = random_cone_product(rng)
        total = cf.f_second_subderivative(x, v, w)
        parts = ext_sum(b.f_second_subderivative(xi, vi, wi) for b, xi, vi, wi in zip(blocks, xs, vs, ws))
        if total != parts:
            bad.append((total, parts))
    return bad


@check("properties", "cone product blockwise sum")
def _blockwise(seed):
    bad = blockwise_failures(20, seed)
    return not bad, f"{len(bad)} failures: {bad[:3]}"


@check("properties", "first-order oracle agreement (8 draws)")
def _oracle_first(seed):
    bad = []
    for d in B.sweep(8, seed):
        c = d.cf.f_subderivative(d.x, d.w)
        e = estimate_subderivative(d.cf.fast_eval, d.x_oracle, d.w, Schedule(seed=seed), True)
        if not agrees(c, e, 1e-4):
            bad.append((d.label, c, e.value))
    return not bad, f"{len(bad)} failures: {bad[:3]}"


@check("properties", "second-order oracle agreement (8 draws)")
def _oracle_second(seed):
    bad = []
    for d in B.sweep(8, seed):
        c = d.cf.f_second_subderivative(d.x, d.v, d.w_crit)
        if not math.isfinite(c):
            continue
        e = estimate_second_subderivative(d.cf.fast_eval, d.x_oracle, d.v, d.w_crit, Schedule(seed=seed), True)
        if not agrees(c, e, 1e-5, 1e-2):
            bad.append((d.label, c, e.value))
    return not bad, f"{len(bad)} failures: {bad[:3]}"


@check("properties", "type I parabolic regularity (10 draws)")
def _regularity(seed):
    rng = np.random.default_rng(seed)
    bad = []
    for k in range(10):
        d = B.draw_group(rng, ("group_scad", "group_mcp")[k % 2])
        r = d.cf.check_parabolic_regularity(d.x, d.v, d.w_crit, seed=seed)
        if not (r.passed and r.lhs >= r.rhs - 1e-6 and r.lower <= r.upper + 1e-6):
            bad.append((d.label, r.lhs, r.rhs))
    return not bad, f"{len(bad)} failures: {bad[:3]}"


@check("properties", "weak duality (20 LPs)")
def _weak_duality(seed):
    rng = np.random.default_rng(seed)
    bad = []
    for k in range(20):
        Bm, c, vb, om = random_lp(rng)
        rec = weak_duality_gap(Bm, c, vb, om, seed=seed + k)
        if not rec.primal_estimate >= rec.dual_value - 1e-6:
            bad.append(rec)
    return not bad, f"{len(bad)} failures: {bad[:3]}"


def random_lp(rng):
    """Small bounded multiplier program with a feasible dual."""
    m, n = int(rng.integers(2, 5)), int(rng.integers(1, 4))
    Bm = rng.standard_normal((m, n))
    c = rng.standard_normal(m)
    om = Polyhedron.box(-rng.uniform(0.5, 2.0, m), rng.uniform(0.5, 2.0, m))
    vb = Bm.T @ rng.uniform(-0.4, 0.4, m)
    return Bm, c, vb, om


@check("properties", "PSD closed form versus oracle (2 draws)")
def _psd(seed):
    rng = np.random.default_rng(seed)
    bad = []
    for n in (3, 4):
        xb, vb, w = inst.random_psd_critical_triple(n, rng)
        c = inst.psd_cone_instance(n).second_subderivative(xb, vb, w)
        e = inst.psd_cone_instance(n).oracle_second_subderivative(xb, vb, w, Schedule(seed=seed))
        if not agrees(c, e, 1e-4, 1e-2):
            bad.append((n, c, e.value))
    return not bad, f"{len(bad)} failures: {bad[:3]}"


# ----------------------------------------------------------------------

def checks(filter_name: str | None = None) -> list:
    """Checks of the suite ``filter_name``, or else those whose name contains it."""
    if not filter_name:
        return list(_REGISTRY)
    f = filter_name.lower()
    if f in SUITES:
        return [c for c in _REGISTRY if c.suite == f]
    return [c for c in _REGISTRY if f in c.name.lower()]


def run(filter_name: str | None = None, seed: int = 42) -> list:
    out = []
    for c in checks(filter_name):
        t0 = time.perf_counter()
        try:
            ok, detail = c.fn(seed)
            ok = bool(ok)
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append(CheckResult(c.suite, c.name, ok, "" if ok else str(detail), time.perf_counter() - t0))
    return out
