"""Chain-rule calculus for composite functions ``f = ϑ∘F``.

``ϑ`` is a :class:`~epidiff.pwtd.PwtdFunction` and ``F`` an
:class:`~epidiff.inner_maps.InnerMap`.  First-order and parabolic objects of
``f`` are obtained by pushing ``dF(x)(w)`` and ``F''(x; w, z)`` through the
PWTD calculus of ``ϑ``.  The second subderivative uses the closed form

    d²f(x|v)(w) = d²ϑ(F(x))(dF(x)(w)) + d²(ξ̄F)(x)(w)

on the critical cone, which is valid once parabolic regularity has been
established for the instance family; each family plugs in through a
``route`` and a rule producing the certificate ``ξ̄``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionError,
    EpidiffError,
    NoMultiplierError,
    NotASubgradientError,
    PointOutsideDomainError,
    PreconditionError,
    RegularityUnknownError,
    SubdifferentialUnavailableError,
)
from .extreal import INF, NEG_INF, ext_add
from .inner_maps import InnerMap
from .polyhedra import Polyhedron
from .pwtd import PwtdFunction, _crit_tol

ROUTES = ("type1", "qcone", "smooth", "cone_product")


@dataclass
class MultiplierSet:
    """The multiplier set at ``(x, v)``, exact or represented by a certificate.

    ``polyhedron`` is set when the set is known exactly (linear ``dF``);
    otherwise only the constructive ``candidate`` is available and
    :meth:`contains` falls back to a sampled check of the defining inequalities.
    """

    x: np.ndarray
    v: np.ndarray
    candidate: Optional[np.ndarray]
    polyhedron: Optional[Polyhedron] = None
    cf: Optional["CompositeFunction"] = field(default=None, repr=False)

    @property
    def exact(self) -> bool:
        return self.polyhedron is not None

    def contains(self, xi, n_samples: int = 200, seed: int = 0, tol: float = 1e-8) -> bool:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if self.polyhedron is not None:
            return self.polyhedron.contains(xi, tol)
        cf = self.cf
        y = cf.inner.value(self.x)
        P = cf.theta.subdifferential(y)
        if P is None or not P.contains(xi, tol):
            return False
        rng = np.random.default_rng(seed)
        n = cf.inner.dim_in
        dirs = list(np.eye(n)) + list(-np.eye(n)) + list(rng.standard_normal((n_samples, n)))
        for wp in dirs:
            lhs = float(xi @ cf.inner.semiderivative(self.x, wp))
            rhs = float(self.v @ wp)
            if lhs < rhs - tol * (1 + abs(rhs)):
                return False
        return True


@dataclass
class RegularityReport:
    w: np.ndarray
    xi_bar: np.ndarray
    lhs: float
    rhs: float
    upper: float
    lower: float
    value: Optional[float]
    verdict: str
    n_candidates: int

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"


class CompositeFunction:
    """``f(x) = ϑ(F(x))``.

    Parameters
    ----------
    theta : PwtdFunction
        Outer function on ``R^m``.
    inner : InnerMap
        Inner map ``R^n -> R^m``.
    msqc_asserted : bool
        Caller asserts the metric subregularity qualification at query points.
    route : str, optional
        Family whose parabolic regularity is established: ``"type1"``,
        ``"qcone"``, ``"smooth"`` or ``"cone_product"``.
    multiplier_rule : callable, optional
        ``(x, v) -> ξ̄`` constructive multiplier for nonlinear ``dF``.
    subgradient_check : callable, optional
        ``(x, v) -> bool`` membership test for ``∂f(x)``.
    blocks : sequence of CompositeFunction, optional
        Blocks of a Cartesian product (``cone_product`` route).
    fast_eval : callable, optional
        Vectorized ``X (k x n) -> values (k,)`` used by the oracle.
    """

    def __init__(self, theta: PwtdFunction, inner: InnerMap, msqc_asserted: bool = False,
                 route: str | None = None, multiplier_rule: Callable | None = None,
                 subgradient_check: Callable | None = None,
                 blocks: Sequence["CompositeFunction"] | None = None,
                 fast_eval: Callable | None = None, name: str = "composite", params=None):
        if theta.dim != inner.dim_out:
            raise DimensionError(f"theta has dimension {theta.dim} but F maps into R^{inner.dim_out}")
        if route is not None and route not in ROUTES:
            raise EpidiffError(f"unknown regularity route {route!r}")
        self.theta = theta
        self.inner = inner
        self.msqc_asserted = bool(msqc_asserted)
        self.route = route
        self.multiplier_rule = multiplier_rule
        self.subgradient_check = subgradient_check
        self.blocks = tuple(blocks) if blocks is not None else None
        self.fast_eval = fast_eval
        self.name = name
        self.params = dict(params or {})

    def __repr__(self):
        return f"CompositeFunction({self.name!r}, n={self.dim})"

    @property
    def dim(self) -> int:
        return self.inner.dim_in

    def _x(self, x):
        return self.inner._x(x)

    def _require_msqc(self):
        if not self.msqc_asserted:
            raise PreconditionError("metric subregularity qualification not asserted")

    def _require_dom(self, x):
        if not math.isfinite(self.f_eval(x)):
            raise PointOutsideDomainError("point outside domain")

    # ------------------------------------------------------------------
    def f_eval(self, x) -> float:
        return self.theta.eval(self.inner.value(self._x(x)))

    __call__ = f_eval

    def f_subderivative(self, x, w) -> float:
        x, w = self._x(x), self._x(w)
        self._require_dom(x)
        self._require_msqc()
        return self.theta.subderivative(self.inner.value(x), self.inner.semiderivative(x, w))

    def domain_tangent_contains(self, x, w) -> bool:
        x, w = self._x(x), self._x(w)
        self._require_dom(x)
        self._require_msqc()
        ix = self.theta.index_sets(self.inner.value(x), self.inner.semiderivative(x, w))
        return bool(ix.J_yw)

    def domain_second_tangent_contains(self, x, w, z) -> bool:
        x, w, z = self._x(x), self._x(w), self._x(z)
        if not self.domain_tangent_contains(x, w):
            raise PreconditionError("direction is not tangent to the domain")
        u2 = self.inner.parabolic(x, w, z)
        if not np.all(np.isfinite(u2)):
            return False
        ix = self.theta.index_sets(self.inner.value(x), self.inner.semiderivative(x, w), u2)
        return bool(ix.J_ywz)

    def critical_cone_contains(self, x, v, w) -> bool:
        d = self.f_subderivative(x, w)
        vw = float(self._x(v) @ self._x(w))
        return math.isfinite(d) and abs(d - vw) <= _crit_tol(vw)

    def f_parabolic_subderivative(self, x, w, z) -> float:
        x, w, z = self._x(x), self._x(w), self._x(z)
        if not self.domain_tangent_contains(x, w):
            raise PreconditionError("direction is not tangent to the domain")
        u2 = self.inner.parabolic(x, w, z)
        if not np.all(np.isfinite(u2)):
            raise PreconditionError(
                "inner parabolic semiderivative is infinite (q < 2 with a zero coordinate)"
            )
        return self.theta.parabolic_subderivative(
            self.inner.value(x), self.inner.semiderivative(x, w), u2)

    # ------------------------------------------------------------------
    def is_subgradient(self, x, v) -> bool:
        """Membership ``v ∈ ∂f(x)`` when the family provides a test."""
        if self.subgradient_check is None:
            raise SubdifferentialUnavailableError("no subgradient test for this composite")
        return bool(self.subgradient_check(self._x(x), self._x(v)))

    def multiplier_set(self, x, v) -> MultiplierSet:
        """``Λ = {ξ ∈ ∂ϑ(F(x)) : <ξ, dF(x)(w')> >= <v, w'> for all w'}``.

        Where ``dF(x)`` is linear this is the polyhedron
        ``{ξ ∈ ∂ϑ(F(x)) : ∇F(x) ξ = v}``; otherwise the family's
        constructive multiplier is returned with a sampled membership test.
        """
        x, v = self._x(x), self._x(v)
        if self.theta.subdiff_provider is None:
            raise SubdifferentialUnavailableError("subdifferential unavailable")
        y = self.inner.value(x)
        if self.inner.is_linear_derivative(x):
            P = self.theta.subdifferential(y)
            if P is None:
                raise SubdifferentialUnavailableError("subdifferential unavailable at F(x)")
            J = self.inner.jacobian(x)
            Lam = P.with_equalities(J.T, v)
            cand = None
            if self.multiplier_rule is not None:
                cand = np.atleast_1d(self.multiplier_rule(x, v))
            else:
                val, cand = Lam.maximize(np.zeros(self.theta.dim))
                if cand is None:
                    raise NoMultiplierError("no multiplier: the multiplier set is empty")
            return MultiplierSet(x, v, cand, Lam, self)
        if self.multiplier_rule is None:
            raise NoMultiplierError("no constructive multiplier available for nonlinear dF")
        return MultiplierSet(x, v, np.atleast_1d(self.multiplier_rule(x, v)), None, self)

    def _xi_bar(self, x, v, w) -> np.ndarray:
        ms = self.multiplier_set(x, v)
        if self.route == "smooth":
            h = self.inner.second_term(x, w)
            val, xi = ms.polyhedron.maximize(h)
            if xi is None:
                if val == NEG_INF:
                    raise NoMultiplierError("no multiplier: the multiplier set is empty")
                raise PreconditionError("curvature term is unbounded over the multiplier set")
            return xi
        return ms.candidate

    def f_second_subderivative(self, x, v, w) -> float:
        """Second subderivative via the closed form on the critical cone."""
        x, v, w = self._x(x), self._x(v), self._x(w)
        if self.route is None:
            raise RegularityUnknownError("parabolic regularity unknown")
        self._require_msqc()
        self._require_dom(x)
        if self.route == "cone_product":
            total = 0.0
            off = 0
            for blk in self.blocks:
                sl = slice(off, off + blk.dim)
                total = ext_add(total, blk.f_second_subderivative(x[sl], v[sl], w[sl]))
                off += blk.dim
            return total
        if self.subgradient_check is not None and not self.subgradient_check(x, v):
            raise NotASubgradientError("not a subgradient")
        if not self.critical_cone_contains(x, v, w):
            return INF
        y = self.inner.value(x)
        u = self.inner.semiderivative(x, w)
        xi = self._xi_bar(x, v, w)
        return ext_add(self.theta.second_subderivative_plain(y, u),
                       self.inner.scalarized_second(xi, x, w))

    # ------------------------------------------------------------------
    def check_parabolic_regularity(self, x, v, w, n_samples: int = 64, seed: int = 0,
                                   tol: float = 1e-6, slack: float = 1e-3) -> RegularityReport:
        """Evaluate both sides of the sufficient condition for parabolic regularity.

        ``lhs = inf_z [ sup_{u ∈ A} <u, F''(x; w, z)> - <v, z> ]`` with ``A`` the
        active multipliers of ``ϑ`` at ``(F(x), dF(x)(w))``; the inner sup is
        exact (vertex maximum for bounded ``A``, LP otherwise) and the outer inf
        runs over ``z = 0``, the family's analytic minimizer and seeded Gaussian
        samples at four scales.  ``rhs = d²(ξ̄F)(x)(w)``.  The verdict is PASS
        when ``rhs - tol <= lhs <= rhs + tol + slack``.
        """
        x, v, w = self._x(x), self._x(v), self._x(w)
        if not self.theta.regular:
            raise PreconditionError("outer function is not declared regular")
        if not self.critical_cone_contains(x, v, w):
            raise PreconditionError("direction is not in the critical cone")
        y = self.inner.value(x)
        u = self.inner.semiderivative(x, w)
        A = self.theta.active_multipliers(y, u)
        verts = A.vertices() if A.dim <= 8 and A.is_bounded() else None

        def sup_A(u2):
            if not np.all(np.isfinite(u2)):
                return INF
            if verts is not None:
                return max(float(a @ u2) for a in verts)
            return A.support(u2)

        xi = self._xi_bar(x, v, w) if self.route not in (None, "cone_product") else \
            self.multiplier_set(x, v).candidate
        rhs = self.inner.scalarized_second(xi, x, w)

        cands = [np.zeros(self.dim)]
        z_an = self._analytic_z(x, w)
        if z_an is not None:
            cands.append(z_an)
        rng = np.random.default_rng(seed)
        per = max(1, n_samples // 4)
        for s in (1e-2, 1e-1, 1.0, 10.0):
            for g in rng.standard_normal((per, self.dim)):
                cands.append(s * g)
                if z_an is not None:
                    cands.append(z_an + s * g)

        lhs = INF
        upper = INF
        for z in cands:
            u2 = self.inner.parabolic(x, w, z)
            vz = float(v @ z)
            lhs = min(lhs, ext_add(sup_A(u2), -vz))
            if np.all(np.isfinite(u2)):
                upper = min(upper, ext_add(self.theta.parabolic_subderivative(y, u, u2), -vz))

        lower = NEG_INF
        xis = [xi]
        ms = self.multiplier_set(x, v)
        if ms.exact and ms.polyhedron.dim <= 8 and ms.polyhedron.is_bounded():
            xis += ms.polyhedron.vertices()
        for cand in xis:
            try:
                d2t = self.theta.second_subderivative(y, cand, u)
            except (NotASubgradientError, PreconditionError):
                continue
            lower = max(lower, ext_add(d2t, self.inner.scalarized_second(cand, x, w)))

        value = self.f_second_subderivative(x, v, w) if self.route is not None else None
        ok = (math.isfinite(rhs) and math.isfinite(lhs)
              and rhs - tol <= lhs <= rhs + tol + slack) or (lhs == rhs)
        return RegularityReport(w=w, xi_bar=np.asarray(xi), lhs=lhs, rhs=rhs, upper=upper,
                                lower=lower, value=value, verdict="PASS" if ok else "FAIL",
                                n_candidates=len(cands))

    def _analytic_z(self, x, w):
        """Minimizer family for smooth ``F``: ``z = -F'(x)^+ ∇²F(x)(w, w)``."""
        if not self.inner.is_linear_derivative(x):
            return None
        try:
            J = self.inner.jacobian(x)
            h = self.inner.second_term(x, w)
        except NotImplementedError:
            return None
        if not np.all(np.isfinite(h)):
            return None
        return -np.linalg.pinv(J) @ h


# ----------------------------------------------------------------------

@dataclass(frozen=True)
class DualityRecord:
    primal_estimate: float
    dual_value: float


def weak_duality_gap(B, c, vbar, Omega: Polyhedron, n_samples: int = 64, seed: int = 0,
                     eps: float = 1e-9) -> DualityRecord:
    """Primal and dual values of ``inf_z sup_{u ∈ Ω} <u, Bz + c> - <v̄, z>``.

    The dual ``sup {<u, c> : u ∈ Ω, B'u = v̄}`` is solved exactly by vertex
    enumeration of ``Ω ∩ {B'u = v̄}``.  The primal is estimated by the minimum
    over ``z = 0``, a least-squares candidate and seeded Gaussian samples,
    each evaluated exactly with the vertices of ``Ω``.  Weak duality says the
    first never falls below the second.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    vbar = np.atleast_1d(np.asarray(vbar, dtype=float))
    if not Omega.is_bounded():
        raise PreconditionError("Omega must be bounded")
    V = np.array(Omega.vertices(eps))
    if V.size == 0:
        return DualityRecord(NEG_INF, NEG_INF)
    feas = Omega.with_equalities(B.T, vbar)
    fv = feas.vertices(eps) if not feas.is_empty() else []
    dual = max((float(u @ c) for u in fv), default=NEG_INF)

    rng = np.random.default_rng(seed)
    n = B.shape[1]
    cands = [np.zeros(n), np.linalg.pinv(B) @ (-c)]
    for s in (1e-2, 1e-1, 1.0, 10.0):
        cands += list(s * rng.standard_normal((max(1, n_samples // 4), n)))
    primal = min(float(np.max(V @ (B @ z + c)) - vbar @ z) for z in cands)
    return DualityRecord(primal, dual)
