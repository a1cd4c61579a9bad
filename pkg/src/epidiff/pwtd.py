"""Piecewise twice differentiable (PWTD) functions and their subderivative calculus.

A PWTD function is a finite family of closed polyhedra ``Omega_i`` with a smooth
representative ``psi_i`` on each.  Every derivative object below is computed
from the index sets

* ``J_y``   -- pieces containing ``y``,
* ``J_yw``  -- those whose tangent cone at ``y`` contains ``w``,
* ``J_ywz`` -- those whose second-order tangent set at ``(y, w)`` contains ``z``,

together with piece gradients and Hessians evaluated at ``y``.

Subdifferentials are never derived from the pieces.  They come from an
instance-supplied ``subdiff_provider`` returning a :class:`~epidiff.polyhedra.Polyhedron`
(or ``None`` where the regular and limiting subdifferentials differ).  When
no provider is attached, a subgradient passed by the caller is trusted as is.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Hashable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import (
    DimensionError,
    InconsistentPwtdError,
    NotASubgradientError,
    PointOutsideDomainError,
    PreconditionError,
    SubdifferentialUnavailableError,
)
from .extreal import INF, NEG_INF, ext_add
from .polyhedra import EPS_ACT, EPS_DIR, Polyhedron

EPS_CONS = 1e-9


def _crit_tol(vw: float) -> float:
    return 1e-8 * (1.0 + abs(vw))


@dataclass(frozen=True)
class SmoothPiece:
    """A twice differentiable representative ``psi_i`` with its derivatives."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]

    @classmethod
    def quadratic(cls, H, g, c: float = 0.0) -> "SmoothPiece":
        """``y -> 0.5 y'Hy + g'y + c``."""
        H = np.atleast_2d(np.asarray(H, dtype=float))
        g = np.atleast_1d(np.asarray(g, dtype=float))
        c = float(c)
        return cls(
            value=lambda y: float(0.5 * y @ H @ y + g @ y + c),
            gradient=lambda y: H @ y + g,
            hessian=lambda y: H.copy(),
        )

    @classmethod
    def linear(cls, g, c: float = 0.0) -> "SmoothPiece":
        g = np.atleast_1d(np.asarray(g, dtype=float))
        return cls.quadratic(np.zeros((g.size, g.size)), g, c)

    @classmethod
    def constant(cls, c: float, dim: int) -> "SmoothPiece":
        return cls.linear(np.zeros(dim), c)


@dataclass(frozen=True)
class IndexSets:
    J_y: tuple
    J_yw: Optional[tuple] = None
    J_ywz: Optional[tuple] = None


@dataclass(frozen=True)
class RegularityWitness:
    lhs: float
    rhs: float


SubdiffProvider = Callable[[np.ndarray], Optional[Polyhedron]]


def _agree(a: float, b: float, eps: float) -> bool:
    return abs(a - b) <= eps * (1.0 + max(abs(a), abs(b)))


class PwtdFunction:
    """Piecewise twice differentiable function on ``R^dim``.

    Parameters
    ----------
    pieces : sequence of (Polyhedron, SmoothPiece)
        Closed polyhedral pieces and smooth representatives. Piece keys are
        the 0-based positions in this list.
    dim : int
        Ambient dimension.
    subdiff_provider : callable, optional
        ``y -> Polyhedron`` describing ``∂ψ(y)``, or ``None`` when the regular
        subdifferential is strictly smaller than the limiting one.
    regular : bool
        Asserts Clarke regularity on the domain.
    validate : bool
        Run :meth:`validate` at construction.
    """

    def __init__(self, pieces: Sequence, dim: int, subdiff_provider: SubdiffProvider | None = None,
                 regular: bool = False, eps_act: float = EPS_ACT, eps_dir: float = EPS_DIR,
                 eps_cons: float = EPS_CONS, validate: bool = True, name: str = "pwtd"):
        self._pieces = tuple((P, psi) for P, psi in pieces)
        for P, _ in self._pieces:
            if P.dim != dim:
                raise DimensionError(f"piece polyhedron has dimension {P.dim}, expected {dim}")
        self.dim = int(dim)
        self.subdiff_provider = subdiff_provider
        self.regular = bool(regular)
        self.eps_act = eps_act
        self.eps_dir = eps_dir
        self.eps_cons = eps_cons
        self.name = name
        if validate and self._pieces:
            self.validate()

    def __repr__(self):
        return f"PwtdFunction({self.name!r}, dim={self.dim}, pieces={self.n_pieces})"

    # ------------------------------------------------------------------
    # piece access; subclasses may generate pieces lazily
    @property
    def n_pieces(self) -> int:
        return len(self._pieces)

    def piece_keys(self):
        return range(len(self._pieces))

    def piece(self, key: Hashable):
        return self._pieces[key]

    def _vec(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float)).reshape(-1)
        if y.size != self.dim:
            raise DimensionError(f"expected a vector of dimension {self.dim}, got {y.size}")
        return y

    # ------------------------------------------------------------------
    def index_sets(self, y, w=None, z=None) -> IndexSets:
        y = self._vec(y)
        J_y = tuple(k for k in self.piece_keys() if self.piece(k)[0].contains(y, self.eps_act))
        if w is None:
            return IndexSets(J_y)
        w = self._vec(w)
        J_yw = tuple(k for k in J_y
                     if self.piece(k)[0].tangent_cone_contains(y, w, self.eps_act, self.eps_dir))
        if z is None:
            return IndexSets(J_y, J_yw)
        z = self._vec(z)
        J_ywz = tuple(k for k in J_yw
                      if self.piece(k)[0].second_tangent_contains(y, w, z, self.eps_act, self.eps_dir))
        return IndexSets(J_y, J_yw, J_ywz)

    def _common(self, keys, fn, what: str) -> float:
        vals = [fn(self.piece(k)[1]) for k in keys]
        ref = vals[0]
        for val in vals[1:]:
            if not _agree(ref, val, self.eps_cons):
                raise InconsistentPwtdError(
                    f"inconsistent PWTD data: active pieces give {what} {ref!r} and {val!r}"
                )
        return float(ref)

    def eval(self, y) -> float:
        y = self._vec(y)
        J = self.index_sets(y).J_y
        if not J:
            return INF
        # near a kink a piece active only up to eps_act is evaluated off its set,
        # where its value may differ by eps_act times the slope
        exact = tuple(k for k in J if self.piece(k)[0].contains(y, 0.0))
        return self._common(exact or J, lambda p: p.value(y), "values")

    __call__ = eval

    def _require_dom(self, y, w=None, z=None) -> IndexSets:
        ix = self.index_sets(y, w, z)
        if not ix.J_y:
            raise PointOutsideDomainError("point outside domain")
        return ix

    def subderivative(self, y, w) -> float:
        y, w = self._vec(y), self._vec(w)
        J = self._require_dom(y, w).J_yw
        if not J:
            return INF
        return self._common(J, lambda p: float(p.gradient(y) @ w), "directional derivatives")

    def second_subderivative_plain(self, y, w) -> float:
        y, w = self._vec(y), self._vec(w)
        J = self._require_dom(y, w).J_yw
        if not J:
            return INF
        return self._common(J, lambda p: float(w @ p.hessian(y) @ w), "curvatures")

    def subdifferential(self, y) -> Optional[Polyhedron]:
        """``∂ψ(y)`` from the provider; ``None`` if regular and limiting sets differ."""
        if self.subdiff_provider is None:
            raise SubdifferentialUnavailableError("subdifferential unavailable")
        y = self._vec(y)
        if not self.index_sets(y).J_y:
            raise PointOutsideDomainError("point outside domain")
        return self.subdiff_provider(y)

    def is_subgradient(self, y, v, eps: float = 1e-9) -> bool:
        P = self.subdifferential(y)
        return P is not None and P.contains(self._vec(v), eps)

    def _check_subgradient(self, y, v):
        if self.subdiff_provider is None:
            return  # caller-asserted
        P = self.subdifferential(y)
        if P is None:
            raise PreconditionError(
                "regular subdifferential differs from the limiting one at this point"
            )
        if not P.contains(v, 1e-9):
            raise NotASubgradientError("not a subgradient")

    def critical_cone_contains(self, y, v, w) -> bool:
        """``dψ(y)(w) = <v, w>`` within ``1e-8 (1 + |<v, w>|)``."""
        d = self.subderivative(y, w)
        vw = float(self._vec(v) @ self._vec(w))
        return math.isfinite(d) and abs(d - vw) <= _crit_tol(vw)

    def second_subderivative(self, y, v, w) -> float:
        """Second subderivative for a subgradient ``v`` with ``∂̂ψ(y) = ∂ψ(y)``.

        Equals the plain second subderivative on the critical cone and ``+inf``
        off it.  Without a subdifferential provider the subgradient is not
        checked.
        """
        y, v, w = self._vec(y), self._vec(v), self._vec(w)
        self._require_dom(y)
        self._check_subgradient(y, v)
        if not self.critical_cone_contains(y, v, w):
            return INF
        return self.second_subderivative_plain(y, w)

    def parabolic_subderivative(self, y, w, z) -> float:
        y, w, z = self._vec(y), self._vec(w), self._vec(z)
        ix = self._require_dom(y, w)
        if not ix.J_yw:
            raise PreconditionError("subderivative is not finite in this direction")
        plain = self.second_subderivative_plain(y, w)
        J = self.index_sets(y, w, z).J_ywz
        if not J:
            return INF
        lin = self._common(J, lambda p: float(p.gradient(y) @ z), "parabolic terms")
        return ext_add(plain, lin)

    def active_multipliers(self, y, w) -> Polyhedron:
        """``A_ψ(y, w) = ∂ψ(y) ∩ {ξ : <ξ, w> = dψ(y)(w)}``."""
        y, w = self._vec(y), self._vec(w)
        if self.subdiff_provider is None:
            raise SubdifferentialUnavailableError("subdifferential unavailable")
        if not self.regular:
            raise PreconditionError("function is not declared regular")
        d = self.subderivative(y, w)
        if not math.isfinite(d):
            raise PreconditionError("subderivative is not finite in this direction")
        P = self.subdifferential(y)
        if P is None:
            raise SubdifferentialUnavailableError("subdifferential unavailable at this point")
        return P.with_equality(w, d)

    def parabolic_conjugate_value(self, y, w, zstar) -> float:
        A = self.active_multipliers(y, w)
        if A.contains(self._vec(zstar), 1e-9):
            return -self.second_subderivative_plain(y, w)
        return INF

    def parabolic_regularity_witness(self, y, v, w) -> RegularityWitness:
        """Both sides of the parabolic-regularity identity, computed exactly.

        ``lhs = inf_z { d²ψ(y)(w|z) - <v, z> }`` is evaluated piece by piece:
        on each ``k`` in ``J_yw`` the infimum of ``<∇ψ_k(y) - v, z>`` over the
        polyhedral cone ``T²_k`` is ``0`` when ``v - ∇ψ_k(y)`` lies in its
        polar cone and ``-inf`` otherwise.
        """
        y, v, w = self._vec(y), self._vec(v), self._vec(w)
        if not self.regular:
            raise PreconditionError("function is not declared regular")
        rhs = self.second_subderivative(y, v, w)
        if not math.isfinite(rhs):
            raise PreconditionError("direction is not in the critical cone")
        plain = self.second_subderivative_plain(y, w)
        best = INF
        for k in self.index_sets(y, w).J_yw:
            P, psi = self.piece(k)
            cone = P.second_tangent_cone(y, w, self.eps_act, self.eps_dir)
            g = psi.gradient(y) - v
            best = min(best, 0.0 if _in_polar(-g, cone) else NEG_INF)
        return RegularityWitness(lhs=ext_add(plain, best), rhs=rhs)

    def derivative_function(self, y) -> "PwtdFunction":
        """``dψ(y)`` as a PWTD function with linear pieces on tangent cones."""
        y = self._vec(y)
        J = self._require_dom(y).J_y
        pieces = []
        for k in J:
            P, psi = self.piece(k)
            pieces.append((P.tangent_cone(y, self.eps_act), SmoothPiece.linear(psi.gradient(y))))
        return PwtdFunction(pieces, self.dim, eps_act=self.eps_act, eps_dir=self.eps_dir,
                            eps_cons=self.eps_cons, validate=False, name=f"d{self.name}")

    # ------------------------------------------------------------------
    def validate(self, n_samples: int = 8, seed: int = 0, box: float = 10.0) -> None:
        """Self-check of the piece data.

        Pieces sharing points must agree in value there, Hessians must be
        symmetric and gradients must match central differences of the values.
        Sample points come from LPs with random objectives over each piece
        (or pairwise intersection) clipped to a box.
        """
        rng = np.random.default_rng(seed)
        keys = list(self.piece_keys())
        clip = Polyhedron.box(-box * np.ones(self.dim), box * np.ones(self.dim))
        for k in keys:
            P, psi = self.piece(k)
            for y in _sample_points(P.intersect(clip), rng, n_samples):
                H = np.atleast_2d(psi.hessian(y))
                if np.max(np.abs(H - H.T), initial=0.0) > 1e-12 * (1 + np.max(np.abs(H))):
                    raise InconsistentPwtdError(f"piece {k}: Hessian is not symmetric")
                g = np.atleast_1d(psi.gradient(y))
                h = 1e-6 * (1.0 + np.max(np.abs(y)))
                fd = np.array([(psi.value(y + h * e) - psi.value(y - h * e)) / (2 * h)
                               for e in np.eye(self.dim)])
                if np.max(np.abs(fd - g)) > 1e-6 * (1 + np.max(np.abs(g))):
                    raise InconsistentPwtdError(f"piece {k}: gradient does not match values")
        for i, j in itertools.combinations(keys, 2):
            (Pi, fi), (Pj, fj) = self.piece(i), self.piece(j)
            for y in _sample_points(Pi.intersect(Pj).intersect(clip), rng, n_samples):
                if not _agree(fi.value(y), fj.value(y), max(self.eps_cons, 1e-9)):
                    raise InconsistentPwtdError(
                        f"inconsistent PWTD data: pieces {i} and {j} disagree at {y}"
                    )


def _in_polar(u: np.ndarray, cone: Polyhedron, tol: float = 1e-9) -> bool:
    """Whether ``u`` lies in the polar of ``{A z <= 0, E z = 0}``.

    The polar is ``cone(A rows) + span(E rows)``; membership is a
    nonnegative least-squares feasibility problem.
    """
    cols = [cone.A.T, cone.E.T, -cone.E.T]
    M = np.hstack([c for c in cols if c.size]) if any(c.size for c in cols) else np.zeros((cone.dim, 0))
    if M.shape[1] == 0:
        return bool(np.max(np.abs(u), initial=0.0) <= tol)
    _, res = nnls(M, u)
    return res <= tol * (1.0 + np.linalg.norm(u))


def _sample_points(P: Polyhedron, rng, n: int) -> list:
    pts = []
    for _ in range(n):
        c = rng.standard_normal(P.dim)
        res = linprog(c, A_ub=P.A if P.n_ineq else None, b_ub=P.b if P.n_ineq else None,
                      A_eq=P.E if P.n_eq else None, b_eq=P.d if P.n_eq else None,
                      bounds=[(None, None)] * P.dim, method="highs")
        if res.status != 0:
            return pts
        pts.append(res.x)
    if len(pts) >= 2:
        lam = rng.dirichlet(np.ones(len(pts)))
        pts.append(np.sum(lam[:, None] * np.array(pts), axis=0))
    return pts


class SeparableSum(PwtdFunction):
    """``ϑ(y) = Σ_i ρ_i(y_i)`` for scalar PWTD components ``ρ_i``.

    Pieces are index tuples into the component piece lists and are built on
    demand, so a point only ever touches the at most ``2^m`` locally active
    tuples.  Index sets are products of the component index sets, which is
    exact because tangent cones of products of polyhedra are products of
    tangent cones.
    """

    def __init__(self, components: Sequence[PwtdFunction], name: str = "separable_sum"):
        components = tuple(components)
        for c in components:
            if c.dim != 1:
                raise DimensionError("separable sums take scalar components")
        self.components = components
        providers = [c.subdiff_provider for c in components]
        provider = None
        if all(p is not None for p in providers):
            provider = self._product_provider
        super().__init__((), dim=len(components), subdiff_provider=provider,
                         regular=all(c.regular for c in components),
                         eps_act=components[0].eps_act, eps_dir=components[0].eps_dir,
                         eps_cons=components[0].eps_cons, validate=False, name=name)

    @property
    def n_pieces(self) -> int:
        return int(np.prod([c.n_pieces for c in self.components]))

    def piece_keys(self):
        return itertools.product(*[c.piece_keys() for c in self.components])

    def piece(self, key):
        polys, fns = [], []
        for c, k in zip(self.components, key):
            P, psi = c.piece(k)
            polys.append(P)
            fns.append(psi)

        def value(y):
            return float(sum(f.value(y[i:i + 1]) for i, f in enumerate(fns)))

        def gradient(y):
            return np.array([float(np.ravel(f.gradient(y[i:i + 1]))[0]) for i, f in enumerate(fns)])

        def hessian(y):
            return np.diag([float(np.ravel(f.hessian(y[i:i + 1]))[0]) for i, f in enumerate(fns)])

        return Polyhedron.product(polys), SmoothPiece(value, gradient, hessian)

    def index_sets(self, y, w=None, z=None) -> IndexSets:
        y = self._vec(y)
        w = None if w is None else self._vec(w)
        z = None if z is None else self._vec(z)
        parts = [c.index_sets(y[i:i + 1],
                              None if w is None else w[i:i + 1],
                              None if z is None else z[i:i + 1])
                 for i, c in enumerate(self.components)]
        J_y = tuple(itertools.product(*[p.J_y for p in parts]))
        J_yw = None if w is None else tuple(itertools.product(*[p.J_yw for p in parts]))
        J_ywz = None if z is None else tuple(itertools.product(*[p.J_ywz for p in parts]))
        return IndexSets(J_y, J_yw, J_ywz)

    def eval(self, y) -> float:
        y = self._vec(y)
        total = 0.0
        for i, c in enumerate(self.components):
            total = ext_add(total, c.eval(y[i:i + 1]))
        return total

    __call__ = eval

    def _product_provider(self, y):
        parts = []
        for i, c in enumerate(self.components):
            P = c.subdiff_provider(y[i:i + 1])
            if P is None:
                return None
            parts.append(P)
        return Polyhedron.product(parts)
