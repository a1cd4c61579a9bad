"""Convex polyhedra in H-representation and their first/second-order tangents.

A :class:`Polyhedron` stores ``{y : A y <= b, E y = d}``. Tangent cones and
second-order tangent sets are never stored; they are tested directly from the
active rows, and only materialized on request by :meth:`Polyhedron.tangent_cone`
and :meth:`Polyhedron.second_tangent_cone`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import (
    DimensionError,
    PointOutsideSetError,
    PreconditionError,
    VertexEnumerationError,
)

EPS_ACT = 1e-9
EPS_DIR = 1e-10
MAX_VERTEX_DIM = 8


def _frozen(arr) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def _dir_tol(eps: float, *vecs: np.ndarray) -> float:
    scale = 1.0
    for v in vecs:
        if v.size:
            scale = max(scale, float(np.max(np.abs(v))))
    return eps * scale


@dataclass(frozen=True)
class ActiveSet:
    """Inequality rows active at ``point`` (equality rows are always active)."""

    point: np.ndarray
    active_ineq: tuple
    n_eq: int


class Polyhedron:
    """Closed convex polyhedron ``{y in R^dim : A y <= b, E y = d}``.

    Parameters
    ----------
    A, b : array_like
        Inequality rows ``A[j] @ y <= b[j]``. May be empty.
    E, d : array_like
        Equality rows ``E[j] @ y == d[j]``. May be empty.
    dim : int, optional
        Ambient dimension; inferred from ``A`` or ``E`` when omitted.
    """

    __slots__ = ("A", "b", "E", "d", "dim")

    def __init__(self, A=None, b=None, E=None, d=None, dim=None):
        if dim is None:
            for M in (A, E):
                if M is not None and np.size(M):
                    dim = np.shape(M)[1]
                    break
        if dim is None:
            raise DimensionError("cannot infer the ambient dimension")
        A = np.zeros((0, dim)) if A is None or np.size(A) == 0 else np.atleast_2d(A)
        E = np.zeros((0, dim)) if E is None or np.size(E) == 0 else np.atleast_2d(E)
        b = np.zeros(0) if b is None else np.atleast_1d(b)
        d = np.zeros(0) if d is None else np.atleast_1d(d)
        if A.shape[1] != dim or E.shape[1] != dim:
            raise DimensionError(
                f"row normals must have dimension {dim}, got {A.shape[1]} / {E.shape[1]}"
            )
        if A.shape[0] != b.shape[0] or E.shape[0] != d.shape[0]:
            raise DimensionError("row count mismatch between normals and offsets")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "E", _frozen(E))
        object.__setattr__(self, "d", _frozen(d))
        object.__setattr__(self, "dim", int(dim))

    def __setattr__(self, name, value):
        raise AttributeError("Polyhedron is immutable")

    def __repr__(self):
        return f"Polyhedron(dim={self.dim}, n_ineq={self.n_ineq}, n_eq={self.n_eq})"

    # ------------------------------------------------------------------
    # constructors
    @classmethod
    def from_rows(cls, ineq: Sequence = (), eq: Sequence = (), dim: int | None = None):
        """Build from the problem-file layout ``[[a_1, ..., a_m, b], ...]``."""
        ineq = [list(r) for r in ineq]
        eq = [list(r) for r in eq]
        if dim is None:
            rows = ineq or eq
            if not rows:
                raise DimensionError("cannot infer the ambient dimension")
            dim = len(rows[0]) - 1
        for r in ineq + eq:
            if len(r) != dim + 1:
                raise DimensionError(f"row {r} does not have {dim} + 1 entries")
        A = np.array([r[:-1] for r in ineq], dtype=float).reshape(-1, dim)
        b = np.array([r[-1] for r in ineq], dtype=float)
        E = np.array([r[:-1] for r in eq], dtype=float).reshape(-1, dim)
        d = np.array([r[-1] for r in eq], dtype=float)
        return cls(A, b, E, d, dim=dim)

    @classmethod
    def whole_space(cls, dim: int):
        return cls(dim=dim)

    @classmethod
    def box(cls, lower, upper):
        """Axis-aligned box; infinite bounds are simply omitted."""
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        dim = lower.size
        rows, offs = [], []
        for i in range(dim):
            if np.isfinite(lower[i]):
                r = np.zeros(dim)
                r[i] = -1.0
                rows.append(r)
                offs.append(-lower[i])
            if np.isfinite(upper[i]):
                r = np.zeros(dim)
                r[i] = 1.0
                rows.append(r)
                offs.append(upper[i])
        return cls(np.array(rows).reshape(-1, dim), np.array(offs), dim=dim)

    @classmethod
    def interval(cls, lo: float = -np.inf, hi: float = np.inf):
        return cls.box([lo], [hi])

    @classmethod
    def product(cls, parts: Sequence["Polyhedron"]):
        """Cartesian product, rows placed block-diagonally."""
        dim = sum(P.dim for P in parts)
        A_blocks, b_parts, E_blocks, d_parts = [], [], [], []
        off = 0
        for P in parts:
            Ab = np.zeros((P.n_ineq, dim))
            Ab[:, off:off + P.dim] = P.A
            Eb = np.zeros((P.n_eq, dim))
            Eb[:, off:off + P.dim] = P.E
            A_blocks.append(Ab)
            E_blocks.append(Eb)
            b_parts.append(P.b)
            d_parts.append(P.d)
            off += P.dim
        return cls(
            np.vstack(A_blocks) if A_blocks else None,
            np.concatenate(b_parts) if b_parts else None,
            np.vstack(E_blocks) if E_blocks else None,
            np.concatenate(d_parts) if d_parts else None,
            dim=dim,
        )

    @property
    def n_ineq(self) -> int:
        return self.A.shape[0]

    @property
    def n_eq(self) -> int:
        return self.E.shape[0]

    def with_equality(self, e, d: float) -> "Polyhedron":
        e = np.asarray(e, dtype=float).reshape(1, self.dim)
        return Polyhedron(self.A, self.b, np.vstack([self.E, e]),
                          np.append(self.d, d), dim=self.dim)

    def with_equalities(self, E, d) -> "Polyhedron":
        E = np.asarray(E, dtype=float).reshape(-1, self.dim)
        return Polyhedron(self.A, self.b, np.vstack([self.E, E]),
                          np.concatenate([self.d, np.atleast_1d(d)]), dim=self.dim)

    def intersect(self, other: "Polyhedron") -> "Polyhedron":
        if other.dim != self.dim:
            raise DimensionError("cannot intersect polyhedra of different dimensions")
        return Polyhedron(np.vstack([self.A, other.A]), np.concatenate([self.b, other.b]),
                          np.vstack([self.E, other.E]), np.concatenate([self.d, other.d]),
                          dim=self.dim)

    def to_rows(self) -> dict:
        return {
            "ineq": [list(a) + [bb] for a, bb in zip(self.A.tolist(), self.b.tolist())],
            "eq": [list(e) + [dd] for e, dd in zip(self.E.tolist(), self.d.tolist())],
        }

    # ------------------------------------------------------------------
    def _check_dim(self, *vecs):
        out = []
        for v in vecs:
            v = np.asarray(v, dtype=float).reshape(-1)
            if v.size != self.dim:
                raise DimensionError(f"expected a vector of dimension {self.dim}, got {v.size}")
            out.append(v)
        return out

    def contains(self, y, eps_act: float = EPS_ACT) -> bool:
        (y,) = self._check_dim(y)
        if self.n_ineq and np.any(self.A @ y - self.b > eps_act):
            return False
        if self.n_eq and np.any(np.abs(self.E @ y - self.d) > eps_act):
            return False
        return True

    def active_set(self, y, eps_act: float = EPS_ACT) -> ActiveSet:
        (y,) = self._check_dim(y)
        slack = np.abs(self.A @ y - self.b) if self.n_ineq else np.zeros(0)
        active = tuple(int(j) for j in np.flatnonzero(slack <= eps_act))
        return ActiveSet(y, active, self.n_eq)

    def tangent_cone_contains(self, y, w, eps_act: float = EPS_ACT,
                              eps_dir: float = EPS_DIR) -> bool:
        """Membership of ``w`` in the tangent cone at ``y``.

        The tolerance on ``a_j . w`` is ``eps_dir * max(1, |w|_inf)``.
        """
        y, w = self._check_dim(y, w)
        if not self.contains(y, eps_act):
            raise PointOutsideSetError("point outside set")
        tol = _dir_tol(eps_dir, w)
        act = list(self.active_set(y, eps_act).active_ineq)
        if act and np.any(self.A[act] @ w > tol):
            return False
        if self.n_eq and np.any(np.abs(self.E @ w) > tol):
            return False
        return True

    def _second_order_rows(self, y, w, eps_act, eps_dir):
        act = self.active_set(y, eps_act).active_ineq
        tol = _dir_tol(eps_dir, w)
        return [j for j in act if abs(self.A[j] @ w) <= tol]

    def second_tangent_contains(self, y, w, z, eps_act: float = EPS_ACT,
                                eps_dir: float = EPS_DIR) -> bool:
        """Membership of ``z`` in the second-order tangent set at ``y`` for ``w``.

        For a polyhedron this set is the tangent cone of the tangent cone,
        cut out by the rows active at ``y`` that are also active at ``w``.
        """
        y, w, z = self._check_dim(y, w, z)
        if not self.tangent_cone_contains(y, w, eps_act, eps_dir):
            raise PreconditionError("direction is not in the tangent cone")
        rows = self._second_order_rows(y, w, eps_act, eps_dir)
        tol = _dir_tol(eps_dir, z)
        if rows and np.any(self.A[rows] @ z > tol):
            return False
        if self.n_eq and np.any(np.abs(self.E @ z) > tol):
            return False
        return True

    def tangent_cone(self, y, eps_act: float = EPS_ACT) -> "Polyhedron":
        """The tangent cone at ``y`` as a polyhedral cone."""
        (y,) = self._check_dim(y)
        if not self.contains(y, eps_act):
            raise PointOutsideSetError("point outside set")
        act = list(self.active_set(y, eps_act).active_ineq)
        return Polyhedron(self.A[act], np.zeros(len(act)), self.E,
                          np.zeros(self.n_eq), dim=self.dim)

    def second_tangent_cone(self, y, w, eps_act: float = EPS_ACT,
                            eps_dir: float = EPS_DIR) -> "Polyhedron":
        y, w = self._check_dim(y, w)
        if not self.tangent_cone_contains(y, w, eps_act, eps_dir):
            raise PreconditionError("direction is not in the tangent cone")
        rows = self._second_order_rows(y, w, eps_act, eps_dir)
        return Polyhedron(self.A[rows], np.zeros(len(rows)), self.E,
                          np.zeros(self.n_eq), dim=self.dim)

    # ------------------------------------------------------------------
    def _lp(self, c):
        bounds = [(None, None)] * self.dim
        res = linprog(
            c,
            A_ub=self.A if self.n_ineq else None,
            b_ub=self.b if self.n_ineq else None,
            A_eq=self.E if self.n_eq else None,
            b_eq=self.d if self.n_eq else None,
            bounds=bounds,
            method="highs",
        )
        return res

    def is_empty(self) -> bool:
        """Emptiness probe by a feasibility LP."""
        res = self._lp(np.zeros(self.dim))
        return res.status == 2

    def is_bounded(self) -> bool:
        """True when the recession cone ``{A r <= 0, E r = 0}`` is trivial."""
        rec = Polyhedron(self.A, np.zeros(self.n_ineq), self.E, np.zeros(self.n_eq), dim=self.dim)
        box = rec.intersect(Polyhedron.box(-np.ones(self.dim), np.ones(self.dim)))
        for i in range(self.dim):
            for sign in (1.0, -1.0):
                c = np.zeros(self.dim)
                c[i] = -sign
                res = box._lp(c)
                if res.status == 0 and -res.fun > 1e-9:
                    return False
        return True

    def maximize(self, g):
        """``(sup {<g, u> : u in P}, maximizer)``.

        The value is ``inf`` when unbounded above and ``-inf`` when ``P`` is
        empty; the maximizer is ``None`` in both cases.
        """
        (g,) = self._check_dim(g)
        res = self._lp(-g)
        if res.status == 2:
            return -np.inf, None
        if res.status == 3:
            return np.inf, None
        if res.status != 0:
            raise RuntimeError(f"LP failed: {res.message}")
        return float(-res.fun), np.asarray(res.x, dtype=float)

    def support(self, g) -> float:
        """``sup {<g, u> : u in P}``; ``inf`` if unbounded above, ``-inf`` if empty."""
        return self.maximize(g)[0]

    def _independent_equalities(self, eps: float):
        """Orthonormal rows spanning the equality constraints, or ``(None, None)``
        when they are inconsistent.  Zero and repeated rows drop out."""
        if self.n_eq == 0:
            return np.zeros((0, self.dim)), np.zeros(0)
        U, sv, Vt = np.linalg.svd(self.E, full_matrices=True)
        rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0] if sv.size else 0.0)))
        proj = U.T @ self.d
        if np.any(np.abs(proj[rank:]) > eps * max(1.0, np.max(np.abs(self.d)))):
            return None, None
        return Vt[:rank], proj[:rank] / sv[:rank]

    def vertices(self, eps_act: float = EPS_ACT) -> list:
        """All vertices of a bounded polyhedron of dimension at most 8.

        Enumerates square subsystems built from an independent basis of the
        equality rows plus the right number of inequality rows, keeps feasible
        solutions and drops duplicates closer than ``eps_act``.
        """
        if self.dim > MAX_VERTEX_DIM:
            raise VertexEnumerationError("vertex enumeration unsupported: dimension above 8")
        if not self.is_bounded():
            raise VertexEnumerationError("vertex enumeration unsupported: unbounded polyhedron")
        if self.dim == 0:
            return [np.zeros(0)]
        E, d = self._independent_equalities(eps_act)
        if E is None:
            return []
        n_pick = self.dim - E.shape[0]
        found: list[np.ndarray] = []
        for rows in itertools.combinations(range(self.n_ineq), n_pick):
            M = np.vstack([E, self.A[list(rows)]])
            rhs = np.concatenate([d, self.b[list(rows)]])
            if np.linalg.cond(M) > 1e12:
                continue
            sol = np.linalg.solve(M, rhs)
            if not self.contains(sol, eps_act):
                continue
            if any(np.max(np.abs(sol - v)) <= eps_act for v in found):
                continue
            found.append(sol)
        return found


def contains(P: Polyhedron, y, eps_act: float = EPS_ACT) -> bool:
    return P.contains(y, eps_act)


def tangent_cone_contains(P: Polyhedron, y, w, eps_act: float = EPS_ACT,
                          eps_dir: float = EPS_DIR) -> bool:
    return P.tangent_cone_contains(y, w, eps_act, eps_dir)


def second_tangent_contains(P: Polyhedron, y, w, z, eps_act: float = EPS_ACT,
                            eps_dir: float = EPS_DIR) -> bool:
    return P.second_tangent_contains(y, w, z, eps_act, eps_dir)


def vertices(P: Polyhedron, eps_act: float = EPS_ACT) -> list:
    return P.vertices(eps_act)
