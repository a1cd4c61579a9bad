"""Parabolically semidifferentiable inner maps ``F``.

Each map exposes its value, the semiderivative ``dF(x)(w)``, the parabolic
semiderivative ``F''(x; w, z)`` (the second-order coefficient of ``F`` along
the parabola ``x + t w + t^2/2 z``) and the scalarized second subderivative
``d²(ξF)(x)(w)``.

Group ``q``-norms are only twice differentiable away from zero groups.  For
``1 < q < 2`` the Hessian of ``||.||_q`` also blows up at zero coordinates of
a nonzero group; the quadratic form below returns ``+inf`` there whenever the
direction moves such a coordinate, and ``0`` for that coordinate otherwise.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DerivativeMismatchError, DimensionError, EpidiffError, NotASubgradientError
from .extreal import INF, NEG_INF

log = logging.getLogger(__name__)

EPS_ZERO = 1e-12


# ----------------------------------------------------------------------
# q-norm helpers

def qnorm(u: np.ndarray, q: float) -> float:
    return float(np.sum(np.abs(u) ** q) ** (1.0 / q)) if u.size else 0.0


def qnorm_grad(u: np.ndarray, q: float) -> np.ndarray:
    """``sign(u) |u|^(q-1) ||u||_q^(1-q)`` for ``u != 0``."""
    f = qnorm(u, q)
    return np.sign(u) * np.abs(u) ** (q - 1.0) * f ** (1.0 - q)


def qnorm_hess_form(u: np.ndarray, w: np.ndarray, q: float) -> float:
    """``<w, ∇²||.||_q(u) w>`` for ``u != 0``.

    Uses ``∇² = (q-1) [diag(|u|^(q-2)) ||u||^(1-q) - g g' / ||u||]``.  For
    ``q < 2`` a zero coordinate of ``u`` where ``w`` is nonzero gives ``+inf``.
    """
    f = qnorm(u, q)
    g = qnorm_grad(u, q)
    zero = u == 0.0
    if q < 2.0 and np.any(zero & (w != 0.0)):
        return INF
    d = np.zeros_like(u)
    nz = ~zero
    d[nz] = np.abs(u[nz]) ** (q - 2.0)
    if q == 2.0:
        d[zero] = 1.0
    return float((q - 1.0) * (np.sum(d * w * w) * f ** (1.0 - q) - (g @ w) ** 2 / f))


def qnorm_hessian(u: np.ndarray, q: float) -> np.ndarray:
    f = qnorm(u, q)
    g = qnorm_grad(u, q)
    with np.errstate(divide="ignore"):
        d = np.abs(u) ** (q - 2.0)
    return (q - 1.0) * (np.diag(d) * f ** (1.0 - q) - np.outer(g, g) / f)


def _times(xi: float, a: float) -> float:
    """``xi * a`` in extended reals with ``0 * inf = 0``."""
    if xi == 0.0:
        return 0.0
    return xi * a


# ----------------------------------------------------------------------

class InnerMap:
    """Base class; subclasses implement the four evaluation routines."""

    dim_in: int
    dim_out: int

    def _x(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float)).reshape(-1)
        if x.size != self.dim_in:
            raise DimensionError(f"expected a vector of dimension {self.dim_in}, got {x.size}")
        return x

    def value(self, x) -> np.ndarray:
        raise NotImplementedError

    def semiderivative(self, x, w) -> np.ndarray:
        raise NotImplementedError

    def parabolic(self, x, w, z) -> np.ndarray:
        raise NotImplementedError

    def scalarized_second(self, xi, x, w) -> float:
        raise NotImplementedError

    def is_linear_derivative(self, x) -> bool:
        """Whether ``dF(x)`` is linear, i.e. ``F`` is differentiable at ``x``."""
        return False

    def jacobian(self, x) -> np.ndarray:
        raise NotImplementedError

    def second_term(self, x, w) -> np.ndarray:
        """``∇²F(x)(w, w)`` where ``F`` is twice differentiable at ``x``."""
        raise NotImplementedError


@dataclass(frozen=True)
class GroupStructure:
    """Partition ``J_1, ..., J_m`` of ``{0, ..., n-1}`` with exponent ``q > 1``."""

    groups: tuple
    q: float

    def __post_init__(self):
        if not self.q > 1.0:
            raise EpidiffError("exponent q must exceed 1")
        groups = tuple(tuple(int(j) for j in g) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        flat = [j for g in groups for j in g]
        if any(len(g) == 0 for g in groups):
            raise EpidiffError("groups must be nonempty")
        if sorted(flat) != list(range(len(flat))):
            raise EpidiffError("groups must partition {0, ..., n-1}")

    @property
    def p(self) -> float:
        return self.q / (self.q - 1.0)

    @property
    def n(self) -> int:
        return sum(len(g) for g in self.groups)

    @property
    def m(self) -> int:
        return len(self.groups)


class GroupQNormMap(InnerMap):
    """``F(x) = (||x_J1||_q, ..., ||x_Jm||_q)``."""

    def __init__(self, gs: GroupStructure, eps_zero: float = EPS_ZERO):
        self.gs = gs
        self.q = gs.q
        self.dim_in = gs.n
        self.dim_out = gs.m
        self.eps_zero = eps_zero
        self._idx = [np.array(g) for g in gs.groups]

    def __repr__(self):
        return f"GroupQNormMap(groups={self.gs.groups}, q={self.q})"

    def is_zero_block(self, u: np.ndarray) -> bool:
        amax = float(np.max(np.abs(u)))
        if 0.0 < amax <= self.eps_zero:
            log.warning("group with max entry %.3g classified as zero", amax)
        return amax <= self.eps_zero

    def active_groups(self, x) -> np.ndarray:
        """Boolean mask of ``gs(x)``, the groups with ``x_J != 0``."""
        x = self._x(x)
        return np.array([not self.is_zero_block(x[J]) for J in self._idx])

    def value(self, x):
        x = self._x(x)
        return np.array([qnorm(x[J], self.q) for J in self._idx])

    def group_gradient(self, x, i: int) -> np.ndarray:
        return qnorm_grad(self._x(x)[self._idx[i]], self.q)

    def semiderivative(self, x, w):
        x, w = self._x(x), self._x(w)
        out = np.empty(self.dim_out)
        for i, J in enumerate(self._idx):
            if self.is_zero_block(x[J]):
                out[i] = qnorm(w[J], self.q)
            else:
                out[i] = qnorm_grad(x[J], self.q) @ w[J]
        return out

    def parabolic(self, x, w, z):
        x, w, z = self._x(x), self._x(w), self._x(z)
        out = np.empty(self.dim_out)
        for i, J in enumerate(self._idx):
            if self.is_zero_block(x[J]):
                if self.is_zero_block(w[J]):
                    out[i] = qnorm(z[J], self.q)
                else:
                    out[i] = qnorm_grad(w[J], self.q) @ z[J]
            else:
                curv = qnorm_hess_form(x[J], w[J], self.q)
                out[i] = curv + qnorm_grad(x[J], self.q) @ z[J]
        return out

    def scalarized_second(self, xi, x, w):
        x, w = self._x(x), self._x(w)
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        total = 0.0
        for i, J in enumerate(self._idx):
            if not self.is_zero_block(x[J]):
                total += _times(xi[i], qnorm_hess_form(x[J], w[J], self.q))
        return float(total)

    def is_linear_derivative(self, x) -> bool:
        return bool(np.all(self.active_groups(x)))

    def jacobian(self, x):
        x = self._x(x)
        Jm = np.zeros((self.dim_out, self.dim_in))
        for i, J in enumerate(self._idx):
            if not self.is_zero_block(x[J]):
                Jm[i, J] = qnorm_grad(x[J], self.q)
        return Jm

    def second_term(self, x, w):
        x, w = self._x(x), self._x(w)
        return np.array([qnorm_hess_form(x[J], w[J], self.q) for J in self._idx])


class QConeResidualMap(InnerMap):
    """``F(x) = ||x_2||_q - x_1`` for ``x = (x_1, x_2)``; ``δ_{R-}∘F`` is the q-order cone."""

    def __init__(self, n: int, q: float, eps_zero: float = EPS_ZERO):
        if n < 2:
            raise EpidiffError("q-order cone needs n >= 2")
        self.n = n
        self.q = float(q)
        self.dim_in = n
        self.dim_out = 1
        self._block = GroupQNormMap(GroupStructure((tuple(range(n - 1)),), q), eps_zero)

    def __repr__(self):
        return f"QConeResidualMap(n={self.n}, q={self.q})"

    def tail_is_zero(self, x) -> bool:
        return bool(not self._block.active_groups(self._x(x)[1:])[0])

    def value(self, x):
        x = self._x(x)
        return np.array([qnorm(x[1:], self.q) - x[0]])

    def semiderivative(self, x, w):
        x, w = self._x(x), self._x(w)
        return self._block.semiderivative(x[1:], w[1:]) - w[0]

    def parabolic(self, x, w, z):
        x, w, z = self._x(x), self._x(w), self._x(z)
        return self._block.parabolic(x[1:], w[1:], z[1:]) - z[0]

    def scalarized_second(self, xi, x, w):
        x, w = self._x(x), self._x(w)
        return self._block.scalarized_second(xi, x[1:], w[1:])

    def is_linear_derivative(self, x) -> bool:
        return not self.tail_is_zero(x)

    def gradient(self, x) -> np.ndarray:
        x = self._x(x)
        return np.concatenate([[-1.0], qnorm_grad(x[1:], self.q)])

    def jacobian(self, x):
        return self.gradient(x)[None, :]

    def second_term(self, x, w):
        x, w = self._x(x), self._x(w)
        return np.array([qnorm_hess_form(x[1:], w[1:], self.q)])


class BlockInnerMap(InnerMap):
    """Stacks maps acting on consecutive slices of the input."""

    def __init__(self, maps: Sequence[InnerMap]):
        self.maps = tuple(maps)
        self.dim_in = sum(M.dim_in for M in self.maps)
        self.dim_out = sum(M.dim_out for M in self.maps)
        self._in, self._out = [], []
        a = b = 0
        for M in self.maps:
            self._in.append(slice(a, a + M.dim_in))
            self._out.append(slice(b, b + M.dim_out))
            a += M.dim_in
            b += M.dim_out

    def split(self, x):
        x = self._x(x)
        return [x[s] for s in self._in]

    def split_out(self, y):
        y = np.asarray(y, dtype=float)
        return [y[s] for s in self._out]

    def value(self, x):
        return np.concatenate([M.value(xi) for M, xi in zip(self.maps, self.split(x))])

    def semiderivative(self, x, w):
        return np.concatenate([M.semiderivative(a, b)
                               for M, a, b in zip(self.maps, self.split(x), self.split(w))])

    def parabolic(self, x, w, z):
        return np.concatenate([M.parabolic(a, b, c) for M, a, b, c
                               in zip(self.maps, self.split(x), self.split(w), self.split(z))])

    def scalarized_second(self, xi, x, w):
        xi = np.asarray(xi, dtype=float)
        total = 0.0
        for M, s, a, b in zip(self.maps, self._out, self.split(x), self.split(w)):
            total += M.scalarized_second(xi[s], a, b)
        return float(total)

    def is_linear_derivative(self, x) -> bool:
        return all(M.is_linear_derivative(a) for M, a in zip(self.maps, self.split(x)))


class SmoothMap(InnerMap):
    """Twice differentiable ``F`` given by value, Jacobian and Hessian tensor.

    Parameters
    ----------
    value, jacobian, hessian_tensor : callable
        ``x -> F(x)`` (shape ``m``), ``x -> F'(x)`` (``m x n``) and
        ``x -> ∇²F(x)`` (``m x n x n``, one symmetric matrix per component).
    value_batch : callable, optional
        Rows of points to rows of values; should keep the input dtype so the
        oracle can evaluate in extended precision.
    check_points : sequence of arrays, optional
        Points for the finite-difference self-check run at construction.
        Defaults to three seeded standard-normal points.
    """

    def __init__(self, value: Callable, jacobian: Callable, hessian_tensor: Callable,
                 dim_in: int, dim_out: int, check_points=None, check: bool = True,
                 name: str = "smooth", value_batch: Callable | None = None):
        self._value = value
        self._value_batch = value_batch
        self._jac = jacobian
        self._hess = hessian_tensor
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self.name = name
        if check:
            if check_points is None:
                rng = np.random.default_rng(0)
                check_points = [rng.standard_normal(self.dim_in) for _ in range(3)]
            self.self_check(check_points)

    def __repr__(self):
        return f"SmoothMap({self.name!r}, {self.dim_in} -> {self.dim_out})"

    @classmethod
    def affine(cls, A, b) -> "SmoothMap":
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        m, n = A.shape
        return cls(lambda x: A @ x + b, lambda x: A.copy(), lambda x: np.zeros((m, n, n)),
                   n, m, check=False, name="affine", value_batch=lambda X: X @ A.T + b)

    @classmethod
    def identity(cls, n: int) -> "SmoothMap":
        return cls.affine(np.eye(n), np.zeros(n))

    def self_check(self, points, rtol: float = 1e-5) -> None:
        """Compare derivatives with central differences; raise on mismatch."""
        for x in points:
            x = self._x(x)
            h = 1e-5 * (1.0 + np.max(np.abs(x)))
            J = np.asarray(self._jac(x), dtype=float).reshape(self.dim_out, self.dim_in)
            H = np.asarray(self._hess(x), dtype=float).reshape(self.dim_out, self.dim_in, self.dim_in)
            if np.max(np.abs(H - H.transpose(0, 2, 1)), initial=0.0) > 1e-12 * (1 + np.max(np.abs(H))):
                raise DerivativeMismatchError("derivative data inconsistent: Hessian not symmetric")
            for k, e in enumerate(np.eye(self.dim_in)):
                fd_J = (np.asarray(self._value(x + h * e)) - np.asarray(self._value(x - h * e))) / (2 * h)
                fd_H = (np.asarray(self._jac(x + h * e)) - np.asarray(self._jac(x - h * e))) / (2 * h)
                fd_H = fd_H.reshape(self.dim_out, self.dim_in)
                if np.max(np.abs(fd_J - J[:, k])) > rtol * (1 + np.max(np.abs(J))):
                    raise DerivativeMismatchError("derivative data inconsistent: Jacobian")
                if np.max(np.abs(fd_H - H[:, :, k])) > rtol * (1 + np.max(np.abs(H))):
                    raise DerivativeMismatchError("derivative data inconsistent: Hessian")

    def value(self, x):
        return np.atleast_1d(np.asarray(self._value(self._x(x)), dtype=float))

    def value_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        if self._value_batch is not None:
            return np.asarray(self._value_batch(X)).reshape(X.shape[0], self.dim_out)
        return np.array([np.atleast_1d(self._value(x)) for x in X]).reshape(X.shape[0], self.dim_out)

    def jacobian(self, x):
        return np.asarray(self._jac(self._x(x)), dtype=float).reshape(self.dim_out, self.dim_in)

    def hessian_tensor(self, x):
        return np.asarray(self._hess(self._x(x)), dtype=float).reshape(
            self.dim_out, self.dim_in, self.dim_in)

    def second_term(self, x, w):
        w = self._x(w)
        return np.einsum("kij,i,j->k", self.hessian_tensor(x), w, w)

    def semiderivative(self, x, w):
        return self.jacobian(x) @ self._x(w)

    def parabolic(self, x, w, z):
        return self.second_term(x, w) + self.jacobian(x) @ self._x(z)

    def scalarized_second(self, xi, x, w):
        return float(np.asarray(xi, dtype=float) @ self.second_term(x, w))

    def is_linear_derivative(self, x) -> bool:
        return True


# ----------------------------------------------------------------------
# polynomial coefficient tables

class Polynomial:
    """Multivariate polynomial of degree at most 4.

    Built from a coefficient table ``[[coef, [e_1, ..., e_n]], ...]`` meaning
    ``sum coef * prod x_i^e_i``.
    """

    MAX_DEGREE = 4

    def __init__(self, terms, n: int):
        self.n = int(n)
        coefs, exps = [], []
        for term in terms:
            coef, e = term
            e = [int(k) for k in e]
            if len(e) != self.n:
                raise DimensionError(f"exponent vector {e} does not have {self.n} entries")
            if min(e, default=0) < 0 or sum(e) > self.MAX_DEGREE:
                raise EpidiffError(f"exponents {e} outside the supported degree range 0..4")
            coefs.append(float(coef))
            exps.append(e)
        self.coefs = np.array(coefs, dtype=float)
        self.exps = np.array(exps, dtype=int).reshape(-1, self.n)

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if not self.coefs.size:
            return 0.0
        return float(self.coefs @ np.prod(x[None, :] ** self.exps, axis=1))

    def batch(self, X) -> np.ndarray:
        """Values on the rows of ``X``, in the dtype of ``X``."""
        X = np.atleast_2d(X)
        if not self.coefs.size:
            return np.zeros(X.shape[0], dtype=X.dtype)
        mono = np.prod(X[:, None, :] ** self.exps[None, :, :], axis=2)
        return mono @ self.coefs.astype(X.dtype)

    def _mono_deriv(self, x, e, order):
        # derivative of prod x_i^e_i given as a multi-index of differentiations
        out = 1.0
        for i in range(self.n):
            k = order[i]
            if k > e[i]:
                return 0.0
            c = math.perm(int(e[i]), int(k))
            out *= c * x[i] ** (e[i] - k)
        return out

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = np.zeros(self.n)
        for c, e in zip(self.coefs, self.exps):
            for i in range(self.n):
                order = np.zeros(self.n, dtype=int)
                order[i] = 1
                g[i] += c * self._mono_deriv(x, e, order)
        return g

    def hessian(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        H = np.zeros((self.n, self.n))
        for c, e in zip(self.coefs, self.exps):
            for i in range(self.n):
                for j in range(i, self.n):
                    order = np.zeros(self.n, dtype=int)
                    order[i] += 1
                    order[j] += 1
                    val = c * self._mono_deriv(x, e, order)
                    H[i, j] += val
                    if i != j:
                        H[j, i] += val
        return H


def polynomial_map(tables, n: int, check: bool = True) -> SmoothMap:
    """Smooth map whose components are polynomials given by coefficient tables."""
    polys = [Polynomial(t, n) for t in tables]
    return SmoothMap(
        lambda x: np.array([p(x) for p in polys]),
        lambda x: np.array([p.gradient(x) for p in polys]),
        lambda x: np.array([p.hessian(x) for p in polys]),
        dim_in=n, dim_out=len(polys), check=check, name="polynomial",
        value_batch=lambda X: np.stack([p.batch(X) for p in polys], axis=1),
    )


# ----------------------------------------------------------------------
# symmetric eigendecomposition and the PSD-cone closed form

def jacobi_eigh(A, tol: float = 1e-14, max_sweeps: int = 100):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues ascending, eigenvectors as columns)``.
    """
    A = np.array(A, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionError("jacobi_eigh expects a square matrix")
    A = 0.5 * (A + A.T)
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        off = math.sqrt(2.0 * np.sum(np.triu(A, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = A[p, r]
                if abs(apr) <= 1e-300:
                    continue
                theta = (A[r, r] - A[p, p]) / (2.0 * apr)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # rotate rows/columns p and r
                Ap = A[:, p].copy()
                Ar = A[:, r].copy()
                A[:, p] = c * Ap - s * Ar
                A[:, r] = s * Ap + c * Ar
                Ap = A[p, :].copy()
                Ar = A[r, :].copy()
                A[p, :] = c * Ap - s * Ar
                A[r, :] = s * Ap + c * Ar
                A[p, r] = A[r, p] = 0.0
                Vp = V[:, p].copy()
                Vr = V[:, r].copy()
                V[:, p] = c * Vp - s * Vr
                V[:, r] = s * Vp + c * Vr
    evals = np.diag(A).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], V[:, order]


def cholesky_feasible_batch(B) -> np.ndarray:
    """Row mask of a stack of symmetric matrices that are positive definite.

    Unpivoted Cholesky in the dtype of ``B`` (``longdouble`` stays extended),
    vectorized over the stack; a matrix fails at its first nonpositive pivot.
    """
    B = np.array(B)
    if B.dtype not in (np.float64, np.longdouble):
        B = B.astype(float)
    if B.ndim != 3 or B.shape[1] != B.shape[2]:
        raise DimensionError("expected a stack of square matrices")
    k, n, _ = B.shape
    L = np.zeros_like(B)
    ok = np.ones(k, dtype=bool)
    for j in range(n):
        d = B[:, j, j] - np.sum(L[:, j, :j] ** 2, axis=1)
        ok &= d > 0
        ljj = np.sqrt(np.where(ok, d, 1))
        L[:, j, j] = ljj
        for i in range(j + 1, n):
            L[:, i, j] = (B[:, i, j] - np.sum(L[:, i, :j] * L[:, j, :j], axis=1)) / ljj
    return ok


def pinv_sym(x, eps_rank: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues with magnitude at most ``eps_rank`` (default ``1e-10 ||x||_F``)
    are treated as zero.
    """
    x = np.asarray(x, dtype=float)
    if eps_rank is None:
        eps_rank = 1e-10 * np.linalg.norm(x)
    lam, U = jacobi_eigh(x)
    inv = np.array([1.0 / l if abs(l) > eps_rank else 0.0 for l in lam])
    return (U * inv) @ U.T


def _check_symmetric(M, name):
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be a square matrix")
    if np.max(np.abs(M - M.T), initial=0.0) > 1e-12 * (1 + np.max(np.abs(M), initial=0.0)):
        raise DimensionError(f"{name} must be symmetric")
    return 0.5 * (M + M.T)


def psd_normal_cone_contains(xbar, vbar, eps_psd: float = 1e-9) -> bool:
    """``vbar ∈ N_{S^n_-}(xbar)``: ``xbar ⪯ 0``, ``vbar ⪰ 0`` and ``<vbar, xbar> = 0``."""
    xbar = _check_symmetric(xbar, "xbar")
    vbar = _check_symmetric(vbar, "vbar")
    tx = eps_psd * (1 + np.linalg.norm(xbar))
    tv = eps_psd * (1 + np.linalg.norm(vbar))
    lx, _ = jacobi_eigh(xbar)
    lv, _ = jacobi_eigh(vbar)
    return (lx[-1] <= tx and lv[0] >= -tv
            and abs(np.sum(vbar * xbar)) <= eps_psd * (1 + np.linalg.norm(xbar) * np.linalg.norm(vbar)))


def psd_critical_cone_contains(xbar, vbar, w, eps_psd: float = 1e-9,
                               eps_rank: float | None = None) -> bool:
    """``P0' w P0 ⪯ 0`` with ``P0`` spanning ``ker xbar``, and ``<vbar, w> = 0``."""
    xbar = _check_symmetric(xbar, "xbar")
    vbar = _check_symmetric(vbar, "vbar")
    w = _check_symmetric(w, "w")
    if eps_rank is None:
        eps_rank = 1e-10 * np.linalg.norm(xbar)
    lam, U = jacobi_eigh(xbar)
    P0 = U[:, np.abs(lam) <= eps_rank]
    tol = eps_psd * (1 + np.linalg.norm(w))
    if P0.shape[1]:
        top = jacobi_eigh(P0.T @ w @ P0)[0][-1]
        if top > tol:
            return False
    return abs(np.sum(vbar * w)) <= eps_psd * (1 + np.linalg.norm(vbar) * np.linalg.norm(w))


def psd_second_subderivative(xbar, vbar, w, eps_psd: float = 1e-9,
                             eps_rank: float | None = None) -> float:
    """Second subderivative of the indicator of the negative semidefinite cone.

    Returns ``-2 <vbar, w xbar^+ w>`` on the critical cone and ``+inf`` off it.

    Raises
    ------
    NotASubgradientError
        If ``vbar`` is not a normal vector to ``S^n_-`` at ``xbar``.
    """
    if not psd_normal_cone_contains(xbar, vbar, eps_psd):
        raise NotASubgradientError("not a subgradient: vbar is not in the normal cone at xbar")
    xbar = _check_symmetric(xbar, "xbar")
    vbar = _check_symmetric(vbar, "vbar")
    w = _check_symmetric(w, "w")
    if xbar.shape != w.shape or vbar.shape != w.shape:
        raise DimensionError("xbar, vbar and w must have the same shape")
    if not psd_critical_cone_contains(xbar, vbar, w, eps_psd, eps_rank):
        return INF
    return float(-2.0 * np.sum(vbar * (w @ pinv_sym(xbar, eps_rank) @ w)))
