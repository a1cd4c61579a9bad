"""Builders for the concrete function families.

* scalar penalties: SCAD, MCP, the staircase ``max{0, min{1, t}}`` and the
  indicator of ``R_-``;
* type I: group penalties ``Σ ρ(||x_Ji||_q)``;
* type II: ``q``-order cone indicators and their Cartesian products;
* type III: ``ϑ∘F`` with smooth ``F``;
* type IV: the negative semidefinite cone.

Every builder also attaches a vectorized direct evaluator (``fast_eval``)
that does not go through the piece machinery; the finite-difference oracle
uses it.  Scalar builders are cached: their pieces are validated once per
parameter set.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .composite import CompositeFunction
from .errors import DimensionError, EpidiffError, InvalidRecipeError, NotASubgradientError
from .extreal import INF
from .inner_maps import (
    BlockInnerMap,
    GroupQNormMap,
    GroupStructure,
    QConeResidualMap,
    SmoothMap,
    jacobi_eigh,
    cholesky_feasible_batch,
    psd_critical_cone_contains,
    psd_normal_cone_contains,
    psd_second_subderivative,
    qnorm,
    qnorm_grad,
)
from .polyhedra import Polyhedron
from .pwtd import PwtdFunction, SeparableSum, SmoothPiece

FEAS_ULPS = 2


def _real(t) -> np.ndarray:
    """Array view of ``t`` that keeps ``longdouble`` input in extended precision."""
    t = np.asarray(t)
    return t if t.dtype in (np.float64, np.longdouble) else t.astype(float)


def qnorm_rows(X, q: float) -> np.ndarray:
    """Row-wise ``q``-norms in the dtype of ``X``; shared by all direct evaluators."""
    X = np.atleast_2d(X)
    return np.sum(np.abs(X) ** q, axis=1) ** (1.0 / q)


def feas_tol(dtype) -> float:
    """Absolute feasibility slack for indicator evaluators, in units of ``eps(dtype)``."""
    return FEAS_ULPS * np.finfo(dtype).eps


@dataclass(frozen=True)
class ScadParams:
    lam: float = 1.0
    a: float = 3.7

    def __post_init__(self):
        if not self.lam > 0:
            raise EpidiffError("SCAD needs lambda > 0")
        if not self.a > 2:
            raise EpidiffError("SCAD needs a > 2")


@dataclass(frozen=True)
class McpParams:
    lam: float = 1.0
    b: float = 3.0

    def __post_init__(self):
        if not self.lam > 0:
            raise EpidiffError("MCP needs lambda > 0")
        if not self.b > 0:
            raise EpidiffError("MCP needs b > 0")


def _point_set(c: float) -> Polyhedron:
    return Polyhedron.box([c], [c])


def _scalar(pieces, provider, regular, name, vec, deriv=None):
    fn = PwtdFunction(pieces, 1, subdiff_provider=provider, regular=regular, name=name)
    fn.vec = vec
    fn.deriv = deriv
    return fn


# ----------------------------------------------------------------------
# scalar penalties

def scad_value(t, lam: float, a: float):
    t = np.abs(_real(t))
    mid = (-t * t + 2 * a * lam * t - lam * lam) / (2 * (a - 1))
    return np.where(t <= lam, lam * t, np.where(t <= a * lam, mid, (a + 1) * lam * lam / 2))


def scad_deriv(t, lam: float, a: float):
    t = np.asarray(t, dtype=float)
    s = np.abs(t)
    return np.sign(t) * np.where(s <= lam, lam, np.maximum(a * lam - s, 0.0) / (a - 1))


@lru_cache(maxsize=None)
def scad_scalar(p: ScadParams = ScadParams()) -> PwtdFunction:
    """SCAD penalty as a six-piece PWTD function on ``R``.

    Knots at ``±λ`` and ``±aλ`` belong to both adjacent pieces.
    """
    lam, a = p.lam, p.a
    h = -1.0 / (a - 1)
    c_mid = -lam * lam / (2 * (a - 1))
    top = (a + 1) * lam * lam / 2
    pieces = [
        (Polyhedron.interval(hi=-a * lam), SmoothPiece.constant(top, 1)),
        (Polyhedron.interval(-a * lam, -lam), SmoothPiece.quadratic([[h]], [-a * lam / (a - 1)], c_mid)),
        (Polyhedron.interval(-lam, 0.0), SmoothPiece.linear([-lam])),
        (Polyhedron.interval(0.0, lam), SmoothPiece.linear([lam])),
        (Polyhedron.interval(lam, a * lam), SmoothPiece.quadratic([[h]], [a * lam / (a - 1)], c_mid)),
        (Polyhedron.interval(lo=a * lam), SmoothPiece.constant(top, 1)),
    ]

    def provider(y):
        t = float(y[0])
        if abs(t) <= 1e-12:
            return Polyhedron.box([-lam], [lam])
        return _point_set(float(scad_deriv(t, lam, a)))

    fn = _scalar(pieces, provider, True, f"scad(lam={lam}, a={a})",
                 lambda t: scad_value(t, lam, a), lambda t: scad_deriv(t, lam, a))
    fn.lam = lam
    fn.weak_convexity = 1.0 / (a - 1)
    return fn


def mcp_value(t, lam: float, b: float):
    t = np.abs(_real(t))
    return np.where(t <= lam * b, lam * t - t * t / (2 * b), lam * lam * b / 2)


def mcp_deriv(t, lam: float, b: float):
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.maximum(lam - np.abs(t) / b, 0.0)


@lru_cache(maxsize=None)
def mcp_scalar(p: McpParams = McpParams()) -> PwtdFunction:
    """MCP penalty ``λ|t| - t²/(2b)`` for ``|t| <= λb`` and ``λ²b/2`` beyond.

    This is the even function obtained by integrating ``λ(1 - ω/(λb))_+``
    from ``0`` to ``|t|``.
    """
    lam, b = p.lam, p.b
    top = lam * lam * b / 2
    h = -1.0 / b
    pieces = [
        (Polyhedron.interval(hi=-lam * b), SmoothPiece.constant(top, 1)),
        (Polyhedron.interval(-lam * b, 0.0), SmoothPiece.quadratic([[h]], [-lam])),
        (Polyhedron.interval(0.0, lam * b), SmoothPiece.quadratic([[h]], [lam])),
        (Polyhedron.interval(lo=lam * b), SmoothPiece.constant(top, 1)),
    ]

    def provider(y):
        t = float(y[0])
        if abs(t) <= 1e-12:
            return Polyhedron.box([-lam], [lam])
        return _point_set(float(mcp_deriv(t, lam, b)))

    fn = _scalar(pieces, provider, True, f"mcp(lam={lam}, b={b})",
                 lambda t: mcp_value(t, lam, b), lambda t: mcp_deriv(t, lam, b))
    fn.lam = lam
    fn.weak_convexity = 1.0 / b
    return fn


@lru_cache(maxsize=None)
def staircase() -> PwtdFunction:
    """``h(t) = max{0, min{1, t}}``: a PWTD function that is not regular at ``t = 1``."""
    pieces = [
        (Polyhedron.interval(hi=0.0), SmoothPiece.constant(0.0, 1)),
        (Polyhedron.interval(0.0, 1.0), SmoothPiece.linear([1.0])),
        (Polyhedron.interval(lo=1.0), SmoothPiece.constant(1.0, 1)),
    ]

    def provider(y):
        t = float(y[0])
        if abs(t - 1.0) <= 1e-12:
            return None  # regular subdifferential empty, limiting one is {0, 1}
        if abs(t) <= 1e-12:
            return Polyhedron.box([0.0], [1.0])
        return _point_set(1.0 if 0.0 < t < 1.0 else 0.0)

    return _scalar(pieces, provider, False, "staircase",
                   lambda t: np.clip(_real(t), 0.0, 1.0))


@lru_cache(maxsize=None)
def indicator_nonpositive_scalar() -> PwtdFunction:
    """``δ_{R-}`` as a single-piece PWTD function."""

    def provider(y):
        t = float(y[0])
        if t < -1e-9:
            return _point_set(0.0)
        return Polyhedron.interval(lo=0.0)

    def vec(t):
        t = _real(t)
        return np.where(t <= feas_tol(t.dtype), 0.0, INF)

    return _scalar([(Polyhedron.interval(hi=0.0), SmoothPiece.constant(0.0, 1))],
                   provider, True, "indicator_R-", vec)


def separable_sum(components, name: str = "separable_sum") -> SeparableSum:
    fn = SeparableSum(components, name=name)
    fn.vec = lambda Y: sum(c.vec(np.asarray(Y)[..., i]) for i, c in enumerate(components))
    return fn


def scad_sum(m: int, p: ScadParams = ScadParams()) -> SeparableSum:
    return separable_sum([scad_scalar(p)] * m, name=f"scad_sum(m={m})")


def mcp_sum(m: int, p: McpParams = McpParams()) -> SeparableSum:
    return separable_sum([mcp_scalar(p)] * m, name=f"mcp_sum(m={m})")


def indicator_nonpositive(m: int) -> SeparableSum:
    return separable_sum([indicator_nonpositive_scalar()] * m, name=f"indicator_R-^{m}")


# ----------------------------------------------------------------------
# type I

def group_penalty(rho: PwtdFunction, gs: GroupStructure, name: str | None = None) -> CompositeFunction:
    """``f(x) = Σ_i ρ(||x_Ji||_q)`` with the constructive multiplier attached.

    ``ρ`` must vanish at ``0``, declare ``∂ρ(0) = [-λ, λ]`` and be regular.
    """
    lam = getattr(rho, "lam", None)
    if lam is None or rho.subdiff_provider is None or not rho.regular:
        raise EpidiffError("group penalty needs a regular scalar penalty with declared lambda")
    if abs(rho.eval([0.0])) > 1e-14:
        raise EpidiffError("penalty must vanish at 0")
    P0 = rho.subdiff_provider(np.zeros(1))
    if abs(P0.support([1.0]) - lam) > 1e-12 or abs(P0.support([-1.0]) - lam) > 1e-12:
        raise EpidiffError("declared subdifferential at 0 must be [-lambda, lambda]")
    theta = separable_sum([rho] * gs.m, name=f"sum_{rho.name}")
    inner = GroupQNormMap(gs)
    idx = [np.array(g) for g in gs.groups]

    def fast_eval(X):
        X = np.atleast_2d(X)
        norms = np.stack([qnorm_rows(X[:, J], gs.q) for J in idx], axis=1)
        return np.sum(rho.vec(norms), axis=1)

    cf = CompositeFunction(theta, inner, msqc_asserted=True, route="type1",
                           fast_eval=fast_eval, name=name or f"group_{rho.name}",
                           params={"lam": lam, "q": gs.q})
    cf.rho = rho
    cf.gs = gs
    cf.multiplier_rule = lambda x, v: type1_multiplier(cf, x)
    cf.subgradient_check = lambda x, v: is_subgradient_type1(cf, x, v)
    return cf


def _rho_prime(cf, t: float) -> float:
    return float(cf.rho.deriv(t)) if cf.rho.deriv is not None else cf.rho.subderivative([t], [1.0])


def type1_multiplier(cf: CompositeFunction, x) -> np.ndarray:
    """``ξ̄_i = ρ'(||x_Ji||_q)`` on active groups and ``λ`` on zero groups."""
    x = cf._x(x)
    act = cf.inner.active_groups(x)
    norms = cf.inner.value(x)
    lam = cf.params["lam"]
    return np.array([_rho_prime(cf, norms[i]) if act[i] else lam for i in range(cf.gs.m)])


def subgradient_factory_type1(cf: CompositeFunction, x, eta, zeta, eps: float = 1e-8) -> np.ndarray:
    """Assemble a subgradient from per-group data.

    Active groups get ``ρ'(||x_J||_q) ∇F_i(x_J)`` (``eta`` and ``zeta`` ignored
    there).  Zero groups get ``eta_i * zeta_i`` with ``eta_i ∈ [-λ, λ]`` and
    ``||zeta_i||_p <= 1`` (``= 1`` when ``eta_i < 0``).
    """
    x = cf._x(x)
    lam, p = cf.params["lam"], cf.gs.p
    act = cf.inner.active_groups(x)
    v = np.zeros(cf.dim)
    for i, J in enumerate(cf.gs.groups):
        J = list(J)
        if act[i]:
            v[J] = _rho_prime(cf, qnorm(x[J], cf.gs.q)) * qnorm_grad(x[J], cf.gs.q)
            continue
        e = float(eta[i])
        zt = np.asarray(zeta[i], dtype=float).reshape(-1)
        if zt.size != len(J):
            raise InvalidRecipeError("not a valid subgradient recipe: zeta has the wrong size")
        zn = qnorm(zt, p)
        if abs(e) > lam + eps:
            raise InvalidRecipeError("not a valid subgradient recipe: |eta| exceeds lambda")
        if e >= 0 and zn > 1 + eps:
            raise InvalidRecipeError("not a valid subgradient recipe: ||zeta||_p > 1")
        if e < 0 and abs(zn - 1) > eps:
            raise InvalidRecipeError("not a valid subgradient recipe: ||zeta||_p must be 1")
        v[J] = e * zt
    return v


def is_subgradient_type1(cf: CompositeFunction, x, v, eps: float = 1e-8) -> bool:
    """Check the per-group conditions for ``v ∈ ∂f(x)``.

    Active groups need ``v_J = ρ'(||x_J||_q) ∇F_i(x_J)``; zero groups need
    ``||v_J||_p <= λ`` (take ``eta = ||v_J||_p`` and ``zeta = v_J / eta``).
    """
    x, v = cf._x(x), cf._x(v)
    lam, p = cf.params["lam"], cf.gs.p
    act = cf.inner.active_groups(x)
    for i, J in enumerate(cf.gs.groups):
        J = list(J)
        if act[i]:
            target = _rho_prime(cf, qnorm(x[J], cf.gs.q)) * qnorm_grad(x[J], cf.gs.q)
            if np.max(np.abs(v[J] - target)) > eps * (1 + np.max(np.abs(target))):
                return False
        elif qnorm(v[J], p) > lam + eps:
            return False
    return True


def group_scad(groups, q: float = 2.0, lam: float = 1.0, a: float = 3.7) -> CompositeFunction:
    return group_penalty(scad_scalar(ScadParams(lam, a)), GroupStructure(tuple(groups), q),
                         name="group_scad")


def group_mcp(groups, q: float = 2.0, lam: float = 1.0, b: float = 3.0) -> CompositeFunction:
    return group_penalty(mcp_scalar(McpParams(lam, b)), GroupStructure(tuple(groups), q),
                         name="group_mcp")


# ----------------------------------------------------------------------
# type II

def qcone_indicator(n: int, q: float) -> CompositeFunction:
    """Indicator of ``K = {(x1, x2) : ||x2||_q <= x1}`` as ``δ_{R-}∘F``."""
    inner = QConeResidualMap(n, q)
    theta = indicator_nonpositive(1)

    def fast_eval(X):
        X = np.atleast_2d(X)
        r = qnorm_rows(X[:, 1:], q) - X[:, 0]
        scale = 1.0 + np.max(np.abs(X), axis=1)
        return np.where(r <= feas_tol(X.dtype) * scale, 0.0, INF)

    cf = CompositeFunction(theta, inner, msqc_asserted=True, route="qcone", fast_eval=fast_eval,
                           name=f"qcone(n={n}, q={q})", params={"n": n, "q": q})
    cf.multiplier_rule = lambda x, v: qcone_multiplier(cf, x, v)
    cf.subgradient_check = lambda x, v: qcone_normal_contains(cf, x, v)
    return cf


def qcone_boundary_point(x2, q: float, dtype=np.longdouble) -> np.ndarray:
    """``(||x2||_q, x2)`` computed in ``dtype`` exactly as the direct evaluator does."""
    x2 = np.asarray(x2).astype(dtype).reshape(-1)
    return np.concatenate([qnorm_rows(x2[None, :], q), x2])


def _qcone_residual(cf, x) -> float:
    return float(cf.inner.value(x)[0])


def _qcone_tol(x) -> float:
    return 1e-9 * (1.0 + float(np.max(np.abs(x))))


def qcone_multiplier(cf, x, v) -> np.ndarray:
    """``ξ̄ = -v_1`` on the boundary (including the apex) and ``0`` inside."""
    x, v = cf._x(x), cf._x(v)
    if _qcone_residual(cf, x) < -_qcone_tol(x):
        return np.zeros(1)
    return np.array([max(-float(v[0]), 0.0)])


def qcone_normal_contains(cf, x, v, eps: float = 1e-8) -> bool:
    """``v ∈ N_K(x)``."""
    x, v = cf._x(x), cf._x(v)
    q = cf.params["q"]
    p = q / (q - 1.0)
    r = _qcone_residual(cf, x)
    tol = eps * (1 + np.max(np.abs(v)))
    if r > _qcone_tol(x):
        return False
    if r < -_qcone_tol(x):
        return bool(np.max(np.abs(v)) <= tol)
    if cf.inner.tail_is_zero(x):
        return qnorm(v[1:], p) <= -v[0] + tol
    xi = -float(v[0])
    if xi < -tol:
        return False
    return bool(np.max(np.abs(v - xi * cf.inner.gradient(x))) <= tol)


def cone_product(blocks) -> CompositeFunction:
    """``δ_K`` for ``K = K_1 x ... x K_m``; second subderivatives add blockwise."""
    blocks = tuple(blocks)
    if not blocks:
        raise EpidiffError("cone product needs at least one block")
    for b in blocks:
        if b.inner.dim_out != 1 or b.theta.dim != 1:
            raise DimensionError(f"block dimension mismatch: {b!r} is not a single cone constraint")
    inner = BlockInnerMap([b.inner for b in blocks])
    theta = indicator_nonpositive(len(blocks))
    sl, off = [], 0
    for b in blocks:
        sl.append(slice(off, off + b.dim))
        off += b.dim

    def fast_eval(X):
        X = np.atleast_2d(X)
        total = np.zeros(X.shape[0])
        for b, s in zip(blocks, sl):
            total = total + b.fast_eval(X[:, s])
        return total

    def rule(x, v):
        x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
        return np.concatenate([b.multiplier_rule(x[s], v[s]) for b, s in zip(blocks, sl)])

    def check(x, v):
        x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
        return all(b.subgradient_check(x[s], v[s]) for b, s in zip(blocks, sl))

    cf = CompositeFunction(theta, inner, msqc_asserted=True, route="cone_product",
                           multiplier_rule=rule, subgradient_check=check, blocks=blocks,
                           fast_eval=fast_eval, name=f"cone_product({len(blocks)})")
    cf.slices = sl
    return cf


# ----------------------------------------------------------------------
# type III

def smooth_composite(theta: PwtdFunction, inner: SmoothMap, msqc_asserted: bool = True,
                     name: str = "smooth_composite") -> CompositeFunction:
    """``ϑ∘F`` for smooth ``F``; the multiplier set is an exact polyhedron.

    The caller asserts the qualification condition and the inclusion of the
    subdifferential of ``f`` in ``∇F(x) ∂ϑ(F(x))`` at query points.
    """
    if theta.subdiff_provider is None or not theta.regular:
        raise EpidiffError("smooth composite needs a regular outer function with a subdifferential")
    vec = getattr(theta, "vec", None)

    def fast_eval(X):
        X = np.atleast_2d(X)
        Y = inner.value_batch(X)
        if vec is not None:
            return np.asarray(vec(Y), dtype=float)
        return np.array([theta.eval(y) for y in Y])

    return CompositeFunction(theta, inner, msqc_asserted=msqc_asserted, route="smooth",
                             fast_eval=fast_eval, name=name)


# ----------------------------------------------------------------------
# type IV

def svec_dim(n: int) -> int:
    return n * (n + 1) // 2


def svec(M) -> np.ndarray:
    """Symmetric matrix to vector with off-diagonals scaled by ``√2`` (isometry)."""
    M = _real(M)
    n = M.shape[0]
    iu = np.triu_indices(n)
    scale = np.where(iu[0] == iu[1], 1.0, np.sqrt(M.dtype.type(2.0))).astype(M.dtype)
    return M[iu] * scale


def smat(s, n: int) -> np.ndarray:
    s = _real(s)
    iu = np.triu_indices(n)
    scale = np.where(iu[0] == iu[1], 1.0, 1.0 / np.sqrt(s.dtype.type(2.0))).astype(s.dtype)
    M = np.zeros(s.shape[:-1] + (n, n), dtype=s.dtype)
    M[..., iu[0], iu[1]] = s * scale
    M[..., iu[1], iu[0]] = s * scale
    return M


class PsdConeInstance:
    """Indicator of the negative semidefinite cone ``S^n_-``."""

    def __init__(self, n: int, eps_psd: float = 1e-9):
        if not 1 <= n <= 64:
            raise EpidiffError("PSD instance supports 1 <= n <= 64")
        self.n = n
        self.eps_psd = eps_psd

    def __repr__(self):
        return f"PsdConeInstance(n={self.n})"

    def f_eval(self, x) -> float:
        x = np.asarray(x, dtype=float)
        top = jacobi_eigh(x)[0][-1]
        return 0.0 if top <= self.eps_psd * (1 + np.linalg.norm(x)) else INF

    def normal_cone_contains(self, xbar, vbar) -> bool:
        return psd_normal_cone_contains(xbar, vbar, self.eps_psd)

    def critical_cone_contains(self, xbar, vbar, w) -> bool:
        return psd_critical_cone_contains(xbar, vbar, w, self.eps_psd)

    def second_subderivative(self, xbar, vbar, w) -> float:
        return psd_second_subderivative(xbar, vbar, w, self.eps_psd)

    def oracle_second_subderivative(self, xbar, vbar, w, sched=None):
        """Second-order quotient oracle of the indicator at ``(x̄, v̄, w)``.

        The cone is orthogonally invariant, so the quotients are formed in the
        eigenbasis of ``x̄``, where the base point is diagonal and its kernel
        eigenvalues are exactly zero.
        """
        from .oracle import Schedule, estimate_second_subderivative

        lam, Q = jacobi_eigh(np.asarray(xbar, dtype=float))
        lam = np.where(np.abs(lam) <= self.eps_psd * (1.0 + np.max(np.abs(lam))), 0.0, lam)
        base = svec(np.diag(lam)).astype(np.longdouble)
        return estimate_second_subderivative(self.fast_eval, base, svec(Q.T @ vbar @ Q),
                                             svec(Q.T @ w @ Q), sched or Schedule(), vectorized=True)

    def fast_eval(self, S) -> np.ndarray:
        """Vectorized indicator on rows of ``svec`` coordinates."""
        S = np.atleast_2d(_real(S))
        # M ⪯ t I  <=>  t I - M ≻ 0 for any t slightly above the slack
        t = feas_tol(S.dtype) * (1.0 + np.max(np.abs(S), axis=1))
        B = t[:, None, None] * np.eye(self.n, dtype=S.dtype) - smat(S, self.n)
        return np.where(cholesky_feasible_batch(B), 0.0, INF)


def psd_cone_instance(n: int) -> PsdConeInstance:
    return PsdConeInstance(n)


def random_psd_critical_triple(n: int, rng, rank_x: int | None = None, rank_v: int | None = None,
                               w_scale: float = 0.5):
    """Random ``(x̄, v̄, w)`` with ``v̄ ∈ N(x̄)`` and ``w`` critical.

    ``x̄ = Q diag(λ) Q'`` with ``λ < 0`` on the first ``rank_x`` slots and zero
    elsewhere; ``v̄`` is supported on the last ``rank_v`` kernel directions.
    ``w`` is arbitrary off the kernel, negative semidefinite on the kernel
    part not touched by ``v̄`` and zero on the ``v̄`` block.
    """
    if rank_x is None:
        rank_x = int(rng.integers(1, n))
    k = n - rank_x
    if rank_v is None:
        rank_v = int(rng.integers(1, k + 1))
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.zeros(n)
    lam[:rank_x] = -rng.uniform(0.5, 2.0, rank_x)
    mu = np.zeros(n)
    mu[n - rank_v:] = rng.uniform(0.5, 2.0, rank_v)
    W = rng.standard_normal((n, n))
    W = 0.5 * (W + W.T)
    # kernel block: entries touching v̄'s support vanish, the rest is NSD
    kb = slice(rank_x, n)
    W[kb, kb] = 0.0
    free = n - rank_v - rank_x
    if free > 0:
        G = rng.standard_normal((free, free))
        W[rank_x:rank_x + free, rank_x:rank_x + free] = -G @ G.T / free
    W *= w_scale / max(np.linalg.norm(W), 1e-12)
    xbar = Q @ np.diag(lam) @ Q.T
    vbar = Q @ np.diag(mu) @ Q.T
    w = Q @ W @ Q.T
    sym = lambda M: 0.5 * (M + M.T)
    return sym(xbar), sym(vbar), sym(w)
