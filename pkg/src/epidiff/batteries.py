"""Seeded random draws shared by the test-suite and ``epidiff selftest``.

Each draw bundles an instance with a base point, a generic direction ``w``, a
second-order pair ``(v, w_crit)`` with ``v`` a subgradient and ``w_crit`` in
the critical cone, and a parabolic direction ``z``.

Base points meant for the oracle are also given in ``longdouble``
(``x_oracle``) so that boundary points lie exactly on the boundary as the
direct evaluators compute it.  Smooth-composite data are dyadic, which makes
``F(x) = 0`` exact in every precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import instances as inst
from .composite import CompositeFunction
from .inner_maps import polynomial_map, qnorm, qnorm_grad

FAMILIES = ("group_scad", "group_mcp", "qcone", "smooth")
QS = (1.5, 2.0, 3.0)


@dataclass
class Draw:
    family: str
    cf: CompositeFunction
    x: np.ndarray
    x_oracle: np.ndarray
    w: np.ndarray
    v: Optional[np.ndarray]
    w_crit: Optional[np.ndarray]
    z: np.ndarray
    label: str = ""


def _nonzero_direction(rng, k: int, q: float, norm: float) -> np.ndarray:
    d = rng.choice([-1.0, 1.0], size=k) * rng.uniform(0.3, 1.0, size=k)
    return d * (norm / qnorm(d, q))


def _partition(rng, n: int):
    groups, start = [], 0
    while start < n:
        size = int(min(rng.integers(1, 4), n - start))
        groups.append(tuple(range(start, start + size)))
        start += size
    return groups


def draw_group(rng, kind: str) -> Draw:
    """Group SCAD or MCP with ``n <= 8``, mixing zero groups and every piece."""
    n = int(rng.integers(2, 9))
    groups = _partition(rng, n)
    q = float(rng.choice(QS))
    p = q / (q - 1.0)
    lam = float(rng.choice([0.5, 1.0, 2.0]))
    if kind == "group_scad":
        a = float(rng.choice([3.0, 3.7]))
        cf = inst.group_scad(groups, q, lam, a)
        ranges = [(0.2 * lam, 0.8 * lam), (1.2 * lam, (a - 0.2) * lam), ((a + 0.3) * lam, (a + 2) * lam)]
    else:
        b = float(rng.choice([2.0, 3.0]))
        cf = inst.group_mcp(groups, q, lam, b)
        ranges = [(0.2 * lam * b, 0.8 * lam * b), (1.2 * lam * b, 2.0 * lam * b)]

    x = np.zeros(n)
    v = np.zeros(n)
    w_crit = rng.standard_normal(n)
    for J in groups:
        J = list(J)
        if rng.uniform() < 0.35:
            if rng.uniform() < 0.3:
                # subgradient on the boundary of the dual ball, w_J along the dual direction
                d = _nonzero_direction(rng, len(J), q, 1.0)
                v[J] = lam * qnorm_grad(d, q)
                w_crit[J] = rng.uniform(0.2, 1.0) * d
            else:
                u = _nonzero_direction(rng, len(J), p, rng.uniform(0.0, 0.9) * lam)
                v[J] = u
                w_crit[J] = 0.0
            continue
        lo, hi = ranges[int(rng.integers(len(ranges)))]
        x[J] = _nonzero_direction(rng, len(J), q, rng.uniform(lo, hi))
    for i, J in enumerate(groups):
        if np.any(x[list(J)] != 0):
            t = qnorm(x[list(J)], q)
            v[list(J)] = float(cf.rho.deriv(t)) * qnorm_grad(x[list(J)], q)
    w = rng.standard_normal(n)
    z = rng.standard_normal(n)
    return Draw(kind, cf, x, x.astype(np.longdouble), w, v, w_crit, z,
                label=f"{kind} n={n} q={q} groups={groups}")


def draw_qcone(rng) -> Draw:
    """q-order cone in ``R^n``, ``n <= 5``: interior, boundary or apex."""
    n = int(rng.integers(2, 6))
    q = float(rng.choice(QS))
    p = q / (q - 1.0)
    cf = inst.qcone_indicator(n, q)
    case = ("interior", "boundary", "boundary", "apex")[int(rng.integers(4))]
    w = rng.standard_normal(n)
    z = rng.standard_normal(n)
    if case == "interior":
        x2 = _nonzero_direction(rng, n - 1, q, rng.uniform(0.5, 2.0))
        x = np.concatenate([[qnorm(x2, q) + rng.uniform(0.5, 1.5)], x2])
        xo = x.astype(np.longdouble)
        v = np.zeros(n)
        w_crit = rng.standard_normal(n)
    elif case == "boundary":
        x2 = _nonzero_direction(rng, n - 1, q, rng.uniform(1.0, 2.0))
        xo = inst.qcone_boundary_point(x2, q)
        x = xo.astype(float)
        g = cf.inner.gradient(x)
        xi = rng.uniform(0.5, 2.0)
        v = xi * g
        w_crit = rng.standard_normal(n)
        w_crit -= (w_crit @ g) / (g @ g) * g
        w_crit *= rng.uniform(0.2, 0.5) / np.linalg.norm(w_crit)
        # tangent directions for the generic slot half the time
        if rng.uniform() < 0.5:
            w = w - max(0.0, (w @ g) / (g @ g) + 0.3) * g
    else:
        x = np.zeros(n)
        xo = x.astype(np.longdouble)
        v2 = rng.standard_normal(n - 1)
        if rng.uniform() < 0.5:
            v = np.concatenate([[-qnorm(v2, p) - rng.uniform(0.1, 1.0)], v2])
            w_crit = np.zeros(n)
        else:
            v = np.concatenate([[-qnorm(v2, p)], v2])
            d = qnorm_grad(v2, p)
            w_crit = rng.uniform(0.2, 1.0) * np.concatenate([[qnorm(d, q)], d])
    return Draw("qcone", cf, x, xo, w, v, w_crit, z, label=f"qcone n={n} q={q} {case}")


def _dyadic(rng, size, scale: int = 4, span: int = 8):
    return rng.integers(-span, span + 1, size=size) / scale


def draw_smooth(rng) -> Draw:
    """``ϑ∘F`` with a dyadic polynomial ``F: R^n -> R^m`` and a separable ``ϑ``."""
    n = int(rng.integers(2, 4))
    m = int(rng.integers(1, 3))
    outer = ("indicator", "scad", "mcp")[int(rng.integers(3))]
    x = _dyadic(rng, n)
    tables, consts = [], []
    for _ in range(m):
        terms = []
        for i in range(n):
            e = [0] * n
            e[i] = 1
            terms.append([float(_dyadic(rng, 1)[0]) or 0.5, e])
        for _ in range(2):
            e = [0] * n
            e[int(rng.integers(n))] += 1
            e[int(rng.integers(n))] += 1
            terms.append([float(_dyadic(rng, 1)[0]), e])
        tables.append(terms)
    base = polynomial_map([t + [[0.0, [0] * n]] for t in tables], n, check=False)
    Fx = base.value(x)
    # constant terms place each component at a target value (exact: all data dyadic)
    if outer == "indicator":
        theta = inst.indicator_nonpositive(m)
        targets = [0.0 if rng.uniform() < 0.7 else -0.5 for _ in range(m)]
    elif outer == "scad":
        theta = inst.scad_sum(m, inst.ScadParams(1.0, 3.0))
        targets = [float(rng.choice([0.0, 0.5, -1.5, 2.0, 4.0])) for _ in range(m)]
    else:
        theta = inst.mcp_sum(m, inst.McpParams(1.0, 2.0))
        targets = [float(rng.choice([0.0, 0.5, -1.5, 3.0])) for _ in range(m)]
    for i in range(m):
        consts.append(targets[i] - Fx[i])
        tables[i] = tables[i] + [[consts[i], [0] * n]]
    F = polynomial_map(tables, n)
    cf = inst.smooth_composite(theta, F, name=f"{outer}∘poly")
    J = F.jacobian(x)
    H = F.hessian_tensor(x)

    # subgradient v = J' xi with xi in ∂ϑ(F(x)); strict interior choices at kinks
    xi = np.zeros(m)
    pinned = []
    for i, t in enumerate(targets):
        if outer == "indicator":
            if t == 0.0:
                xi[i] = rng.uniform(0.5, 1.5)
                pinned.append(i)
        elif t == 0.0:
            xi[i] = rng.uniform(-0.8, 0.8)
            pinned.append(i)
        else:
            comp = theta.components[i]
            xi[i] = float(comp.deriv(t))
    v = J.T @ xi
    if pinned:
        _, sv, Vt = np.linalg.svd(J[pinned])
        rank = int(np.sum(sv > 1e-12 * max(sv[0], 1.0)))
        basis = Vt[rank:]
        w_crit = basis.T @ rng.standard_normal(basis.shape[0]) if basis.shape[0] else np.zeros(n)
    else:
        w_crit = rng.standard_normal(n)
    if pinned and np.any(w_crit):
        # keep the recovery displacement inside the unit ball of the oracle
        w_crit *= 0.4 / np.linalg.norm(w_crit)
        for i in pinned:
            curv = abs(w_crit @ H[i] @ w_crit)
            gn = np.linalg.norm(J[i])
            if curv > 0.5 * gn:
                w_crit *= np.sqrt(0.5 * gn / curv)
    w = rng.standard_normal(n)
    if outer == "indicator":
        for i in pinned:
            if J[i] @ w > 0:
                w = w - (J[i] @ w + 0.3) / (J[i] @ J[i]) * J[i]
    z = rng.standard_normal(n)
    return Draw("smooth", cf, x, x.astype(np.longdouble), w, v, w_crit, z,
                label=f"{outer}∘poly n={n} m={m} targets={targets}")


# ----------------------------------------------------------------------
# PWTD queries

@dataclass
class PwtdQuery:
    fn: object
    y: np.ndarray
    v: np.ndarray
    w: np.ndarray
    z: np.ndarray
    label: str = ""


def _scalar_draw(rng, kind: str):
    """One coordinate: component, point, subgradient and direction."""
    if kind == "indicator":
        comp = inst.indicator_nonpositive_scalar()
        if rng.uniform() < 0.6:
            y, v = 0.0, float(rng.choice([0.0, rng.uniform(0.2, 2.0)]))
            # critical: w <= 0 when v = 0, w = 0 when v > 0; sometimes leave the cone
            w = -rng.uniform(0.2, 1.5) if v == 0.0 else 0.0
            if rng.uniform() < 0.2:
                w = rng.uniform(0.2, 1.5)
        else:
            y, v, w = -rng.uniform(0.5, 2.0), 0.0, rng.standard_normal()
        return comp, y, v, w
    lam = float(rng.choice([0.5, 1.0, 2.0]))
    if kind == "scad":
        a = float(rng.choice([3.0, 3.7]))
        comp = inst.scad_scalar(inst.ScadParams(lam, a))
        knots = [0.0, lam, -lam, a * lam, -a * lam]
    else:
        b = float(rng.choice([2.0, 3.0]))
        comp = inst.mcp_scalar(inst.McpParams(lam, b))
        knots = [0.0, lam * b, -lam * b]
    y = float(rng.choice(knots)) if rng.uniform() < 0.6 else float(rng.uniform(-4, 4) * lam)
    if y == 0.0:
        v = float(rng.choice([lam, -lam, rng.uniform(-lam, lam)]))
        w = (np.sign(v) * rng.uniform(0.2, 1.5) if abs(v) == lam else 0.0)
        if rng.uniform() < 0.25:
            w = rng.standard_normal()
    else:
        v = float(comp.deriv(y))
        w = rng.standard_normal()
    return comp, y, v, float(w)


def draw_pwtd_query(rng) -> PwtdQuery:
    """Separable SCAD / MCP / indicator sum with ``m <= 3`` and a valid ``(y, v)``.

    Points sit on knots more often than not, subgradients span the whole of
    ``∂ψ(y)`` and directions mix critical and non-critical choices.
    """
    m = int(rng.integers(1, 4))
    kind = ("scad", "mcp", "indicator")[int(rng.integers(3))]
    parts = [_scalar_draw(rng, kind) for _ in range(m)]
    fn = inst.separable_sum([p[0] for p in parts], name=f"{kind}_sum(m={m})")
    y, v, w = (np.array([p[k] for p in parts]) for k in (1, 2, 3))
    z = rng.standard_normal(m)
    z[rng.uniform(size=m) < 0.3] = 0.0
    return PwtdQuery(fn, y, v, w, z, label=f"{kind} m={m} y={y.tolist()}")


# ----------------------------------------------------------------------
# golden points for the homogeneity sweeps

def golden_points() -> list:
    """``(label, degree, fn, args)`` with ``fn(*scaled_args)``.

    Degree-1 entries take a direction ``w``; degree-2 entries take ``w`` or
    ``(w, z)``, where ``z`` is scaled by ``t²`` for parabolic subderivatives.
    """
    stair = inst.staircase()
    scad = inst.scad_scalar(inst.ScadParams(1.0, 3.0))
    ind = inst.indicator_nonpositive_scalar()
    gscad = inst.group_scad([(0, 1), (2, 3)], 2.0, 1.0, 3.0)
    soc = inst.qcone_indicator(3, 2.0)
    x0 = np.array([0.0, 0.0, 3.0, 4.0])
    smooth = inst.smooth_composite(
        inst.indicator_nonpositive(1),
        polynomial_map([[[1.0, [2, 0]], [1.0, [0, 1]], [-1.0, [0, 0]]]], 2))
    psd = inst.psd_cone_instance(3)
    xb, vb = np.diag([0.0, -1.0, -2.0]), np.diag([1.0, 0.0, 0.0])
    wp = np.zeros((3, 3))
    wp[0, 1] = wp[1, 0] = 1.0
    prod = inst.cone_product([soc, soc])
    return [
        ("staircase d h(1)(-2)", 1, lambda w: stair.subderivative([1.0], w), ([-2.0],)),
        ("staircase d h(1)(3)", 1, lambda w: stair.subderivative([1.0], w), ([3.0],)),
        ("indicator d(0)(1)", 1, lambda w: ind.subderivative([0.0], w), ([1.0],)),
        ("group SCAD df", 1, lambda w: gscad.f_subderivative(x0, w), (np.array([3.0, 4.0, 0, 0]),)),
        ("SOC df apex", 1, lambda w: soc.f_subderivative(np.zeros(3), w), (np.array([1.0, 1.0, 0]),)),
        ("SOC df apex outward", 1, lambda w: soc.f_subderivative(np.zeros(3), w), (np.array([-1.0, 0, 0]),)),
        ("SCAD plain y=2", 2, lambda w: scad.second_subderivative_plain([2.0], w), ([1.0],)),
        ("SCAD second y=0", 2, lambda w: scad.second_subderivative([0.0], [1.0], w), ([1.0],)),
        ("SCAD second off cone", 2, lambda w: scad.second_subderivative([0.0], [0.0], w), ([1.0],)),
        ("staircase parabolic", 2, lambda w, z: stair.parabolic_subderivative([1.0], w, z), ([-1.0], [5.0])),
        ("group SCAD second", 2, lambda w: gscad.f_second_subderivative(x0, np.zeros(4), w),
         (np.array([0, 0, 1.0, 0]),)),
        ("group SCAD parabolic", 2, lambda w, z: gscad.f_parabolic_subderivative(x0, w, z),
         (np.array([0, 0, 1.0, 0]), np.array([0.5, -1.0, 0.25, 2.0]))),
        ("SOC second apex", 2, lambda w: soc.f_second_subderivative(np.zeros(3), np.array([-1.0, 1, 0]), w),
         (np.array([1.0, 1, 0]),)),
        ("smooth 2 w1^2", 2, lambda w: smooth.f_second_subderivative(np.array([0.0, 1.0]), np.array([0.0, 1.0]), w),
         (np.array([0.7, 0.0]),)),
        ("PSD diag example", 2, lambda w: psd.second_subderivative(xb, vb, w), (wp,)),
        ("cone product", 2, lambda w: prod.f_second_subderivative(
            np.zeros(6), np.array([-1.0, 1, 0, -1.0, 0, 1]), w), (np.array([1.0, 1, 0, 2.0, 0, 2]),)),
    ]


def draw(rng, family: str) -> Draw:
    if family in ("group_scad", "group_mcp"):
        return draw_group(rng, family)
    if family == "qcone":
        return draw_qcone(rng)
    if family == "smooth":
        return draw_smooth(rng)
    raise ValueError(f"unknown family {family!r}")


def sweep(n_draws: int = 100, seed: int = 42) -> list:
    """``n_draws`` draws cycling through all families."""
    rng = np.random.default_rng(seed)
    return [draw(rng, FAMILIES[k % len(FAMILIES)]) for k in range(n_draws)]
