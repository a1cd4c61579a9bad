"""Finite-difference estimators of epi-limits.

The liminf over ``τ ↓ 0, w' → w`` that defines subderivatives is replaced by a
geometric ladder ``τ_k = τ_0 r^k`` and, at each level, a minimum of the
difference quotient over a ball ``B(w, c τ_k)``.  Ball points are written as
``w + c τ_k u`` with ``u`` in the unit ball.  Each level evaluates

* the centre ``u = 0``,
* the best ``u`` of the previous level (recovery sequences with
  ``w^k - w = O(τ_k)`` have a stable ``u``),
* ``N`` uniform samples, and
* points on the segment from that ``u`` to the mean of the feasible samples of
  the previous level, and
* an adaptive local search around the current best ``u``: the step doubles
  after an improving round and shrinks by ``2^(-1/4)`` otherwise (the 1/5
  success rule).  It ends when the step falls below ``refine_min_step``, or
  when 15 rounds bring no relative progress above ``1e-9``.  On the last four
  levels (those feeding the value and the trend) it then restarts up to three
  times from the point ``1/2, 1/4, 1/8`` of the way from the best point to the
  mean of the feasible samples.  ``refine_max_rounds`` caps the total.

The local search matters for indicator-type functions, whose quotient is
minimized on the boundary of a feasible region (for the semidefinite cone, at
the apex of a translated cone); there the error is linear in the distance to
the minimizer.

Points and quotients are formed in ``np.longdouble``.  At ``τ ≈ 1e-6`` the
roundoff of ``h(x + τw') - h(x)`` is divided by ``τ²/2 ≈ 1e-12``, which in
double precision would already exceed the second-order tolerances.  A
vectorized ``h`` should therefore preserve the dtype of its input.  Base
points may be passed as ``longdouble`` arrays so that boundary points lie
exactly on the boundary as computed by ``h``.

All randomness comes from ``Schedule.seed``; evaluation order is fixed, so
estimates are bit-reproducible.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import PointOutsideDomainError, PreconditionError
from .extreal import INF, NEG_INF


@dataclass(frozen=True)
class Schedule:
    tau0: float = 1e-2
    ratio: float = 0.5
    levels: int = 14
    samples: int = 64
    radius_factor: float = 1.0
    seed: int = 42
    refine_max_rounds: int = 400
    refine_min_step: float = 1e-9

    def __post_init__(self):
        if not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if self.levels < 1 or self.samples < 1:
            raise ValueError("levels and samples must be at least 1")
        if self.radius_factor < 0 or self.refine_max_rounds < 0:
            raise ValueError("radius_factor and refine_max_rounds must be nonnegative")
        if not self.refine_min_step > 0:
            raise ValueError("refine_min_step must be positive")

    def taus(self) -> np.ndarray:
        return self.tau0 * self.ratio ** np.arange(self.levels)

    def replace(self, **kw) -> "Schedule":
        return dataclasses.replace(self, **kw)


@dataclass
class OracleEstimate:
    """Result of an epi-limit estimate.

    ``value`` is the finest-level minimum, ``+inf`` when the last three levels
    are all infinite, and ``None`` when the minima fall below ``-1/τ_k`` on the
    last three levels (a quotient diverging to ``-inf``).  ``trend_positive``
    is the mirror diagnostic, minima above ``+1/τ_k``: a finite-valued ``h``
    whose quotient blows up like ``1/τ`` without ever being infinite.
    """

    value: Optional[float]
    level_minima: list
    taus: list
    divergence_flag: bool
    trend_negative: bool
    slope: float
    argmin: Optional[np.ndarray] = field(default=None, repr=False)
    trend_positive: bool = False


LD = np.longdouble


def _batch(h: Callable, X: np.ndarray, vectorized: bool) -> np.ndarray:
    if vectorized:
        out = np.asarray(h(X)).reshape(-1)
        if out.dtype != LD:
            out = out.astype(LD)
    else:
        out = np.array([float(h(np.asarray(x, dtype=float))) for x in X], dtype=LD)
    return np.where(np.isnan(out), LD(INF), out)


def _ld(a) -> np.ndarray:
    return np.asarray(a).astype(LD).reshape(-1)


def _unit_ball(rng, k: int, n: int) -> np.ndarray:
    g = rng.standard_normal((k, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    rad = rng.uniform(size=(k, 1)) ** (1.0 / n)
    return g / norms * rad


def _clip_ball(U: np.ndarray) -> np.ndarray:
    nr = np.linalg.norm(U, axis=1, keepdims=True)
    return np.where(nr > 1.0, U / np.maximum(nr, 1e-300), U)


_SHRINK = 0.5 ** 0.25   # with doubling on success: equilibrium success rate 1/5
_WINDOW = 15
_STALL = 1e-9
_PULL = np.array([1e-4, 1e-3, 1e-2, 1e-1, 0.5])
_RESTARTS = 3
_TAIL = 4          # levels that feed the value and the trend diagnostic


def _slope(taus, minima) -> float:
    """Log-log slope of successive differences of the last four level minima."""
    m = np.asarray(minima[-4:], dtype=float)
    t = np.asarray(taus[-4:], dtype=float)
    if m.size < 3 or not np.all(np.isfinite(m)):
        return float("nan")
    d = np.abs(np.diff(m))
    if np.all(d == 0):
        return INF
    keep = d > 0
    if keep.sum() < 2:
        return INF
    return float(np.polyfit(np.log(t[:-1][keep]), np.log(d[keep]), 1)[0])


def _epi_min(quotient: Callable, center: np.ndarray, sched: Schedule) -> OracleEstimate:
    """Core ladder: ``quotient(tau, P) -> values`` for candidate points ``P``."""
    rng = np.random.default_rng(sched.seed)
    n = center.size
    taus = sched.taus()
    n_local = max(4, sched.samples // 4)
    u_best = np.zeros(n)
    anchor = None
    step = 0.5
    minima, argmin = [], None
    for level, tau in enumerate(taus):
        tau_ld = LD(tau)
        max_restarts = _RESTARTS if level >= len(taus) - _TAIL else 0
        r = LD(sched.radius_factor) * tau_ld
        U = [np.zeros((1, n)), u_best[None, :], _unit_ball(rng, sched.samples, n),
             _clip_ball(u_best + step * _unit_ball(rng, n_local, n))]
        if anchor is not None:
            # the best point of the previous level usually sits on a boundary that
            # moves by O(τ); points pulled towards an interior anchor survive that
            U.append(u_best + _PULL[:, None] * (anchor - u_best)[None, :])
        U = np.vstack(U)
        vals = quotient(tau_ld, center + r * U.astype(LD))
        j = int(np.argmin(vals))
        best, u_best = vals[j], U[j].copy()
        feas = [U[np.isfinite(vals)]]
        if r > 0:
            step = min(0.5, max(64 * step, 1e-4))
            cur, cur_val = u_best.copy(), best
            rounds, restarts, mark, mark_val = 0, 0, 0, cur_val
            while rounds < sched.refine_max_rounds:
                if step < sched.refine_min_step:
                    # collapsed step: restart from a point pulled into the interior
                    pts = np.vstack(feas)
                    if restarts >= max_restarts or len(pts) < 2:
                        break
                    restarts += 1
                    inner = pts.mean(axis=0)
                    pull = 0.5 ** restarts
                    P = np.vstack([u_best + pull * (inner - u_best), inner])
                    pv = quotient(tau_ld, center + r * P.astype(LD))
                    k = 0 if np.isfinite(pv[0]) else 1
                    if not np.isfinite(pv[k]):
                        break
                    cur, cur_val, step = P[k].copy(), pv[k], 0.1
                    mark, mark_val = rounds, cur_val
                rounds += 1
                V = _clip_ball(cur + step * _unit_ball(rng, n_local, n))
                vv = quotient(tau_ld, center + r * V.astype(LD))
                feas.append(V[np.isfinite(vv)])
                j = int(np.argmin(vv))
                if vv[j] < cur_val:
                    cur, cur_val = V[j].copy(), vv[j]
                    step = min(2 * step, 1.0)
                    if cur_val < best:
                        best, u_best = cur_val, cur.copy()
                else:
                    step *= _SHRINK
                if rounds - mark >= _WINDOW:
                    if np.isfinite(cur_val) and not mark_val - cur_val > _STALL * (1 + abs(cur_val)):
                        step = 0.0
                    mark, mark_val = rounds, cur_val
        pts = np.vstack(feas)
        anchor = pts.mean(axis=0) if len(pts) else None
        minima.append(float(best))
        argmin = (center + r * u_best.astype(LD)).astype(float)

    div = len(minima) >= 3 and all(m == INF for m in minima[-3:])
    neg = len(minima) >= 3 and all(m < -1.0 / t for m, t in zip(minima[-3:], taus[-3:]))
    pos = len(minima) >= 3 and all(m > 1.0 / t for m, t in zip(minima[-3:], taus[-3:]))
    if div:
        value = INF
    elif neg:
        value = None
    else:
        value = minima[-1]
    return OracleEstimate(value, minima, list(taus), div, neg, _slope(taus, minima), argmin, pos)


def _base_value(h, x, vectorized):
    hx = _batch(h, x[None, :], vectorized)[0]
    if not np.isfinite(hx):
        raise PointOutsideDomainError("oracle base point outside the domain of h")
    return hx


def estimate_subderivative(h: Callable, x, w, sched: Schedule = Schedule(),
                           vectorized: bool = False) -> OracleEstimate:
    """``m_k = min_{w'} [h(x + τ_k w') - h(x)] / τ_k``."""
    x, w = _ld(x), _ld(w)
    hx = _base_value(h, x, vectorized)

    def quotient(tau, W):
        return (_batch(h, x[None, :] + tau * W, vectorized) - hx) / tau

    return _epi_min(quotient, w, sched)


def estimate_second_subderivative(h: Callable, x, v, w, sched: Schedule = Schedule(),
                                  vectorized: bool = False) -> OracleEstimate:
    """``m_k = min_{w'} [h(x + τ_k w') - h(x) - τ_k <v, w'>] / (τ_k² / 2)``."""
    x, v, w = _ld(x), _ld(v), _ld(w)
    hx = _base_value(h, x, vectorized)

    def quotient(tau, W):
        vals = _batch(h, x[None, :] + tau * W, vectorized)
        return (vals - hx - tau * (W @ v)) / (LD(0.5) * tau * tau)

    return _epi_min(quotient, w, sched)


def estimate_parabolic_subderivative(h: Callable, x, w, dhxw: float, z,
                                     sched: Schedule = Schedule(),
                                     vectorized: bool = False) -> OracleEstimate:
    """``m_k = min_{z'} [h(x + τ_k w + τ_k²/2 z') - h(x) - τ_k dh(x)(w)] / (τ_k² / 2)``."""
    if not math.isfinite(dhxw):
        raise PreconditionError("parabolic quotient needs a finite first-order value")
    x, w, z = _ld(x), _ld(w), _ld(z)
    dhxw = LD(dhxw)
    hx = _base_value(h, x, vectorized)

    def quotient(tau, Z):
        pts = x[None, :] + tau * w[None, :] + LD(0.5) * tau * tau * Z
        return (_batch(h, pts, vectorized) - hx - tau * dhxw) / (LD(0.5) * tau * tau)

    return _epi_min(quotient, z, sched)


def agrees(closed: float, est: OracleEstimate, atol: float, rtol: float = 0.0) -> bool:
    """Closed form versus oracle: infinite closed forms need the matching flag."""
    if closed == INF:
        return est.divergence_flag or est.trend_positive
    if closed == NEG_INF:
        return est.trend_negative
    if est.value is None or not math.isfinite(est.value):
        return False
    return abs(closed - est.value) <= max(atol, rtol * abs(closed))
