"""Extended-real arithmetic on top of Python floats.

Values are plain floats; ``math.inf`` and ``-math.inf`` play the role of the
infinite elements. The helpers below enforce the conventions used throughout
the package: ``inf + finite = inf``, ``t * inf = inf`` for ``t > 0`` and
``inf - inf`` is an error rather than ``nan``.
"""

from __future__ import annotations

import math

from .errors import ExtRealError

INF = math.inf
NEG_INF = -math.inf


def is_finite(a: float) -> bool:
    return math.isfinite(a)


def ext_add(a: float, b: float) -> float:
    """Sum of two extended reals; raises on ``inf + (-inf)``."""
    if math.isnan(a) or math.isnan(b):
        raise ExtRealError("nan is not an extended real")
    if math.isinf(a) and math.isinf(b) and (a > 0) != (b > 0):
        raise ExtRealError("inf - inf is undefined")
    return a + b


def ext_sum(values) -> float:
    total = 0.0
    for v in values:
        total = ext_add(total, v)
    return total


def ext_scale(t: float, a: float) -> float:
    """``t * a`` with ``0 * inf = 0`` and ``t * inf = inf`` for ``t > 0``."""
    if t < 0:
        raise ExtRealError("negative scaling of an extended real")
    if t == 0:
        return 0.0
    return t * a


def ext_neg(a: float) -> float:
    return -a


def to_json(a: float):
    """Serialize an extended real as a number or one of the string sentinels."""
    if a == INF:
        return "+inf"
    if a == NEG_INF:
        return "-inf"
    if a is None:
        return None
    return float(a)


def from_json(obj) -> float:
    if obj == "+inf":
        return INF
    if obj == "-inf":
        return NEG_INF
    if isinstance(obj, str):
        raise ExtRealError(f"unknown extended-real sentinel {obj!r}")
    return float(obj)


def fmt(a: float) -> str:
    if a == INF:
        return "+inf"
    if a == NEG_INF:
        return "-inf"
    return f"{a:.10g}"
