"""Problem files: parsing, validation and query execution.

A problem file is a JSON object::

    {
      "instance": {"kind": "group_scad", "groups": [[0, 1], [2, 3]],
                   "q": 2, "lam": 1, "a": 3},
      "schedule": {"tau0": 0.01, "levels": 14},
      "tolerances": {"oracle_atol": 1e-4},
      "queries": [
        {"op": "subderivative", "x": [0, 0, 3, 4], "w": [3, 4, 0, 0], "expect": 5}
      ]
    }

See ``README.md`` for the full schema.  Every object remembers the line on
which it starts so that validation errors can point at the offending query.
"""

from __future__ import annotations

import json
import json.decoder
import json.scanner
import math
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import instances as inst
from .composite import CompositeFunction
from .errors import EpidiffError
from .extreal import INF, from_json
from .inner_maps import GroupStructure, Polynomial, polynomial_map
from .oracle import (
    OracleEstimate, Schedule, agrees, estimate_parabolic_subderivative,
    estimate_second_subderivative, estimate_subderivative,
)
from .polyhedra import Polyhedron
from .pwtd import PwtdFunction, SmoothPiece

OPS = ("eval", "subderivative", "second_subderivative", "parabolic",
       "check_regularity", "oracle_compare")
REQUIRED = {
    "eval": ("x",),
    "subderivative": ("x", "w"),
    "second_subderivative": ("x", "v", "w"),
    "parabolic": ("x", "w", "z"),
    "check_regularity": ("x", "v", "w"),
}
ORACLE_OPS = ("subderivative", "second_subderivative", "parabolic")
SCHEDULE_KEYS = ("tau0", "ratio", "levels", "samples", "radius_factor", "seed")
DEFAULT_TOLERANCES = {
    "oracle_atol": 1e-4,       # first-order comparisons
    "oracle_atol2": 1e-5,      # second-order and parabolic comparisons
    "oracle_rtol": 1e-2,       # second-order and parabolic comparisons
    "expect_atol": 1e-9,       # closed form versus a stated expected value
    "regularity_tol": 1e-6,
    "regularity_slack": 1e-3,
}


class ProblemError(EpidiffError):
    """Malformed or inconsistent problem file."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ----------------------------------------------------------------------
# JSON with line numbers

class _Obj(dict):
    line: Optional[int] = None


def _line_of(obj) -> Optional[int]:
    return getattr(obj, "line", None)


def loads(text: str):
    """``json.loads`` whose objects carry the line they start on."""
    dec = json.JSONDecoder()

    def parse_object(s_and_end, strict, scan_once, object_hook, object_pairs_hook, memo=None):
        s, end = s_and_end
        obj, new_end = json.decoder.JSONObject(s_and_end, strict, scan_once, object_hook,
                                               object_pairs_hook, memo)
        node = _Obj(obj)
        node.line = s.count("\n", 0, end) + 1
        return node, new_end

    dec.parse_object = parse_object
    dec.scan_once = json.scanner.py_make_scanner(dec)
    try:
        return dec.decode(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno) from None


# ----------------------------------------------------------------------
# field helpers

def _get(obj: dict, key: str, kind=None, default=Ellipsis):
    if key not in obj:
        if default is Ellipsis:
            raise ProblemError(f"missing field {key!r}", _line_of(obj))
        return default
    val = obj[key]
    if kind is not None:
        # JSON booleans are Python ints; only accept them where asked for
        wrong = not isinstance(val, kind) or (isinstance(val, bool) and kind is not bool)
        if wrong:
            raise ProblemError(f"field {key!r} has the wrong type", _line_of(obj))
    return val


def _number(obj: dict, key: str, default=Ellipsis) -> float:
    return float(_get(obj, key, (int, float), default))


def _vector(val, n: int, name: str, line) -> np.ndarray:
    if not isinstance(val, list):
        raise ProblemError(f"{name} must be a list of numbers", line)
    try:
        arr = np.array([from_json(t) for t in val], dtype=float)
    except (TypeError, ValueError, EpidiffError):
        raise ProblemError(f"{name} must be a list of numbers", line) from None
    if arr.shape != (n,):
        raise ProblemError(f"{name} has dimension {arr.size}, expected {n}", line)
    if not np.all(np.isfinite(arr)):
        raise ProblemError(f"{name} must be finite", line)
    return arr


def _matrix(val, n: int, name: str, line) -> np.ndarray:
    if not isinstance(val, list) or len(val) != n:
        raise ProblemError(f"{name} must be a {n}x{n} matrix", line)
    M = np.array([_vector(r, n, name, line) for r in val])
    if np.max(np.abs(M - M.T)) > 1e-12 * (1 + np.max(np.abs(M))):
        raise ProblemError(f"{name} must be symmetric", line)
    return 0.5 * (M + M.T)


def _polyhedron(obj, dim: int) -> Polyhedron:
    if not isinstance(obj, dict):
        raise ProblemError("a polyhedron is an object with 'ineq' and 'eq' rows")
    try:
        return Polyhedron.from_rows(_get(obj, "ineq", list, []), _get(obj, "eq", list, []), dim=dim)
    except EpidiffError as exc:
        raise ProblemError(str(exc), _line_of(obj)) from None


# ----------------------------------------------------------------------
# targets: one per instance family, all with the same query interface

class Target:
    """Uniform query interface over PWTD functions, composites and the PSD cone."""

    kind = "target"
    supports = ("eval", "subderivative", "second_subderivative", "parabolic", "check_regularity")

    def point(self, val, name: str, line) -> np.ndarray:
        return _vector(val, self.dim, name, line)

    def oracle(self, op: str, q: "Query", sched: Schedule) -> OracleEstimate:
        x = self.oracle_point(q.x)
        h, vec = self.oracle_function()
        if op == "subderivative":
            return estimate_subderivative(h, x, q.w, sched, vectorized=vec)
        if op == "second_subderivative":
            return estimate_second_subderivative(h, x, q.v, q.w, sched, vectorized=vec)
        dw = self.subderivative(q.x, q.w)
        return estimate_parabolic_subderivative(h, x, q.w, dw, q.z, sched, vectorized=vec)

    def oracle_point(self, x):
        return np.asarray(x, dtype=np.longdouble)


class PwtdTarget(Target):
    kind = "pwtd"

    def __init__(self, fn: PwtdFunction):
        self.fn = fn
        self.dim = fn.dim

    def eval(self, x):
        return self.fn.eval(x)

    def subderivative(self, x, w):
        return self.fn.subderivative(x, w)

    def second_subderivative(self, x, v, w):
        return self.fn.second_subderivative(x, v, w)

    def parabolic(self, x, w, z):
        return self.fn.parabolic_subderivative(x, w, z)

    def check_regularity(self, x, v, w, tol, slack, seed):
        wit = self.fn.parabolic_regularity_witness(x, v, w)
        ok = wit.lhs == wit.rhs or (math.isfinite(wit.lhs) and abs(wit.lhs - wit.rhs) <= tol)
        return {"lhs": wit.lhs, "rhs": wit.rhs, "verdict": "PASS" if ok else "FAIL"}

    def oracle_function(self):
        vec = getattr(self.fn, "vec", None)
        if vec is not None:
            return vec, True
        return self.fn.eval, False


class CompositeTarget(Target):
    kind = "composite"

    def __init__(self, cf: CompositeFunction):
        self.cf = cf
        self.dim = cf.dim

    def eval(self, x):
        return self.cf.f_eval(x)

    def subderivative(self, x, w):
        return self.cf.f_subderivative(x, w)

    def second_subderivative(self, x, v, w):
        return self.cf.f_second_subderivative(x, v, w)

    def parabolic(self, x, w, z):
        return self.cf.f_parabolic_subderivative(x, w, z)

    def check_regularity(self, x, v, w, tol, slack, seed):
        r = self.cf.check_parabolic_regularity(x, v, w, seed=seed, tol=tol, slack=slack)
        return {"lhs": r.lhs, "rhs": r.rhs, "upper": r.upper, "lower": r.lower,
                "xi_bar": [float(t) for t in r.xi_bar], "n_candidates": r.n_candidates,
                "verdict": r.verdict}

    def oracle_function(self):
        if self.cf.fast_eval is not None:
            return self.cf.fast_eval, True
        return self.cf.f_eval, False

    def oracle_point(self, x):
        return oracle_point(self.cf, x)


class PsdTarget(Target):
    """Indicator of ``S^n_-``; points are symmetric matrices."""

    kind = "psd_cone"
    supports = ("eval", "second_subderivative")

    def __init__(self, n: int):
        self.inst = inst.psd_cone_instance(n)
        self.n = n
        self.dim = n

    def point(self, val, name, line):
        return _matrix(val, self.n, name, line)

    def eval(self, x):
        return self.inst.f_eval(x)

    def second_subderivative(self, x, v, w):
        return self.inst.second_subderivative(x, v, w)

    def oracle(self, op, q, sched):
        return self.inst.oracle_second_subderivative(q.x, q.v, q.w, sched)


def oracle_point(cf: CompositeFunction, x) -> np.ndarray:
    """Base point for the oracle in ``longdouble``.

    Points on the boundary of a q-order cone are rebuilt from their tail so
    that they lie on the boundary as the extended-precision evaluator sees it.
    """
    x = np.asarray(x, dtype=float)
    if cf.route == "qcone":
        q = cf.params["q"]
        x2 = x[1:]
        if np.any(x2) and abs(inst.qnorm_rows(x2[None, :], q)[0] - x[0]) <= 1e-12 * (1 + np.max(np.abs(x))):
            return inst.qcone_boundary_point(x2, q)
    if cf.route == "cone_product":
        return np.concatenate([oracle_point(b, x[s]) for b, s in zip(cf.blocks, cf.slices)])
    return x.astype(np.longdouble)


# ----------------------------------------------------------------------
# instance descriptors

def _scad_params(d) -> inst.ScadParams:
    return inst.ScadParams(_number(d, "lam", 1.0), _number(d, "a", 3.7))


def _mcp_params(d) -> inst.McpParams:
    return inst.McpParams(_number(d, "lam", 1.0), _number(d, "b", 3.0))


def _groups(d) -> GroupStructure:
    groups = _get(d, "groups", list)
    if not groups or not all(isinstance(g, list) and g and all(isinstance(i, int) for i in g)
                             for g in groups):
        raise ProblemError("groups must be a nonempty list of nonempty index lists", _line_of(d))
    return GroupStructure([tuple(g) for g in groups], _number(d, "q", 2.0))


def _poly_tables(d, n: int):
    comps = _get(d, "components", list)
    for c in comps:
        if not isinstance(c, list) or not all(isinstance(t, list) and len(t) == 2 for t in c):
            raise ProblemError("each component is a list of [coef, [exponents]] terms", _line_of(d))
    return comps


def _custom_pwtd(d) -> PwtdFunction:
    dim = int(_number(d, "dim"))
    pieces = []
    for p in _get(d, "pieces", list):
        P = _polyhedron(_get(p, "set", dict), dim)
        poly = Polynomial(_get(p, "poly", list), dim)
        pieces.append((P, SmoothPiece(poly, poly.gradient, poly.hessian)))
    return PwtdFunction(pieces, dim, regular=bool(_get(d, "regular", bool, False)),
                        name=str(_get(d, "name", str, "custom")))


def _outer(d, m: int) -> PwtdFunction:
    kind = _get(d, "kind", str)
    if kind == "indicator":
        return inst.indicator_nonpositive(m)
    if kind == "scad":
        return inst.scad_sum(m, _scad_params(d))
    if kind == "mcp":
        return inst.mcp_sum(m, _mcp_params(d))
    raise ProblemError(f"unknown outer function {kind!r}", _line_of(d))


def build_target(d) -> Target:
    """Instance descriptor to a :class:`Target`."""
    if not isinstance(d, dict):
        raise ProblemError("'instance' must be an object")
    kind = _get(d, "kind", str)
    try:
        if kind == "scad":
            m = int(_number(d, "m", 1))
            return PwtdTarget(inst.scad_sum(m, _scad_params(d)) if m > 1 else inst.scad_scalar(_scad_params(d)))
        if kind == "mcp":
            m = int(_number(d, "m", 1))
            return PwtdTarget(inst.mcp_sum(m, _mcp_params(d)) if m > 1 else inst.mcp_scalar(_mcp_params(d)))
        if kind == "staircase":
            return PwtdTarget(inst.staircase())
        if kind == "pwtd":
            return PwtdTarget(_custom_pwtd(d))
        if kind == "group_scad":
            p = _scad_params(d)
            gs = _groups(d)
            return CompositeTarget(inst.group_scad(gs.groups, gs.q, p.lam, p.a))
        if kind == "group_mcp":
            p = _mcp_params(d)
            gs = _groups(d)
            return CompositeTarget(inst.group_mcp(gs.groups, gs.q, p.lam, p.b))
        if kind == "qcone":
            return CompositeTarget(inst.qcone_indicator(int(_number(d, "n")), _number(d, "q", 2.0)))
        if kind == "cone_product":
            blocks = [inst.qcone_indicator(int(_number(b, "n")), _number(b, "q", 2.0))
                      for b in _get(d, "blocks", list)]
            return CompositeTarget(inst.cone_product(blocks))
        if kind == "smooth_poly_composite":
            n = int(_number(d, "n"))
            tables = _poly_tables(d, n)
            F = polynomial_map(tables, n)
            return CompositeTarget(inst.smooth_composite(_outer(_get(d, "outer", dict), F.dim_out), F))
        if kind == "psd_cone":
            return PsdTarget(int(_number(d, "n")))
    except ProblemError:
        raise
    except (EpidiffError, ValueError, TypeError) as exc:
        raise ProblemError(f"invalid {kind} instance: {exc}", _line_of(d)) from None
    raise ProblemError(f"unknown instance kind {kind!r}", _line_of(d))


# ----------------------------------------------------------------------
# problems and queries

@dataclass
class Query:
    index: int
    op: str
    line: Optional[int]
    of: Optional[str] = None
    x: Any = None
    v: Any = None
    w: Any = None
    z: Any = None
    expect: Optional[float] = None
    label: str = ""

    @property
    def derivative_op(self) -> str:
        return self.of if self.op == "oracle_compare" else self.op


@dataclass
class Problem:
    target: Target
    queries: list
    schedule: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    instance: dict = field(default_factory=dict)


def _query(obj, index: int, target: Target) -> Query:
    line = _line_of(obj)
    if not isinstance(obj, dict):
        raise ProblemError(f"query {index} must be an object")
    op = _get(obj, "op", str)
    if op not in OPS:
        raise ProblemError(f"unknown op {op!r}; expected one of {', '.join(OPS)}", line)
    of = None
    if op == "oracle_compare":
        of = _get(obj, "of", str)
        if of not in ORACLE_OPS:
            raise ProblemError(f"oracle_compare needs 'of' in {', '.join(ORACLE_OPS)}", line)
    needed = REQUIRED[of or op]
    if (of or op) not in target.supports:
        raise ProblemError(f"op {of or op!r} is not available for {target.kind} instances", line)
    if of is not None and isinstance(target, PsdTarget) and of != "second_subderivative":
        raise ProblemError("the PSD cone oracle covers second subderivatives only", line)
    q = Query(index, op, line, of=of, label=str(obj.get("label", "")))
    for name in ("x", "v", "w", "z"):
        if name in obj:
            setattr(q, name, target.point(obj[name], name, line))
        elif name in needed:
            raise ProblemError(f"op {op!r} needs field {name!r}", line)
    if "expect" in obj:
        try:
            q.expect = from_json(obj["expect"])
        except (EpidiffError, TypeError, ValueError):
            raise ProblemError("expect must be a number, '+inf' or '-inf'", line) from None
    return q


def parse(text: str) -> Problem:
    """Parse and validate a problem file."""
    doc = loads(text)
    if not isinstance(doc, dict):
        raise ProblemError("the problem file must contain a JSON object", 1)
    target = build_target(_get(doc, "instance", dict))
    sched = _get(doc, "schedule", dict, {})
    for k in sched:
        if k not in SCHEDULE_KEYS:
            raise ProblemError(f"unknown schedule key {k!r}", _line_of(sched))
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in _get(doc, "tolerances", dict, {}).items():
        if k not in DEFAULT_TOLERANCES or isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ProblemError(f"invalid tolerance {k!r}", _line_of(doc["tolerances"]))
        tol[k] = float(v)
    queries = [_query(obj, i, target) for i, obj in enumerate(_get(doc, "queries", list))]
    return Problem(target, queries, dict(sched), tol, dict(doc["instance"]))


def load(path) -> Problem:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemError(f"cannot read {path}: {exc.strerror}") from None
    return parse(text)


# ----------------------------------------------------------------------
# execution

def _closed(target: Target, op: str, q: Query) -> float:
    if op == "eval":
        return target.eval(q.x)
    if op == "subderivative":
        return target.subderivative(q.x, q.w)
    if op == "second_subderivative":
        return target.second_subderivative(q.x, q.v, q.w)
    return target.parabolic(q.x, q.w, q.z)


def _estimate_record(est: OracleEstimate) -> dict:
    return {"value": est.value, "divergence_flag": est.divergence_flag,
            "trend_negative": est.trend_negative, "trend_positive": est.trend_positive,
            "slope": est.slope,
            "level_minima": list(est.level_minima)}


def run_query(problem: Problem, q: Query, sched: Schedule, with_oracle: bool = False) -> dict:
    """Execute one query; returns a flat report record.

    ``verdict`` is ``None`` for queries without a pass/fail criterion, and
    ``"ERROR"`` when the query violates a precondition.
    """
    target, tol = problem.target, problem.tolerances
    rec = {"index": q.index, "op": q.op, "line": q.line}
    if q.of:
        rec["of"] = q.of
    if q.label:
        rec["label"] = q.label
    t0 = time.perf_counter()
    verdicts = []
    try:
        if q.op == "check_regularity":
            res = target.check_regularity(q.x, q.v, q.w, tol["regularity_tol"],
                                          tol["regularity_slack"], sched.seed)
            rec.update(res)
            rec["value"] = res["rhs"]
            verdicts.append(res["verdict"] == "PASS")
        else:
            op = q.derivative_op
            value = _closed(target, op, q)
            rec["value"] = value
            if q.op == "oracle_compare" or (with_oracle and op in ORACLE_OPS
                                            and op in _oracle_ops(target)):
                est = target.oracle(op, q, sched)
                atol = tol["oracle_atol"] if op == "subderivative" else tol["oracle_atol2"]
                rtol = 0.0 if op == "subderivative" else tol["oracle_rtol"]
                ok = agrees(value, est, atol, rtol)
                rec["oracle"] = _estimate_record(est)
                if est.value is not None and math.isfinite(value) and math.isfinite(est.value):
                    rec["diff"] = abs(value - float(est.value))
                rec["oracle_verdict"] = "PASS" if ok else "FAIL"
                verdicts.append(ok)
        if q.expect is not None:
            v = rec["value"]
            ok = v == q.expect or (math.isfinite(v) and math.isfinite(q.expect)
                                   and abs(v - q.expect) <= tol["expect_atol"] * (1 + abs(q.expect)))
            rec["expect"] = q.expect
            verdicts.append(ok)
        rec["verdict"] = None if not verdicts else ("PASS" if all(verdicts) else "FAIL")
    except EpidiffError as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
        rec["verdict"] = "ERROR"
    rec["time_s"] = time.perf_counter() - t0
    return rec


def _oracle_ops(target: Target) -> tuple:
    return ("second_subderivative",) if isinstance(target, PsdTarget) else ORACLE_OPS


def schedule_for(problem: Problem, overrides: dict | None = None) -> Schedule:
    """Defaults, then the file's schedule block, then explicit overrides."""
    kw = dict(problem.schedule)
    kw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    for k in ("levels", "samples", "seed"):
        if k in kw:
            kw[k] = int(kw[k])
    try:
        return Schedule(**kw)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"invalid schedule: {exc}") from None
