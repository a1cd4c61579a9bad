"""Command-line front end.

::

    epidiff run PROBLEM.json [--out REPORT.jsonl] [--oracle] [--seed N]
                [--tau0 F] [--ratio F] [--levels N] [--samples N]
                [--radius-factor F] [--tol F]
    epidiff selftest [--filter NAME] [--seed N]

Exit codes: 0 when every verdict-bearing query passes, 1 when any fails,
2 on input errors (unreadable or malformed problem files, or queries whose
data violate a precondition).
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__, report
from .extreal import fmt
from .problem import ProblemError, load, run_query, schedule_for

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _positive_float(s: str) -> float:
    x = float(s)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="epidiff",
        description="Closed-form subderivatives of composite penalties, checked against "
                    "finite-difference epi-limit oracles.")
    ap.add_argument("--version", action="version", version=f"epidiff {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate the queries of a problem file")
    run.add_argument("problem", help="problem file (JSON)")
    run.add_argument("--out", metavar="PATH", help="write a line-delimited JSON report")
    run.add_argument("--oracle", action="store_true",
                     help="compare every derivative query against the oracle")
    run.add_argument("--seed", type=int, help="seed for the oracle and the regularity sampler")
    run.add_argument("--tau0", type=_positive_float, help="initial oracle step")
    run.add_argument("--ratio", type=float, help="geometric step ratio in (0, 1)")
    run.add_argument("--levels", type=int, help="number of oracle levels")
    run.add_argument("--samples", type=int, help="samples per oracle level")
    run.add_argument("--radius-factor", type=float, dest="radius_factor",
                     help="neighbourhood radius as a multiple of the step")
    run.add_argument("--tol", type=_positive_float,
                     help="absolute tolerance for oracle comparisons (overrides the file)")
    run.add_argument("--filter", metavar="NAME", help="only run queries whose op or label contains NAME")

    st = sub.add_parser("selftest", help="run the built-in golden battery and property suites")
    st.add_argument("--filter", metavar="NAME", help="suite name (e.g. pwtd) or check-name substring")
    st.add_argument("--seed", type=int, default=42)
    return ap


def _pretty(rec: dict) -> str:
    op = rec["op"] + (f"[{rec['of']}]" if "of" in rec else "")
    head = f"#{rec['index']:<3} {op:<34}"
    if "error" in rec:
        return f"{head} ERROR  {rec['error']}"
    parts = [f"value={fmt(rec['value'])}"]
    if "lhs" in rec:
        parts.append(f"lhs={fmt(rec['lhs'])} rhs={fmt(rec['rhs'])}")
    if "oracle" in rec:
        o = rec["oracle"]
        if o["trend_negative"]:
            est = "-inf trend"
        elif o["divergence_flag"]:
            est = "+inf"
        else:
            est = fmt(o["value"]) + (" (+inf trend)" if o["trend_positive"] else "")
        parts.append(f"oracle={est}")
        if "diff" in rec:
            parts.append(f"|diff|={rec['diff']:.2e}")
    if "expect" in rec:
        parts.append(f"expect={fmt(rec['expect'])}")
    verdict = rec["verdict"] or "-"
    return f"{head} {verdict:<5}  " + "  ".join(parts)


def cmd_run(args) -> int:
    try:
        problem = load(args.problem)
        overrides = {k: getattr(args, k) for k in ("tau0", "ratio", "levels", "samples",
                                                   "radius_factor", "seed")}
        sched = schedule_for(problem, overrides)
    except ProblemError as exc:
        print(f"epidiff: {args.problem}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.tol is not None:
        problem.tolerances["oracle_atol"] = args.tol
        problem.tolerances["oracle_atol2"] = args.tol
    queries = problem.queries
    if args.filter:
        f = args.filter.lower()
        queries = [q for q in queries if f in q.op or f in (q.of or "") or f in q.label.lower()]

    print(f"instance: {problem.instance.get('kind')}  queries: {len(queries)}  seed: {sched.seed}")
    t0 = time.perf_counter()
    records = []
    for q in queries:
        rec = run_query(problem, q, sched, with_oracle=args.oracle)
        records.append(rec)
        print(_pretty(rec))
    counts = {k: sum(r["verdict"] == k for r in records) for k in ("PASS", "FAIL", "ERROR")}
    code = EXIT_INPUT if counts["ERROR"] else (EXIT_FAIL if counts["FAIL"] else EXIT_PASS)
    print(f"summary: {counts['PASS']} pass, {counts['FAIL']} fail, {counts['ERROR']} error  "
          f"({time.perf_counter() - t0:.2f} s)")
    for r in records:
        if "error" in r:
            print(f"epidiff: {args.problem}: line {r['line']}: {r['error']}", file=sys.stderr)

    if args.out:
        header = {"record": "header", "version": __version__, "problem": args.problem,
                  "instance": problem.instance, "schedule": vars(sched),
                  "tolerances": problem.tolerances, "oracle": bool(args.oracle)}
        summary = {"record": "summary", **{k.lower(): v for k, v in counts.items()}, "exit_code": code}
        report.write(args.out, [header] + [{"record": "query", **r} for r in records] + [summary])
    return code


def cmd_selftest(args) -> int:
    from . import selftest

    results = selftest.run(args.filter, args.seed)
    if not results:
        print(f"epidiff: no checks match {args.filter!r}", file=sys.stderr)
        return EXIT_INPUT
    for r in results:
        line = f"{'PASS' if r.passed else 'FAIL'}  {r.suite:<11} {r.name}"
        print(line if r.passed else f"{line}  ({r.detail})")
    failed = sum(not r.passed for r in results)
    print(f"selftest: {len(results) - failed}/{len(results)} passed (seed {args.seed})")
    return EXIT_FAIL if failed else EXIT_PASS


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    return cmd_selftest(args)


if __name__ == "__main__":
    sys.exit(main())
