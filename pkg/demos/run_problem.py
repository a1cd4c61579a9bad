"""
=============================
Running a problem file
=============================

Problem files describe an instance and a list of queries. This script runs
the shipped q-cone problem through the command-line front end, writes a
JSON-lines report and reads it back.
"""
import tempfile
from pathlib import Path

from epidiff import report
from epidiff.cli import main

problem = Path(__file__).resolve().parent.parent / "problems" / "qcone.json"
with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "report.jsonl"
    code = main(["run", str(problem), "--oracle", "--out", str(out)])
    print("exit code:", code)
    records = report.read(out)

summary = records[-1]
print({k: summary[k] for k in ("pass", "fail", "error") if k in summary})
for rec in records:
    if rec["record"] == "query" and "oracle" in rec:
        print(rec["op"], rec.get("label", ""), rec["value"], rec["oracle"]["value"])
