"""Line-delimited records, comma-separated summaries, and aggregation.

Record files are byte-deterministic for a fixed configuration: JSON objects
with sorted keys, one per line.  Wall-clock timings are volatile by nature and
therefore go to a separate ``timings.txt`` sidecar that is excluded from the
determinism contract.
"""

from __future__ import annotations

import csv
import io
import json
import os

from .errors import ConfigError


def record_lines(records) -> str:
    return "".join(json.dumps(rec, sort_keys=True, default=str) + "\n" for rec in records)


def write_outputs(out_dir: str, name: str, records, summary_rows, timings) -> dict[str, str]:
    """Write records, summary and timing sidecar; returns the file map."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "records": os.path.join(out_dir, f"{name}.records.jsonl"),
        "summary": os.path.join(out_dir, f"{name}.summary.csv"),
        "timings": os.path.join(out_dir, f"{name}.timings.txt"),
    }
    with open(paths["records"], "w") as fh:
        fh.write(record_lines(records))
    with open(paths["summary"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["suite", "q", "depth", "cases", "failures", "detail"])
        for row in summary_rows:
            writer.writerow(row)
    with open(paths["timings"], "w") as fh:
        for label, ms in timings:
            fh.write(f"{label}\t{ms:.3f} ms\n")
    return paths


def summary_row(result, q="", depth="") -> list:
    detail = ";".join(
        f"{k}={v}" for k, v in sorted(result.extra.items())
        if k not in ("q", "depth") and not k.endswith("wall_ms")
    )
    q = result.extra.get("q", q)
    depth = result.extra.get("depth", depth)
    return [result.suite, q, depth, result.cases, result.failures, detail]


def read_records(path: str) -> list[dict]:
    if not os.path.exists(path):
        raise ConfigError(f"record file not found: {path}")
    records = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def aggregate_report(paths) -> str:
    """One table keyed by (suite, q, depth) from any number of record files."""
    rows: dict[tuple, dict] = {}
    for path in paths:
        for rec in read_records(path):
            if rec.get("record") != "summary":
                continue
            key = (rec.get("suite", ""), str(rec.get("q", "")), str(rec.get("depth", "")))
            slot = rows.setdefault(key, {"cases": 0, "failures": 0})
            slot["cases"] += int(rec.get("cases", 0))
            slot["failures"] += int(rec.get("failures", 0))
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["suite", "q", "depth", "cases", "failures"])
    for key in sorted(rows):
        writer.writerow([*key, rows[key]["cases"], rows[key]["failures"]])
    return buffer.getvalue()
