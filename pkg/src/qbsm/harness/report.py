"""Report assembly and serialisation.

JSON output is byte-deterministic: keys sorted, UTF-8, floats written with
17 significant digits.  Measured numbers are wrapped as
``{"value": x, "exactness": flag}`` with ``flag`` one of :data:`EXACTNESS`.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable

import numpy as np

from .. import __version__

EXACTNESS = ("exact", "exhaustive", "heuristic-lower-bound", "sound-bound", "asymptotic-formula")


def quantity(value, exactness: str) -> dict:
    if exactness not in EXACTNESS:
        raise ValueError(f"unknown exactness flag {exactness!r}")
    return {"value": None if value is None else float(value), "exactness": exactness}


def _float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if not any(c in text for c in ".en"):
        text += ".0"
    return text


def _emit(obj, out: list[str]) -> None:
    if isinstance(obj, dict):
        out.append("{")
        for i, key in enumerate(sorted(obj, key=str)):
            if i:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _emit(obj[key], out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, item in enumerate(obj):
            if i:
                out.append(",")
            _emit(item, out)
        out.append("]")
    elif isinstance(obj, (bool, np.bool_)) or obj is None:
        out.append(json.dumps(None if obj is None else bool(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out)
    elif isinstance(obj, str):
        out.append(json.dumps(obj, ensure_ascii=False))
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON text (no trailing newline)."""
    out: list[str] = []
    _emit(obj, out)
    return "".join(out)


def envelope(kind: str, config: dict, body: dict) -> dict:
    """Common report header: kind, config echo, versions."""
    return {
        "report": kind,
        "config": config,
        "versions": {"qbsm": __version__, "numpy": np.__version__},
        **body,
    }


def check_result_record(result, sound_sides: str) -> dict:
    """Serialise a :class:`~qbsm.theorems.CheckResult` with exactness flags."""
    flag = "exact" if sound_sides.startswith("exact") else "sound-bound"
    return {
        "check_id": result.check_id,
        "index": result.index,
        "status": "pass" if result.passed else "fail",
        "lhs": quantity(result.lhs, flag),
        "rhs": quantity(result.rhs, flag),
        "slack": quantity(result.slack, flag),
        "tolerance": result.tolerance,
        "sound_sides": sound_sides,
        "extra": _tag_extra(result.extra),
    }


def _tag_extra(extra: dict) -> dict:
    out = {}
    for key, val in extra.items():
        if isinstance(val, (float, np.floating)):
            out[key] = quantity(val, "sound-bound" if key.startswith("p_hi") else "exact")
        elif isinstance(val, (list, tuple)) and val and all(isinstance(v, (float, np.floating)) for v in val):
            out[key] = [quantity(v, "sound-bound" if key.startswith("p_hi") else "exact") for v in val]
        else:
            out[key] = val
    return out


def summarise(records: Iterable[dict]) -> dict:
    """Per-check counts of passed, failed and rejected cases, plus worst slack."""
    summary: dict[str, dict] = {}
    for rec in records:
        s = summary.setdefault(rec["check_id"], {"pass": 0, "fail": 0, "rejected": 0, "min_slack": None})
        s[rec["status"] if rec["status"] != "rejected" else "rejected"] += 1
        if rec["status"] != "rejected":
            slack = rec["slack"]["value"]
            s["min_slack"] = slack if s["min_slack"] is None else min(s["min_slack"], slack)
    return summary


SUMMARY_FIELDS = ("check_id", "pass", "fail", "rejected", "min_slack")


def summary_csv(summary: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for cid in sorted(summary):
        s = summary[cid]
        w.writerow([cid, s["pass"], s["fail"], s["rejected"],
                    "" if s["min_slack"] is None else format(s["min_slack"], ".17g")])
    return buf.getvalue()


def rows_csv(rows: list[dict], columns: list[str]) -> str:
    """Flat table; quantities contribute ``col`` and ``col_exactness`` columns."""
    header = []
    for col in columns:
        header.append(col)
        if any(isinstance(r.get(col), dict) and "exactness" in r[col] for r in rows):
            header.append(f"{col}_exactness")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        line = []
        for col in header:
            if col.endswith("_exactness") and col[: -len("_exactness")] in columns:
                val = r.get(col[: -len("_exactness")])
                line.append(val["exactness"] if isinstance(val, dict) else "")
                continue
            val = r.get(col)
            if isinstance(val, dict) and "value" in val:
                val = val["value"]
            if isinstance(val, float):
                val = format(val, ".17g")
            line.append("" if val is None else val)
        w.writerow(line)
    return buf.getvalue()


def merge_check_reports(reports: list[dict]) -> dict:
    """Combine check reports into one, ordered by ``(check_id, seed, index)``.

    Identical duplicate records are kept once; conflicting duplicates raise.
    """
    seen: dict[tuple, dict] = {}
    sources = []
    for rep in reports:
        if rep.get("report") != "check":
            raise ValueError("report-merge only combines check reports")
        seed = rep["config"].get("seed")
        sources.append(rep["config"])
        for rec in rep["results"]:
            key = (rec["check_id"], -1 if seed is None else seed, rec["index"])
            if key in seen and dumps(seen[key]) != dumps(rec):
                raise ValueError(f"conflicting results for {key}")
            seen[key] = dict(rec, seed=seed)
    records = [seen[k] for k in sorted(seen)]
    return {"report": "check-merged", "sources": sources, "results": records,
            "summary": summarise(records), "versions": {"qbsm": __version__, "numpy": np.__version__}}
