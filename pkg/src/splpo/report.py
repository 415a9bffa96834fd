"""Run reports: per-instance result rows with CSV and JSON round-trips."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class ReportRow:
    prob: str
    algorithm: str
    status: str
    best_ub: float | None = None
    lower_bound: float | None = None
    opt: float | None = None
    gap_abs: float | None = None
    gap_pct: float | None = None
    y_count: int | None = None
    iterations: int | None = None
    best_iteration: int | None = None
    time_s: float | None = None
    total_time_s: float | None = None
    seed: int | None = None
    config_hash: str = ""


_FLOAT_FIELDS = {"best_ub", "lower_bound", "opt", "gap_abs", "gap_pct", "time_s", "total_time_s"}
_INT_FIELDS = {"y_count", "iterations", "best_iteration", "seed"}


def gap_fields(best_ub: float | None, opt: float | None) -> tuple[float | None, float | None]:
    """Absolute and relative (percent) gap of an upper bound against an optimum."""
    if best_ub is None or opt is None:
        return None, None
    gap = best_ub - opt
    pct = 100.0 * gap / opt if opt != 0 else (0.0 if gap == 0 else math.inf)
    return gap, pct


def config_hash(payload: dict) -> str:
    """Short stable hash of an effective-configuration mapping."""
    canon = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


@dataclass
class RunReport:
    rows: list

    def to_csv(self) -> str:
        names = [f.name for f in fields(ReportRow)]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            rec = asdict(row)
            writer.writerow({k: ("" if v is None else v) for k, v in rec.items()})
        return buf.getvalue()

    @staticmethod
    def from_csv(text: str) -> "RunReport":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            kwargs = {}
            for key, raw in rec.items():
                if raw == "" or raw is None:
                    kwargs[key] = None
                elif key in _FLOAT_FIELDS:
                    kwargs[key] = float(raw)
                elif key in _INT_FIELDS:
                    kwargs[key] = int(raw)
                else:
                    kwargs[key] = raw
            if kwargs.get("config_hash") is None:
                kwargs["config_hash"] = ""
            rows.append(ReportRow(**kwargs))
        return RunReport(rows=rows)

    def to_json(self) -> str:
        return json.dumps([asdict(r) for r in self.rows], indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "RunReport":
        return RunReport(rows=[ReportRow(**rec) for rec in json.loads(text)])


def trace_to_csv(rows) -> str:
    """Render a list of trace-row dataclasses (any flavour) as CSV text."""
    if not rows:
        return ""
    names = [f.name for f in fields(rows[0])]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=names, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(asdict(row))
    return buf.getvalue()


def ada_result_json(result, prob: str = "", opt: float | None = None) -> str:
    """Full pipeline result as a JSON document (1-based facility ids)."""
    gap_abs, gap_pct = gap_fields(result.best_ub, opt)
    best = result.best_solution
    doc = {
        "prob": prob,
        "best_ub": result.best_ub,
        "lb_sg": result.lb_sg,
        "lb_da": None if math.isinf(result.lb_da) else result.lb_da,
        "best_lb": None if math.isinf(result.best_lb) else result.best_lb,
        "gap_abs": gap_abs,
        "gap_pct": gap_pct,
        "solution": {
            "open": [j + 1 for j in sorted(best.open_facilities)],
            "assign": [int(j) + 1 for j in best.assign],
            "provenance": best.provenance,
        },
        "sg": {"status": result.sg.status, "iterations": result.sg.iterations,
               "best_iteration": result.sg.best_iteration},
        "da": {"status": result.da_status,
               "values": [row.value for row in result.da_trace]},
        "vfh_rounds": [
            {"objective": s.objective, "provenance": s.provenance}
            for s in result.vfh_solutions
        ],
        "timings": result.timings,
        "stages_completed": result.stages_completed,
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def ada_table_row(prob: str, result, opt: float | None = None) -> dict:
    """Summary row for a pipeline result with the benchmark-table header set."""
    gap_abs, gap_pct = gap_fields(result.best_ub, opt)
    total = sum(result.timings.values())
    return {
        "Prob": prob,
        "Optimal?": (gap_abs is not None and abs(gap_abs) <= 1e-9) or None,
        "bestUB": result.best_ub,
        "LB": result.best_lb,
        "y_j": len(result.best_solution.open_facilities),
        "t": round(result.timings.get("vfh", 0.0) + result.timings.get("da", 0.0), 3),
        "Tt": round(total, 3),
        "GAP_o%": gap_pct,
    }


__all__ = [
    "ReportRow",
    "RunReport",
    "ada_result_json",
    "ada_table_row",
    "config_hash",
    "gap_fields",
    "trace_to_csv",
]
