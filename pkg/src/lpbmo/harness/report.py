"""Experiment reports: a row table (rows.csv) and a full JSON document (report.json)."""

from dataclasses import dataclass, field
import csv
import io
import json
import math
from pathlib import Path

ROW_FIELDS = ("experiment", "m", "family", "function", "n", "n2", "s", "alpha", "p", "cube",
              "quantity", "value", "passed")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return "(" + ",".join(str(x) for x in v) + ")"
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return _jsonable(v.item())
    return v


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    rows: list = field(default_factory=list)
    aggregates: dict = field(default_factory=dict)
    validators: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def add_row(self, **cells):
        unknown = set(cells) - set(ROW_FIELDS)
        if unknown:
            raise KeyError(f"unknown row fields {sorted(unknown)}")
        cells.setdefault("experiment", self.experiment)
        self.rows.append({k: cells.get(k) for k in ROW_FIELDS})

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 2

    def to_dict(self) -> dict:
        return _jsonable({
            "experiment": self.experiment,
            "status": "pass" if self.passed else "fail",
            "config": self.config,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "aggregates": self.aggregates,
            "validators": self.validators,
            "rows": self.rows,
            "timings": self.timings,
        })

    def csv_text(self) -> str:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(ROW_FIELDS)
        for row in self.rows:
            writer.writerow([_cell(row[k]) for k in ROW_FIELDS])
        return buf.getvalue()

    def write(self, outdir) -> Path:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        (outdir / "rows.csv").write_bytes(self.csv_text().encode("utf-8"))
        (outdir / "report.json").write_text(
            json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n", encoding="utf-8")
        return outdir
