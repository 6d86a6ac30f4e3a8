"""Per-grid-point summaries of trial records, written as CSV and JSON."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import bounds
from ..errors import LceError, PreconditionError
from .experiments import EXPERIMENTS
from .runner import TrialRecord, canonical_point

QUANTILES = (0.05, 0.5, 0.95)


@dataclass
class PointSummary:
    point: dict
    trials: int
    errors: int
    stats: dict
    failure_frequency: float | None = None
    failure_se: float | None = None
    fitted_constant: float | None = None
    envelope: float | None = None


@dataclass
class ReportSummary:
    experiment: str
    rows: list
    fitted: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, "rows": [asdict(r) for r in self.rows], "fitted": self.fitted}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def columns(self) -> list[str]:
        keys = sorted({k for r in self.rows for k in r.point})
        stat_names = sorted({k for r in self.rows for k in r.stats})
        cols = keys + ["trials", "errors", "failure_frequency", "failure_se", "fitted_constant", "envelope"]
        for s in stat_names:
            cols += [f"{s}_mean", f"{s}_q05", f"{s}_q50", f"{s}_q95"]
        return cols

    def table(self) -> list[dict]:
        out = []
        for r in self.rows:
            row = dict(r.point)
            row.update(
                trials=r.trials,
                errors=r.errors,
                failure_frequency=r.failure_frequency,
                failure_se=r.failure_se,
                fitted_constant=r.fitted_constant,
                envelope=r.envelope,
            )
            for s, v in r.stats.items():
                row[f"{s}_mean"] = v["mean"]
                row[f"{s}_q05"], row[f"{s}_q50"], row[f"{s}_q95"] = v["q05"], v["q50"], v["q95"]
            out.append(row)
        return out

    def to_csv(self, path) -> None:
        cols = self.columns()
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, restval="", quoting=csv.QUOTE_MINIMAL)
            w.writeheader()
            for row in self.table():
                w.writerow({k: ("" if v is None else v) for k, v in row.items()})


def _as_record(r) -> TrialRecord:
    return r if isinstance(r, TrialRecord) else TrialRecord.from_dict(r)


def _stat_summary(values: list[float]) -> dict:
    a = np.asarray(values, dtype=float)
    q = np.quantile(a, QUANTILES)
    return {"mean": float(a.mean()), "q05": float(q[0]), "q50": float(q[1]), "q95": float(q[2]), "count": int(a.size)}


def _fit(records, bound_id):
    try:
        return bounds.calibrate(records, bound_id).constant
    except (LceError, ValueError):
        return None


def summarize(records) -> ReportSummary:
    """Mean, 5/50/95 quantiles, failure frequency and fitted constants per grid point."""
    records = [_as_record(r) for r in records]
    if not records:
        raise PreconditionError("no records to summarize")
    names = {r.experiment for r in records}
    if len(names) != 1:
        raise PreconditionError(f"mixed experiment ids: {', '.join(sorted(names))}")
    name = names.pop()
    exp = EXPERIMENTS.get(name)
    groups: dict[str, list[TrialRecord]] = {}
    for r in sorted(records, key=lambda r: r.sort_key):
        groups.setdefault(canonical_point(r.point), []).append(r)
    rows = []
    for key, recs in groups.items():
        ok = [r for r in recs if not r.error]
        stat_names = sorted({k for r in ok for k, v in r.stats.items() if v is not None})
        stats = {
            s: _stat_summary([r.stats[s] for r in ok if r.stats.get(s) is not None and not math.isnan(r.stats[s])])
            for s in stat_names
        }
        row = PointSummary(dict(recs[0].point), len(recs), len(recs) - len(ok), stats)
        fail_key = exp.failure if exp else None
        if fail_key and ok:
            f = float(np.mean([r.stats.get(fail_key, 0.0) for r in ok]))
            row.failure_frequency = f
            row.failure_se = math.sqrt(f * (1.0 - f) / len(ok))
        if exp and exp.bound:
            row.fitted_constant = _fit(ok, exp.bound)
        if exp and exp.statistic in stats:
            row.envelope = stats[exp.statistic]["q95"]
        rows.append(row)
    fitted = {}
    if exp and exp.bound:
        overall = _fit([r for r in records if not r.error], exp.bound)
        if overall is not None:
            fitted[exp.bound] = overall
    return ReportSummary(name, rows, fitted)
