"""Campaign execution with per-trial seeds and incremental JSON-lines persistence."""
from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..rng import derive_seed
from .config import ExperimentConfig
from .experiments import EXPERIMENTS

THREADS_ENV = "LCE_THREADS"


def canonical_point(point: dict) -> str:
    return json.dumps(point, sort_keys=True, separators=(",", ":"))


def trial_seed(master_seed: int, point: dict, trial: int) -> int:
    return derive_seed(master_seed, point, trial)


@dataclass
class TrialRecord:
    experiment: str
    point: dict
    trial: int
    seed: int
    stats: dict
    wall_time: float = field(default=0.0, compare=False)
    error: str | None = None

    @property
    def sort_key(self) -> tuple:
        return (canonical_point(self.point), self.trial)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, allow_nan=True)

    @classmethod
    def from_dict(cls, d: dict) -> TrialRecord:
        return cls(d["experiment"], d["point"], int(d["trial"]), int(d["seed"]), d.get("stats", {}), d.get("wall_time", 0.0), d.get("error"))

    @classmethod
    def from_json(cls, line: str) -> TrialRecord:
        return cls.from_dict(json.loads(line))


def resolve_threads(requested: int | None = None) -> int:
    """Worker count: LCE_THREADS wins over the argument, default 1."""
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    return max(1, int(requested or 1))


def read_records(path) -> list[TrialRecord]:
    """Load records, ignoring a torn final line left by an interrupted run."""
    path = Path(path)
    if not path.exists():
        return []
    records = []
    lines = path.read_text(encoding="utf-8").splitlines()
    for k, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            records.append(TrialRecord.from_json(line))
        except (json.JSONDecodeError, KeyError):
            if k == len(lines) - 1:
                break
            raise
    return records


def _repair_tail(path: Path) -> None:
    # drop a partial last line so appends start on a fresh line
    if not path.exists() or path.stat().st_size == 0:
        return
    data = path.read_bytes()
    if data.endswith(b"\n"):
        return
    cut = data.rfind(b"\n")
    with open(path, "r+b") as fh:
        fh.truncate(cut + 1 if cut >= 0 else 0)


def run_trial(config: ExperimentConfig, point: dict, trial: int) -> TrialRecord:
    seed = trial_seed(config.master_seed, point, trial)
    exp = EXPERIMENTS[config.experiment]
    start = time.perf_counter()
    try:
        stats = exp.trial(point, config.ensemble, seed, config.options)
        stats = {k: (None if v is None else float(v)) for k, v in stats.items()}
        error = None
    except Exception as exc:  # recorded, never fatal to the campaign
        stats, error = {}, f"{type(exc).__name__}: {exc}"
    return TrialRecord(config.experiment, dict(point), trial, seed, stats, time.perf_counter() - start, error)


def run_experiment(config: ExperimentConfig, threads: int | None = None, output=None, resume: bool = True) -> list[TrialRecord]:
    """Run every (grid point, trial) job and return all records in canonical order.

    Records are appended to the JSON-lines output as they complete. With
    ``resume`` an existing file is read first and its jobs are skipped.
    """
    out = output if output is not None else config.output
    path = Path(out) if out else None
    done: dict[tuple, TrialRecord] = {}
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        if resume:
            _repair_tail(path)
            for rec in read_records(path):
                if rec.experiment == config.experiment:
                    done[rec.sort_key] = rec
        else:
            path.write_text("", encoding="utf-8")
    jobs = [
        (pt, k)
        for pt in config.points()
        for k in range(config.trials)
        if (canonical_point(pt), k) not in done
    ]
    results = list(done.values())
    fh = open(path, "a", encoding="utf-8") if path is not None else None
    try:
        workers = resolve_threads(threads)
        if workers == 1:
            for pt, k in jobs:
                rec = run_trial(config, pt, k)
                results.append(rec)
                if fh:
                    fh.write(rec.to_json() + "\n")
                    fh.flush()
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(run_trial, config, pt, k) for pt, k in jobs]
                for fut in as_completed(futures):
                    rec = fut.result()
                    results.append(rec)
                    if fh:
                        fh.write(rec.to_json() + "\n")
                        fh.flush()
    finally:
        if fh:
            fh.close()
    return sorted(results, key=lambda r: r.sort_key)
