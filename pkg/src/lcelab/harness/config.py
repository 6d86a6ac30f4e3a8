"""Experiment configuration files (JSON) and their validation."""
from __future__ import annotations

import hashlib
import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..ensembles import EnsembleSpec
from ..errors import ConfigError, LceError

TOP_LEVEL_KEYS = {"experiment", "ensemble", "grid", "trials", "master_seed", "output", "options"}


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    experiment: str
    ensemble: EnsembleSpec
    grid: tuple
    trials: int
    master_seed: int
    output: str | None = None
    options: dict = field(default_factory=dict)

    def points(self) -> list[dict]:
        return [dict(p) for p in self.grid]

    def to_dict(self) -> dict[str, Any]:
        return {
            "experiment": self.experiment,
            "ensemble": self.ensemble.to_dict(),
            "grid": self.points(),
            "trials": self.trials,
            "master_seed": self.master_seed,
            "output": self.output,
            "options": dict(self.options),
        }


def seed_from_token(token) -> int:
    """Integers pass through; any other token is hashed to 64 bits."""
    if isinstance(token, bool):
        raise ConfigError("master_seed must be an integer or a string")
    if isinstance(token, int):
        return token
    if isinstance(token, str):
        if re.fullmatch(r"-?\d+", token.strip()):
            return int(token)
        return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest(), "little")
    raise ConfigError("master_seed must be an integer or a string")


def expand_grid(grid) -> list[dict]:
    """A list of points, or a mapping of axis -> values expanded as a product."""
    if isinstance(grid, dict):
        axes = sorted(grid)
        values = []
        for a in axes:
            v = grid[a]
            values.append(v if isinstance(v, list) else [v])
        return [dict(zip(axes, combo)) for combo in itertools.product(*values)]
    if isinstance(grid, list):
        if not all(isinstance(p, dict) for p in grid):
            raise ConfigError("grid list entries must be objects")
        return [dict(p) for p in grid]
    raise ConfigError("grid must be an object of axes or a list of points")


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def parse_config(text: str, base_dir: str | Path | None = None) -> ExperimentConfig:
    from .experiments import EXPERIMENTS

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", line=1)
    unknown = sorted(set(raw) - TOP_LEVEL_KEYS)
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}", line=_line_of(text, unknown[0]))
    for key in ("experiment", "grid", "trials", "master_seed"):
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}", line=1)

    name = raw["experiment"]
    if name not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {name!r}", line=_line_of(text, "experiment"))
    exp = EXPERIMENTS[name]

    trials = raw["trials"]
    if not isinstance(trials, int) or isinstance(trials, bool) or trials < 1:
        raise ConfigError("trials must be a positive integer", line=_line_of(text, "trials"))

    try:
        seed = seed_from_token(raw["master_seed"])
    except ConfigError as exc:
        raise ConfigError(str(exc), line=_line_of(text, "master_seed")) from None

    ens = raw.get("ensemble", {"kind": exp.default_kind})
    if isinstance(ens, str):
        ens = {"kind": ens}
    try:
        ens = dict(ens)
        ens.setdefault("dim", 1)
        spec = EnsembleSpec.from_dict(ens)
    except (LceError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid ensemble: {exc}", line=_line_of(text, "ensemble")) from None

    grid_line = _line_of(text, "grid")
    try:
        points = expand_grid(raw["grid"])
    except ConfigError as exc:
        raise ConfigError(str(exc), line=grid_line) from None
    if not points:
        raise ConfigError("grid is empty", line=grid_line)

    options = raw.get("options", {}) or {}
    if not isinstance(options, dict):
        raise ConfigError("options must be an object", line=_line_of(text, "options"))
    for pt in points:
        problem = exp.check_point(pt, spec, options)
        if problem:
            raise ConfigError(f"grid point {json.dumps(pt, sort_keys=True)}: {problem}", line=grid_line)

    output = raw.get("output")
    if output is not None and base_dir is not None and not Path(output).is_absolute():
        output = str(Path(base_dir) / output)
    return ExperimentConfig(name, spec, tuple(points), trials, seed, output, options)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}") from None
    return parse_config(text, base_dir=path.parent)
