"""Command-line entry point ``lce``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import BACKEND, __version__
from .ensembles import KINDS, EnsembleSpec, SampleMatrix, sample_matrix
from .errors import ConfigError, LceError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--threads", type=int, default=None, help="worker threads; LCE_THREADS overrides")


def _add_matrix_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", help="CSV sample matrix, one column vector per line")
    p.add_argument("--kind", choices=[k for k in KINDS if k not in ("polytope", "anisotropic")], default="gaussian")
    p.add_argument("--dim", "-n", type=int, help="dimension n")
    p.add_argument("--count", "-N", type=int, help="number of vectors N")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lce", description="Log-concave random matrix experiments.")
    parser.add_argument("--version", action="version", version=f"lce {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("sample", help="draw a sample matrix and write it as CSV")
    _add_matrix_source(p)
    _add_common(p)

    p = sub.add_parser("spectrum", help="Gram spectrum, deviation and MP distance")
    _add_matrix_source(p)
    _add_common(p)
    p.add_argument("--eigenvalues-csv", help="also write eigenvalues, one per line")

    p = sub.add_parser("restricted-norm", help="restricted norm A_m")
    _add_matrix_source(p)
    _add_common(p)
    p.add_argument("-m", type=int, required=True, help="support budget m")
    p.add_argument("--mode", choices=["exact", "heuristic"], default="exact")
    p.add_argument("--max-supports", type=int, default=10**6)

    p = sub.add_parser("moment-process", help="sup of the centred p-moment deviation process")
    _add_matrix_source(p)
    _add_common(p)
    p.add_argument("-p", type=float, required=True, help="moment order p >= 1")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--reference-size", type=int, default=10**6)

    p = sub.add_parser("experiment", help="run a configured campaign")
    esub = p.add_subparsers(dest="action", parser_class=_Parser)
    run = esub.add_parser("run", help="run a JSON experiment config")
    run.add_argument("config", help="path to the JSON config")
    _add_common(run)
    run.add_argument("--no-resume", action="store_true", help="overwrite existing records instead of resuming")

    p = sub.add_parser("report", help="summarise a JSONL record file")
    p.add_argument("records", help="JSONL records produced by `experiment run`")
    _add_common(p)
    p.add_argument("--json", dest="json_out", help="also write the JSON summary here")
    return parser


def _matrix(args) -> SampleMatrix:
    if args.input:
        return SampleMatrix.from_csv(args.input)
    if not args.dim or not args.count:
        raise UsageError("either --input or both --dim and --count are required")
    return sample_matrix(EnsembleSpec(args.kind, args.dim), args.count, args.seed)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")


def _cmd_sample(args) -> int:
    M = _matrix(args)
    if args.out:
        M.to_csv(args.out)
    else:
        for col in M.columns:
            sys.stdout.write(",".join(repr(float(v)) for v in col) + "\n")
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    from . import spectral

    M = _matrix(args)
    s = spectral.gram_spectrum(M)
    d = s.to_dict()
    if 0 < s.beta <= 1:
        d["esd_distance"] = spectral.esd_distance(s)
        d["mp_edges"] = list(spectral.mp_edges(s.beta))
    if args.eigenvalues_csv:
        s.eigenvalues_to_csv(args.eigenvalues_csv)
    _emit(json.dumps(d), args.out)
    return EXIT_OK


def _cmd_restricted(args) -> int:
    from .restricted import a_m

    r = a_m(_matrix(args), args.m, args.mode, max_supports=args.max_supports, seed=args.seed)
    _emit(r.to_json(), args.out)
    return EXIT_OK


def _cmd_moment(args) -> int:
    from .processes import p_moment_deviation

    M = _matrix(args)
    r = p_moment_deviation(M, args.p, EnsembleSpec(args.kind, M.n), restarts=args.restarts, seed=args.seed, reference_size=args.reference_size)
    _emit(r.to_json(), args.out)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    from .harness import load_config, run_experiment

    if args.action != "run":
        raise UsageError("usage: lce experiment run <config>")
    cfg = load_config(args.config)
    out = args.out or cfg.output
    if not out:
        raise ConfigError("no output path: set \"output\" in the config or pass --out", line=1)
    records = run_experiment(cfg, threads=args.threads, output=out, resume=not args.no_resume)
    failed = sum(1 for r in records if r.error)
    sys.stderr.write(f"{len(records)} records ({failed} failed trials) in {out}\n")
    return EXIT_OK


def _cmd_report(args) -> int:
    from .harness import read_records, summarize

    path = Path(args.records)
    if not path.exists():
        raise UsageError(f"no such records file: {path}")
    summary = summarize(read_records(path))
    if args.out:
        summary.to_csv(args.out)
    else:
        import csv
        import io

        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=summary.columns(), restval="")
        w.writeheader()
        for row in summary.table():
            w.writerow({k: ("" if v is None else v) for k, v in row.items()})
        sys.stdout.write(buf.getvalue())
    if args.json_out:
        Path(args.json_out).write_text(summary.to_json() + "\n", encoding="utf-8")
    return EXIT_OK


COMMANDS = {
    "sample": _cmd_sample,
    "spectrum": _cmd_spectrum,
    "restricted-norm": _cmd_restricted,
    "moment-process": _cmd_moment,
    "experiment": _cmd_experiment,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(parser.format_usage() + "lce: error: a subcommand is required")
        return COMMANDS[args.command](args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_CONFIG
    except ConfigError as exc:
        where = getattr(exc, "line", None)
        src = getattr(args, "config", None) or "config"
        prefix = f"{src}:{where}: " if where else f"{src}: "
        sys.stderr.write(f"config error: {prefix}{exc}\n")
        return EXIT_CONFIG
    except (LceError, ValueError, OSError, RuntimeError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
