"""``vexp`` command line: norms, modulars, dual norms, verification, filters.

Exit codes: 0 success, 1 property failure, 2 config or I/O error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import sys
from pathlib import Path

from . import besov, duality, lebesgue, mixed, verify
from .errors import InputError, NumericalError
from .exponents import check_normability
from .io import RunConfig, load_config, read_grid_function, read_sequence, write_table

EXIT_OK, EXIT_FAILED, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SAMPLES = 20


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        if args.seed < 0:
            raise InputError("seed must be non-negative")
        cfg.seed = args.seed
    return cfg


def _input(args, cfg: RunConfig) -> Path:
    path = Path(args.input) if args.input else cfg.input
    if path is None:
        raise InputError("no input file given (use --input or the config's 'input')")
    if not path.exists():
        raise InputError(f"no such input file: {path}")
    return path


def _emit(report: dict, out: str | None):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _tag(p, q) -> str:
    return check_normability(p, q).tag.value


def cmd_norm(args) -> int:
    cfg = _config(args)
    path = _input(args, cfg)
    p = cfg.exponent("p")
    if args.space == "lp":
        f = read_grid_function(path, cfg.grid)
        r = lebesgue.luxemburg_norm(p, f, cfg.inner_tol)
        tag = None
    else:
        q = cfg.exponent("q")
        tag = _tag(p, q)
        if args.space == "mixed":
            r = mixed.mixed_norm(p, q, read_sequence(path, cfg.grid), cfg.outer_tol, cfg.inner_tol)
        else:
            f = read_grid_function(path, cfg.grid)
            filters = besov.build_filter_pair(cfg.grid, args.shape)
            r = besov.besov_norm(f, cfg.exponent("s"), p, q, filters, cfg.outer_tol, cfg.inner_tol)
    _emit({"space": args.space, "value": r.value, "tolerance": r.tolerance,
           "iterations": r.iterations, "condition_tag": tag}, args.out)
    return EXIT_OK


def cmd_modular(args) -> int:
    cfg = _config(args)
    f = read_sequence(_input(args, cfg), cfg.grid)
    p, q = cfg.exponent("p"), cfg.exponent("q")
    if args.form == "p1":
        b = mixed.mixed_modular_p1(p, q, f, cfg.inner_tol)
        report = {"value": b.total, "per_term": list(b.per_term), "iterations": b.iterations}
    else:
        report = {"value": mixed.mixed_modular_p1a(p, q, f, cfg.inner_tol)}
    report.update(form=args.form, tolerance=cfg.inner_tol)
    _emit(report, args.out)
    return EXIT_OK


def cmd_dual(args) -> int:
    cfg = _config(args)
    g = read_sequence(_input(args, cfg), cfg.grid)
    p, q = cfg.exponent("p"), cfg.exponent("q")
    r = duality.kothe_dual_norm(p, q, g, args.method, cfg.outer_tol)
    report = r.to_dict()
    report.update(space="dual", tolerance=cfg.outer_tol, condition_tag=_tag(p, q))
    _emit(report, args.out)
    return EXIT_OK


def _csv_text(header, rows) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def cmd_verify(args) -> int:
    cfg = _config(args)
    suites = args.suite or cfg.suite
    results = verify.run(suites, cfg.seed, args.samples)
    text = _csv_text(verify.HEADER, [r.row() for r in results])
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    failed = [f"{r.suite}/{r.property}" for r in results if not r.passed]
    for name in failed:
        print(f"FAILED {name}", file=sys.stderr)
    return EXIT_FAILED if failed else EXIT_OK


def cmd_filters(args) -> int:
    cfg = _config(args)
    header, rows = besov.build_filter_pair(cfg.grid, args.shape).to_rows()
    if args.out:
        write_table(args.out, header, rows)
    else:
        sys.stdout.write(_csv_text(header, rows))
    return EXIT_OK


def _common(p: argparse.ArgumentParser, data=True):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    if data:
        p.add_argument("--input", metavar="PATH", help="CSV data file (or directory of term CSVs)")
    p.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vexp", description="Variable-exponent norm toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="Luxemburg, mixed or Besov norm of a data file")
    p.add_argument("space", choices=["lp", "mixed", "besov"])
    p.add_argument("--shape", choices=besov.SHAPES, default="smooth", help="filter bump (besov)")
    _common(p)
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("modular", help="mixed modular, per-term or quotient form")
    p.add_argument("form", choices=["p1", "p1a"])
    _common(p)
    p.set_defaults(func=cmd_modular)

    p = sub.add_parser("dual", help="Köthe dual norm of a sequence")
    p.add_argument("--method", choices=[m.value for m in duality.Method], default="ascent")
    _common(p)
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("verify", help="run the randomized property suites")
    p.add_argument("--suite", action="append", metavar="NAME",
                   help="suite to run (repeatable): " + ", ".join(verify.SUITES + ("all",)))
    p.add_argument("--seed", type=int, help="master seed (overrides the config)")
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                   help=f"instances per property (default {DEFAULT_SAMPLES})")
    _common(p, data=False)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("filters", help="filter bank utilities")
    p.add_argument("action", choices=["export"])
    p.add_argument("--shape", choices=besov.SHAPES, default="smooth")
    _common(p, data=False)
    p.set_defaults(func=cmd_filters)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"vexp: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"vexp: I/O error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"vexp: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
