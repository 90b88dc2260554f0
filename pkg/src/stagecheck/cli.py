"""Command-line interface.

    stagecheck run    execute a program x seed x input-series matrix and
                      write CSV/JSON reports (plus a PNG heatmap next to
                      the CSV unless --no-figure)
    stagecheck check  validate a suite against a program
    stagecheck fmt    parse a suite and print its canonical form

Exit codes: 0 all required tests satisfied (or check/fmt clean),
1 a required test failed or was not demonstrated (or check found
diagnostics), 2 configuration or parse error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import dsl
from .errors import ConfigError, DslParseError, ProgramLoadError, StageCheckError
from .loader import load_program_file
from .runner import (
    InputSeries, RunConfig, all_required_satisfied, emit_reports,
    load_input_script, run_matrix,
)


def _parse_series(spec: str) -> InputSeries:
    name, sep, rest = spec.partition("=")
    if not sep or not name or not rest:
        raise ConfigError(
            f"bad --inputs value {spec!r}; expected name=path or name=triggers:id,id")
    if rest.startswith("triggers:"):
        ids = tuple(t for t in rest[len("triggers:"):].split(",") if t)
        if not ids:
            raise ConfigError(f"input series {name!r} lists no trigger ids")
        return InputSeries(name=name, trigger_ids=ids)
    return InputSeries(name=name, script=load_input_script(rest))


def _parse_seeds(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s]
    except ValueError as exc:
        raise ConfigError(f"bad --seeds value {text!r}: {exc}") from exc


def _cmd_run(args) -> int:
    series = [_parse_series(spec) for spec in args.inputs]
    config = RunConfig(
        program_paths=args.program,
        suite_path=args.suite,
        input_series=series,
        seeds=_parse_seeds(args.seeds),
        max_steps=args.max_steps,
        threshold=args.threshold,
    )
    matrix = run_matrix(config, jobs=args.jobs)

    figure_path = args.report_png
    if figure_path is None and args.report_csv is not None and not args.no_figure:
        figure_path = Path(args.report_csv).with_suffix(".png")
    written = emit_reports(
        matrix,
        csv_path=args.report_csv,
        json_path=args.report_json,
        figure_path=figure_path,
    )
    for path in written:
        print(f"wrote {path}")

    required = tuple(args.require.split(",")) if args.require else ()
    for test_id in required:
        if test_id not in matrix.test_ids:
            raise ConfigError(f"--require names unknown test id {test_id!r}")
    ok = all_required_satisfied(matrix, required)
    for program in matrix.programs:
        for test_id in matrix.test_ids:
            agg = matrix.aggregate[program][test_id]
            print(f"{program}: {test_id}: {agg.verdict}")
    return 0 if ok else 1


def _cmd_check(args) -> int:
    program = load_program_file(args.program)
    suite = dsl.parse_suite(Path(args.suite).read_text(encoding="utf-8"))
    diagnostics = dsl.validate_suite(suite, program)
    for diag in diagnostics:
        print(diag, file=sys.stderr)
    if diagnostics:
        return 1
    print(f"ok: {len(suite)} triggers validate against {args.program}")
    return 0


def _cmd_fmt(args) -> int:
    suite = dsl.parse_suite(Path(args.suite).read_text(encoding="utf-8"))
    sys.stdout.write(dsl.pretty_print_suite(suite))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stagecheck", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a run matrix and write reports")
    run.add_argument("--program", action="append", required=True,
                     help="program file; repeat for several programs")
    run.add_argument("--suite", required=True, help="trigger suite file")
    run.add_argument("--inputs", action="append", required=True,
                     help="input series: name=script.json or name=triggers:id,id")
    run.add_argument("--seeds", default="1,2,3", help="comma-separated integer seeds")
    run.add_argument("--max-steps", type=int, default=3000)
    run.add_argument("--threshold", type=float, default=0.1)
    run.add_argument("--report-csv", type=Path, default=None)
    run.add_argument("--report-json", type=Path, default=None)
    run.add_argument("--report-png", type=Path, default=None,
                     help="heatmap path (default: next to the CSV)")
    run.add_argument("--no-figure", action="store_true",
                     help="do not render the heatmap alongside the CSV")
    run.add_argument("--jobs", type=int, default=1,
                     help="worker processes for the matrix (default 1)")
    run.add_argument("--require", default="",
                     help="comma-separated test ids that must be satisfied "
                          "(default: all)")
    run.set_defaults(func=_cmd_run)

    check = sub.add_parser("check", help="validate a suite against a program")
    check.add_argument("--suite", required=True)
    check.add_argument("--program", required=True)
    check.set_defaults(func=_cmd_check)

    fmt = sub.add_parser("fmt", help="print a suite in canonical form")
    fmt.add_argument("--suite", required=True)
    fmt.set_defaults(func=_cmd_fmt)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DslParseError, ProgramLoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except StageCheckError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
