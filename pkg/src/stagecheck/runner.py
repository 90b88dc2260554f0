"""Run-matrix orchestration: programs x seeds x input series, aggregated.

Each run is fully independent (own interpreter state, own monitor), so the
matrix can execute sequentially or across processes with identical output;
reports are assembled in canonical (program, series, seed) order either
way. Verdict aggregation across runs lives in one function
(``aggregate_verdict``): a rubric item counts as satisfied for a program
when at least one run satisfies it, since input series are complementary
rather than interchangeable.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import dsl
from .errors import ConfigError
from .harness import (
    VERDICT_FAILED, VERDICT_NOT_DEMONSTRATED, VERDICT_SATISFIED,
    Tally, finalize, harness_step, init_harness, observe_initial,
    force_active, take_injected_keys,
)
from .loader import load_program_file
from .stage import KEY_IDS
from .vm import RuntimeFault, green_flag, vm_step

VERDICTS = (VERDICT_SATISFIED, VERDICT_FAILED, VERDICT_NOT_DEMONSTRATED)


@dataclass(frozen=True)
class InputEvent:
    step: int
    key: str
    press: str  # down | up


@dataclass(frozen=True)
class TimedInputScript:
    events: tuple[InputEvent, ...] = ()


@dataclass(frozen=True)
class InputSeries:
    """One input stream for a run: either a timed key script or a set of
    suite-embedded trigger ids activated for this series only. ``claimed``
    holds every trigger id claimed by any series in the config; claimed
    triggers not selected by this series are forced inactive."""

    name: str
    script: TimedInputScript | None = None
    trigger_ids: tuple[str, ...] = ()
    claimed: tuple[str, ...] = ()

    def all_claimed(self) -> tuple[str, ...]:
        return self.claimed if self.claimed else self.trigger_ids


@dataclass(frozen=True)
class TestResult:
    succ: int
    fail: int
    rate: float
    verdict: str


@dataclass(frozen=True)
class RunReport:
    program: str
    seed: int
    series: str
    steps: int
    tests: dict[str, TestResult]
    faults: tuple[RuntimeFault, ...] = ()


@dataclass(frozen=True)
class AggregateResult:
    verdict: str
    best_rate: float | None
    best_run: str  # "series/seed<N>" of the best run, "" when never reported
    best: TestResult | None


@dataclass(frozen=True)
class MatrixReport:
    programs: tuple[str, ...]
    seeds: tuple[int, ...]
    series_names: tuple[str, ...]
    test_ids: tuple[str, ...]
    max_steps: int
    threshold: float
    runs: tuple[RunReport, ...]
    aggregate: dict[str, dict[str, AggregateResult]]  # program -> test -> result


@dataclass
class RunConfig:
    program_paths: list[str | Path]
    suite_path: str | Path
    input_series: list[InputSeries]
    seeds: list[int]
    max_steps: int = 3000
    threshold: float = 0.1
    report_csv: Path | None = None
    report_json: Path | None = None
    report_figure: Path | None = None


def load_input_script(path: str | Path) -> TimedInputScript:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load input script {path}: {exc}") from exc
    if not isinstance(doc, list):
        raise ConfigError(f"{path}: input script must be a JSON list")
    events = []
    last_step = 0
    for i, raw in enumerate(doc):
        loc = f"{path}[{i}]"
        if not isinstance(raw, dict) or raw.keys() != {"step", "key", "press"}:
            raise ConfigError(f'{loc}: expected {{"step", "key", "press"}}')
        step, key, press = raw["step"], raw["key"], raw["press"]
        if not isinstance(step, int) or step < 0:
            raise ConfigError(f"{loc}: step must be a non-negative integer")
        if step < last_step:
            raise ConfigError(f"{loc}: steps must be non-decreasing")
        if key not in KEY_IDS:
            raise ConfigError(f"{loc}: unknown key {key!r}")
        if press not in ("down", "up"):
            raise ConfigError(f"{loc}: press must be 'down' or 'up'")
        events.append(InputEvent(step, key, press))
        last_step = step
    return TimedInputScript(tuple(events))


def run_single(
    program,
    suite: list[dsl.TriggerDef],
    series: InputSeries,
    seed: int,
    max_steps: int,
    threshold: float,
    program_id: str = "program",
) -> RunReport:
    """Execute one run: green flag, then max_steps frames of strict
    vm_step / harness_step alternation, then verdicts."""
    diagnostics = dsl.validate_suite(suite, program)
    if diagnostics:
        raise ConfigError(
            "suite does not validate against program "
            f"{program_id!r}: {'; '.join(str(d) for d in diagnostics)}")
    known_ids = {t.id for t in suite}
    for trigger_id in (*series.trigger_ids, *series.claimed):
        if trigger_id not in known_ids:
            raise ConfigError(
                f"input series {series.name!r} names unknown trigger {trigger_id!r}")

    state = green_flag(program, seed)
    h = init_harness(suite, seed=seed)
    force_active(h, set(series.all_claimed()) - set(series.trigger_ids), active=False)
    force_active(h, series.trigger_ids, active=True)
    observe_initial(h, state.stage)

    events = list(series.script.events) if series.script else []
    next_event = 0
    held_timed: set[str] = set()
    for _ in range(max_steps):
        now = state.stage.step_index
        while next_event < len(events) and events[next_event].step <= now:
            event = events[next_event]
            if event.press == "down":
                held_timed.add(event.key)
            else:
                held_timed.discard(event.key)
            next_event += 1
        state.stage.keys_down = held_timed | take_injected_keys(h)
        vm_step(state)
        harness_step(h, state.stage)

    verdicts = finalize(h.tally, threshold)
    tests = {
        test_id: TestResult(
            succ=tally.succ, fail=tally.fail, rate=tally.rate, verdict=verdicts[test_id],
        )
        for test_id, tally in h.tally.items()
    }
    return RunReport(
        program=program_id, seed=seed, series=series.name, steps=max_steps,
        tests=tests, faults=tuple(state.faults),
    )


def aggregate_verdict(verdicts: list[str]) -> str:
    """Across runs: satisfied if any run satisfied; otherwise failed if any
    run reported at all; otherwise never demonstrated."""
    if VERDICT_SATISFIED in verdicts:
        return VERDICT_SATISFIED
    if VERDICT_FAILED in verdicts:
        return VERDICT_FAILED
    return VERDICT_NOT_DEMONSTRATED


def _run_one(spec):
    program, program_id, suite, series, seed, max_steps, threshold = spec
    return run_single(program, suite, series, seed, max_steps, threshold,
                      program_id=program_id)


def run_matrix(config: RunConfig, jobs: int = 1) -> MatrixReport:
    if not config.seeds:
        raise ConfigError("at least one seed is required")
    if not config.input_series:
        raise ConfigError("at least one input series is required")
    if not config.program_paths:
        raise ConfigError("at least one program is required")
    if config.max_steps <= 0:
        raise ConfigError("max_steps must be > 0")
    if not 0.0 <= config.threshold <= 1.0:
        raise ConfigError("threshold must be within [0, 1]")

    programs = []
    for path in config.program_paths:
        path = Path(path)
        program_id = path.stem
        if any(pid == program_id for pid, _ in programs):
            raise ConfigError(f"duplicate program id {program_id!r}; rename the file")
        programs.append((program_id, load_program_file(path)))

    suite_text = Path(config.suite_path).read_text(encoding="utf-8")
    suite = dsl.parse_suite(suite_text)

    claimed = tuple(dict.fromkeys(
        tid for series in config.input_series for tid in series.trigger_ids))
    series_list = [
        InputSeries(name=s.name, script=s.script, trigger_ids=s.trigger_ids,
                    claimed=claimed)
        for s in config.input_series
    ]

    specs = [
        (program, program_id, suite, series, seed, config.max_steps, config.threshold)
        for program_id, program in programs
        for series in series_list
        for seed in config.seeds
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            runs = tuple(pool.map(_run_one, specs))
    else:
        runs = tuple(_run_one(spec) for spec in specs)

    test_ids = dsl.suite_test_ids(suite)
    aggregate: dict[str, dict[str, AggregateResult]] = {}
    for program_id, _ in programs:
        program_runs = [r for r in runs if r.program == program_id]
        per_test: dict[str, AggregateResult] = {}
        for test_id in test_ids:
            results = [(r, r.tests[test_id]) for r in program_runs]
            verdict = aggregate_verdict([t.verdict for _, t in results])
            reported = [(r, t) for r, t in results if t.succ + t.fail > 0]
            if reported:
                best_run, best = max(reported, key=lambda rt: rt[1].rate)
                per_test[test_id] = AggregateResult(
                    verdict=verdict, best_rate=best.rate,
                    best_run=f"{best_run.series}/seed{best_run.seed}", best=best)
            else:
                per_test[test_id] = AggregateResult(
                    verdict=verdict, best_rate=None, best_run="", best=None)
        aggregate[program_id] = per_test

    return MatrixReport(
        programs=tuple(pid for pid, _ in programs),
        seeds=tuple(config.seeds),
        series_names=tuple(s.name for s in series_list),
        test_ids=test_ids,
        max_steps=config.max_steps,
        threshold=config.threshold,
        runs=runs,
        aggregate=aggregate,
    )


def all_required_satisfied(matrix: MatrixReport, required: tuple[str, ...] = ()) -> bool:
    wanted = required or matrix.test_ids
    return all(
        matrix.aggregate[program][test_id].verdict == VERDICT_SATISFIED
        for program in matrix.programs
        for test_id in wanted
    )


# -- serialization -------------------------------------------------------------

def render_csv(matrix: MatrixReport) -> str:
    """One row per (program, test id). Counts and rate come from the best
    run; the verdict is the aggregate. Byte-stable for identical input."""
    lines = ["program,test_id,succ,fail,rate,verdict,best_run"]
    for program in matrix.programs:
        for test_id in matrix.test_ids:
            agg = matrix.aggregate[program][test_id]
            if agg.best is not None:
                succ, fail = agg.best.succ, agg.best.fail
                rate = f"{agg.best.rate:.6f}"
            else:
                succ = fail = 0
                rate = ""
            lines.append(
                f"{program},{test_id},{succ},{fail},{rate},{agg.verdict},{agg.best_run}")
    return "\n".join(lines) + "\n"


def render_json(matrix: MatrixReport) -> str:
    """Full per-run breakdown, canonically ordered."""
    doc = {
        "programs": list(matrix.programs),
        "seeds": list(matrix.seeds),
        "input_series": list(matrix.series_names),
        "max_steps": matrix.max_steps,
        "threshold": matrix.threshold,
        "aggregate": {
            program: {
                test_id: {
                    "verdict": agg.verdict,
                    "best_rate": agg.best_rate,
                    "best_run": agg.best_run,
                }
                for test_id, agg in matrix.aggregate[program].items()
            }
            for program in matrix.programs
        },
        "runs": [
            {
                "program": run.program,
                "series": run.series,
                "seed": run.seed,
                "steps": run.steps,
                "tests": {
                    test_id: {
                        "succ": result.succ,
                        "fail": result.fail,
                        "rate": result.rate,
                        "verdict": result.verdict,
                    }
                    for test_id, result in run.tests.items()
                },
                "faults": [
                    {"step": f.step, "sprite": f.sprite, "script": f.script,
                     "message": f.message}
                    for f in run.faults
                ],
            }
            for run in matrix.runs
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def emit_reports(
    matrix: MatrixReport,
    csv_path: str | Path | None = None,
    json_path: str | Path | None = None,
    figure_path: str | Path | None = None,
) -> list[Path]:
    """Write the requested report files; returns the paths written."""
    written = []
    try:
        if csv_path is not None:
            Path(csv_path).write_text(render_csv(matrix), encoding="utf-8")
            written.append(Path(csv_path))
        if json_path is not None:
            Path(json_path).write_text(render_json(matrix), encoding="utf-8")
            written.append(Path(json_path))
        if figure_path is not None:
            from .report import render_matrix_figure

            render_matrix_figure(matrix, figure_path)
            written.append(Path(figure_path))
    except OSError as exc:
        raise ConfigError(f"cannot write report: {exc}") from exc
    return written
