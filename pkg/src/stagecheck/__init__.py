"""stagecheck: property testing for sprite-based interactive programs.

A deterministic stepped sprite runtime, a Condition-Action trigger
language for behavioral checks, and a run-matrix harness that grades
programs by satisfaction rates.
"""

from .dsl import TriggerDef, parse_suite, pretty_print, pretty_print_suite, validate_suite
from .harness import (
    HarnessState, evaluate_condition, finalize, harness_step, init_harness,
)
from .loader import load_program, load_program_file
from .runner import (
    InputSeries, MatrixReport, RunConfig, RunReport, TimedInputScript,
    emit_reports, run_matrix, run_single,
)
from .stage import (
    PropRef, SavedSnapshot, SpriteState, StageState, VarRef,
    capture_snapshot, get_property, sprite_on_edge, sprites_touching,
)
from .vm import VmState, bounce_if_on_edge, green_flag, vm_step

__version__ = "0.1.0"

__all__ = [
    "TriggerDef", "parse_suite", "pretty_print", "pretty_print_suite", "validate_suite",
    "HarnessState", "evaluate_condition", "finalize", "harness_step", "init_harness",
    "load_program", "load_program_file",
    "InputSeries", "MatrixReport", "RunConfig", "RunReport", "TimedInputScript",
    "emit_reports", "run_matrix", "run_single",
    "PropRef", "SavedSnapshot", "SpriteState", "StageState", "VarRef",
    "capture_snapshot", "get_property", "sprite_on_edge", "sprites_touching",
    "VmState", "bounce_if_on_edge", "green_flag", "vm_step",
    "__version__",
]
