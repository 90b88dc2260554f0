"""Deterministic stepped interpreter for block programs.

One ``vm_step`` is one frame: key hats re-spawn for held keys, then every
live thread runs until it yields. A thread yields at the end of each
Forever/Repeat iteration, at WaitSteps, after a glide increment, and at
script end; straight-line block runs complete within the step. A per-step
budget of 10 000 block executions per thread bounds non-yielding loops:
exceeding it kills the thread with a recorded fault, and the run goes on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import blocks as b
from .rng import Pcg32
from .stage import (
    STAGE_BOTTOM, STAGE_LEFT, STAGE_RIGHT, STAGE_TOP,
    SpriteState, StageState, normalize_direction, sprite_on_edge, sprites_touching,
)

BLOCK_BUDGET = 10_000


@dataclass(frozen=True)
class RuntimeFault:
    step: int
    sprite: str
    script: int
    message: str


class _Fault(Exception):
    def __init__(self, message: str):
        self.message = message


@dataclass
class _Frame:
    body: tuple[b.Block, ...]
    ip: int = 0
    kind: str = "seq"  # seq | forever | repeat
    remaining: int = 0  # repeat iterations left, counted after each pass
    at_loop_end: bool = False


@dataclass
class _Glide:
    start_x: float
    start_y: float
    target_x: float
    target_y: float
    total: int
    done: int = 0


@dataclass
class ThreadState:
    sprite: str
    script_index: int
    frames: list[_Frame]
    wait_remaining: int = 0
    glide: _Glide | None = None
    alive: bool = True


@dataclass
class VmState:
    program: b.Program
    stage: StageState
    threads: dict[tuple[str, int], ThreadState] = field(default_factory=dict)
    faults: list[RuntimeFault] = field(default_factory=list)
    started: bool = False
    halted: bool = False  # set by stop-all; no dispatch or execution afterwards

    def live_thread_count(self) -> int:
        return sum(1 for t in self.threads.values() if t.alive)


def green_flag(program: b.Program, seed: int) -> VmState:
    """Initialize the stage from declarations and spawn green-flag threads."""
    stage = StageState(rng=Pcg32.seeded(seed, stream=1))
    for decl in program.sprites:
        stage.sprites[decl.name] = SpriteState(
            name=decl.name, x=decl.x, y=decl.y, direction=decl.direction,
            width=decl.width, height=decl.height, local_vars=dict(decl.local_vars),
        )
    stage.global_vars = dict(program.globals)
    state = VmState(program=program, stage=stage, started=True)
    for sprite, script_index, script in _script_slots(program):
        if isinstance(script.hat, b.GreenFlagHat):
            state.threads[(sprite, script_index)] = ThreadState(
                sprite=sprite, script_index=script_index,
                frames=[_Frame(body=script.body)],
            )
    return state


def vm_step(state: VmState) -> VmState:
    """Advance exactly one frame; mutates and returns ``state``."""
    if not state.started:
        raise RuntimeError("green_flag must run before vm_step")
    if not state.halted:
        _dispatch_key_hats(state)
        # Threads run in (sprite declaration, script declaration) order, not
        # spawn order, so late key-hat spawns cannot reshuffle the schedule.
        for sprite, script_index, _ in _script_slots(state.program):
            thread = state.threads.get((sprite, script_index))
            if thread is None or not thread.alive:
                continue
            _run_thread(state, thread)
            if state.halted:
                break
        # Dead threads are dropped so key hats can re-spawn next step.
        state.threads = {k: t for k, t in state.threads.items() if t.alive}
    state.stage.step_index += 1
    return state


def _script_slots(program: b.Program):
    for decl in program.sprites:
        for i, script in enumerate(decl.scripts):
            yield decl.name, i, script


def _dispatch_key_hats(state: VmState) -> None:
    for sprite, script_index, script in _script_slots(state.program):
        hat = script.hat
        if not isinstance(hat, b.KeyPressedHat):
            continue
        if hat.key not in state.stage.keys_down:
            continue
        slot = (sprite, script_index)
        if slot in state.threads and state.threads[slot].alive:
            continue
        state.threads[slot] = ThreadState(
            sprite=sprite, script_index=script_index, frames=[_Frame(body=script.body)],
        )


def _run_thread(state: VmState, thread: ThreadState) -> None:
    # Suspended on a wait: burn one step per remaining count.
    if thread.wait_remaining > 0:
        thread.wait_remaining -= 1
        return
    if thread.glide is not None:
        _advance_glide(state, thread)
        return

    budget = BLOCK_BUDGET
    try:
        while thread.frames:
            frame = thread.frames[-1]
            if frame.at_loop_end:
                frame.at_loop_end = False
                if frame.kind == "forever":
                    frame.ip = 0
                elif frame.kind == "repeat":
                    if frame.remaining <= 0:
                        thread.frames.pop()
                        continue
                    frame.ip = 0
            if frame.ip >= len(frame.body):
                if frame.kind == "forever":
                    frame.at_loop_end = True
                    return  # yield at loop end
                if frame.kind == "repeat":
                    frame.remaining -= 1
                    frame.at_loop_end = True
                    return  # yield at loop end
                thread.frames.pop()
                continue

            budget -= 1
            if budget < 0:
                raise _Fault("per-step block budget exceeded")
            block = frame.body[frame.ip]
            frame.ip += 1
            if _execute(state, thread, block):
                return  # yield requested by the block
    except _Fault as fault:
        state.faults.append(RuntimeFault(
            step=state.stage.step_index, sprite=thread.sprite,
            script=thread.script_index, message=fault.message,
        ))
        thread.alive = False
        thread.frames.clear()
        return
    thread.alive = False  # script end


def _execute(state: VmState, thread: ThreadState, block: b.Block) -> bool:
    """Run one block; True means the thread yields for this step."""
    stage = state.stage
    sprite = stage.sprites[thread.sprite]
    num = lambda e: _eval(state, thread, e)

    if isinstance(block, b.Move):
        steps = num(block.steps)
        rad = math.radians(sprite.direction)
        sprite.x += steps * math.sin(rad)
        sprite.y += steps * math.cos(rad)
        return False
    if isinstance(block, b.GlideTo):
        duration = int(num(block.duration))
        tx, ty = num(block.x), num(block.y)
        if duration <= 0:
            sprite.x, sprite.y = tx, ty
            return False
        thread.glide = _Glide(sprite.x, sprite.y, tx, ty, duration)
        _advance_glide(state, thread)
        return True
    if isinstance(block, b.SetX):
        sprite.x = num(block.value)
        return False
    if isinstance(block, b.SetY):
        sprite.y = num(block.value)
        return False
    if isinstance(block, b.ChangeX):
        sprite.x += num(block.by)
        return False
    if isinstance(block, b.ChangeY):
        sprite.y += num(block.by)
        return False
    if isinstance(block, b.GoToXY):
        sprite.x = num(block.x)
        sprite.y = num(block.y)
        return False
    if isinstance(block, b.PointInDirection):
        sprite.set_direction(num(block.degrees))
        return False
    if isinstance(block, b.TurnBy):
        sprite.turn(num(block.degrees))
        return False
    if isinstance(block, b.IfOnEdgeBounce):
        bounce_if_on_edge(sprite)
        return False
    if isinstance(block, b.Forever):
        thread.frames.append(_Frame(body=block.body, kind="forever"))
        return False
    if isinstance(block, b.Repeat):
        times = int(num(block.times))
        if times > 0:
            thread.frames.append(_Frame(body=block.body, kind="repeat", remaining=times))
        return False
    if isinstance(block, b.If):
        if num(block.cond):
            thread.frames.append(_Frame(body=block.then))
        return False
    if isinstance(block, b.IfElse):
        thread.frames.append(_Frame(body=block.then if num(block.cond) else block.orelse))
        return False
    if isinstance(block, b.WaitSteps):
        thread.wait_remaining = max(int(num(block.steps)), 0)
        return True
    if isinstance(block, b.SetVar):
        _store_var(stage, block.var, num(block.value))
        return False
    if isinstance(block, b.ChangeVar):
        _store_var(stage, block.var, _load_var(stage, block.var) + num(block.by))
        return False
    if isinstance(block, b.StopThisScript):
        thread.frames.clear()
        thread.alive = False
        return True
    if isinstance(block, b.StopAll):
        for other in state.threads.values():
            other.alive = False
            other.frames.clear()
        state.halted = True
        return True
    raise AssertionError(f"unhandled block {block!r}")


def _advance_glide(state: VmState, thread: ThreadState) -> None:
    glide = thread.glide
    assert glide is not None
    sprite = state.stage.sprites[thread.sprite]
    glide.done += 1
    t = glide.done / glide.total
    sprite.x = glide.start_x + (glide.target_x - glide.start_x) * t
    sprite.y = glide.start_y + (glide.target_y - glide.start_y) * t
    if glide.done >= glide.total:
        thread.glide = None


def _load_var(stage: StageState, ref: b.GlobalVar | b.LocalVar) -> float:
    if isinstance(ref, b.GlobalVar):
        return stage.global_vars[ref.name]
    return stage.sprites[ref.sprite].local_vars[ref.name]


def _store_var(stage: StageState, ref: b.GlobalVar | b.LocalVar, value: float) -> None:
    if isinstance(ref, b.GlobalVar):
        stage.global_vars[ref.name] = value
    else:
        stage.sprites[ref.sprite].local_vars[ref.name] = value


def _eval(state: VmState, thread: ThreadState, expr: b.Expr):
    stage = state.stage
    if isinstance(expr, b.Literal):
        return expr.value
    if isinstance(expr, (b.GlobalVar, b.LocalVar)):
        return _load_var(stage, expr)
    if isinstance(expr, b.Prop):
        sprite = stage.sprites[expr.sprite]
        return getattr(sprite, expr.prop)
    if isinstance(expr, b.RandomExpr):
        lo = _eval(state, thread, expr.lo)
        hi = _eval(state, thread, expr.hi)
        if lo > hi:
            raise _Fault(f"random bounds inverted: {lo} > {hi}")
        if expr.integer:
            return float(stage.rng.randint(int(lo), int(hi)))
        return stage.rng.uniform(lo, hi)
    if isinstance(expr, b.Arith):
        lhs = _eval(state, thread, expr.lhs)
        rhs = _eval(state, thread, expr.rhs)
        if expr.op == "add":
            return lhs + rhs
        if expr.op == "sub":
            return lhs - rhs
        if expr.op == "mul":
            return lhs * rhs
        if rhs == 0:
            raise _Fault("division by zero")
        return lhs / rhs
    if isinstance(expr, b.Compare):
        lhs = _eval(state, thread, expr.lhs)
        rhs = _eval(state, thread, expr.rhs)
        return {
            "eq": lhs == rhs, "ne": lhs != rhs, "lt": lhs < rhs,
            "le": lhs <= rhs, "gt": lhs > rhs, "ge": lhs >= rhs,
        }[expr.op]
    if isinstance(expr, b.BoolOp):
        lhs = _eval(state, thread, expr.lhs)
        if expr.op == "and":
            return bool(lhs) and bool(_eval(state, thread, expr.rhs))
        return bool(lhs) or bool(_eval(state, thread, expr.rhs))
    if isinstance(expr, b.NotOp):
        return not _eval(state, thread, expr.operand)
    if isinstance(expr, b.Touching):
        return sprites_touching(stage, thread.sprite, expr.other)
    if isinstance(expr, b.TouchingEdge):
        return sprite_on_edge(stage, thread.sprite, "any")
    if isinstance(expr, b.KeyPressed):
        return expr.key in stage.keys_down
    raise AssertionError(f"unhandled expression {expr!r}")


def bounce_if_on_edge(sprite: SpriteState) -> SpriteState:
    """Reflect direction off any stage boundary the bounding box exceeds,
    then translate the minimal distance back inside. Exact edge contact
    counts, matching the closed-interval touching convention."""
    hit_vertical = sprite.left <= STAGE_LEFT or sprite.right >= STAGE_RIGHT
    hit_horizontal = sprite.bottom <= STAGE_BOTTOM or sprite.top >= STAGE_TOP
    if hit_vertical:
        sprite.set_direction(-sprite.direction)
    if hit_horizontal:
        sprite.set_direction(180.0 - sprite.direction)
    if sprite.right > STAGE_RIGHT:
        sprite.x -= sprite.right - STAGE_RIGHT
    if sprite.left < STAGE_LEFT:
        sprite.x += STAGE_LEFT - sprite.left
    if sprite.top > STAGE_TOP:
        sprite.y -= sprite.top - STAGE_TOP
    if sprite.bottom < STAGE_BOTTOM:
        sprite.y += STAGE_BOTTOM - sprite.bottom
    return sprite
