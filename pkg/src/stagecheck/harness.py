"""Runtime monitor: evaluates triggers against the stage after every frame.

Strict alternation with the interpreter: one ``harness_step`` per
``vm_step``, fed the post-step stage. Each call, in order:

1. activation changes queued by the previous step's AddTrigger /
   RemoveTrigger take effect (removal also cancels pending checks);
2. every pending check counts down; those reaching zero resolve by running
   their trigger's actions, SAVED operands reading the arming snapshot;
3. each active trigger's WHEN conjunction is evaluated; a trigger arms on
   true (debounce: only on a false-to-true edge), captures its snapshot,
   and enqueues a check; a zero-delay check resolves immediately;
4. previous-step values and edge state update for the next call.

Reports tally immediately; key injections max-merge into the held-keys
map; trigger set changes wait one step. The monitor itself draws
randomness from its own generator so that a suite without Input actions
can never perturb the program under test.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import dsl
from .rng import Pcg32
from .stage import (
    PropRef, SavedSnapshot, StageState, VarRef, capture_snapshot,
    get_property, get_variable, ref_key, sprite_on_edge, sprites_touching,
)

VERDICT_SATISFIED = "satisfied"
VERDICT_FAILED = "failed"
VERDICT_NOT_DEMONSTRATED = "not-demonstrated"


@dataclass(frozen=True)
class Effect:
    """One observable action emitted during a harness step."""

    kind: str  # report | input | add | remove
    trigger: str
    test_id: str = ""
    outcome: str = ""
    key: str = ""
    duration: int = 0
    target: str = ""


@dataclass
class PendingCheck:
    trigger: str
    remaining: int
    snapshot: SavedSnapshot


@dataclass
class Tally:
    succ: int = 0
    fail: int = 0

    @property
    def total(self) -> int:
        return self.succ + self.fail

    @property
    def rate(self) -> float:
        return self.succ / self.total if self.total else 0.0


@dataclass
class HarnessState:
    suite: list[dsl.TriggerDef]
    active: set[str]
    tally: dict[str, Tally]
    rng: Pcg32
    by_id: dict[str, dsl.TriggerDef] = field(default_factory=dict)
    pending: list[PendingCheck] = field(default_factory=list)
    last_when: dict[str, bool] = field(default_factory=dict)
    injected: dict[str, int] = field(default_factory=dict)
    prev_values: dict[tuple, float] | None = None  # None until first step observed
    queued_adds: list[str] = field(default_factory=list)
    queued_removes: list[str] = field(default_factory=list)
    when_saved_refs: tuple = ()


def init_harness(suite: list[dsl.TriggerDef], seed: int = 0) -> HarnessState:
    """Build the monitor for a validated suite.

    Initially active: triggers with add-on-start, plus triggers never named
    by any AddTrigger action. AddTrigger targets wait to be added.
    ``seed`` feeds the monitor's own RNG (Random-True/False draws).
    """
    add_targets = dsl.add_trigger_targets(suite)
    active = {
        t.id for t in suite if t.add_on_start or t.id not in add_targets
    }
    tally = {test_id: Tally() for test_id in dsl.suite_test_ids(suite)}
    return HarnessState(
        suite=list(suite),
        active=active,
        tally=tally,
        rng=Pcg32.seeded(seed, stream=2),
        by_id={t.id: t for t in suite},
        last_when={t.id: False for t in suite},
        when_saved_refs=dsl.saved_refs_in_conditions(suite),
    )


def observe_initial(h: HarnessState, stage: StageState) -> None:
    """Record the pre-first-step stage so one-step-ago references resolve
    correctly on the very first harness step. Optional: without it, the
    first step falls back to current values."""
    h.prev_values = _current_values(h, stage)


def force_active(h: HarnessState, trigger_ids, active: bool) -> None:
    """Override initial activation (the runner uses this to switch
    suite-embedded input triggers per input series)."""
    for trigger_id in trigger_ids:
        if trigger_id not in h.by_id:
            raise KeyError(f"unknown trigger id {trigger_id!r}")
        if active:
            h.active.add(trigger_id)
        else:
            h.active.discard(trigger_id)


def evaluate_condition(
    cond: dsl.Condition,
    stage: StageState,
    saved: SavedSnapshot | dict | None,
    rng: Pcg32,
) -> bool:
    """Pure except RandomCoin, which consumes one draw from ``rng``.
    ``saved`` resolves SAVED operands: the arming snapshot inside actions,
    the previous-step value map inside WHEN conditions."""
    if isinstance(cond, dsl.AlwaysCond):
        return True
    if isinstance(cond, dsl.RandomCoin):
        return rng.coin()
    if isinstance(cond, dsl.IsTouch):
        return sprites_touching(stage, cond.a, cond.b)
    if isinstance(cond, dsl.SpriteOnEdgeCond):
        return sprite_on_edge(stage, cond.sprite, cond.side)
    if isinstance(cond, dsl.KeyDown):
        return cond.key in stage.keys_down
    if isinstance(cond, (dsl.PropCompare, dsl.VarCompare)):
        lhs = _resolve_operand(cond.lhs, stage, saved)
        rhs = _resolve_operand(cond.rhs, stage, saved)
        op = cond.op
        if op == "=":
            return lhs == rhs
        if op == "!=":
            return lhs != rhs
        if op == "<":
            return lhs < rhs
        if op == "<=":
            return lhs <= rhs
        if op == ">":
            return lhs > rhs
        return lhs >= rhs
    raise AssertionError(f"unhandled condition {cond!r}")


def _resolve_operand(operand, stage: StageState, saved) -> float:
    if isinstance(operand, PropRef):
        if operand.saved:
            value = _lookup_saved(saved, operand)
            if value is not None:
                return value
        return get_property(stage, operand.sprite, operand.prop)
    if isinstance(operand, VarRef):
        if operand.saved:
            value = _lookup_saved(saved, operand)
            if value is not None:
                return value
        return get_variable(stage, operand.name)
    return operand


def _lookup_saved(saved, ref) -> float | None:
    if saved is None:
        return None
    if isinstance(saved, SavedSnapshot):
        return saved.entries.get(ref_key(ref))
    return saved.get(ref_key(ref))


def _current_values(h: HarnessState, stage: StageState) -> dict[tuple, float]:
    values: dict[tuple, float] = {}
    for ref in h.when_saved_refs:
        if isinstance(ref, PropRef):
            values[ref_key(ref)] = get_property(stage, ref.sprite, ref.prop)
        else:
            values[ref_key(ref)] = get_variable(stage, ref.name)
    return values


def harness_step(h: HarnessState, stage: StageState) -> tuple[HarnessState, list[Effect]]:
    """Process one post-step stage; mutates and returns ``h`` plus the
    effects emitted this step, in emission order."""
    effects: list[Effect] = []

    # 1) queued activation changes from the previous step
    for trigger_id in h.queued_adds:
        h.active.add(trigger_id)
        h.last_when[trigger_id] = False  # debounce edges restart on re-add
    for trigger_id in h.queued_removes:
        h.active.discard(trigger_id)
        h.pending = [p for p in h.pending if p.trigger != trigger_id]
    h.queued_adds.clear()
    h.queued_removes.clear()

    # 2) countdowns; checks hitting zero resolve in arming order
    due: list[PendingCheck] = []
    still_pending: list[PendingCheck] = []
    for check in h.pending:
        check.remaining -= 1
        (due if check.remaining <= 0 else still_pending).append(check)
    h.pending = still_pending
    for check in due:
        trigger = h.by_id[check.trigger]
        _run_actions(h, trigger, check.snapshot, stage, effects)
        if trigger.one_shot:
            _deactivate(h, trigger.id)

    # 3) WHEN evaluation in suite order
    for trigger in h.suite:
        if trigger.id not in h.active:
            continue
        value = all(
            evaluate_condition(cond, stage, h.prev_values, h.rng)
            for cond in trigger.conditions
        )
        if value and not (trigger.debounce and h.last_when[trigger.id]):
            snapshot = capture_snapshot(stage, dsl.saved_refs_in_actions(trigger))
            if trigger.delay_steps == 0:
                _run_actions(h, trigger, snapshot, stage, effects)
                if trigger.one_shot:
                    _deactivate(h, trigger.id)
            else:
                h.pending.append(PendingCheck(trigger.id, trigger.delay_steps, snapshot))
        h.last_when[trigger.id] = value

    # 4) previous-step values for WHEN-side SAVED operands
    h.prev_values = _current_values(h, stage)
    return h, effects


def _deactivate(h: HarnessState, trigger_id: str) -> None:
    h.active.discard(trigger_id)
    h.pending = [p for p in h.pending if p.trigger != trigger_id]


def _run_actions(
    h: HarnessState,
    trigger: dsl.TriggerDef,
    snapshot: SavedSnapshot,
    stage: StageState,
    effects: list[Effect],
) -> None:
    for action in trigger.actions:
        if isinstance(action, dsl.DoAction):
            item = action.item
        else:
            branch = evaluate_condition(action.cond, stage, snapshot, h.rng)
            item = action.then_item if branch else action.else_item
        _apply_item(h, trigger, item, effects)


def _apply_item(h: HarnessState, trigger: dsl.TriggerDef, item: dsl.ActionItem,
                effects: list[Effect]) -> None:
    if isinstance(item, dsl.NothingItem):
        return
    if isinstance(item, dsl.ReportItem):
        tally = h.tally.setdefault(item.test_id, Tally())
        if item.outcome == "SUCC":
            tally.succ += 1
        else:
            tally.fail += 1
        effects.append(Effect("report", trigger.id, test_id=item.test_id,
                              outcome=item.outcome))
        return
    if isinstance(item, dsl.InputKeyItem):
        h.injected[item.key] = max(h.injected.get(item.key, 0), item.duration)
        effects.append(Effect("input", trigger.id, key=item.key,
                              duration=item.duration))
        return
    if isinstance(item, dsl.AddTriggerItem):
        h.queued_adds.append(item.trigger_id)
        effects.append(Effect("add", trigger.id, target=item.trigger_id))
        return
    if isinstance(item, dsl.RemoveTriggerItem):
        h.queued_removes.append(item.trigger_id)
        effects.append(Effect("remove", trigger.id, target=item.trigger_id))
        return
    raise AssertionError(f"unhandled action item {item!r}")


def take_injected_keys(h: HarnessState) -> set[str]:
    """Keys held by injection for the upcoming frame; consumes one step of
    each injection's remaining duration."""
    held = set()
    for key in list(h.injected):
        held.add(key)
        h.injected[key] -= 1
        if h.injected[key] <= 0:
            del h.injected[key]
    return held


def finalize(tally: dict[str, Tally], threshold: float) -> dict[str, str]:
    """Verdict per test id: satisfied iff rate >= threshold (a rate exactly
    at the threshold passes); failed below it; not-demonstrated when the
    test never reported."""
    verdicts = {}
    for test_id, counts in tally.items():
        if counts.total == 0:
            verdicts[test_id] = VERDICT_NOT_DEMONSTRATED
        elif counts.rate >= threshold:
            verdicts[test_id] = VERDICT_SATISFIED
        else:
            verdicts[test_id] = VERDICT_FAILED
    return verdicts
