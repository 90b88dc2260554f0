"""The Condition-Action trigger language.

Suites are UTF-8 text; ``#`` starts a line comment; keywords are
case-sensitive. The normative grammar ships as ``grammar.ebnf`` next to
this module. Parsing is a hand-rolled recursive descent over a regex
lexer; every rejection carries line, column, and the expected token set.

A trigger arms when all of its WHEN conditions hold in one step, then
checks and runs its actions after a fixed step delay. SAVED operands name
the value captured when the trigger armed (inside actions) or the value
one step earlier (inside WHEN conditions).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import DslParseError, DuplicateTriggerIdError
from .stage import EDGE_SIDES, KEY_IDS, PROPERTIES, PropRef, VarRef, ref_key

COMPARE_OPS = ("=", "!=", "<", "<=", ">", ">=")

KEYWORDS = frozenset({
    "TRIGGER", "WHEN", "AFTER", "STEPS", "THEN", "DO", "IF", "ELSE",
    "OF", "SAVED", "FOR", "Report", "SUCC", "FAIL", "Input", "Key",
    "AddTrigger", "RemoveTrigger", "Nothing", "isTouch", "spriteOnEdge",
    "keyDown", "Always", "Random-True/False",
    "debounce", "one-shot", "add-on-start",
})

FLAG_WORDS = ("debounce", "one-shot", "add-on-start")


# -- AST ----------------------------------------------------------------------

Operand = Union[float, PropRef, VarRef]  # float is a literal number


@dataclass(frozen=True)
class AlwaysCond:
    pass


@dataclass(frozen=True)
class PropCompare:
    lhs: Operand
    op: str
    rhs: Operand


@dataclass(frozen=True)
class IsTouch:
    a: str
    b: str


@dataclass(frozen=True)
class SpriteOnEdgeCond:
    sprite: str
    side: str


@dataclass(frozen=True)
class KeyDown:
    key: str


@dataclass(frozen=True)
class VarCompare:
    lhs: Operand
    op: str
    rhs: Operand


@dataclass(frozen=True)
class RandomCoin:
    pass


Condition = Union[
    AlwaysCond, PropCompare, IsTouch, SpriteOnEdgeCond, KeyDown, VarCompare, RandomCoin
]


@dataclass(frozen=True)
class NothingItem:
    pass


@dataclass(frozen=True)
class ReportItem:
    test_id: str
    outcome: str  # SUCC | FAIL


@dataclass(frozen=True)
class InputKeyItem:
    key: str
    duration: int = 1


@dataclass(frozen=True)
class AddTriggerItem:
    trigger_id: str


@dataclass(frozen=True)
class RemoveTriggerItem:
    trigger_id: str


ActionItem = Union[NothingItem, ReportItem, InputKeyItem, AddTriggerItem, RemoveTriggerItem]


@dataclass(frozen=True)
class DoAction:
    item: ActionItem


@dataclass(frozen=True)
class IfAction:
    cond: Condition
    then_item: ActionItem
    else_item: ActionItem


Action = Union[DoAction, IfAction]


@dataclass(frozen=True)
class TriggerDef:
    id: str
    conditions: tuple[Condition, ...]
    delay_steps: int
    actions: tuple[Action, ...]
    debounce: bool = False
    one_shot: bool = False
    add_on_start: bool = False
    line: int = 0


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # error | warning
    message: str
    trigger_id: str
    line: int

    def __str__(self):
        return f"{self.severity}: trigger {self.trigger_id!r} (line {self.line}): {self.message}"


# -- lexer --------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r\n]+)
    | (?P<comment>\#[^\n]*)
    | (?P<coin>Random-True/False)
    | (?P<op>!=|<=|>=|=|<|>)
    | (?P<number>-?[0-9]+(?:\.[0-9]+)?)
    | (?P<id>[A-Za-z_][A-Za-z0-9_]*(?:-[A-Za-z0-9_]+)*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # id | number | op | coin | eof
    value: str
    line: int
    column: int


def _lex(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DslParseError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, value, line, m.start() - line_start + 1))
        line += value.count("\n")
        if "\n" in value:
            line_start = m.start() + value.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, len(text) - line_start + 1))
    return tokens


# -- parser -------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.tokens = _lex(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, expected: tuple[str, ...] = ()) -> DslParseError:
        tok = self.peek()
        return DslParseError(message, tok.line, tok.column, expected)

    def expect_word(self, word: str) -> _Token:
        tok = self.peek()
        if tok.kind == "id" and tok.value == word:
            return self.next()
        raise self.error(f"got {tok.value!r}" if tok.value else "unexpected end of input",
                         expected=(word,))

    def expect_identifier(self, what: str) -> _Token:
        tok = self.peek()
        if tok.kind != "id":
            raise self.error(f"{what} expected, got {tok.value!r}", expected=(what,))
        if tok.value in KEYWORDS:
            raise self.error(f"{what} expected, but {tok.value!r} is a reserved word",
                             expected=(what,))
        return self.next()

    def expect_key(self) -> str:
        tok = self.peek()
        if tok.kind == "id" and tok.value in KEY_IDS:
            return self.next().value
        raise self.error(f"key id expected, got {tok.value!r}", expected=KEY_IDS)

    def expect_int(self, what: str, minimum: int) -> int:
        tok = self.peek()
        if tok.kind != "number":
            raise self.error(f"{what} expected, got {tok.value!r}", expected=("number",))
        value = float(tok.value)
        if not value.is_integer() or int(value) < minimum:
            raise self.error(f"{what} must be an integer >= {minimum}")
        self.next()
        return int(value)

    # grammar: suite = { trigger } ;
    def suite(self) -> list[TriggerDef]:
        triggers: list[TriggerDef] = []
        seen: dict[str, int] = {}
        while self.peek().kind != "eof":
            trig = self.trigger()
            if trig.id in seen:
                raise DuplicateTriggerIdError(
                    f"duplicate trigger id {trig.id!r} (first defined at line {seen[trig.id]})",
                    trig.line, 1)
            seen[trig.id] = trig.line
            triggers.append(trig)
        return triggers

    def trigger(self) -> TriggerDef:
        start = self.expect_word("TRIGGER")
        trigger_id = self.expect_identifier("trigger id").value
        self.expect_word("WHEN")
        conditions = [self.condition()]
        while not self._at_word("AFTER"):
            if self.peek().kind == "eof":
                raise self.error("unexpected end of input in WHEN clause", expected=("AFTER",))
            conditions.append(self.condition())
        self.expect_word("AFTER")
        delay = self.expect_int("delay", minimum=0)
        self.expect_word("STEPS")
        self.expect_word("THEN")
        actions = [self.action()]
        while self._at_word("DO") or self._at_word("IF"):
            actions.append(self.action())
        debounce = one_shot = add_on_start = False
        while self.peek().kind == "id" and self.peek().value in FLAG_WORDS:
            word = self.next().value
            if word == "debounce":
                if debounce:
                    raise self.error("duplicate flag 'debounce'")
                debounce = True
            elif word == "one-shot":
                if one_shot:
                    raise self.error("duplicate flag 'one-shot'")
                one_shot = True
            else:
                if add_on_start:
                    raise self.error("duplicate flag 'add-on-start'")
                add_on_start = True
        return TriggerDef(
            id=trigger_id, conditions=tuple(conditions), delay_steps=delay,
            actions=tuple(actions), debounce=debounce, one_shot=one_shot,
            add_on_start=add_on_start, line=start.line,
        )

    def _at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "id" and tok.value == word

    def condition(self) -> Condition:
        tok = self.peek()
        if tok.kind == "coin":
            self.next()
            return RandomCoin()
        if tok.kind == "id":
            if tok.value == "Always":
                self.next()
                return AlwaysCond()
            if tok.value == "isTouch":
                self.next()
                a = self.expect_identifier("sprite id").value
                b = self.expect_identifier("sprite id").value
                return IsTouch(a, b)
            if tok.value == "spriteOnEdge":
                self.next()
                sprite = self.expect_identifier("sprite id").value
                side_tok = self.peek()
                if side_tok.kind != "id" or side_tok.value not in EDGE_SIDES:
                    raise self.error(
                        f"edge side expected, got {side_tok.value!r}", expected=EDGE_SIDES)
                self.next()
                return SpriteOnEdgeCond(sprite, side_tok.value)
            if tok.value == "keyDown":
                self.next()
                return KeyDown(self.expect_key())
        if tok.kind in ("number", "id"):
            return self.comparison()
        raise self.error(
            f"condition expected, got {tok.value!r}",
            expected=("Always", "isTouch", "spriteOnEdge", "keyDown",
                      "Random-True/False", "comparison"))

    def comparison(self) -> Condition:
        lhs = self.operand()
        op_tok = self.peek()
        if op_tok.kind != "op":
            raise self.error(f"comparison operator expected, got {op_tok.value!r}",
                             expected=COMPARE_OPS)
        self.next()
        rhs = self.operand()
        lhs_prop = isinstance(lhs, PropRef)
        rhs_prop = isinstance(rhs, PropRef)
        lhs_var = isinstance(lhs, VarRef)
        rhs_var = isinstance(rhs, VarRef)
        if (lhs_prop and rhs_var) or (lhs_var and rhs_prop):
            raise self.error("cannot compare a sprite property with a variable")
        if lhs_prop or rhs_prop:
            return PropCompare(lhs, op_tok.value, rhs)
        return VarCompare(lhs, op_tok.value, rhs)

    def operand(self) -> Operand:
        tok = self.peek()
        if tok.kind == "number":
            self.next()
            return float(tok.value)
        saved = False
        if tok.kind == "id" and tok.value == "SAVED":
            self.next()
            saved = True
        name = self.expect_identifier("property or variable").value
        if self._at_word("OF"):
            if name not in PROPERTIES:
                raise self.error(
                    f"unknown property {name!r}", expected=PROPERTIES)
            self.expect_word("OF")
            sprite = self.expect_identifier("sprite id").value
            return PropRef(sprite=sprite, prop=name, saved=saved)
        return VarRef(name=name, saved=saved)

    def action(self) -> Action:
        if self._at_word("DO"):
            self.next()
            return DoAction(self.action_item())
        if self._at_word("IF"):
            self.next()
            cond = self.condition()
            self.expect_word("THEN")
            then_item = self.action_item()
            self.expect_word("ELSE")
            else_item = self.action_item()
            return IfAction(cond, then_item, else_item)
        raise self.error(f"action expected, got {self.peek().value!r}",
                         expected=("DO", "IF"))

    def action_item(self) -> ActionItem:
        tok = self.peek()
        if tok.kind != "id":
            raise self.error(f"action item expected, got {tok.value!r}",
                             expected=("Nothing", "Report", "Input", "AddTrigger", "RemoveTrigger"))
        if tok.value == "Nothing":
            self.next()
            return NothingItem()
        if tok.value == "Report":
            self.next()
            test_id = self.expect_identifier("test id").value
            outcome_tok = self.peek()
            if outcome_tok.kind == "id" and outcome_tok.value in ("SUCC", "FAIL"):
                self.next()
                return ReportItem(test_id, outcome_tok.value)
            raise self.error(f"got {outcome_tok.value!r}", expected=("SUCC", "FAIL"))
        if tok.value == "Input":
            self.next()
            key = self.expect_key()
            self.expect_word("Key")
            duration = 1
            if self._at_word("FOR"):
                self.next()
                duration = self.expect_int("duration", minimum=1)
                self.expect_word("STEPS")
            return InputKeyItem(key, duration)
        if tok.value == "AddTrigger":
            self.next()
            return AddTriggerItem(self.expect_identifier("trigger id").value)
        if tok.value == "RemoveTrigger":
            self.next()
            return RemoveTriggerItem(self.expect_identifier("trigger id").value)
        raise self.error(f"action item expected, got {tok.value!r}",
                         expected=("Nothing", "Report", "Input", "AddTrigger", "RemoveTrigger"))


def parse_suite(text: str) -> list[TriggerDef]:
    return _Parser(text).suite()


# -- pretty printer -----------------------------------------------------------

def _fmt_number(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(value)


def _fmt_operand(operand: Operand) -> str:
    if isinstance(operand, PropRef):
        saved = "SAVED " if operand.saved else ""
        return f"{saved}{operand.prop} OF {operand.sprite}"
    if isinstance(operand, VarRef):
        saved = "SAVED " if operand.saved else ""
        return f"{saved}{operand.name}"
    return _fmt_number(operand)


def _fmt_condition(cond: Condition) -> str:
    if isinstance(cond, AlwaysCond):
        return "Always"
    if isinstance(cond, (PropCompare, VarCompare)):
        return f"{_fmt_operand(cond.lhs)} {cond.op} {_fmt_operand(cond.rhs)}"
    if isinstance(cond, IsTouch):
        return f"isTouch {cond.a} {cond.b}"
    if isinstance(cond, SpriteOnEdgeCond):
        return f"spriteOnEdge {cond.sprite} {cond.side}"
    if isinstance(cond, KeyDown):
        return f"keyDown {cond.key}"
    if isinstance(cond, RandomCoin):
        return "Random-True/False"
    raise AssertionError(f"unhandled condition {cond!r}")


def _fmt_item(item: ActionItem) -> str:
    if isinstance(item, NothingItem):
        return "Nothing"
    if isinstance(item, ReportItem):
        return f"Report {item.test_id} {item.outcome}"
    if isinstance(item, InputKeyItem):
        if item.duration == 1:
            return f"Input {item.key} Key"
        return f"Input {item.key} Key FOR {item.duration} STEPS"
    if isinstance(item, AddTriggerItem):
        return f"AddTrigger {item.trigger_id}"
    if isinstance(item, RemoveTriggerItem):
        return f"RemoveTrigger {item.trigger_id}"
    raise AssertionError(f"unhandled action item {item!r}")


def _fmt_action(action: Action) -> str:
    if isinstance(action, DoAction):
        return f"DO {_fmt_item(action.item)}"
    return (f"IF {_fmt_condition(action.cond)} THEN {_fmt_item(action.then_item)}"
            f" ELSE {_fmt_item(action.else_item)}")


def pretty_print(trigger: TriggerDef) -> str:
    """Canonical text form; parsing it back yields a structurally equal AST.
    Flags always print in the order debounce, one-shot, add-on-start."""
    lines = [f"TRIGGER {trigger.id}"]
    lines.append(f"  WHEN {_fmt_condition(trigger.conditions[0])}")
    for cond in trigger.conditions[1:]:
        lines.append(f"       {_fmt_condition(cond)}")
    lines.append(f"  AFTER {trigger.delay_steps} STEPS")
    lines.append(f"  THEN {_fmt_action(trigger.actions[0])}")
    for action in trigger.actions[1:]:
        lines.append(f"       {_fmt_action(action)}")
    flags = [word for word, on in (
        ("debounce", trigger.debounce),
        ("one-shot", trigger.one_shot),
        ("add-on-start", trigger.add_on_start),
    ) if on]
    if flags:
        lines.append("  " + " ".join(flags))
    return "\n".join(lines) + "\n"


def pretty_print_suite(suite: Iterable[TriggerDef]) -> str:
    return "\n".join(pretty_print(t) for t in suite)


# -- walkers ------------------------------------------------------------------

def _condition_operands(cond: Condition):
    if isinstance(cond, (PropCompare, VarCompare)):
        yield cond.lhs
        yield cond.rhs


def _action_conditions(trigger: TriggerDef):
    for action in trigger.actions:
        if isinstance(action, IfAction):
            yield action.cond


def _action_items(trigger: TriggerDef):
    for action in trigger.actions:
        if isinstance(action, DoAction):
            yield action.item
        else:
            yield action.then_item
            yield action.else_item


def saved_refs_in_actions(trigger: TriggerDef) -> tuple:
    """SAVED references syntactically present in the trigger's actions;
    exactly these are captured into the arming snapshot."""
    refs = {}
    for cond in _action_conditions(trigger):
        for operand in _condition_operands(cond):
            if isinstance(operand, (PropRef, VarRef)) and operand.saved:
                refs.setdefault(ref_key(operand), operand)
    return tuple(refs.values())


def saved_refs_in_conditions(suite: Iterable[TriggerDef]) -> tuple:
    """SAVED references in any WHEN condition across the suite; the harness
    tracks previous-step values for all of them."""
    refs = {}
    for trigger in suite:
        for cond in trigger.conditions:
            for operand in _condition_operands(cond):
                if isinstance(operand, (PropRef, VarRef)) and operand.saved:
                    refs.setdefault(ref_key(operand), operand)
    return tuple(refs.values())


def suite_test_ids(suite: Iterable[TriggerDef]) -> tuple[str, ...]:
    """Test ids in order of first appearance across Report actions."""
    seen: dict[str, None] = {}
    for trigger in suite:
        for item in _action_items(trigger):
            if isinstance(item, ReportItem):
                seen.setdefault(item.test_id)
    return tuple(seen)


def add_trigger_targets(suite: Iterable[TriggerDef]) -> frozenset[str]:
    targets = set()
    for trigger in suite:
        for item in _action_items(trigger):
            if isinstance(item, AddTriggerItem):
                targets.add(item.trigger_id)
    return frozenset(targets)


# -- validation ---------------------------------------------------------------

def validate_suite(suite: list[TriggerDef], program) -> list[Diagnostic]:
    """Resolve every sprite, variable, and trigger reference against the
    program and the suite itself. An empty list means the suite is runnable."""
    sprites = set(program.sprite_names())
    global_vars = set(program.globals)
    trigger_ids = {t.id for t in suite}
    diagnostics: list[Diagnostic] = []

    def err(trigger: TriggerDef, message: str):
        diagnostics.append(Diagnostic("error", message, trigger.id, trigger.line))

    def check_operand(trigger: TriggerDef, operand: Operand):
        if isinstance(operand, PropRef) and operand.sprite not in sprites:
            err(trigger, f"unknown sprite {operand.sprite!r}")
        elif isinstance(operand, VarRef) and operand.name not in global_vars:
            err(trigger, f"unknown variable {operand.name!r}")

    def check_condition(trigger: TriggerDef, cond: Condition):
        if isinstance(cond, IsTouch):
            for name in (cond.a, cond.b):
                if name not in sprites:
                    err(trigger, f"unknown sprite {name!r}")
            if cond.a == cond.b:
                err(trigger, f"isTouch requires two distinct sprites, got {cond.a!r} twice")
        elif isinstance(cond, SpriteOnEdgeCond):
            if cond.sprite not in sprites:
                err(trigger, f"unknown sprite {cond.sprite!r}")
        else:
            for operand in _condition_operands(cond):
                check_operand(trigger, operand)

    for trigger in suite:
        for cond in trigger.conditions:
            check_condition(trigger, cond)
        for cond in _action_conditions(trigger):
            check_condition(trigger, cond)
        for item in _action_items(trigger):
            if isinstance(item, (AddTriggerItem, RemoveTriggerItem)):
                if item.trigger_id not in trigger_ids:
                    kind = "AddTrigger" if isinstance(item, AddTriggerItem) else "RemoveTrigger"
                    err(trigger, f"{kind} names undefined trigger {item.trigger_id!r}")
    return diagnostics
