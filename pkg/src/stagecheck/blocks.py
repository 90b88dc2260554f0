"""AST for block-structured sprite programs.

A program is a list of sprite declarations plus global variables. Each
sprite carries scripts; a script is one hat (green flag or key pressed)
and a non-empty block body. Expressions tag their type (number/boolean)
at load time, so the interpreter never type-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# -- expressions ------------------------------------------------------------

@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class GlobalVar:
    name: str


@dataclass(frozen=True)
class LocalVar:
    sprite: str
    name: str


@dataclass(frozen=True)
class Prop:
    sprite: str
    prop: str  # x | y | direction


@dataclass(frozen=True)
class RandomExpr:
    lo: "Expr"
    hi: "Expr"
    integer: bool  # both bounds were integer literals


@dataclass(frozen=True)
class Arith:
    op: str  # add | sub | mul | div
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class Compare:
    op: str  # eq | ne | lt | le | gt | ge
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class BoolOp:
    op: str  # and | or
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class NotOp:
    operand: "Expr"


@dataclass(frozen=True)
class Touching:
    other: str


@dataclass(frozen=True)
class TouchingEdge:
    pass


@dataclass(frozen=True)
class KeyPressed:
    key: str


Expr = (
    Literal | GlobalVar | LocalVar | Prop | RandomExpr | Arith | Compare
    | BoolOp | NotOp | Touching | TouchingEdge | KeyPressed
)

NUMERIC_EXPRS = (Literal, GlobalVar, LocalVar, Prop, RandomExpr, Arith)
BOOLEAN_EXPRS = (Compare, BoolOp, NotOp, Touching, TouchingEdge, KeyPressed)


# -- blocks -----------------------------------------------------------------

@dataclass(frozen=True)
class Move:
    steps: Expr


@dataclass(frozen=True)
class GlideTo:
    x: Expr
    y: Expr
    duration: Expr  # steps


@dataclass(frozen=True)
class SetX:
    value: Expr


@dataclass(frozen=True)
class SetY:
    value: Expr


@dataclass(frozen=True)
class ChangeX:
    by: Expr


@dataclass(frozen=True)
class ChangeY:
    by: Expr


@dataclass(frozen=True)
class GoToXY:
    x: Expr
    y: Expr


@dataclass(frozen=True)
class PointInDirection:
    degrees: Expr


@dataclass(frozen=True)
class TurnBy:
    degrees: Expr


@dataclass(frozen=True)
class IfOnEdgeBounce:
    pass


@dataclass(frozen=True)
class Forever:
    body: tuple["Block", ...]


@dataclass(frozen=True)
class Repeat:
    times: Expr
    body: tuple["Block", ...]


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Block", ...]


@dataclass(frozen=True)
class IfElse:
    cond: Expr
    then: tuple["Block", ...]
    orelse: tuple["Block", ...]


@dataclass(frozen=True)
class WaitSteps:
    steps: Expr


@dataclass(frozen=True)
class SetVar:
    var: GlobalVar | LocalVar
    value: Expr


@dataclass(frozen=True)
class ChangeVar:
    var: GlobalVar | LocalVar
    by: Expr


@dataclass(frozen=True)
class StopThisScript:
    pass


@dataclass(frozen=True)
class StopAll:
    pass


Block = (
    Move | GlideTo | SetX | SetY | ChangeX | ChangeY | GoToXY
    | PointInDirection | TurnBy | IfOnEdgeBounce | Forever | Repeat
    | If | IfElse | WaitSteps | SetVar | ChangeVar | StopThisScript | StopAll
)


# -- scripts and declarations -----------------------------------------------

@dataclass(frozen=True)
class GreenFlagHat:
    pass


@dataclass(frozen=True)
class KeyPressedHat:
    key: str


Hat = GreenFlagHat | KeyPressedHat


@dataclass(frozen=True)
class Script:
    hat: Hat
    body: tuple[Block, ...]


@dataclass(frozen=True)
class SpriteDecl:
    name: str
    x: float
    y: float
    direction: float
    width: float
    height: float
    local_vars: dict[str, float] = field(default_factory=dict)
    scripts: tuple[Script, ...] = ()


@dataclass(frozen=True)
class Program:
    sprites: tuple[SpriteDecl, ...]
    globals: dict[str, float] = field(default_factory=dict)

    def sprite_names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.sprites)
