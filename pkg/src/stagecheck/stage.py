"""Simulated world state: sprites, stage geometry, variables, input, RNG.

Coordinates use the classic sprite-stage convention: origin at the center,
x in [-240, 240], y in [-180, 180], direction in degrees with 0 = up and
90 = right, increasing clockwise. Collision geometry is axis-aligned
bounding boxes with closed intervals, so exact edge contact counts as
touching. Positions are never clamped here; boundary behavior belongs to
program blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Union

from .errors import UnknownSpriteError, UnknownVariableError
from .rng import Pcg32

STAGE_LEFT = -240.0
STAGE_RIGHT = 240.0
STAGE_BOTTOM = -180.0
STAGE_TOP = 180.0

KEY_IDS = ("up-arrow", "down-arrow", "left-arrow", "right-arrow", "space")
PROPERTIES = ("x", "y", "direction")
EDGE_SIDES = ("top", "bottom", "left", "right", "any")


def normalize_direction(degrees: float) -> float:
    return degrees % 360.0


@dataclass
class SpriteState:
    name: str
    x: float = 0.0
    y: float = 0.0
    direction: float = 90.0
    width: float = 10.0
    height: float = 10.0
    local_vars: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"sprite {self.name!r}: width and height must be > 0")
        self.direction = normalize_direction(self.direction)

    def set_direction(self, degrees: float) -> None:
        self.direction = normalize_direction(degrees)

    def turn(self, delta: float) -> None:
        self.direction = normalize_direction(self.direction + delta)

    # Bounding box, closed on all sides.
    @property
    def left(self) -> float:
        return self.x - self.width / 2.0

    @property
    def right(self) -> float:
        return self.x + self.width / 2.0

    @property
    def bottom(self) -> float:
        return self.y - self.height / 2.0

    @property
    def top(self) -> float:
        return self.y + self.height / 2.0


@dataclass
class StageState:
    sprites: dict[str, SpriteState] = field(default_factory=dict)
    global_vars: dict[str, float] = field(default_factory=dict)
    keys_down: set[str] = field(default_factory=set)
    step_index: int = 0
    rng: Pcg32 = field(default_factory=lambda: Pcg32.seeded(0))

    def sprite(self, name: str) -> SpriteState:
        try:
            return self.sprites[name]
        except KeyError:
            raise UnknownSpriteError(name) from None


@dataclass(frozen=True)
class PropRef:
    """Reference to a sprite property, optionally to its saved variant."""

    sprite: str
    prop: str
    saved: bool = False


@dataclass(frozen=True)
class VarRef:
    """Reference to a global variable, optionally to its saved variant."""

    name: str
    saved: bool = False


SavedRef = Union[PropRef, VarRef]


def ref_key(ref: SavedRef) -> tuple:
    """Snapshot key: ignores the saved flag so live/saved variants of the
    same property share one captured value."""
    if isinstance(ref, PropRef):
        return ("prop", ref.sprite, ref.prop)
    return ("var", ref.name)


@dataclass(frozen=True)
class SavedSnapshot:
    """Immutable capture of selected property/variable values at one step."""

    entries: dict[tuple, float]
    captured_at: int

    def value(self, ref: SavedRef) -> float:
        return self.entries[ref_key(ref)]

    def __contains__(self, ref: SavedRef) -> bool:
        return ref_key(ref) in self.entries


def get_property(stage: StageState, sprite: str, prop: str) -> float:
    sp = stage.sprite(sprite)
    if prop == "x":
        return sp.x
    if prop == "y":
        return sp.y
    if prop == "direction":
        return sp.direction
    raise ValueError(f"unknown property: {prop!r}")


def get_variable(stage: StageState, name: str) -> float:
    try:
        return stage.global_vars[name]
    except KeyError:
        raise UnknownVariableError(name) from None


def sprites_touching(stage: StageState, a: str, b: str) -> bool:
    sa = stage.sprite(a)
    sb = stage.sprite(b)
    return (
        sa.left <= sb.right
        and sb.left <= sa.right
        and sa.bottom <= sb.top
        and sb.bottom <= sa.top
    )


def sprite_on_edge(stage: StageState, sprite: str, side: str = "any") -> bool:
    sp = stage.sprite(sprite)
    if side == "top":
        return sp.top >= STAGE_TOP
    if side == "bottom":
        return sp.bottom <= STAGE_BOTTOM
    if side == "left":
        return sp.left <= STAGE_LEFT
    if side == "right":
        return sp.right >= STAGE_RIGHT
    if side == "any":
        return (
            sp.top >= STAGE_TOP
            or sp.bottom <= STAGE_BOTTOM
            or sp.left <= STAGE_LEFT
            or sp.right >= STAGE_RIGHT
        )
    raise ValueError(f"unknown side: {side!r}")


def capture_snapshot(stage: StageState, refs: Iterable[SavedRef]) -> SavedSnapshot:
    entries: dict[tuple, float] = {}
    for ref in refs:
        if isinstance(ref, PropRef):
            entries[ref_key(ref)] = get_property(stage, ref.sprite, ref.prop)
        else:
            entries[ref_key(ref)] = get_variable(stage, ref.name)
    return SavedSnapshot(entries=entries, captured_at=stage.step_index)
