"""Load and validate program documents (JSON) into a Program AST.

The concrete encoding is JSON, documented by ``schemas/program.schema.json``.
Every block and expression is a tagged node. Validation covers structure,
name resolution (sprites and variables), and number/boolean typing of
expressions; any failure raises with a JSON-path-like location.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import blocks as b
from .errors import ProgramParseError, TypeMismatchError, UnknownReferenceError
from .stage import KEY_IDS, PROPERTIES, normalize_direction

_ARITH_OPS = {"add", "sub", "mul", "div"}
_COMPARE_OPS = {"eq", "ne", "lt", "le", "gt", "ge"}


def load_program_file(path: str | Path) -> b.Program:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProgramParseError(f"cannot read program file: {exc}", str(path)) from exc
    return load_program(text)


def load_program(document: str) -> b.Program:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ProgramParseError(f"invalid JSON: {exc.msg}", f"line {exc.lineno}") from exc
    return _Loader(doc).program()


class _Loader:
    def __init__(self, doc):
        self.doc = doc
        self.sprite_names: list[str] = []
        self.globals: dict[str, float] = {}
        self.local_names: dict[str, set[str]] = {}

    def program(self) -> b.Program:
        stage = self._dict(self.doc, "$", keys={"stage"})["stage"]
        stage = self._dict(stage, "$.stage", keys={"sprites"}, optional={"globals"})
        self.globals = self._vars(stage.get("globals", {}), "$.stage.globals")
        raw_sprites = stage["sprites"]
        if not isinstance(raw_sprites, list) or not raw_sprites:
            raise ProgramParseError("sprites must be a non-empty list", "$.stage.sprites")

        # First pass: names and local variables, so references resolve forward.
        for i, raw in enumerate(raw_sprites):
            loc = f"$.stage.sprites[{i}]"
            raw = self._dict(
                raw, loc,
                keys={"name", "x", "y", "direction", "width", "height"},
                optional={"vars", "scripts"},
            )
            name = raw["name"]
            if not isinstance(name, str) or not name:
                raise ProgramParseError("sprite name must be a non-empty string", loc)
            if name in self.sprite_names:
                raise ProgramParseError(f"duplicate sprite name {name!r}", loc)
            self.sprite_names.append(name)
            self.local_names[name] = set(self._vars(raw.get("vars", {}), f"{loc}.vars"))
            for var in self.local_names[name]:
                if var in self.globals:
                    raise ProgramParseError(
                        f"local variable {var!r} shadows a global", f"{loc}.vars")

        sprites = tuple(
            self._sprite(raw, f"$.stage.sprites[{i}]") for i, raw in enumerate(raw_sprites)
        )
        return b.Program(sprites=sprites, globals=dict(self.globals))

    # -- pieces --------------------------------------------------------------

    def _sprite(self, raw: dict, loc: str) -> b.SpriteDecl:
        name = raw["name"]
        for field in ("width", "height"):
            if self._number(raw[field], f"{loc}.{field}") <= 0:
                raise ProgramParseError(f"{field} must be > 0", f"{loc}.{field}")
        scripts = raw.get("scripts", [])
        if not isinstance(scripts, list):
            raise ProgramParseError("scripts must be a list", f"{loc}.scripts")
        return b.SpriteDecl(
            name=name,
            x=self._number(raw["x"], f"{loc}.x"),
            y=self._number(raw["y"], f"{loc}.y"),
            direction=normalize_direction(self._number(raw["direction"], f"{loc}.direction")),
            width=self._number(raw["width"], f"{loc}.width"),
            height=self._number(raw["height"], f"{loc}.height"),
            local_vars=self._vars(raw.get("vars", {}), f"{loc}.vars"),
            scripts=tuple(
                self._script(s, name, f"{loc}.scripts[{i}]") for i, s in enumerate(scripts)
            ),
        )

    def _script(self, raw, sprite: str, loc: str) -> b.Script:
        raw = self._dict(raw, loc, keys={"hat", "body"})
        hat_raw = self._dict(raw["hat"], f"{loc}.hat", keys={"kind"}, optional={"key"})
        kind = hat_raw["kind"]
        if kind == "green-flag":
            hat: b.Hat = b.GreenFlagHat()
        elif kind == "key-pressed":
            hat = b.KeyPressedHat(self._key(hat_raw.get("key"), f"{loc}.hat.key"))
        else:
            raise ProgramParseError(f"unknown hat kind {kind!r}", f"{loc}.hat.kind")
        body = self._body(raw["body"], sprite, f"{loc}.body")
        if not body:
            raise ProgramParseError("script body must be non-empty", f"{loc}.body")
        return b.Script(hat=hat, body=body)

    def _body(self, raw, sprite: str, loc: str) -> tuple[b.Block, ...]:
        if not isinstance(raw, list):
            raise ProgramParseError("block list expected", loc)
        return tuple(self._block(blk, sprite, f"{loc}[{i}]") for i, blk in enumerate(raw))

    def _block(self, raw, sprite: str, loc: str) -> b.Block:
        if not isinstance(raw, dict) or "op" not in raw:
            raise ProgramParseError("block must be an object with an 'op' key", loc)
        op = raw["op"]
        num = lambda key: self._expr(raw, key, sprite, loc, want="number")
        boolean = lambda key: self._expr(raw, key, sprite, loc, want="boolean")
        body = lambda key: self._body(self._field(raw, key, loc), sprite, f"{loc}.{key}")

        if op == "move":
            return b.Move(num("steps"))
        if op == "glide":
            return b.GlideTo(num("x"), num("y"), num("duration"))
        if op == "set-x":
            return b.SetX(num("value"))
        if op == "set-y":
            return b.SetY(num("value"))
        if op == "change-x":
            return b.ChangeX(num("by"))
        if op == "change-y":
            return b.ChangeY(num("by"))
        if op == "go-to":
            return b.GoToXY(num("x"), num("y"))
        if op == "point-direction":
            return b.PointInDirection(num("degrees"))
        if op == "turn":
            return b.TurnBy(num("degrees"))
        if op == "bounce-on-edge":
            return b.IfOnEdgeBounce()
        if op == "forever":
            return b.Forever(body("body"))
        if op == "repeat":
            return b.Repeat(num("times"), body("body"))
        if op == "if":
            return b.If(boolean("cond"), body("then"))
        if op == "if-else":
            return b.IfElse(boolean("cond"), body("then"), body("else"))
        if op == "wait":
            return b.WaitSteps(num("steps"))
        if op == "set-var":
            return b.SetVar(self._var_ref(raw, sprite, loc), num("value"))
        if op == "change-var":
            return b.ChangeVar(self._var_ref(raw, sprite, loc), num("by"))
        if op == "stop-script":
            return b.StopThisScript()
        if op == "stop-all":
            return b.StopAll()
        raise ProgramParseError(f"unknown block op {op!r}", loc)

    def _var_ref(self, raw: dict, sprite: str, loc: str) -> b.GlobalVar | b.LocalVar:
        name = self._field(raw, "var", loc)
        if not isinstance(name, str):
            raise ProgramParseError("variable name must be a string", f"{loc}.var")
        return self._resolve_var(name, sprite, f"{loc}.var")

    def _resolve_var(self, name: str, sprite: str, loc: str) -> b.GlobalVar | b.LocalVar:
        if name in self.local_names.get(sprite, ()):
            return b.LocalVar(sprite, name)
        if name in self.globals:
            return b.GlobalVar(name)
        raise UnknownReferenceError(f"undeclared variable {name!r}", loc)

    def _expr(self, raw: dict, key: str, sprite: str, loc: str, want: str) -> b.Expr:
        expr = self._parse_expr(self._field(raw, key, loc), sprite, f"{loc}.{key}")
        self._check_type(expr, want, f"{loc}.{key}")
        return expr

    def _check_type(self, expr: b.Expr, want: str, loc: str) -> None:
        is_bool = isinstance(expr, b.BOOLEAN_EXPRS)
        if want == "number" and is_bool:
            raise TypeMismatchError("number expected, got a boolean expression", loc)
        if want == "boolean" and not is_bool:
            raise TypeMismatchError("boolean expected, got a numeric expression", loc)

    def _parse_expr(self, raw, sprite: str, loc: str) -> b.Expr:
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return b.Literal(float(raw))
        if not isinstance(raw, dict) or len(raw) != 1:
            raise ProgramParseError(
                "expression must be a number or a single-key object", loc)
        (tag, value), = raw.items()
        sub = lambda v, suffix: self._parse_expr(v, sprite, f"{loc}.{suffix}")

        if tag == "var":
            if not isinstance(value, str):
                raise ProgramParseError("variable name must be a string", loc)
            return self._resolve_var(value, sprite, loc)
        if tag == "prop":
            if (not isinstance(value, list) or len(value) != 2
                    or not all(isinstance(v, str) for v in value)):
                raise ProgramParseError('prop expects ["sprite", "x|y|direction"]', loc)
            target, prop = value
            if target not in self.sprite_names:
                raise UnknownReferenceError(f"undeclared sprite {target!r}", loc)
            if prop not in PROPERTIES:
                raise ProgramParseError(f"unknown property {prop!r}", loc)
            return b.Prop(target, prop)
        if tag == "random":
            lo, hi = self._pair(value, loc)
            lo_e, hi_e = sub(lo, "random[0]"), sub(hi, "random[1]")
            integer = (
                isinstance(lo_e, b.Literal) and isinstance(hi_e, b.Literal)
                and lo_e.value.is_integer() and hi_e.value.is_integer()
            )
            for e, side in ((lo_e, "lo"), (hi_e, "hi")):
                self._check_type(e, "number", f"{loc}.{side}")
            return b.RandomExpr(lo_e, hi_e, integer)
        if tag in _ARITH_OPS:
            lhs, rhs = self._pair(value, loc)
            lhs_e, rhs_e = sub(lhs, f"{tag}[0]"), sub(rhs, f"{tag}[1]")
            for e in (lhs_e, rhs_e):
                self._check_type(e, "number", loc)
            return b.Arith(tag, lhs_e, rhs_e)
        if tag in _COMPARE_OPS:
            lhs, rhs = self._pair(value, loc)
            lhs_e, rhs_e = sub(lhs, f"{tag}[0]"), sub(rhs, f"{tag}[1]")
            for e in (lhs_e, rhs_e):
                self._check_type(e, "number", loc)
            return b.Compare(tag, lhs_e, rhs_e)
        if tag in ("and", "or"):
            lhs, rhs = self._pair(value, loc)
            lhs_e, rhs_e = sub(lhs, f"{tag}[0]"), sub(rhs, f"{tag}[1]")
            for e in (lhs_e, rhs_e):
                self._check_type(e, "boolean", loc)
            return b.BoolOp(tag, lhs_e, rhs_e)
        if tag == "not":
            operand = sub(value, "not")
            self._check_type(operand, "boolean", loc)
            return b.NotOp(operand)
        if tag == "touching":
            if not isinstance(value, str):
                raise ProgramParseError("touching expects a sprite name", loc)
            if value not in self.sprite_names:
                raise UnknownReferenceError(f"undeclared sprite {value!r}", loc)
            if value == sprite:
                raise ProgramParseError("a sprite cannot test touching itself", loc)
            return b.Touching(value)
        if tag == "touching-edge":
            return b.TouchingEdge()
        if tag == "key-down":
            return b.KeyPressed(self._key(value, loc))
        raise ProgramParseError(f"unknown expression tag {tag!r}", loc)

    # -- primitive helpers -----------------------------------------------------

    def _key(self, value, loc: str) -> str:
        if value not in KEY_IDS:
            raise ProgramParseError(
                f"unknown key {value!r}; valid keys: {', '.join(KEY_IDS)}", loc)
        return value

    def _pair(self, value, loc: str) -> tuple:
        if not isinstance(value, list) or len(value) != 2:
            raise ProgramParseError("expected a two-element list", loc)
        return value[0], value[1]

    def _field(self, raw: dict, key: str, loc: str):
        if key not in raw:
            raise ProgramParseError(f"missing field {key!r}", loc)
        return raw[key]

    def _dict(self, raw, loc: str, keys: set, optional: set = frozenset()) -> dict:
        if not isinstance(raw, dict):
            raise ProgramParseError("object expected", loc)
        missing = keys - raw.keys()
        if missing:
            raise ProgramParseError(f"missing fields: {', '.join(sorted(missing))}", loc)
        extra = raw.keys() - keys - optional - {"op", "comment"}
        if extra:
            raise ProgramParseError(f"unknown fields: {', '.join(sorted(extra))}", loc)
        return raw

    def _number(self, value, loc: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ProgramParseError("number expected", loc)
        return float(value)

    def _vars(self, raw, loc: str) -> dict[str, float]:
        if not isinstance(raw, dict):
            raise ProgramParseError("variable map expected", loc)
        out: dict[str, float] = {}
        for name, value in raw.items():
            out[name] = self._number(value, f"{loc}.{name}")
        return out
