"""Expression front end: polynomials, vectors, operators and equation files.

Grammar (standard precedence, left associative except ``^``)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" INT)?
    atom   := INT | VAR | "{" NAME "}" | "(" expr ")" | "D" | "I"

Variables are ``x``, ``t``, ``u<j>_<k>``, ``p<j>_<k>``, ``q<j>_<k>`` and
``ut<j>_<k>`` (a t-derivative, rewritten through the equation). ``D`` and
``I`` only make sense in operator expressions. Vectors and matrices are
bracketed lists.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Generic, NamedTuple, NoReturn, TypeVar

from .cdop import CDOp, compose
from .eqctx import CoveringMode, EquationContext
from .errors import ExprSyntaxError, IllegalGenerator, VarPNError
from .gpoly import (
    DPoly,
    Kind,
    Role,
    T_GEN,
    VecFun,
    X_GEN,
    jet_generator,
    param_generator,
)

logger = logging.getLogger(__name__)

EQUATIONS_DIR = Path(__file__).resolve().parent.parent / "equations"

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<jet>(?:ut|u|p|q)\d+_\d+)
  | (?P<int>\d+)
  | (?P<param>\{[A-Za-z_][A-Za-z0-9_]*\})
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()\[\],])
    """,
    re.VERBOSE,
)
_JET = re.compile(r"(ut|u|p|q)(\d+)_(\d+)")


class Token(NamedTuple):
    kind: str
    text: str
    position: int


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(source):
        match = _TOKEN.match(source, pos)
        if match is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        if match.lastgroup != "ws":
            tokens.append(Token(match.lastgroup, match.group(), pos))
        pos = match.end()
    tokens.append(Token("end", "", len(source)))
    return tokens


V = TypeVar("V")


@dataclass
class _Algebra(Generic[V]):
    """How parsed atoms combine: polynomials or scalar operators."""

    constant: Callable[[DPoly], V]
    add: Callable[[V, V], V]
    neg: Callable[[V], V]
    mul: Callable[[V, V], V]
    as_scalar: Callable[[V], DPoly | None]
    operators: bool = False
    ctx: EquationContext | None = None

    def power(self, value: V, n: int) -> V:
        result = self.constant(DPoly.constant(1))
        for _ in range(n):
            result = self.mul(result, value)
        return result


def _scalar_op(c: DPoly) -> CDOp:
    return CDOp.scalar({0: c})


def _op_scalar(op: CDOp) -> DPoly | None:
    terms = op.entry(0, 0)
    if not terms:
        return DPoly()
    if set(terms) == {0}:
        return terms[0]
    return None


_POLY = _Algebra(
    constant=lambda c: c,
    add=lambda a, b: a + b,
    neg=lambda a: -a,
    mul=lambda a, b: a * b,
    as_scalar=lambda a: a,
)

_OPS = _Algebra(
    constant=_scalar_op,
    add=lambda a, b: a + b,
    neg=lambda a: -a,
    mul=compose,
    as_scalar=_op_scalar,
    operators=True,
)


class _Parser(Generic[V]):
    def __init__(self, source: str, algebra: _Algebra[V]):
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0
        self.algebra = algebra

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def accept(self, text: str) -> bool:
        if self.current.kind == "op" and self.current.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            self.fail(f"{text!r}")

    def fail(self, expected: str) -> NoReturn:
        token = self.current
        found = "end of input" if token.kind == "end" else repr(token.text)
        raise ExprSyntaxError(f"unexpected {found}", token.position, expected)

    def finish(self) -> None:
        if self.current.kind != "end":
            self.fail("end of input")

    def expr(self) -> V:
        value = self.term()
        while True:
            if self.accept("+"):
                value = self.algebra.add(value, self.term())
            elif self.accept("-"):
                value = self.algebra.add(value, self.algebra.neg(self.term()))
            else:
                return value

    def term(self) -> V:
        value = self.unary()
        while True:
            if self.accept("*"):
                value = self.algebra.mul(value, self.unary())
            elif self.current.kind == "op" and self.current.text == "/":
                position = self.advance().position
                divisor = self.algebra.as_scalar(self.unary())
                if divisor is None or not divisor.is_constant or divisor.is_zero:
                    raise ExprSyntaxError("division by a non-constant or zero", position, "nonzero rational")
                value = self.algebra.mul(value, self.algebra.constant(DPoly.constant(1 / divisor.constant_value())))
            else:
                return value

    def unary(self) -> V:
        if self.accept("-"):
            return self.algebra.neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self) -> V:
        value = self.atom()
        if self.accept("^"):
            token = self.current
            if token.kind != "int":
                self.fail("integer exponent")
            self.advance()
            value = self.algebra.power(value, int(token.text))
        return value

    def atom(self) -> V:
        token = self.current
        if token.kind == "int":
            self.advance()
            return self.algebra.constant(DPoly.constant(int(token.text)))
        if token.kind == "jet":
            self.advance()
            return self.algebra.constant(self._jet(token))
        if token.kind == "param":
            self.advance()
            return self.algebra.constant(DPoly.of(param_generator(token.text[1:-1])))
        if token.kind == "name":
            self.advance()
            if token.text == "x":
                return self.algebra.constant(DPoly.of(X_GEN))
            if token.text == "t":
                return self.algebra.constant(DPoly.of(T_GEN))
            if self.algebra.operators and token.text == "D":
                return CDOp.scalar({1: 1})
            if self.algebra.operators and token.text == "I":
                return CDOp.scalar({0: 1})
            self.pos -= 1
            self.fail("a variable, number or '('")
        if self.accept("("):
            value = self.expr()
            self.expect(")")
            return value
        self.fail("a variable, number or '('")

    def _jet(self, token: Token) -> DPoly:
        prefix, j, k = _JET.fullmatch(token.text).groups()
        j, k = int(j), int(k)
        if j < 1:
            raise ExprSyntaxError("component indices start at 1", token.position, "j >= 1")
        if prefix == "ut":
            if self.algebra.ctx is None:
                raise IllegalGenerator(f"{token.text} needs an equation to be eliminated")
            return self.algebra.ctx.u_t(j, k)
        kind = {"u": Kind.U, "p": Kind.P, "q": Kind.Q}[prefix]
        return DPoly.of(jet_generator(kind, j, k))

    def items(self, element: Callable[[], Any]) -> list[Any]:
        """``"[" element ("," element)* "]"``."""
        self.expect("[")
        out = [element()]
        while self.accept(","):
            out.append(element())
        self.expect("]")
        return out


def _with_ctx(algebra: _Algebra, ctx: EquationContext | None) -> _Algebra:
    return algebra if ctx is None else _Algebra(**{**algebra.__dict__, "ctx": ctx})


def parse_expr(
    source: str,
    mode: CoveringMode = CoveringMode.PLAIN,
    ctx: EquationContext | None = None,
) -> DPoly:
    parser = _Parser(source, _with_ctx(_POLY, ctx))
    value = parser.expr()
    parser.finish()
    _check_mode(value, mode, ctx)
    return value


def parse_vec(
    source: str,
    mode: CoveringMode = CoveringMode.PLAIN,
    ctx: EquationContext | None = None,
    role: Role = Role.SECTION,
) -> VecFun:
    """A bracketed list of expressions, or a single expression for one component."""
    parser = _Parser(source, _with_ctx(_POLY, ctx))
    if parser.current.kind == "op" and parser.current.text == "[":
        entries = parser.items(parser.expr)
    else:
        entries = [parser.expr()]
    parser.finish()
    for entry in entries:
        _check_mode(entry, mode, ctx)
    vec = VecFun(tuple(entries), role)
    if ctx is not None and len(vec) != ctx.m:
        raise IllegalGenerator(f"expected {ctx.m} entries, got {len(vec)}")
    return vec


def parse_op(source: str, m: int = 1, ctx: EquationContext | None = None) -> CDOp:
    """An operator expression; a scalar expression stands for itself times the identity."""
    parser = _Parser(source, _with_ctx(_OPS, ctx))
    if parser.current.kind == "op" and parser.current.text == "[":
        rows = parser.items(lambda: parser.items(parser.expr))
        parser.finish()
        width = len(rows[0])
        if any(len(row) != width for row in rows):
            raise ExprSyntaxError("matrix rows have different lengths", 0, f"{width} entries per row")
        op = CDOp.from_entries([[dict(e.entries[0][0]) for e in row] for row in rows])
        if ctx is not None and op.shape != (ctx.m, ctx.m):
            raise IllegalGenerator(f"expected an {ctx.m}x{ctx.m} operator, got {op.shape}")
    else:
        scalar = parser.expr()
        parser.finish()
        entry = dict(scalar.entries[0][0])
        op = CDOp.from_entries([[entry if i == j else {} for j in range(m)] for i in range(m)])
    for c in op.coefficients():
        _check_mode(c, CoveringMode.PLAIN, ctx)
    return op


def _check_mode(value: DPoly, mode: CoveringMode, ctx: EquationContext | None) -> None:
    if ctx is not None:
        ctx.check(mode, value)
        return
    for g in value.generators():
        if not mode.admits(g):
            raise IllegalGenerator(f"{g} is not a coordinate of the {mode.value} covering")


def print_expr(value: DPoly) -> str:
    return str(value)


def print_vec(value: VecFun) -> str:
    return str(value)


def print_op(value: CDOp) -> str:
    return str(value)


@dataclass(frozen=True)
class EquationFile:
    name: str
    components: int
    f: tuple[str, ...]
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_json(cls, data: Any, source: str = "<equation>") -> EquationFile:
        if not isinstance(data, dict):
            raise VarPNError(f"{source}: an equation file holds a JSON object")
        missing = [k for k in ("name", "components", "f") if k not in data]
        if missing:
            raise VarPNError(f"{source}: missing {', '.join(missing)}")
        f = data["f"]
        if isinstance(f, str):
            f = [f]
        if not isinstance(data["components"], int) or len(f) != data["components"]:
            raise VarPNError(f"{source}: 'components' must equal the number of right-hand sides")
        metadata = {k: v for k, v in data.items() if k not in ("name", "components", "f")}
        return cls(str(data["name"]), data["components"], tuple(f), metadata)

    def context(self) -> EquationContext:
        entries = tuple(parse_expr(s) for s in self.f)
        return EquationContext(self.name, VecFun(entries, Role.SECTION))


def resolve_equation_path(ref: str | Path) -> Path:
    """A path as given, or the name of a bundled equation (with or without ``.json``)."""
    path = Path(ref)
    if path.exists():
        return path
    for candidate in (EQUATIONS_DIR / path.name, EQUATIONS_DIR / f"{path.name}.json"):
        if candidate.exists():
            return candidate
    raise VarPNError(f"no equation file {ref}")


def load_equation(ref: str | Path) -> EquationContext:
    path = resolve_equation_path(ref)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise VarPNError(f"{path}: invalid JSON: {exc}") from exc
    ctx = EquationFile.from_json(data, str(path)).context()
    logger.debug("loaded %s from %s", ctx, path)
    return ctx


def bundled_equations() -> list[str]:
    return sorted(p.stem for p in EQUATIONS_DIR.glob("*.json"))
