"""Parser and evaluator for search-space restriction expressions.

Grammar::

    expr    :: or
    or      :: and ('or' and)*
    and     :: not ('and' not)*
    not     :: 'not' not | compare
    compare :: arith (CMP arith)*          # chained like Python: a < b < c
    arith   :: term (('+' | '-') term)*
    term    :: unary (('*' | '/' | '%') unary)*
    unary   :: '-' unary | '+' unary | atom
    atom    :: NUMBER | STRING | 'True' | 'False' | NAME | '(' expr ')'

Expressions are type checked against the declared parameter kinds when
parsed, and compiled into closures so that filtering a large Cartesian
product stays cheap.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

__all__ = [
    "RestrictionError",
    "RestrictionSyntaxError",
    "UnknownIdentifierError",
    "RestrictionTypeError",
    "Restriction",
    "parse_restriction",
]


class RestrictionError(ValueError):
    """Base class for all restriction problems."""


class RestrictionSyntaxError(RestrictionError):
    def __init__(self, message: str, text: str, position: int):
        self.position = position
        self.text = text
        pointer = " " * position + "^"
        super().__init__(f"{message} at position {position}\n  {text}\n  {pointer}")


class UnknownIdentifierError(RestrictionError):
    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"unknown identifier {name!r} at position {position}")


class RestrictionTypeError(RestrictionError):
    pass


# Node types -----------------------------------------------------------------

NUM, STR, BOOL = "number", "string", "boolean"


@dataclass(frozen=True)
class Literal:
    value: Any


@dataclass(frozen=True)
class Name:
    id: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str
    operand: Any


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Any
    right: Any


@dataclass(frozen=True)
class Compare:
    first: Any
    ops: tuple[str, ...]
    rest: tuple[Any, ...]


@dataclass(frozen=True)
class BoolOp:
    op: str  # 'and' | 'or'
    values: tuple[Any, ...]


# Tokenizer ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<string>'[^']*'|"[^"]*")
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>==|!=|<=|>=|<|>|\+|-|\*|/|%|\(|\))
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "not", "True", "False", "true", "false"}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise RestrictionSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind != "ws":
            tok = m.group(kind)
            if kind == "name" and tok in _KEYWORDS:
                kind = "keyword"
            tokens.append(_Token(kind, tok, pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def _advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _accept(self, *texts: str) -> _Token | None:
        if self.tok.kind in ("op", "keyword") and self.tok.text in texts:
            return self._advance()
        return None

    def _fail(self, message: str):
        tok = self.tok
        found = "end of expression" if tok.kind == "end" else repr(tok.text)
        raise RestrictionSyntaxError(f"{message}, found {found}", self.text, tok.pos)

    def parse(self):
        node = self._or()
        if self.tok.kind != "end":
            self._fail("expected operator or end of expression")
        return node

    def _or(self):
        values = [self._and()]
        while self._accept("or"):
            values.append(self._and())
        return values[0] if len(values) == 1 else BoolOp("or", tuple(values))

    def _and(self):
        values = [self._not()]
        while self._accept("and"):
            values.append(self._not())
        return values[0] if len(values) == 1 else BoolOp("and", tuple(values))

    def _not(self):
        if self._accept("not"):
            return Unary("not", self._not())
        return self._compare()

    def _compare(self):
        first = self._arith()
        ops, rest = [], []
        while (tok := self._accept("==", "!=", "<", "<=", ">", ">=")) is not None:
            ops.append(tok.text)
            rest.append(self._arith())
        if not ops:
            return first
        return Compare(first, tuple(ops), tuple(rest))

    def _arith(self):
        node = self._term()
        while (tok := self._accept("+", "-")) is not None:
            node = BinOp(tok.text, node, self._term())
        return node

    def _term(self):
        node = self._unary()
        while (tok := self._accept("*", "/", "%")) is not None:
            node = BinOp(tok.text, node, self._unary())
        return node

    def _unary(self):
        if (tok := self._accept("-", "+")) is not None:
            return Unary(tok.text, self._unary())
        return self._atom()

    def _atom(self):
        tok = self.tok
        if tok.kind == "number":
            self._advance()
            text = tok.text
            is_float = any(c in text for c in ".eE")
            return Literal(float(text) if is_float else int(text))
        if tok.kind == "string":
            self._advance()
            return Literal(tok.text[1:-1])
        if tok.kind == "keyword" and tok.text in ("True", "true"):
            self._advance()
            return Literal(True)
        if tok.kind == "keyword" and tok.text in ("False", "false"):
            self._advance()
            return Literal(False)
        if tok.kind == "name":
            self._advance()
            return Name(tok.text, tok.pos)
        if self._accept("("):
            node = self._or()
            if not self._accept(")"):
                self._fail("expected ')'")
            return node
        self._fail("expected a value, name or '('")


# Static checking ------------------------------------------------------------


def _literal_type(value: Any) -> str:
    if isinstance(value, bool):
        return BOOL
    if isinstance(value, (int, float)):
        return NUM
    if isinstance(value, str):
        return STR
    raise RestrictionTypeError(f"unsupported literal {value!r}")


def _check(node, types: Mapping[str, str]) -> str:
    if isinstance(node, Literal):
        return _literal_type(node.value)
    if isinstance(node, Name):
        if node.id not in types:
            raise UnknownIdentifierError(node.id, node.pos)
        return types[node.id]
    if isinstance(node, Unary):
        t = _check(node.operand, types)
        if node.op == "not":
            if t != BOOL:
                raise RestrictionTypeError(f"'not' needs a boolean operand, got {t}")
            return BOOL
        if t != NUM:
            raise RestrictionTypeError(f"unary {node.op!r} needs a number, got {t}")
        return NUM
    if isinstance(node, BinOp):
        lt, rt = _check(node.left, types), _check(node.right, types)
        if lt != NUM or rt != NUM:
            raise RestrictionTypeError(f"operator {node.op!r} needs numbers, got {lt} and {rt}")
        return NUM
    if isinstance(node, BoolOp):
        for v in node.values:
            t = _check(v, types)
            if t != BOOL:
                raise RestrictionTypeError(f"'{node.op}' needs boolean operands, got {t}")
        return BOOL
    if isinstance(node, Compare):
        operands = [node.first, *node.rest]
        kinds = [_check(o, types) for o in operands]
        for op, a, b in zip(node.ops, kinds, kinds[1:]):
            if a != b:
                raise RestrictionTypeError(f"cannot compare {a} with {b} using {op!r}")
            if op not in ("==", "!=") and a == BOOL:
                raise RestrictionTypeError(f"ordering comparison {op!r} on booleans")
        return BOOL
    raise TypeError(f"unknown node {node!r}")


# Compilation ----------------------------------------------------------------

_BINOPS: dict[str, Callable[[Any, Any], Any]] = {
    "+": operator.add,
    "-": operator.sub,
    "*": operator.mul,
    "/": operator.truediv,
    "%": operator.mod,
}
_CMPOPS: dict[str, Callable[[Any, Any], bool]] = {
    "==": operator.eq,
    "!=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
}

Env = Sequence[Any]


def _compile(node, slots: Mapping[str, int]) -> Callable[[Env], Any]:
    if isinstance(node, Literal):
        value = node.value
        return lambda env: value
    if isinstance(node, Name):
        slot = slots[node.id]
        return lambda env: env[slot]
    if isinstance(node, Unary):
        inner = _compile(node.operand, slots)
        if node.op == "not":
            return lambda env: not inner(env)
        if node.op == "-":
            return lambda env: -inner(env)
        return inner
    if isinstance(node, BinOp):
        fn = _BINOPS[node.op]
        left, right = _compile(node.left, slots), _compile(node.right, slots)
        return lambda env: fn(left(env), right(env))
    if isinstance(node, BoolOp):
        parts = [_compile(v, slots) for v in node.values]
        if node.op == "and":
            return lambda env: all(p(env) for p in parts)
        return lambda env: any(p(env) for p in parts)
    if isinstance(node, Compare):
        operands = [_compile(o, slots) for o in (node.first, *node.rest)]
        fns = [_CMPOPS[op] for op in node.ops]
        if len(fns) == 1:
            fn, left, right = fns[0], operands[0], operands[1]
            return lambda env: fn(left(env), right(env))

        def chained(env):
            prev = operands[0](env)
            for fn, rhs in zip(fns, operands[1:]):
                cur = rhs(env)
                if not fn(prev, cur):
                    return False
                prev = cur
            return True

        return chained
    raise TypeError(f"unknown node {node!r}")


def _names(node) -> set[str]:
    if isinstance(node, Name):
        return {node.id}
    if isinstance(node, Literal):
        return set()
    if isinstance(node, Unary):
        return _names(node.operand)
    if isinstance(node, BinOp):
        return _names(node.left) | _names(node.right)
    if isinstance(node, BoolOp):
        return set().union(*(_names(v) for v in node.values))
    if isinstance(node, Compare):
        return set().union(*(_names(o) for o in (node.first, *node.rest)))
    raise TypeError(f"unknown node {node!r}")


@dataclass(frozen=True)
class Restriction:
    """A parsed, type-checked restriction bound to a parameter ordering."""

    source: str
    ast: Any
    param_names: tuple[str, ...]
    _fn: Callable[[Env], Any] = field(repr=False, compare=False)

    @property
    def names(self) -> set[str]:
        return _names(self.ast)

    def evaluate(self, values: Sequence[Any]) -> bool:
        """Evaluate on a full configuration given in parameter order.

        Raises ``RestrictionError`` if the expression cannot be evaluated
        (for example a division by zero); it never returns a non-boolean.
        """
        try:
            result = self._fn(values)
        except (ZeroDivisionError, ArithmeticError, TypeError) as exc:
            config = dict(zip(self.param_names, values))
            raise RestrictionError(
                f"restriction {self.source!r} failed on {config}: {exc}"
            ) from exc
        return bool(result)

    def __call__(self, values: Sequence[Any]) -> bool:
        return self.evaluate(values)


def _param_type(param) -> str:
    kind = getattr(param, "kind", None)
    if kind == "numeric":
        return NUM
    if kind == "boolean":
        return BOOL
    if kind == "categorical":
        types = {_literal_type(v) for v in param.values}
        if len(types) != 1:
            raise RestrictionTypeError(
                f"categorical parameter {param.name!r} mixes value types {sorted(types)}"
            )
        return types.pop()
    raise RestrictionTypeError(f"parameter {param.name!r} has unknown kind {kind!r}")


def parse_restriction(text: str, params: Sequence[Any]) -> Restriction:
    """Parse ``text`` into a Restriction over ``params``.

    ``params`` is a sequence of objects with ``name``, ``kind`` and
    ``values`` attributes (normally :class:`bayestune.space.ParameterDef`).
    """
    if not text or not text.strip():
        raise RestrictionSyntaxError("empty expression", text or "", 0)
    ast = _Parser(text).parse()
    types = {p.name: _param_type(p) for p in params}
    result_type = _check(ast, types)
    if result_type != BOOL:
        raise RestrictionTypeError(
            f"restriction {text!r} evaluates to a {result_type}, not a boolean"
        )
    slots = {p.name: i for i, p in enumerate(params)}
    return Restriction(
        source=text,
        ast=ast,
        param_names=tuple(p.name for p in params),
        _fn=_compile(ast, slots),
    )
