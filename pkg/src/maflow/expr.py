"""Recursive-descent parser for user-supplied scalar expressions.

Grammar (whitespace insignificant):
    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := atom ('^' atom)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')' | '-' atom

'^' exponents must be constants (a number, possibly negated/parenthesized);
note that '-x^2' parses as '(-x)^2' because unary minus binds at the atom
level. Identifiers resolve against the evaluation environment first and the
function table second; evaluation works on floats and jets alike.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import jets as _jets
from .errors import ArityError, ParseError, UnknownIdentifier
from .jets import Jet

FUNCTIONS = {name: getattr(_jets, name)
             for name in ("sin", "cos", "tan", "exp", "log", "sqrt",
                          "sinh", "cosh", "atan")}


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: float


_NUMBER = re.compile(r"(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")


def _tokenize(text: str):
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _NUMBER.match(text, pos)
        if m:
            tokens.append(("num", float(m.group(0)), pos))
            pos = m.end()
            continue
        m = _IDENT.match(text, pos)
        if m:
            tokens.append(("ident", m.group(0), pos))
            pos = m.end()
            continue
        ch = text[pos]
        if ch in "()+-*/^":
            tokens.append(("op", ch, pos))
            pos += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", pos)
    tokens.append(("end", None, n))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, ch):
        kind, val, off = self.peek()
        if kind == "op" and val == ch:
            return self.advance()
        raise ParseError(f"expected {ch!r}", off)

    def parse(self):
        node = self.expr()
        kind, val, off = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", off)
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = Bin(val, node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                node = Bin(val, node, self.factor())
            else:
                return node

    def factor(self):
        node = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.advance()
            _, _, off = self.peek()
            exponent = self.atom()
            const = _const_value(exponent)
            if const is None:
                raise ParseError("exponent must be a constant", off)
            return Pow(node, const)
        return node

    def atom(self):
        kind, val, off = self.peek()
        if kind == "num":
            self.advance()
            return Num(val)
        if kind == "ident":
            self.advance()
            nkind, nval, _ = self.peek()
            if nkind == "op" and nval == "(":
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return Call(val, arg)
            return Ident(val)
        if kind == "op" and val == "(":
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.atom())
        raise ParseError(f"unexpected token {val!r}", off)


def _const_value(node):
    """Constant-fold a pure-number subtree; None if it references names."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Neg):
        inner = _const_value(node.arg)
        return None if inner is None else -inner
    if isinstance(node, Bin):
        left, right = _const_value(node.left), _const_value(node.right)
        if left is None or right is None:
            return None
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right
    if isinstance(node, Pow):
        base = _const_value(node.base)
        return None if base is None else base ** node.exponent
    return None


def parse_expression(text: str):
    """Parse text into an AST; identifiers stay unresolved until evaluation."""
    return _Parser(_tokenize(text)).parse()


def evaluate(node, env):
    """Evaluate an AST over an environment of floats and/or jets."""
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Ident):
        if node.name in env:
            return env[node.name]
        if node.name in FUNCTIONS:
            raise ArityError(f"function {node.name!r} used without arguments")
        raise UnknownIdentifier(f"unknown identifier {node.name!r}")
    if isinstance(node, Call):
        if node.name in env:
            raise ArityError(f"{node.name!r} is not a function")
        fn = FUNCTIONS.get(node.name)
        if fn is None:
            raise UnknownIdentifier(f"unknown function {node.name!r}")
        return fn(evaluate(node.arg, env))
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Bin):
        left = evaluate(node.left, env)
        right = evaluate(node.right, env)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        return left / right
    if isinstance(node, Pow):
        base = evaluate(node.base, env)
        if isinstance(base, Jet):
            return base ** node.exponent
        if node.exponent != int(node.exponent) and base <= 0:
            from .errors import DomainError
            raise DomainError(f"non-integer power of non-positive base {base}")
        return base ** node.exponent
    raise TypeError(f"not an expression node: {node!r}")


def free_names(node, acc=None):
    """Identifiers referenced as variables (not function calls)."""
    if acc is None:
        acc = set()
    if isinstance(node, Ident):
        acc.add(node.name)
    elif isinstance(node, Call):
        free_names(node.arg, acc)
    elif isinstance(node, Neg):
        free_names(node.arg, acc)
    elif isinstance(node, Bin):
        free_names(node.left, acc)
        free_names(node.right, acc)
    elif isinstance(node, Pow):
        free_names(node.base, acc)
    return acc


def to_string(node):
    """Deterministic, re-parseable rendering of an AST."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Ident):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({to_string(node.arg)})"
    if isinstance(node, Neg):
        return f"(-{to_string(node.arg)})"
    if isinstance(node, Bin):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    if isinstance(node, Pow):
        exp = node.exponent
        rendered = repr(exp) if exp >= 0 else f"(-{repr(-exp)})"
        return f"({to_string(node.base)} ^ {rendered})"
    raise TypeError(f"not an expression node: {node!r}")
