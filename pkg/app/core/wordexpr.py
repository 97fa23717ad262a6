"""A small expression language for algebra elements.

    expr    := term (("+" | "-") term)*
    term    := factor ("*"? factor)*
    factor  := "-" factor | NUMBER | LETTER | "(" expr ")" ["*"]

Letters are a, b and the split halves a+, a-, b+, b-, each with an optional
adjoint star: "a* a + b* b". A star directly after ")" is an adjoint; a
free-standing star is a product.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .ncpoly import NCPoly


class WordSyntaxError(ValueError):
    def __init__(self, message: str, column: int) -> None:
        super().__init__(f"{message} at column {column}")
        self.column = column


# ─── Tree ───

@dataclass(frozen=True)
class Letter:
    name: str


@dataclass(frozen=True)
class Number:
    value: complex


@dataclass(frozen=True)
class Sum:
    items: tuple[tuple[int, "WordExpr"], ...]


@dataclass(frozen=True)
class Product:
    factors: tuple["WordExpr", ...]


@dataclass(frozen=True)
class Adjoint:
    node: "WordExpr"


@dataclass(frozen=True)
class Neg:
    node: "WordExpr"


WordExpr = Union[Letter, Number, Sum, Product, Adjoint, Neg]


# ─── Tokenizer ───

_TOKEN_RE = re.compile(
    r"(?P<ws>\s+)"
    r"|(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)"
    r"|(?P<letter>[ab][+-]?\*?)"
    r"|(?P<op>[-+*()])"
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    column: int
    glued: bool  # no whitespace before it


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    glued = True
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise WordSyntaxError(f"unknown token {text[pos]!r}", pos + 1)
        kind = m.lastgroup or ""
        if kind == "ws":
            glued = False
        else:
            tokens.append(_Token(kind, m.group(), pos + 1, glued))
            glued = True
        pos = m.end()
    return tokens


# ─── Parser ───

class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def take(self) -> _Token:
        tok = self.peek()
        if tok is None:
            raise WordSyntaxError("unexpected end of input", max(len(self.text), 1))
        self.i += 1
        return tok

    def expr(self) -> WordExpr:
        items: list[tuple[int, WordExpr]] = [(1, self.term())]
        while (tok := self.peek()) is not None and tok.kind == "op" and tok.text in "+-":
            self.take()
            items.append((1 if tok.text == "+" else -1, self.term()))
        return items[0][1] if len(items) == 1 else Sum(tuple(items))

    def _starts_factor(self, tok: _Token | None) -> bool:
        return tok is not None and (tok.kind in ("number", "letter") or tok.text == "(")

    def term(self) -> WordExpr:
        factors = [self.factor()]
        while True:
            tok = self.peek()
            if tok is not None and tok.text == "*":
                self.take()
                factors.append(self.factor())
            elif self._starts_factor(tok):
                factors.append(self.factor())
            else:
                break
        return factors[0] if len(factors) == 1 else Product(tuple(factors))

    def factor(self) -> WordExpr:
        tok = self.take()
        if tok.text == "-":
            return Neg(self.factor())
        if tok.kind == "number":
            return Number(complex(tok.text))
        if tok.kind == "letter":
            return Letter(tok.text)
        if tok.text == "(":
            inner = self.expr()
            close = self.take()
            if close.text != ")":
                raise WordSyntaxError(f"expected ')' but found {close.text!r}", close.column)
            nxt = self.peek()
            if nxt is not None and nxt.text == "*" and nxt.glued:
                self.take()
                return Adjoint(inner)
            return inner
        raise WordSyntaxError(f"unexpected {tok.text!r}", tok.column)


def parse_word(text: str) -> WordExpr:
    parser = _Parser(text)
    if not parser.tokens:
        raise WordSyntaxError("empty expression", 1)
    tree = parser.expr()
    tok = parser.peek()
    if tok is not None:
        raise WordSyntaxError(f"unexpected {tok.text!r}", tok.column)
    return tree


# ─── Printer and evaluation ───

def _fmt_number(z: complex) -> str:
    if z.imag == 0:
        return repr(z.real)
    if z.real == 0:
        return f"{z.imag!r}j"
    return f"({z.real!r} + {z.imag!r}j)"


def to_text(node: WordExpr) -> str:
    if isinstance(node, Letter):
        return node.name
    if isinstance(node, Number):
        return _fmt_number(node.value)
    if isinstance(node, Neg):
        inner = to_text(node.node)
        return f"-({inner})" if isinstance(node.node, (Sum, Product)) else f"-{inner}"
    if isinstance(node, Adjoint):
        return f"({to_text(node.node)})*"
    if isinstance(node, Product):
        parts = []
        for f in node.factors:
            s = to_text(f)
            parts.append(f"({s})" if isinstance(f, (Sum, Product, Neg)) else s)
        return " ".join(parts)
    parts = []
    for i, (sign, item) in enumerate(node.items):
        s = to_text(item)
        if isinstance(item, (Sum, Neg)):
            s = f"({s})"
        if i == 0:
            parts.append(s)
        else:
            parts.append(("+ " if sign > 0 else "- ") + s)
    return " ".join(parts)


def evaluate(node: WordExpr) -> NCPoly:
    if isinstance(node, Letter):
        return NCPoly.word(node.name)
    if isinstance(node, Number):
        return NCPoly.const(node.value)
    if isinstance(node, Neg):
        return -evaluate(node.node)
    if isinstance(node, Adjoint):
        return evaluate(node.node).adjoint()
    if isinstance(node, Product):
        out = NCPoly.one()
        for f in node.factors:
            out = out * evaluate(f)
        return out
    out = NCPoly.zero()
    for sign, item in node.items:
        out = out + evaluate(item) * sign
    return out


def parse_poly(text: str) -> NCPoly:
    return evaluate(parse_word(text))
