"""Textual surface syntax for functor and relator expressions.

Functor grammar (composition binds tightest, then product, then sum):

    C{a,b}          constant functor at the set {a, b}
    Id              identity functor
    Pow             covariant powerset
    Exp{a,b}        exponential by the label set {a, b}
    MVal(file)      monoid-valued functor; the file holds the addition table
    F + G, F * G    sum and product
    F . G           composition (F after G)

Relator grammar:

    barr(F)                                   tabulation lifting
    cobarr(F)                                 cotabulation lifting
    submon(Exp{a,b}; gens: [(a,b),(b,b),(b,a)])
                                              submonoid lifting; several
                                              generator lists may be separated
                                              by bars: [...] | [...]
    upper(Pow), lower(Pow)                    one-sided powerset liftings
    comp(R1, R2), sum(R1,...), prod(R1,...)   combinators
    sup(R1,...), inf(R1,...)                  pointwise bounds
    upto-difun(R)                             difunctional-closure precomposition
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .finrel import FinRel, FinSet
from .functors import Comp, Const, Exp, Id, MVal, MonoidTable, Pow, Prod, Sum
from .relators import (
    Barr,
    CoBarr,
    CompOf,
    EgliMilnerHalf,
    PointwiseInf,
    PointwiseSup,
    ProdOf,
    SubmonoidExp,
    SumOf,
    UpToDifunctional,
)
from .submonoids import generate


class ParseError(ValueError):
    def __init__(self, message, position):
        super().__init__(f"at position {position}: {message}")
        self.position = position


_TOKEN = re.compile(
    r"\s*(?:(?P<lbrace>\{)|(?P<rbrace>\})|(?P<lparen>\()|(?P<rparen>\))"
    r"|(?P<lbracket>\[)|(?P<rbracket>\])|(?P<plus>\+)|(?P<star>\*)"
    r"|(?P<dot>\.)|(?P<comma>,)|(?P<semi>;)|(?P<colon>:)|(?P<bar>\|)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_\-]*)|(?P<number>\d+))"
)


@dataclass
class _Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            raise ParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Token("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, mval_loader=None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.mval_loader = mval_loader or load_monoid_table

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind}, found {tok.text or 'end of input'!r}", tok.pos)
        return tok

    def at_end(self) -> bool:
        return self.peek().kind == "eof"

    # --- functor expressions -------------------------------------------

    def functor(self):
        return self._sum()

    def _sum(self):
        parts = [self._product()]
        while self.peek().kind == "plus":
            self.next()
            parts.append(self._product())
        return parts[0] if len(parts) == 1 else Sum(tuple(parts))

    def _product(self):
        parts = [self._composition()]
        while self.peek().kind == "star":
            self.next()
            parts.append(self._composition())
        return parts[0] if len(parts) == 1 else Prod(tuple(parts))

    def _composition(self):
        head = self._atom()
        if self.peek().kind == "dot":
            self.next()
            return Comp(head, self._composition())
        return head

    def _atom(self):
        tok = self.peek()
        if tok.kind == "lparen":
            self.next()
            inner = self.functor()
            self.expect("rparen")
            return inner
        if tok.kind != "name" and tok.kind != "number":
            raise ParseError(f"expected a functor, found {tok.text or 'end of input'!r}", tok.pos)
        self.next()
        name = tok.text
        if name == "Id":
            return Id()
        if name == "Pow":
            return Pow()
        if name == "C":
            return Const(self._label_set())
        if name == "Exp":
            return Exp(self._label_set())
        if name == "MVal":
            self.expect("lparen")
            path_parts = []
            while self.peek().kind not in ("rparen", "eof"):
                path_parts.append(self.next().text)
            self.expect("rparen")
            return MVal(self.mval_loader("".join(path_parts)))
        raise ParseError(f"unknown functor {name!r}", tok.pos)

    def _label_set(self) -> FinSet:
        self.expect("lbrace")
        labels = []
        if self.peek().kind != "rbrace":
            while True:
                tok = self.next()
                if tok.kind not in ("name", "number"):
                    raise ParseError("expected a label", tok.pos)
                labels.append(tok.text)
                if self.peek().kind == "comma":
                    self.next()
                    continue
                break
        self.expect("rbrace")
        return FinSet(tuple(labels))

    # --- relator expressions -------------------------------------------

    def relator(self):
        tok = self.expect("name")
        name = tok.text
        if name == "barr":
            return Barr(self._functor_arg())
        if name == "cobarr":
            return CoBarr(self._functor_arg())
        if name == "upper":
            return EgliMilnerHalf(self._functor_arg(), "upper")
        if name == "lower":
            return EgliMilnerHalf(self._functor_arg(), "lower")
        if name == "submon":
            return self._submon()
        if name == "comp":
            parts = self._relator_args()
            if len(parts) != 2:
                raise ParseError("comp takes exactly two liftings", tok.pos)
            return CompOf(parts[0], parts[1])
        if name == "sum":
            return SumOf(tuple(self._relator_args()))
        if name == "prod":
            return ProdOf(tuple(self._relator_args()))
        if name == "sup":
            return PointwiseSup(tuple(self._relator_args()))
        if name == "inf":
            return PointwiseInf(tuple(self._relator_args()))
        if name == "upto-difun":
            parts = self._relator_args()
            if len(parts) != 1:
                raise ParseError("upto-difun takes exactly one lifting", tok.pos)
            return UpToDifunctional(parts[0])
        raise ParseError(f"unknown lifting {name!r}", tok.pos)

    def _functor_arg(self):
        self.expect("lparen")
        f = self.functor()
        self.expect("rparen")
        return f

    def _relator_args(self):
        self.expect("lparen")
        parts = [self.relator()]
        while self.peek().kind == "comma":
            self.next()
            parts.append(self.relator())
        self.expect("rparen")
        return parts

    def _submon(self):
        self.expect("lparen")
        functor = self.functor()
        if not isinstance(functor, Exp):
            raise ParseError("submon needs an exponential functor", self.peek().pos)
        labels = functor.labels
        gens = []
        if self.peek().kind == "semi":
            self.next()
            key = self.expect("name")
            if key.text != "gens":
                raise ParseError("expected 'gens:'", key.pos)
            self.expect("colon")
            gens.append(self._pair_list(labels))
            while self.peek().kind in ("bar", "comma"):
                self.next()
                gens.append(self._pair_list(labels))
        self.expect("rparen")
        relations = [FinRel.from_pairs(labels, labels, pairs) for pairs in gens]
        return SubmonoidExp(labels, generate(labels, relations))

    def _pair_list(self, labels: FinSet):
        self.expect("lbracket")
        pairs = []
        if self.peek().kind != "rbracket":
            while True:
                self.expect("lparen")
                first = self.next()
                self.expect("comma")
                second = self.next()
                self.expect("rparen")
                pairs.append((first.text, second.text))
                if self.peek().kind == "comma":
                    self.next()
                    continue
                break
        self.expect("rbracket")
        for x, y in pairs:
            if x not in labels or y not in labels:
                raise ParseError(f"pair ({x},{y}) uses labels outside the alphabet", 0)
        return pairs


def parse_functor(text: str, mval_loader=None):
    parser = _Parser(text, mval_loader)
    out = parser.functor()
    if not parser.at_end():
        tok = parser.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.pos)
    return out


def parse_relator(text: str, mval_loader=None):
    parser = _Parser(text, mval_loader)
    out = parser.relator()
    if not parser.at_end():
        tok = parser.peek()
        raise ParseError(f"trailing input {tok.text!r}", tok.pos)
    return out


def load_monoid_table(path: str) -> MonoidTable:
    """Monoid table file: {"elements": [...], "unit": ..., "table": [[...], ...]}
    with table entries given as element labels."""
    with open(path) as fh:
        doc = json.load(fh)
    carrier = FinSet(tuple(doc["elements"]))
    table = tuple(
        tuple(carrier.index(entry) for entry in row) for row in doc["table"]
    )
    return MonoidTable(carrier, doc["unit"], table)


def functor_to_text(expr) -> str:
    """Render an expression in the surface syntax; parses back to an equal value."""
    return _render(expr, 0)


def _render(expr, ctx: int) -> str:
    # precedence: sum 0 < product 1 < composition 2 < atoms 3
    if isinstance(expr, Const):
        return "C{" + ",".join(str(x) for x in expr.value.elements) + "}"
    if isinstance(expr, Id):
        return "Id"
    if isinstance(expr, Pow):
        return "Pow"
    if isinstance(expr, Exp):
        return "Exp{" + ",".join(str(x) for x in expr.labels.elements) + "}"
    if isinstance(expr, MVal):
        raise ValueError("monoid-valued functors render only via their table file")
    if isinstance(expr, Sum):
        text, prec = " + ".join(_render(p, 1) for p in expr.parts), 0
    elif isinstance(expr, Prod):
        text, prec = " * ".join(_render(p, 2) for p in expr.parts), 1
    elif isinstance(expr, Comp):
        text, prec = f"{_render(expr.outer, 3)} . {_render(expr.inner, 2)}", 2
    else:
        raise TypeError(f"not a functor expression: {expr!r}")
    return f"({text})" if prec < ctx else text
