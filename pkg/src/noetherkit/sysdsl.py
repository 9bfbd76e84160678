"""Parser and renderer for the system-definition language.

A system file declares, in order: a name, the parameters (with optional
positivity assumptions), the coordinates, the Lagrangian, and one or more
transformation generators.  Sketch of the grammar (whitespace-insensitive,
``#`` starts a line comment):

    file        := header params coords lagrangian generator+
    header      := "system" STRING
    params      := "params" "{" [ IDENT [">" "0"] ("," IDENT [">" "0"])* ] "}"
    coords      := "coords" "{" IDENT ("," IDENT)* "}"
    lagrangian  := "lagrangian" "=" expr
    generator   := "generator" STRING "{" "delta" "{" (IDENT "=" expr)* "}"
                   ["delta_t" "=" expr] ["lambda" "=" expr] "}"
    expr        := infix arithmetic with + - * / ^, parentheses,
                   integer/decimal literals and declared symbols;
                   exponents are (optionally negated) integer literals.

Velocities are written ``d<coord>`` (e.g. ``dq1``).  Momentum symbols exist
only in output, never in input files.  Omitted ``delta`` entries and an
omitted ``delta_t`` default to zero; ``lambda`` is optional and, when
present, is verified downstream instead of being derived.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .symexpr import Expr, ExprError, SymbolTable, to_text

KEYWORDS = {"system", "params", "coords", "lagrangian", "generator",
            "delta", "delta_t", "lambda"}

_TOKEN_RE = re.compile(r"""
    (?P<COMMENT>\#[^\n]*)
  | (?P<WS>\s+)
  | (?P<STRING>"[^"\n]*")
  | (?P<NUMBER>\d+(?:\.\d+)?)
  | (?P<IDENT>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<OP>[{}=,^+\-*/()>])
""", re.VERBOSE)


class ParseError(Exception):
    """Syntax or validation failure, carrying the source position."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"line {line}, col {col}: {message}")
        self.message = message
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             line, pos - line_start + 1)
        kind = m.lastgroup or ""
        value = m.group()
        if kind not in ("WS", "COMMENT"):
            tokens.append(Token(kind, value, line, m.start() - line_start + 1))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("EOF", "", line, pos - line_start + 1))
    return tokens


@dataclass(frozen=True)
class GeneratorDecl:
    """One infinitesimal transformation: coordinate shifts, a time shift and
    an optional declared surface term."""

    name: str
    delta_q: tuple[Expr, ...]
    delta_t: Expr
    surface_term: Optional[Expr]


@dataclass(frozen=True)
class SystemSpec:
    """Parsed and validated system declaration."""

    name: str
    table: SymbolTable
    lagrangian: Expr
    generators: tuple[GeneratorDecl, ...]


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise ParseError(message, tok.line, tok.col)

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            got = tok.value if tok.value else tok.kind
            self.fail(f"expected {want!r}, got {got!r}")
        return self.next()

    def accept(self, kind: str, value: str | None = None) -> Token | None:
        tok = self.peek()
        if tok.kind == kind and (value is None or tok.value == value):
            return self.next()
        return None

    def expect_keyword(self, word: str) -> Token:
        tok = self.peek()
        if tok.kind != "IDENT" or tok.value != word:
            got = tok.value if tok.value else tok.kind
            self.fail(f"expected {word!r}, got {got!r}")
        return self.next()

    def ident(self, role: str) -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            self.fail(f"expected {role} name")
        if tok.value in KEYWORDS:
            self.fail(f"{tok.value!r} is a reserved word and cannot name a {role}")
        return self.next()

    # -- file structure -------------------------------------------------

    def parse_file(self) -> SystemSpec:
        self.expect_keyword("system")
        name = self.expect("STRING").value[1:-1]

        self.expect_keyword("params")
        self.expect("OP", "{")
        params: list[str] = []
        positive: list[str] = []
        if not self.accept("OP", "}"):
            while True:
                tok = self.ident("parameter")
                if tok.value in params:
                    self.fail(f"duplicate parameter {tok.value!r}", tok)
                params.append(tok.value)
                if self.accept("OP", ">"):
                    zero = self.expect("NUMBER")
                    if zero.value != "0":
                        self.fail("only '> 0' assumptions are supported", zero)
                    positive.append(tok.value)
                if self.accept("OP", "}"):
                    break
                self.expect("OP", ",")

        self.expect_keyword("coords")
        self.expect("OP", "{")
        coords: list[str] = []
        while True:
            tok = self.ident("coordinate")
            if tok.value in coords:
                self.fail(f"duplicate coordinate {tok.value!r}", tok)
            coords.append(tok.value)
            if self.accept("OP", "}"):
                break
            self.expect("OP", ",")

        header_tok = self.tokens[0]
        try:
            table = SymbolTable.build(coords, params, positive)
        except ExprError as exc:
            self.fail(str(exc), header_tok)

        self.expect_keyword("lagrangian")
        self.expect("OP", "=")
        lag_tok = self.peek()
        lagrangian = self.parse_expr(table)
        self._check_roles(lagrangian, table, lag_tok, "lagrangian",
                          allow_coords=True, allow_velocities=True, allow_time=True)

        generators: list[GeneratorDecl] = []
        while self.peek().kind != "EOF":
            generators.append(self.parse_generator(table))
        if not generators:
            self.fail("at least one generator is required")
        names = [g.name for g in generators]
        if len(set(names)) != len(names):
            self.fail("duplicate generator name", self.tokens[0])
        return SystemSpec(name, table, lagrangian, tuple(generators))

    def parse_generator(self, table: SymbolTable) -> GeneratorDecl:
        self.expect_keyword("generator")
        name = self.expect("STRING").value[1:-1]
        self.expect("OP", "{")

        self.expect_keyword("delta")
        self.expect("OP", "{")
        deltas: dict[str, Expr] = {}
        while not self.accept("OP", "}"):
            tok = self.ident("coordinate")
            if tok.value not in table.coords:
                self.fail(f"{tok.value!r} is not a declared coordinate", tok)
            if tok.value in deltas:
                self.fail(f"duplicate delta entry for {tok.value!r}", tok)
            self.expect("OP", "=")
            expr_tok = self.peek()
            e = self.parse_expr(table)
            self._check_roles(e, table, expr_tok, f"delta {tok.value}",
                              allow_coords=True, allow_time=True)
            deltas[tok.value] = e

        delta_t = table.zero()
        if self.peek().kind == "IDENT" and self.peek().value == "delta_t":
            self.next()
            self.expect("OP", "=")
            expr_tok = self.peek()
            delta_t = self.parse_expr(table)
            self._check_roles(delta_t, table, expr_tok, "delta_t",
                              allow_time=True)

        surface_term = None
        if self.peek().kind == "IDENT" and self.peek().value == "lambda":
            self.next()
            self.expect("OP", "=")
            expr_tok = self.peek()
            surface_term = self.parse_expr(table)
            self._check_roles(surface_term, table, expr_tok, "lambda",
                              allow_coords=True, allow_time=True)

        self.expect("OP", "}")
        delta_q = tuple(deltas.get(c, table.zero()) for c in table.coords)
        return GeneratorDecl(name, delta_q, delta_t, surface_term)

    def _check_roles(self, e: Expr, table: SymbolTable, tok: Token, what: str,
                     allow_coords: bool = False, allow_velocities: bool = False,
                     allow_time: bool = False) -> None:
        free = e.free_symbols()
        if free & set(table.momenta):
            self.fail(f"{what} must not reference momenta", tok)
        if free & set(table.accels):
            self.fail(f"{what} must not reference accelerations", tok)
        if not allow_velocities and free & set(table.velocities):
            self.fail(f"{what} must not reference velocities", tok)
        if not allow_coords and free & set(table.coords):
            self.fail(f"{what} must not reference coordinates", tok)
        if not allow_time and table.time in free:
            self.fail(f"{what} must not reference the time symbol", tok)

    # -- expressions ----------------------------------------------------

    def parse_expr(self, table: SymbolTable) -> Expr:
        e = self.parse_term(table)
        while True:
            if self.accept("OP", "+"):
                e = e + self.parse_term(table)
            elif self.accept("OP", "-"):
                e = e - self.parse_term(table)
            else:
                return e

    def parse_term(self, table: SymbolTable) -> Expr:
        e = self.parse_factor(table)
        while True:
            if self.accept("OP", "*"):
                e = e * self.parse_factor(table)
            elif self.accept("OP", "/"):
                tok = self.peek()
                rhs = self.parse_factor(table)
                try:
                    e = e / rhs
                except ZeroDivisionError:
                    self.fail("division by zero", tok)
                except ExprError as exc:
                    self.fail(str(exc), tok)
            else:
                return e

    def parse_factor(self, table: SymbolTable) -> Expr:
        if self.accept("OP", "-"):
            return -self.parse_factor(table)
        e = self.parse_atom(table)
        if self.accept("OP", "^"):
            sign = -1 if self.accept("OP", "-") else 1
            tok = self.expect("NUMBER")
            if "." in tok.value:
                self.fail("exponents must be integers", tok)
            try:
                e = e ** (sign * int(tok.value))
            except (ExprError, ZeroDivisionError) as exc:
                self.fail(str(exc), tok)
        return e

    def parse_atom(self, table: SymbolTable) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.next()
            return table.const(Fraction(tok.value))
        if tok.kind == "IDENT":
            if tok.value in KEYWORDS:
                self.fail(f"unexpected keyword {tok.value!r} in expression")
            if tok.value not in table:
                self.fail(f"unknown symbol {tok.value!r}", tok)
            if tok.value in table.momenta:
                self.fail(f"momentum symbol {tok.value!r} is not allowed in input", tok)
            self.next()
            return table.sym(tok.value)
        if tok.kind == "OP" and tok.value == "(":
            self.next()
            e = self.parse_expr(table)
            self.expect("OP", ")")
            return e
        self.fail("expected a number, symbol or parenthesized expression")
        raise AssertionError("unreachable")


def parse(text: str) -> SystemSpec:
    """Parse a system definition, raising ParseError with a source span."""
    return _Parser(_tokenize(text)).parse_file()


def render(spec: SystemSpec) -> str:
    """Render a spec so that ``parse(render(spec))`` equals ``spec``."""
    t = spec.table
    lines = [f'system "{spec.name}"']
    decls = [p + " > 0" if p in t.positive else p for p in t.params]
    lines.append("params { " + ", ".join(decls) + " }")
    lines.append("coords { " + ", ".join(t.coords) + " }")
    lines.append(f"lagrangian = {to_text(spec.lagrangian)}")
    for g in spec.generators:
        lines.append(f'generator "{g.name}" {{')
        entries = [f"  delta {{"]
        for c, e in zip(t.coords, g.delta_q):
            if not e.is_zero():
                entries.append(f"    {c} = {to_text(e)}")
        entries.append("  }")
        lines.extend(entries)
        if not g.delta_t.is_zero():
            lines.append(f"  delta_t = {to_text(g.delta_t)}")
        if g.surface_term is not None:
            lines.append(f"  lambda = {to_text(g.surface_term)}")
        lines.append("}")
    return "\n".join(lines) + "\n"
