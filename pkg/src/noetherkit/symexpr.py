"""Exact symbolic kernel used by every other module.

Expressions are Laurent polynomials over the rationals: finite sums of
monomials in the registered symbols, with exact ``Fraction`` coefficients
and integer (possibly negative) exponents.  Every ``Expr`` is kept in a
canonical expanded form from the moment it is built, with terms ordered
graded-lexicographically by the symbol table's declaration order.  Two
expressions that are equal as rational functions are therefore structurally
identical, and the zero test is exact: an expression is identically zero
iff it has no terms.

All values are immutable and all operations are pure functions, so the
kernel is safe to use concurrently without coordination.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Union

Scalar = Union[int, Fraction]


class ExprError(Exception):
    """Base class for symbolic-kernel failures."""


class UnknownSymbolError(ExprError):
    """A name was used that is not registered in the symbol table."""


class DomainError(ExprError):
    """The requested operation leaves the Laurent-polynomial class."""


@dataclass(frozen=True)
class SymbolTable:
    """Registry of all scalar symbols of one mechanical system.

    Categories: generalized coordinates, their velocities and accelerations,
    conjugate momenta, named parameters and the time symbol.  Velocity,
    acceleration and momentum names are derived from the coordinate names,
    so declaring the coordinates and parameters fixes the whole table.
    Acceleration symbols never appear in input files; they exist so total
    time derivatives of velocity-dependent expressions stay in the class.
    """

    coords: tuple[str, ...]
    velocities: tuple[str, ...]
    momenta: tuple[str, ...]
    params: tuple[str, ...]
    time: str
    positive: frozenset[str]
    accels: tuple[str, ...]

    @staticmethod
    def build(coords: Iterable[str], params: Iterable[str] = (),
              positive: Iterable[str] = (), time: str = "t") -> "SymbolTable":
        coords = tuple(coords)
        params = tuple(params)
        if not coords:
            raise ExprError("at least one coordinate is required")
        velocities = tuple("d" + c for c in coords)
        momenta = tuple(_momentum_name(c) for c in coords)
        accels = tuple("dd" + c for c in coords)
        table = SymbolTable(coords, velocities, momenta, params, time,
                            frozenset(positive), accels)
        names = table.names
        if len(set(names)) != len(names):
            seen: set[str] = set()
            for n in names:
                if n in seen:
                    raise ExprError(f"symbol name collision: {n!r}")
                seen.add(n)
        unknown_positive = set(positive) - set(params)
        if unknown_positive:
            raise ExprError(f"positivity declared for unknown parameter(s): "
                            f"{sorted(unknown_positive)}")
        return table

    @property
    def names(self) -> tuple[str, ...]:
        return (self.coords + self.velocities + self.momenta
                + self.params + (self.time,) + self.accels)

    def index(self, name: str) -> int:
        try:
            return self._index_map[name]
        except KeyError:
            raise UnknownSymbolError(f"unregistered symbol {name!r}") from None

    @property
    def _index_map(self) -> dict[str, int]:
        cached = self.__dict__.get("_index_cache")
        if cached is None:
            cached = {n: i for i, n in enumerate(self.names)}
            self.__dict__["_index_cache"] = cached
        return cached

    def __contains__(self, name: str) -> bool:
        return name in self._index_map

    # -- constructors -------------------------------------------------

    def const(self, value: Scalar) -> "Expr":
        c = Fraction(value)
        if c == 0:
            return Expr(self, ())
        zero_mon = (0,) * len(self.names)
        return Expr(self, ((zero_mon, c),))

    def zero(self) -> "Expr":
        return self.const(0)

    def one(self) -> "Expr":
        return self.const(1)

    def sym(self, name: str) -> "Expr":
        i = self.index(name)
        mon = tuple(1 if j == i else 0 for j in range(len(self.names)))
        return Expr(self, ((mon, Fraction(1)),))

    def syms(self, *names: str) -> tuple["Expr", ...]:
        return tuple(self.sym(n) for n in names)


def _momentum_name(coord: str) -> str:
    # q-prefixed coordinates get the traditional p-name (q1 -> p1);
    # anything else gets an unambiguous p_ prefix.
    if len(coord) > 1 and coord.startswith("q"):
        return "p" + coord[1:]
    return "p_" + coord


Monomial = tuple[int, ...]
Term = tuple[Monomial, Fraction]


def _grlex_key(mon: Monomial) -> tuple[int, Monomial]:
    return (sum(mon), mon)


@dataclass(frozen=True)
class Expr:
    """Immutable expression in canonical expanded form.

    ``terms`` maps each monomial (exponent vector over ``table.names``) to a
    nonzero rational coefficient, stored as a tuple sorted in descending
    graded-lexicographic order.  Do not construct directly; use the
    ``SymbolTable`` constructors and arithmetic operators.
    """

    table: SymbolTable
    terms: tuple[Term, ...]

    # -- basic queries -------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def as_fraction(self) -> Fraction | None:
        """The exact rational value if the expression is constant, else None."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and not any(self.terms[0][0]):
            return self.terms[0][1]
        return None

    def free_symbols(self) -> frozenset[str]:
        names = self.table.names
        out: set[str] = set()
        for mon, _ in self.terms:
            for i, e in enumerate(mon):
                if e:
                    out.add(names[i])
        return frozenset(out)

    def degree_in(self, name: str) -> int:
        """Largest exponent of ``name`` over all terms (0 if absent)."""
        i = self.table.index(name)
        return max((mon[i] for mon, _ in self.terms), default=0)

    def min_exponent_in(self, name: str) -> int:
        i = self.table.index(name)
        return min((mon[i] for mon, _ in self.terms), default=0)

    def degree_over(self, names: Iterable[str]) -> int:
        """Largest combined degree in ``names`` over all terms."""
        idx = [self.table.index(n) for n in names]
        return max((sum(mon[i] for i in idx) for mon, _ in self.terms), default=0)

    # -- arithmetic ----------------------------------------------------

    def _coerce(self, other) -> "Expr":
        if isinstance(other, Expr):
            if other.table is not self.table and other.table != self.table:
                raise ExprError("cannot combine expressions from different symbol tables")
            return other
        if isinstance(other, (int, Fraction)):
            return self.table.const(other)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other) -> "Expr":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = dict(self.terms)
        for mon, c in other.terms:
            acc[mon] = acc.get(mon, Fraction(0)) + c
        return _from_dict(self.table, acc)

    __radd__ = __add__

    def __neg__(self) -> "Expr":
        return Expr(self.table, tuple((mon, -c) for mon, c in self.terms))

    def __sub__(self, other) -> "Expr":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Expr":
        return (-self) + other

    def __mul__(self, other) -> "Expr":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc: dict[Monomial, Fraction] = {}
        for m1, c1 in self.terms:
            for m2, c2 in other.terms:
                mon = tuple(a + b for a, b in zip(m1, m2))
                acc[mon] = acc.get(mon, Fraction(0)) + c1 * c2
        return _from_dict(self.table, acc)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Expr":
        if not isinstance(exponent, int):
            raise DomainError("exponents must be integers")
        if exponent == 0:
            return self.table.one()
        if exponent < 0:
            if self.is_zero():
                raise ZeroDivisionError("zero expression raised to a negative power")
            if len(self.terms) != 1:
                raise DomainError(
                    "negative powers are only defined for single-term expressions")
            mon, c = self.terms[0]
            return Expr(self.table,
                        ((tuple(e * exponent for e in mon), c ** exponent),))
        out = self
        for _ in range(exponent - 1):
            out = out * self
        return out

    def __truediv__(self, other) -> "Expr":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other ** -1

    def __rtruediv__(self, other) -> "Expr":
        return self._coerce(other) / self

    def __str__(self) -> str:
        return to_text(self)

    def __repr__(self) -> str:
        return f"Expr({to_text(self)})"

    # -- calculus and substitution --------------------------------------

    def diff(self, name: str) -> "Expr":
        """Partial derivative, treating every other symbol as independent."""
        i = self.table.index(name)
        acc: dict[Monomial, Fraction] = {}
        for mon, c in self.terms:
            e = mon[i]
            if e == 0:
                continue
            new = tuple(x - 1 if j == i else x for j, x in enumerate(mon))
            acc[new] = acc.get(new, Fraction(0)) + c * e
        return _from_dict(self.table, acc)

    def subs(self, bindings: Mapping[str, "Expr | Scalar"]) -> "Expr":
        """Simultaneous substitution; the result is canonical by construction."""
        if not bindings:
            return self
        table = self.table
        idx_to_value: dict[int, Expr] = {}
        for name, value in bindings.items():
            i = table.index(name)
            idx_to_value[i] = value if isinstance(value, Expr) else table.const(value)
        out = table.zero()
        for mon, c in self.terms:
            piece = table.const(c)
            for i, e in enumerate(mon):
                if e == 0:
                    continue
                if i in idx_to_value:
                    piece = piece * idx_to_value[i] ** e
                else:
                    mon_i = tuple(e if j == i else 0 for j in range(len(mon)))
                    piece = piece * Expr(table, ((mon_i, Fraction(1)),))
            out = out + piece
        return out

    def eval(self, point: Mapping[str, float]) -> float:
        """Floating-point evaluation; every free symbol must be bound."""
        names = self.table.names
        total = 0.0
        for mon, c in self.terms:
            value = float(c)
            for i, e in enumerate(mon):
                if e == 0:
                    continue
                name = names[i]
                if name not in point:
                    raise UnknownSymbolError(f"unbound symbol {name!r} in numeric evaluation")
                value *= float(point[name]) ** e
            total += value
        return total


def _from_dict(table: SymbolTable, acc: dict[Monomial, Fraction]) -> Expr:
    terms = tuple(sorted(((m, c) for m, c in acc.items() if c != 0),
                         key=lambda t: _grlex_key(t[0]), reverse=True))
    return Expr(table, terms)


def from_terms(table: SymbolTable, pairs: Iterable[Term]) -> Expr:
    """Build a canonical expression from raw (monomial, coefficient) pairs."""
    acc: dict[Monomial, Fraction] = {}
    for mon, c in pairs:
        acc[mon] = acc.get(mon, Fraction(0)) + c
    return _from_dict(table, acc)


# -- module-level operation aliases ------------------------------------

def normalize(e: Expr) -> Expr:
    """Canonical form of ``e``.

    Expressions are canonicalized eagerly on construction, so this is the
    identity; it exists so callers can state the intent explicitly.
    Idempotent by construction.
    """
    return e


def diff(e: Expr, name: str) -> Expr:
    return e.diff(name)


def substitute(e: Expr, bindings: Mapping[str, Expr | Scalar]) -> Expr:
    return e.subs(bindings)


def eval_numeric(e: Expr, point: Mapping[str, float]) -> float:
    return e.eval(point)


@dataclass(frozen=True)
class DegreeReport:
    """Per-symbol degree summary from :func:`is_polynomial_in`."""

    polynomial: bool
    degrees: dict[str, int]


def is_polynomial_in(e: Expr, names: Iterable[str]) -> DegreeReport:
    """Report the maximum degree of ``e`` in each listed symbol.

    ``polynomial`` is False when any listed symbol occurs with a negative
    exponent; ``degrees`` then still carries the largest exponent seen.
    """
    names = tuple(names)
    degrees = {n: e.degree_in(n) for n in names}
    polynomial = all(e.min_exponent_in(n) >= 0 for n in names)
    return DegreeReport(polynomial, degrees)


# -- plain-text rendering ----------------------------------------------

def _render_coeff(c: Fraction) -> str:
    if c.denominator == 1:
        return str(c.numerator)
    return f"{c.numerator}/{c.denominator}"


def to_text(e: Expr) -> str:
    """Render in infix syntax that re-parses to an equal expression."""
    if not e.terms:
        return "0"
    names = e.table.names
    parts: list[str] = []
    for k, (mon, c) in enumerate(e.terms):
        factors = []
        for i, exp in enumerate(mon):
            if exp == 0:
                continue
            factors.append(names[i] if exp == 1 else f"{names[i]}^{exp}")
        mag = abs(c)
        if not factors:
            body = _render_coeff(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = "*".join([_render_coeff(mag)] + factors)
        if k == 0:
            parts.append(body if c > 0 else "-" + body)
        else:
            parts.append((" + " if c > 0 else " - ") + body)
    return "".join(parts)
