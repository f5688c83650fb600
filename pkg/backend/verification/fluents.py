"""Fluents describing the enactment state of a process."""

from dataclasses import dataclass
from enum import IntEnum
from typing import FrozenSet, Iterable

from chc.syntax import Compound, Expression, ListTerm, ParseError, read_clauses


class FluentKind(IntEnum):
    BEGINS = 0
    COMPLETES = 1
    ENABLES = 2
    ENACTING = 3


_NAMES = {FluentKind.BEGINS: "begins", FluentKind.COMPLETES: "completes",
          FluentKind.ENABLES: "enables", FluentKind.ENACTING: "enacting"}


@dataclass(frozen=True, order=True)
class Fluent:
    kind: FluentKind
    obj: str
    target: str = ""
    residual: int = 0

    @classmethod
    def begins(cls, x: str) -> "Fluent":
        return cls(FluentKind.BEGINS, x)

    @classmethod
    def completes(cls, x: str) -> "Fluent":
        return cls(FluentKind.COMPLETES, x)

    @classmethod
    def enables(cls, x: str, y: str) -> "Fluent":
        return cls(FluentKind.ENABLES, x, y)

    @classmethod
    def enacting(cls, x: str, residual: int) -> "Fluent":
        return cls(FluentKind.ENACTING, x, "", residual)

    def __str__(self) -> str:
        name = _NAMES[self.kind]
        if self.kind is FluentKind.ENABLES:
            return f"{name}({self.obj},{self.target})"
        if self.kind is FluentKind.ENACTING:
            return f"{name}({self.obj},{self.residual})"
        return f"{name}({self.obj})"


FluentSet = FrozenSet[Fluent]


def format_fluents(fluents: Iterable[Fluent]) -> str:
    return "{" + ", ".join(str(f) for f in sorted(fluents)) + "}"


def format_fluent_list(fluents: Iterable[Fluent]) -> str:
    return "[" + ",".join(str(f) for f in sorted(fluents)) + "]"


def fluent_from_term(term) -> Fluent:
    """Convert a parsed `begins(x)`-style term into a Fluent."""
    if not isinstance(term, Compound):
        raise ParseError("expected a fluent", term.line, term.column)

    def identifier(arg) -> str:
        if isinstance(arg, Compound) and not arg.args:
            return arg.name
        raise ParseError("expected a flow object identifier", arg.line, arg.column)

    arity = {"begins": 1, "completes": 1, "enables": 2, "enacting": 2}.get(term.name)
    if arity is None or len(term.args) != arity:
        raise ParseError(f"unknown fluent {term.name}/{len(term.args)}", term.line, term.column)
    if term.name == "begins":
        return Fluent.begins(identifier(term.args[0]))
    if term.name == "completes":
        return Fluent.completes(identifier(term.args[0]))
    if term.name == "enables":
        return Fluent.enables(identifier(term.args[0]), identifier(term.args[1]))
    residual = term.args[1]
    if not (isinstance(residual, Expression) and residual.integer is not None and residual.integer >= 0):
        raise ParseError("enacting residual must be a non-negative integer",
                         residual.line, residual.column)
    return Fluent.enacting(identifier(term.args[0]), residual.integer)


def fluents_from_list(term) -> FluentSet:
    if not isinstance(term, ListTerm):
        raise ParseError("expected a fluent list", term.line, term.column)
    return frozenset(fluent_from_term(item) for item in term.items)


def parse_fluent_set(text: str) -> FluentSet:
    """Parse `completes(p)`, `[completes(p), enacting(a,1)]` or `{...}` text."""
    body = text.strip()
    if body.startswith("{") and body.endswith("}"):
        body = body[1:-1]
    if not body.startswith("["):
        body = f"[{body}]"
    clauses = read_clauses(f"w({body}).")
    return fluents_from_list(clauses[0].head.args[0])
