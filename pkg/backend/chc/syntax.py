"""
Reader for the Prolog-like surface syntax shared by model facts, clause
listings and property files.

    clause   := term [':-' literal (',' literal)*] '.'
    literal  := term | expr REL expr
    term     := IDENT ['(' arg (',' arg)* ')']
    arg      := expr | term | '[' [arg (',' arg)*] ']'
    expr     := ['-'] summand (('+' | '-') summand)*
    summand  := INT ['*' VAR] | VAR ['*' INT]

`%` starts a comment that runs to the end of the line.
"""

from dataclasses import dataclass
import re
from typing import List, Optional, Sequence, Tuple, Union

from .constraints import AtomicConstraint, LinearExpression, Relation


class ParseError(ValueError):
    """Syntax error with a 1-based source position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_TOKEN_PATTERN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<newline>\n)
  | (?P<comment>%[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[a-z][A-Za-z0-9_]*)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<punct>:-|=\\=|\\=|!=|=<|<=|>=|[=<>(),.\[\]+\-*])
""", re.VERBOSE)

_RELATIONS = {
    "=": Relation.EQ,
    "=\\=": Relation.NE,
    "\\=": Relation.NE,
    "!=": Relation.NE,
    "=<": Relation.LE,
    "<=": Relation.LE,
    ">=": Relation.GE,
    "<": Relation.LT,
    ">": Relation.GT,
}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    line, line_start, position = 1, 0, 0
    while position < len(text):
        match = _TOKEN_PATTERN.match(text, position)
        if match is None:
            raise ParseError(f"unexpected character {text[position]!r}",
                             line, position - line_start + 1)
        kind = match.lastgroup
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), line, position - line_start + 1))
        position = match.end()
    tokens.append(Token("eof", "", line, position - line_start + 1))
    return tokens


@dataclass(frozen=True)
class Compound:
    """`name(args...)`; a bare identifier is a compound with no arguments."""
    name: str
    args: Tuple["Argument", ...]
    line: int
    column: int


@dataclass(frozen=True)
class ListTerm:
    items: Tuple["Argument", ...]
    line: int
    column: int


@dataclass(frozen=True)
class Expression:
    value: LinearExpression
    line: int
    column: int

    @property
    def variable(self) -> Optional[str]:
        """The variable name when the expression is a bare variable."""
        if self.value.constant == 0 and len(self.value.terms) == 1 and self.value.terms[0][1] == 1:
            return self.value.terms[0][0]
        return None

    @property
    def integer(self) -> Optional[int]:
        return self.value.constant if self.value.is_constant else None


Argument = Union[Compound, ListTerm, Expression]


@dataclass(frozen=True)
class Comparison:
    constraint: AtomicConstraint
    line: int
    column: int


Literal = Union[Compound, Comparison]


@dataclass(frozen=True)
class RawClause:
    head: Compound
    body: Tuple[Literal, ...]
    line: int
    column: int


class TermReader:
    """Recursive-descent reader producing RawClause records."""

    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def _advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def _error(self, message: str, token: Optional[Token] = None) -> ParseError:
        token = token or self.current
        found = token.text or "end of input"
        return ParseError(f"{message} (found {found!r})", token.line, token.column)

    def _expect(self, text: str) -> Token:
        if self.current.text != text or self.current.kind not in ("punct",):
            raise self._error(f"expected {text!r}")
        return self._advance()

    def read_clauses(self) -> List[RawClause]:
        clauses = []
        while self.current.kind != "eof":
            clauses.append(self.read_clause())
        return clauses

    def read_clause(self) -> RawClause:
        start = self.current
        if start.kind != "ident":
            raise self._error("expected a clause head")
        head = self._read_compound()
        body: List[Literal] = []
        if self.current.text == ":-":
            self._advance()
            body.append(self._read_literal())
            while self.current.text == ",":
                self._advance()
                body.append(self._read_literal())
        self._expect(".")
        return RawClause(head, tuple(body), start.line, start.column)

    def _read_literal(self) -> Literal:
        token = self.current
        if token.kind == "ident":
            return self._read_compound()
        lhs = self._read_expression()
        relation_token = self.current
        relation = _RELATIONS.get(relation_token.text) if relation_token.kind == "punct" else None
        if relation is None:
            raise self._error("expected a comparison operator")
        self._advance()
        rhs = self._read_expression()
        return Comparison(AtomicConstraint.compare(lhs.value, relation, rhs.value),
                          token.line, token.column)

    def _read_compound(self) -> Compound:
        token = self._advance()
        args: List[Argument] = []
        if self.current.text == "(":
            self._advance()
            args.append(self._read_argument())
            while self.current.text == ",":
                self._advance()
                args.append(self._read_argument())
            self._expect(")")
        return Compound(token.text, tuple(args), token.line, token.column)

    def _read_argument(self) -> Argument:
        token = self.current
        if token.kind == "ident":
            return self._read_compound()
        if token.text == "[":
            self._advance()
            items: List[Argument] = []
            if self.current.text != "]":
                items.append(self._read_argument())
                while self.current.text == ",":
                    self._advance()
                    items.append(self._read_argument())
            self._expect("]")
            return ListTerm(tuple(items), token.line, token.column)
        return self._read_expression()

    def _read_expression(self) -> Expression:
        start = self.current
        negate = False
        if self.current.text in ("-", "+") and self.current.kind == "punct":
            negate = self._advance().text == "-"
        total = self._read_summand()
        if negate:
            total = -total
        while self.current.kind == "punct" and self.current.text in ("+", "-"):
            sign = self._advance().text
            summand = self._read_summand()
            total = total + summand if sign == "+" else total - summand
        return Expression(total, start.line, start.column)

    def _read_summand(self) -> LinearExpression:
        token = self._advance()
        if token.kind == "int":
            value = int(token.text)
            if self.current.text == "*":
                self._advance()
                name = self._advance()
                if name.kind != "var":
                    raise self._error("expected a variable after '*'", name)
                return LinearExpression.variable(name.text).scale(value)
            return LinearExpression.number(value)
        if token.kind == "var":
            if self.current.text == "*":
                self._advance()
                factor = self._advance()
                if factor.kind != "int":
                    raise self._error("expected an integer after '*'", factor)
                return LinearExpression.variable(token.text).scale(int(factor.text))
            return LinearExpression.variable(token.text)
        raise self._error("expected a variable or an integer", token)


def read_clauses(text: str) -> List[RawClause]:
    return TermReader(text).read_clauses()


def format_literals(items: Sequence[str]) -> str:
    return ", ".join(items)
