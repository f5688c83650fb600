"""SMT-LIB 2 emission of clause sets in the HORN logic."""

import re
from typing import Dict, Iterable, List
import structlog

from chc.clauses import Atom, ClauseSet, HornClause
from chc.constraints import AtomicConstraint, LinearExpression, Relation
from .minimizer import natural_key

logger = structlog.get_logger()


class EmissionError(ValueError):
    """The clause set violates a precondition of SMT-LIB emission."""


RESERVED = frozenset({
    "and", "or", "not", "xor", "ite", "let", "forall", "exists", "assert", "true", "false",
    "distinct", "as", "par", "match", "Int", "Bool", "Real", "div", "mod", "abs",
    "check-sat", "declare-fun", "define-fun", "set-logic", "exit", "NUMERAL", "DECIMAL", "STRING",
})

_SAFE = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")

_RELATIONS = {Relation.EQ: "=", Relation.GE: ">=", Relation.LE: "<=", Relation.GT: ">",
              Relation.LT: "<"}


class SymbolTable:
    """Stable mapping from clause names to solver-safe symbols."""

    def __init__(self, prefix: str):
        self.prefix = prefix
        self.mapping: Dict[str, str] = {}
        self._used: set = set()

    def symbol(self, name: str) -> str:
        if name in self.mapping:
            return self.mapping[name]
        candidate = name
        if not _SAFE.match(candidate) or candidate in RESERVED:
            candidate = self.prefix + re.sub(r"[^A-Za-z0-9_]", "_", name)
        base, counter = candidate, 1
        while candidate in self._used:
            candidate = f"{base}_{counter}"
            counter += 1
        self._used.add(candidate)
        self.mapping[name] = candidate
        return candidate


def _number(value: int) -> str:
    return str(value) if value >= 0 else f"(- {-value})"


def _sum(parts: List[str]) -> str:
    if not parts:
        return "0"
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def _term(name: str, coefficient: int, variables: SymbolTable) -> str:
    symbol = variables.symbol(name)
    return symbol if coefficient == 1 else f"(* {coefficient} {symbol})"


def render_atomic(atom: AtomicConstraint, variables: SymbolTable) -> str:
    """`lhs R rhs` with nonnegative coefficients on both sides."""
    if atom.relation is Relation.NE:
        raise EmissionError(f"disequality {atom} must be split before emission")
    expression: LinearExpression = atom.expression
    left = [_term(n, c, variables) for n, c in expression.terms if c > 0]
    right = [_term(n, -c, variables) for n, c in expression.terms if c < 0]
    if expression.constant < 0:
        right.append(str(-expression.constant))
    elif expression.constant > 0:
        left.append(str(expression.constant))
    return f"({_RELATIONS[atom.relation]} {_sum(left)} {_sum(right)})"


def _render_atom(atom: Atom, predicates: SymbolTable, variables: SymbolTable) -> str:
    name = predicates.symbol(atom.predicate)
    if not atom.args:
        return name
    args = [variables.symbol(a) if isinstance(a, str) else _number(a) for a in atom.args]
    return f"({name} {' '.join(args)})"


def _render_clause(clause: HornClause, predicates: SymbolTable) -> str:
    variables = SymbolTable("v_")
    names = sorted(clause.variables, key=natural_key)
    for name in names:
        variables.symbol(name)
    parts = [render_atomic(a, variables) for a in clause.constraint.atoms]
    parts.extend(_render_atom(a, predicates, variables) for a in clause.body)
    if not parts:
        body = "true"
    elif len(parts) == 1:
        body = parts[0]
    else:
        body = f"(and {' '.join(parts)})"
    head = "false" if clause.head is None else _render_atom(clause.head, predicates, variables)
    implication = f"(=> {body} {head})"
    if not names:
        return f"(assert {implication})"
    binders = " ".join(f"({variables.symbol(n)} Int)" for n in names)
    return f"(assert (forall ({binders}) {implication}))"


def _check(clauses: Iterable[HornClause]) -> None:
    for clause in clauses:
        if not clause.is_pure:
            raise EmissionError(f"clause is not in pure form: {clause}")
        if not clause.constraint.is_convex:
            raise EmissionError(f"clause has a disequality: {clause}")
        if not clause.constraint.is_normalized:
            raise EmissionError(f"clause constraint is not normalized: {clause}")


def emit_smtlib(clauses: ClauseSet) -> str:
    """
    Render a normalized, pure clause set as an SMT-LIB HORN script.

    Each clause becomes one universally quantified implication, goals imply
    `false`. The output only depends on the clause set, so two emissions of
    the same set are byte-identical.

    Raises:
        EmissionError: on non-pure clauses, disequalities or constraints
            that are not in normal form.
    """
    _check(clauses)
    arities = clauses.arities()
    predicates = SymbolTable("p_")
    declarations = []
    for name in clauses.predicates:
        symbol = predicates.symbol(name)
        sorts = " ".join(["Int"] * arities[name])
        declarations.append(f"(declare-fun {symbol} ({sorts}) Bool)")
    assertions = [_render_clause(clause, predicates) for clause in clauses]

    lines = [f"; {len(clauses)} clauses, {len(declarations)} predicates"]
    lines.extend(f"; {name} -> {symbol}" for name, symbol in predicates.mapping.items())
    lines.append("(set-logic HORN)")
    lines.extend(declarations)
    lines.extend(assertions)
    lines.extend(["(check-sat)", "(exit)"])
    logger.debug("Emitted SMT-LIB script", clauses=len(clauses), predicates=len(declarations))
    return "\n".join(lines) + "\n"
