"""
Constrained Horn clauses over integer arguments, clause sets, and the clause
text syntax used by fixture listings (`head :- c1, ..., a1(...), ... .`).
"""

from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple
import structlog

from .constraints import AtomicConstraint, LinearConstraint, LinearExpression, Relation, Term
from .syntax import Compound, Comparison, Expression, ParseError, RawClause, format_literals, read_clauses

logger = structlog.get_logger()

FALSE = "false"


class ClauseSetError(ValueError):
    """Structural problem in a clause or clause set."""


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: Tuple[Term, ...] = ()

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def variables(self) -> List[str]:
        return [arg for arg in self.args if isinstance(arg, str)]

    def rename(self, mapping: Mapping[str, str]) -> "Atom":
        return Atom(self.predicate,
                    tuple(mapping.get(arg, arg) if isinstance(arg, str) else arg for arg in self.args))

    def with_predicate(self, predicate: str) -> "Atom":
        return Atom(predicate, self.args)

    def __str__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({','.join(str(arg) for arg in self.args)})"


@dataclass(frozen=True)
class HornClause:
    """`head :- constraint, body`; a head of None stands for `false`."""

    head: Optional[Atom]
    constraint: LinearConstraint = field(default_factory=LinearConstraint.true)
    body: Tuple[Atom, ...] = ()

    @property
    def is_goal(self) -> bool:
        return self.head is None

    @property
    def head_predicate(self) -> str:
        return self.head.predicate if self.head is not None else FALSE

    @property
    def variables(self) -> Set[str]:
        names: Set[str] = set(self.constraint.variables)
        if self.head is not None:
            names.update(self.head.variables)
        for atom in self.body:
            names.update(atom.variables)
        return names

    @property
    def is_pure(self) -> bool:
        if self.head is None:
            return True
        args = self.head.args
        return all(isinstance(arg, str) for arg in args) and len(set(args)) == len(args)

    def rename(self, mapping: Mapping[str, str]) -> "HornClause":
        head = self.head.rename(mapping) if self.head is not None else None
        return HornClause(head, self.constraint.rename(mapping),
                          tuple(atom.rename(mapping) for atom in self.body))

    def evaluate_body(self, env: Mapping[str, int]) -> bool:
        """Truth of the constraint part under a ground assignment."""
        return self.constraint.evaluate(env)

    def __str__(self) -> str:
        head = str(self.head) if self.head is not None else FALSE
        literals = [str(atom) for atom in self.constraint.atoms] + [str(atom) for atom in self.body]
        if not literals:
            return f"{head}."
        return f"{head} :- {format_literals(literals)}."


def variable_name(index: int) -> str:
    """A, B, ..., Z, A1, B1, ..."""
    letter = chr(ord("A") + index % 26)
    round_ = index // 26
    return letter if round_ == 0 else f"{letter}{round_}"


def _fresh(used: Set[str], stem: str = "V") -> str:
    counter = 0
    while f"{stem}{counter}" in used:
        counter += 1
    name = f"{stem}{counter}"
    used.add(name)
    return name


def normalize_clause(clause: HornClause) -> HornClause:
    """
    Bring a clause to pure, canonical form.

    Head arguments become distinct variables (constants and repeated
    variables are lifted into equalities), local variables bound by a
    variable-to-variable equality are substituted away, locals that occur
    only in the constraint are projected out when the projection is exact,
    variables are renamed A, B, C, ... (head first, then body atoms, then the
    remaining constraint variables) and the constraint is normalized.
    """
    used = set(clause.variables)
    constraint = clause.constraint
    head = clause.head

    if head is not None:
        seen: Set[str] = set()
        args: List[Term] = []
        lifted: List[AtomicConstraint] = []
        for arg in head.args:
            if isinstance(arg, str) and arg not in seen:
                seen.add(arg)
                args.append(arg)
                continue
            fresh = _fresh(used)
            seen.add(fresh)
            args.append(fresh)
            lifted.append(AtomicConstraint.compare(LinearExpression.variable(fresh), Relation.EQ,
                                                   LinearExpression.from_term(arg)))
        head = Atom(head.predicate, tuple(args))
        constraint = constraint.conjoin(*lifted)

    head_vars = set(head.variables) if head is not None else set()
    body = tuple(sorted(clause.body, key=lambda atom: atom.predicate))
    constraint = constraint.normalize()

    changed = True
    while changed and not constraint.is_false:
        changed = False
        for atom in constraint.atoms:
            if atom.relation is not Relation.EQ or len(atom.expression.terms) != 2 \
                    or atom.expression.constant != 0:
                continue
            (left, a), (right, b) = atom.expression.terms
            if a + b != 0:
                continue
            locals_ = [name for name in (left, right) if name not in head_vars]
            if not locals_:
                continue
            victim = max(locals_)
            survivor = right if victim == left else left
            mapping = {victim: survivor}
            constraint = constraint.rename(mapping).normalize()
            body = tuple(a.rename(mapping) for a in body)
            changed = True
            break

    atom_vars: Set[str] = set()
    for atom in body:
        atom_vars.update(atom.variables)
    constraint_only = constraint.variables - head_vars - atom_vars
    if constraint_only and constraint.is_convex and not constraint.is_false:
        projected = constraint.project(constraint.variables - constraint_only)
        if not projected.approximate:
            constraint = projected

    order: List[str] = []
    if head is not None:
        order.extend(head.variables)
    for atom in body:
        order.extend(name for name in atom.variables if name not in order)
    order.extend(sorted(constraint.variables - set(order)))
    renaming = {name: variable_name(index) for index, name in enumerate(dict.fromkeys(order))}

    renamed = HornClause(head.rename(renaming) if head is not None else None,
                         constraint.rename(renaming).normalize(),
                         tuple(atom.rename(renaming) for atom in body))
    return renamed


def split_disequalities(clause: HornClause) -> List[HornClause]:
    """Replace a clause carrying `=\\=` conjuncts by its disequality-free cases."""
    return [HornClause(clause.head, case, clause.body)
            for case in clause.constraint.convex_cases()]


@dataclass(frozen=True)
class ClauseSet:
    """Ordered clauses plus the predicates allowed to lack definitions."""

    clauses: Tuple[HornClause, ...]
    open_predicates: FrozenSet[str] = frozenset()

    def __post_init__(self):
        self.arities()
        defined = self.defined_predicates
        for clause in self.clauses:
            for atom in clause.body:
                if atom.predicate not in defined and atom.predicate not in self.open_predicates:
                    raise ClauseSetError(
                        f"predicate {atom.predicate}/{atom.arity} is neither defined nor open")

    def __len__(self) -> int:
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    def arities(self) -> Dict[str, int]:
        table: Dict[str, int] = {}
        for clause in self.clauses:
            atoms = list(clause.body) + ([clause.head] if clause.head is not None else [])
            for atom in atoms:
                known = table.setdefault(atom.predicate, atom.arity)
                if known != atom.arity:
                    raise ClauseSetError(
                        f"predicate {atom.predicate} used with arities {known} and {atom.arity}")
        return table

    @property
    def defined_predicates(self) -> FrozenSet[str]:
        return frozenset(c.head.predicate for c in self.clauses if c.head is not None)

    @property
    def predicates(self) -> List[str]:
        """Every predicate symbol other than false, in first-use order."""
        ordered: Dict[str, None] = OrderedDict()
        for clause in self.clauses:
            if clause.head is not None:
                ordered[clause.head.predicate] = None
            for atom in clause.body:
                ordered[atom.predicate] = None
        return list(ordered)

    @property
    def goals(self) -> List[HornClause]:
        return [clause for clause in self.clauses if clause.is_goal]

    def definitions(self, predicate: str) -> List[HornClause]:
        return [c for c in self.clauses if c.head is not None and c.head.predicate == predicate]

    @property
    def is_pure(self) -> bool:
        return all(clause.is_pure for clause in self.clauses)

    def normalized(self) -> "ClauseSet":
        """Split disequalities and normalize every clause, dropping duplicates."""
        clauses: Dict[str, HornClause] = OrderedDict()
        for clause in self.clauses:
            for case in split_disequalities(clause):
                canonical = normalize_clause(case)
                clauses.setdefault(str(canonical), canonical)
        return ClauseSet(tuple(clauses.values()), self.open_predicates)

    def to_text(self) -> str:
        return "\n".join(str(clause) for clause in self.clauses) + ("\n" if self.clauses else "")


def _clause_from_raw(raw: RawClause) -> HornClause:
    head: Optional[Atom]
    if raw.head.name == FALSE and not raw.head.args:
        head = None
    else:
        head = _atom_from_compound(raw.head)
    atoms: List[AtomicConstraint] = []
    body: List[Atom] = []
    for literal in raw.body:
        if isinstance(literal, Comparison):
            atoms.append(literal.constraint)
        elif literal.name == "true" and not literal.args:
            continue
        else:
            body.append(_atom_from_compound(literal))
    return HornClause(head, LinearConstraint(tuple(atoms)), tuple(body))


def _atom_from_compound(term: Compound) -> Atom:
    args: List[Term] = []
    for arg in term.args:
        if isinstance(arg, Expression):
            if arg.variable is not None:
                args.append(arg.variable)
                continue
            if arg.integer is not None:
                args.append(arg.integer)
                continue
            raise ParseError("atom arguments must be variables or integers", arg.line, arg.column)
        raise ParseError("structured terms are not supported in clause arguments",
                         arg.line, arg.column)
    return Atom(term.name, tuple(args))


def parse_clauses(text: str, open_predicates: Iterable[str] = ()) -> ClauseSet:
    """Read a clause listing in the `head :- constraints, atoms.` syntax."""
    clauses = tuple(_clause_from_raw(raw) for raw in read_clauses(text))
    logger.debug("Parsed clause listing", clauses=len(clauses))
    return ClauseSet(clauses, frozenset(open_predicates))
