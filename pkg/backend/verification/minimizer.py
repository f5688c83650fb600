"""
Clause-set minimization by predicate equivalence.

Two predicates are equivalent when, after renaming every predicate to the
representative of its class, their sets of clause bodies coincide modulo
constraints. The coarsest such partition is computed as a greatest fixpoint
by partition refinement; `apply_renaming` then keeps only the clauses of
representatives and redirects every call to them.
"""

import re
from dataclasses import dataclass
from itertools import permutations, product
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple
import structlog

from chc.clauses import ClauseSet, ClauseSetError, HornClause, normalize_clause
from chc.constraints import AtomicConstraint, LinearExpression, Relation

logger = structlog.get_logger()

MAX_ATOM_ORDERINGS = 720

BodyKey = Tuple


class PartitionError(ValueError):
    """A partition does not fit the predicates of a clause set."""


def natural_key(name: str) -> Tuple:
    """Sort key ordering new9 before new10."""
    return tuple(int(part) if part.isdigit() else part for part in re.split(r"(\d+)", name))


def least_name(members: Sequence[str]) -> str:
    return min(members, key=natural_key)


@dataclass(frozen=True)
class Partition:
    """Disjoint predicate classes; `representatives[i]` belongs to `classes[i]`."""

    classes: Tuple[FrozenSet[str], ...]
    representatives: Tuple[str, ...]

    @classmethod
    def from_classes(cls, classes: Sequence[Sequence[str]],
                     choose: Callable[[Sequence[str]], str] = least_name) -> "Partition":
        ordered = sorted((sorted(c, key=natural_key) for c in classes if c),
                         key=lambda c: natural_key(choose(c)))
        return cls(tuple(frozenset(c) for c in ordered), tuple(choose(c) for c in ordered))

    def renaming(self) -> "PredicateRenaming":
        mapping = {}
        for members, representative in zip(self.classes, self.representatives):
            for member in members:
                mapping[member] = representative
        return PredicateRenaming(mapping)

    def class_of(self, predicate: str) -> FrozenSet[str]:
        for members in self.classes:
            if predicate in members:
                return members
        raise PartitionError(f"predicate {predicate} is not covered by the partition")

    @property
    def nontrivial(self) -> List[FrozenSet[str]]:
        return [c for c in self.classes if len(c) > 1]

    def validate(self, clauses: ClauseSet) -> None:
        arities = clauses.arities()
        seen: Dict[str, int] = {}
        for index, (members, representative) in enumerate(zip(self.classes, self.representatives)):
            if not members:
                raise PartitionError("partition classes must be nonempty")
            if representative not in members:
                raise PartitionError(f"representative {representative} is outside its class")
            for member in members:
                if member in seen:
                    raise PartitionError(f"predicate {member} occurs in two classes")
                seen[member] = index
            if len({arities.get(m) for m in members}) != 1:
                raise PartitionError(f"class {sorted(members, key=natural_key)} mixes arities")
        missing = set(clauses.predicates) - set(seen)
        if missing:
            raise PartitionError(f"predicates not covered: {', '.join(sorted(missing, key=natural_key))}")
        extra = set(seen) - set(clauses.predicates)
        if extra:
            raise PartitionError(f"unknown predicates: {', '.join(sorted(extra, key=natural_key))}")

    def to_dict(self) -> List[List[str]]:
        return [[rep] + sorted(members - {rep}, key=natural_key)
                for members, rep in zip(self.classes, self.representatives)]


@dataclass(frozen=True)
class PredicateRenaming:
    mapping: Dict[str, str]

    def __call__(self, predicate: str) -> str:
        return self.mapping.get(predicate, predicate)

    @property
    def representatives(self) -> FrozenSet[str]:
        return frozenset(self.mapping.values())


def render_partition(partition: Partition) -> str:
    """One class per line, representative first."""
    return "".join("{" + ", ".join(members) + "}\n" for members in partition.to_dict())


def _projected_body(clause: HornClause, atoms) -> Optional[str]:
    """Constraint of the clause over head and argument-position variables, or None if inexact."""
    equalities = [
        AtomicConstraint.compare(LinearExpression.variable(f"P{i}_{j}"), Relation.EQ,
                                 LinearExpression.from_term(arg))
        for i, atom in enumerate(atoms) for j, arg in enumerate(atom.args)
    ]
    constraint = clause.constraint.conjoin(*equalities)
    if not constraint.is_convex:
        return None
    keep = [f"H{i}" for i in range(clause.head.arity)]
    positions = [f"P{i}_{j}" for i, atom in enumerate(atoms) for j in range(atom.arity)]
    projected = constraint.project(keep + positions)
    if projected.approximate:
        return None
    return str(projected.reduce_equalities(positions + keep))


def body_key(clause: HornClause, classes: Dict[str, str]) -> BodyKey:
    """
    Canonical form of one clause body with callees replaced by their class.

    Head variables become H0, H1, ...; the j-th argument of the i-th body
    atom is bound to P{i}_{j}; every other variable is projected out and the
    equalities are put in reduced echelon form. Atoms calling the same class
    are tried in every order and the least form is kept. An inexact
    projection yields a key equal to no other.
    """
    if clause.head is None or not clause.is_pure:
        raise ClauseSetError(f"clause is not in pure form: {clause}")
    renaming = {var: f"H{i}" for i, var in enumerate(clause.head.args)}
    renaming.update({var: f"L{var}" for var in clause.variables if var not in renaming})
    renamed = clause.rename(renaming)
    ordered = sorted(renamed.body, key=lambda a: natural_key(classes.get(a.predicate, a.predicate)))
    callees = tuple(classes.get(a.predicate, a.predicate) for a in ordered)

    groups: List[List[int]] = []
    for index, callee in enumerate(callees):
        if groups and callees[groups[-1][0]] == callee:
            groups[-1].append(index)
        else:
            groups.append([index])
    orderings = 1
    for group in groups:
        for k in range(2, len(group) + 1):
            orderings *= k
    if orderings > MAX_ATOM_ORDERINGS:
        candidates = [ordered]
    else:
        candidates = [
            [ordered[i] for part in combination for i in part]
            for combination in product(*(permutations(group) for group in groups))
        ]

    best: Optional[str] = None
    for atoms in candidates:
        projected = _projected_body(renamed, atoms)
        if projected is None:
            logger.warning("Inexact projection blocks merging", clause=str(clause))
            return ("inexact", str(clause))
        if best is None or projected < best:
            best = projected
    return (callees, best)


def _signatures(clauses: ClauseSet, classes: Dict[str, str]) -> Dict[str, Tuple]:
    """Sorted multiset of body keys per predicate; equal multisets admit a body bijection."""
    keys: Dict[str, List[BodyKey]] = {p: [] for p in clauses.predicates}
    for clause in clauses:
        if clause.head is not None:
            keys[clause.head.predicate].append(body_key(clause, classes))
    return {p: tuple(sorted(k, key=repr)) for p, k in keys.items()}


def bodies_equivalent(p: str, q: str, partition: Partition, clauses: ClauseSet) -> bool:
    """Do p and q have the same bodies modulo constraints under the partition's renaming?"""
    arities = clauses.arities()
    if arities.get(p) != arities.get(q):
        return False
    classes = partition.renaming().mapping
    signatures = _signatures(clauses, classes)
    return signatures[p] == signatures[q]


def coarsest_cp_equivalence(clauses: ClauseSet,
                            choose: Callable[[Sequence[str]], str] = least_name) -> Partition:
    """
    Greatest-fixpoint partition refinement.

    Starts from one class per arity and splits every class whose members'
    body signatures differ under the current renaming, until stable.

    Raises:
        ClauseSetError: when a clause is not in pure form.
    """
    if not clauses.is_pure:
        raise ClauseSetError("minimization requires clauses in pure form")
    arities = clauses.arities()
    by_arity: Dict[int, List[str]] = {}
    for predicate in clauses.predicates:
        by_arity.setdefault(arities[predicate], []).append(predicate)
    partition = Partition.from_classes(list(by_arity.values()), choose)

    rounds = 0
    while True:
        rounds += 1
        signatures = _signatures(clauses, partition.renaming().mapping)
        refined: List[List[str]] = []
        for members in partition.classes:
            buckets: Dict[Tuple, List[str]] = {}
            for member in sorted(members, key=natural_key):
                buckets.setdefault(signatures[member], []).append(member)
            refined.extend(buckets.values())
        if len(refined) == len(partition.classes):
            break
        partition = Partition.from_classes(refined, choose)

    logger.info("Partition refinement completed", rounds=rounds, predicates=len(clauses.predicates),
                classes=len(partition.classes), merged=len(partition.nontrivial))
    return partition


def apply_renaming(clauses: ClauseSet, partition: Partition) -> ClauseSet:
    """
    Drop clauses of non-representatives and rename every atom to its
    representative; clauses identical after normalization are kept once.

    Raises:
        PartitionError: when the partition does not cover the clause set.
    """
    partition.validate(clauses)
    rename = partition.renaming()
    kept: Dict[str, HornClause] = {}
    for clause in clauses:
        if clause.head is not None and clause.head.predicate not in rename.representatives:
            continue
        head = clause.head.with_predicate(rename(clause.head.predicate)) if clause.head else None
        renamed = HornClause(head, clause.constraint,
                             tuple(a.with_predicate(rename(a.predicate)) for a in clause.body))
        kept.setdefault(str(normalize_clause(renamed)), renamed)
    opened = frozenset(rename(p) for p in clauses.open_predicates)
    result = ClauseSet(tuple(kept.values()), opened)
    logger.info("Predicate renaming applied", before=len(clauses), after=len(result))
    return result


def minimize(clauses: ClauseSet) -> Tuple[ClauseSet, Partition]:
    partition = coarsest_cp_equivalence(clauses)
    return apply_renaming(clauses, partition), partition
