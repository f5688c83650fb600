"""
Linear integer constraints.

A LinearConstraint is a conjunction of atomic constraints `expr R 0` over
integer-valued variables. Normalization brings every conjunct to `expr >= 0`
or `expr = 0` (plus `expr =\\= 0` for disequalities, which callers split),
with gcd-reduced integer coefficients and a deterministic conjunct order.
"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import reduce
from math import gcd
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union
import structlog

logger = structlog.get_logger()

Term = Union[str, int]


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


@dataclass(frozen=True)
class LinearExpression:
    """Integer linear expression `sum(c_i * v_i) + constant`."""

    terms: Tuple[Tuple[str, int], ...] = ()
    constant: int = 0

    @classmethod
    def of(cls, coefficients: Mapping[str, int], constant: int = 0) -> "LinearExpression":
        terms = tuple(sorted((name, coef) for name, coef in coefficients.items() if coef != 0))
        return cls(terms, constant)

    @classmethod
    def variable(cls, name: str) -> "LinearExpression":
        return cls(((name, 1),), 0)

    @classmethod
    def number(cls, value: int) -> "LinearExpression":
        return cls((), value)

    @classmethod
    def from_term(cls, term: Term) -> "LinearExpression":
        if isinstance(term, int):
            return cls.number(term)
        return cls.variable(term)

    @property
    def coefficients(self) -> Dict[str, int]:
        return dict(self.terms)

    @property
    def variables(self) -> FrozenSet[str]:
        return frozenset(name for name, _ in self.terms)

    @property
    def is_constant(self) -> bool:
        return not self.terms

    def coefficient(self, name: str) -> int:
        for var, coef in self.terms:
            if var == name:
                return coef
        return 0

    def content(self) -> int:
        """Gcd of the variable coefficients (0 for a constant expression)."""
        return reduce(gcd, (abs(coef) for _, coef in self.terms), 0)

    def __add__(self, other: "LinearExpression") -> "LinearExpression":
        coefficients = self.coefficients
        for name, coef in other.terms:
            coefficients[name] = coefficients.get(name, 0) + coef
        return LinearExpression.of(coefficients, self.constant + other.constant)

    def __neg__(self) -> "LinearExpression":
        return LinearExpression(tuple((name, -coef) for name, coef in self.terms), -self.constant)

    def __sub__(self, other: "LinearExpression") -> "LinearExpression":
        return self + (-other)

    def scale(self, factor: int) -> "LinearExpression":
        if factor == 0:
            return LinearExpression()
        return LinearExpression(tuple((name, coef * factor) for name, coef in self.terms),
                                self.constant * factor)

    def shift(self, amount: int) -> "LinearExpression":
        return LinearExpression(self.terms, self.constant + amount)

    def substitute(self, name: str, replacement: "LinearExpression") -> "LinearExpression":
        coef = self.coefficient(name)
        if coef == 0:
            return self
        rest = LinearExpression(tuple(t for t in self.terms if t[0] != name), self.constant)
        return rest + replacement.scale(coef)

    def rename(self, mapping: Mapping[str, str]) -> "LinearExpression":
        coefficients: Dict[str, int] = {}
        for name, coef in self.terms:
            target = mapping.get(name, name)
            coefficients[target] = coefficients.get(target, 0) + coef
        return LinearExpression.of(coefficients, self.constant)

    def evaluate(self, env: Mapping[str, int]) -> int:
        return sum(coef * env[name] for name, coef in self.terms) + self.constant

    def linear_text(self) -> str:
        """Render the variable part only, e.g. `A-2*B`."""
        parts: List[str] = []
        for name, coef in self.terms:
            sign = "-" if coef < 0 else "+"
            magnitude = abs(coef)
            body = name if magnitude == 1 else f"{magnitude}*{name}"
            if not parts:
                parts.append(body if sign == "+" else f"-{body}")
            else:
                parts.append(f"{sign}{body}")
        return "".join(parts) if parts else "0"

    def __str__(self) -> str:
        text = self.linear_text() if self.terms else ""
        if not text:
            return str(self.constant)
        if self.constant > 0:
            return f"{text}+{self.constant}"
        if self.constant < 0:
            return f"{text}{self.constant}"
        return text


class Relation(str, Enum):
    """Comparison of an expression against zero."""
    EQ = "="
    NE = "=\\="
    LE = "=<"
    GE = ">="
    LT = "<"
    GT = ">"


_RELATION_RANK = {Relation.EQ: 0, Relation.GE: 1, Relation.NE: 2,
                  Relation.LE: 3, Relation.LT: 4, Relation.GT: 5}


@dataclass(frozen=True)
class AtomicConstraint:
    """`expression R 0`."""

    expression: LinearExpression
    relation: Relation

    @classmethod
    def compare(cls, lhs: LinearExpression, relation: Relation,
                rhs: LinearExpression) -> "AtomicConstraint":
        return cls(lhs - rhs, relation)

    @property
    def variables(self) -> FrozenSet[str]:
        return self.expression.variables

    def holds(self, value: int) -> bool:
        if self.relation is Relation.EQ:
            return value == 0
        if self.relation is Relation.NE:
            return value != 0
        if self.relation is Relation.LE:
            return value <= 0
        if self.relation is Relation.GE:
            return value >= 0
        if self.relation is Relation.LT:
            return value < 0
        return value > 0

    def evaluate(self, env: Mapping[str, int]) -> bool:
        return self.holds(self.expression.evaluate(env))

    def substitute(self, name: str, replacement: LinearExpression) -> "AtomicConstraint":
        return AtomicConstraint(self.expression.substitute(name, replacement), self.relation)

    def rename(self, mapping: Mapping[str, str]) -> "AtomicConstraint":
        return AtomicConstraint(self.expression.rename(mapping), self.relation)

    def sort_key(self) -> Tuple:
        return (_RELATION_RANK[self.relation], self.expression.terms, self.expression.constant)

    def __str__(self) -> str:
        expression = self.expression
        if expression.is_constant:
            return f"{expression.constant}{self.relation.value}0"
        return f"{expression.linear_text()}{self.relation.value}{-expression.constant}"


_FALSE_ATOM = AtomicConstraint(LinearExpression.number(-1), Relation.GE)


def _orient(terms: Tuple[Tuple[str, int], ...]) -> Tuple[Tuple[Tuple[str, int], ...], int]:
    """Return terms with a positive leading coefficient and the applied sign."""
    if terms and terms[0][1] < 0:
        return tuple((name, -coef) for name, coef in terms), -1
    return terms, 1


@dataclass(frozen=True)
class LinearConstraint:
    """Conjunction of atomic constraints over integer variables.

    `approximate` records that the constraint came out of an inexact
    projection: it is implied by, but may be weaker than, the exact result.
    """

    atoms: Tuple[AtomicConstraint, ...] = ()
    approximate: bool = False

    @classmethod
    def true(cls) -> "LinearConstraint":
        return cls(())

    @classmethod
    def false(cls) -> "LinearConstraint":
        return cls((_FALSE_ATOM,))

    @classmethod
    def of(cls, *atoms: AtomicConstraint) -> "LinearConstraint":
        return cls(tuple(atoms))

    @classmethod
    def equal(cls, lhs: Term, rhs: Union[Term, LinearExpression]) -> "LinearConstraint":
        right = rhs if isinstance(rhs, LinearExpression) else LinearExpression.from_term(rhs)
        return cls((AtomicConstraint.compare(LinearExpression.from_term(lhs), Relation.EQ, right),))

    @classmethod
    def between(cls, name: str, low: int, high: int) -> "LinearConstraint":
        var = LinearExpression.variable(name)
        return cls((AtomicConstraint(var.shift(-low), Relation.GE),
                    AtomicConstraint((-var).shift(high), Relation.GE)))

    def __and__(self, other: "LinearConstraint") -> "LinearConstraint":
        return LinearConstraint(self.atoms + other.atoms, self.approximate or other.approximate)

    def conjoin(self, *atoms: AtomicConstraint) -> "LinearConstraint":
        return LinearConstraint(self.atoms + tuple(atoms), self.approximate)

    @property
    def variables(self) -> FrozenSet[str]:
        names: FrozenSet[str] = frozenset()
        for atom in self.atoms:
            names = names | atom.variables
        return names

    @property
    def is_convex(self) -> bool:
        return all(atom.relation is not Relation.NE for atom in self.atoms)

    @property
    def is_false(self) -> bool:
        return any(atom.expression.is_constant and not atom.holds(atom.expression.constant)
                   for atom in self.atoms)

    @property
    def is_true(self) -> bool:
        return not self.atoms

    @property
    def is_normalized(self) -> bool:
        return self.normalize() == self

    def evaluate(self, env: Mapping[str, int]) -> bool:
        return all(atom.evaluate(env) for atom in self.atoms)

    def substitute(self, mapping: Mapping[str, LinearExpression]) -> "LinearConstraint":
        atoms = []
        for atom in self.atoms:
            for name, replacement in mapping.items():
                atom = atom.substitute(name, replacement)
            atoms.append(atom)
        return LinearConstraint(tuple(atoms), self.approximate)

    def rename(self, mapping: Mapping[str, str]) -> "LinearConstraint":
        return LinearConstraint(tuple(atom.rename(mapping) for atom in self.atoms), self.approximate)

    def normalize(self) -> "LinearConstraint":
        """
        Canonical form of the conjunction.

        Strict and `=<` comparisons become `>=` over integers, every conjunct
        is divided by the gcd of its coefficients (tightening the constant of
        inequalities), bounds on the same linear form are merged into at most
        one lower and one upper bound or a single equality, and the result is
        sorted. Contradictions collapse to the canonical false constraint.

        Returns:
            The normalized constraint; `approximate` is carried over.
        """
        lowers: Dict[Tuple, int] = {}
        uppers: Dict[Tuple, int] = {}
        fixed: Dict[Tuple, int] = {}
        excluded: Dict[Tuple, set] = {}

        for atom in self.atoms:
            expression, relation = atom.expression, atom.relation
            if relation is Relation.LE:
                expression, relation = -expression, Relation.GE
            elif relation is Relation.LT:
                expression, relation = (-expression).shift(-1), Relation.GE
            elif relation is Relation.GT:
                expression, relation = expression.shift(-1), Relation.GE

            if expression.is_constant:
                if not AtomicConstraint(expression, relation).holds(expression.constant):
                    return self._contradiction()
                continue

            divisor = expression.content()
            terms = tuple((name, coef // divisor) for name, coef in expression.terms)
            key, sign = _orient(terms)
            constant = expression.constant

            if relation is Relation.GE:
                # divisor * L + constant >= 0  <=>  L >= ceil(-constant / divisor)
                bound = _ceil_div(-constant, divisor)
                if sign > 0:
                    lowers[key] = max(lowers.get(key, bound), bound)
                else:
                    uppers[key] = min(uppers.get(key, -bound), -bound)
            else:
                if constant % divisor:
                    if relation is Relation.EQ:
                        return self._contradiction()
                    continue
                value = sign * (-constant // divisor)
                if relation is Relation.EQ:
                    if key in fixed and fixed[key] != value:
                        return self._contradiction()
                    fixed[key] = value
                else:
                    excluded.setdefault(key, set()).add(value)

        atoms: List[AtomicConstraint] = []
        for key in set(lowers) | set(uppers) | set(fixed) | set(excluded):
            linear = LinearExpression(key, 0)
            low, high = lowers.get(key), uppers.get(key)
            holes = excluded.get(key, set())
            if key in fixed:
                value = fixed[key]
                if (low is not None and value < low) or (high is not None and value > high) \
                        or value in holes:
                    return self._contradiction()
                atoms.append(AtomicConstraint(linear.shift(-value), Relation.EQ))
                continue
            if low is not None:
                while low in holes:
                    low += 1
            if high is not None:
                while high in holes:
                    high -= 1
            if low is not None and high is not None:
                if low > high:
                    return self._contradiction()
                if low == high:
                    atoms.append(AtomicConstraint(linear.shift(-low), Relation.EQ))
                    continue
            if low is not None:
                atoms.append(AtomicConstraint(linear.shift(-low), Relation.GE))
            if high is not None:
                atoms.append(AtomicConstraint((-linear).shift(high), Relation.GE))
            for value in sorted(holes):
                if (low is None or value > low) and (high is None or value < high):
                    atoms.append(AtomicConstraint(linear.shift(-value), Relation.NE))

        atoms.sort(key=AtomicConstraint.sort_key)
        return LinearConstraint(tuple(atoms), self.approximate)

    def _contradiction(self) -> "LinearConstraint":
        return LinearConstraint((_FALSE_ATOM,), self.approximate)

    def split_disequality(self) -> Optional[Tuple["LinearConstraint", "LinearConstraint"]]:
        """Split on the first disequality into its `<` and `>` branches."""
        for index, atom in enumerate(self.atoms):
            if atom.relation is Relation.NE:
                rest = self.atoms[:index] + self.atoms[index + 1:]
                below = AtomicConstraint(atom.expression, Relation.LT)
                above = AtomicConstraint(atom.expression, Relation.GT)
                return (LinearConstraint(rest + (below,), self.approximate),
                        LinearConstraint(rest + (above,), self.approximate))
        return None

    def convex_cases(self) -> List["LinearConstraint"]:
        """All disequality-free branches whose disjunction equals self."""
        split = self.split_disequality()
        if split is None:
            return [self]
        return split[0].convex_cases() + split[1].convex_cases()

    def is_satisfiable(self) -> bool:
        """
        Decide integer satisfiability.

        Exact whenever projection onto no variables is exact; otherwise a
        rationally infeasible system still answers False and anything else
        answers True.
        """
        normalized = self.normalize()
        if normalized.is_false:
            return False
        if not normalized.atoms:
            return True
        if not normalized.is_convex:
            return any(case.is_satisfiable() for case in normalized.convex_cases())
        return not normalized.project(()).is_false

    def project(self, keep: Iterable[str]) -> "LinearConstraint":
        """
        Existentially eliminate every variable outside `keep`.

        Equality-defined variables (unit coefficient) are substituted first;
        the rest go through Fourier-Motzkin elimination, which is exact over
        the integers when the eliminated variable only has unit coefficients
        or only one-sided bounds. Any other elimination sets `approximate`.
        """
        kept = frozenset(keep)
        current = self.normalize()
        if current.is_false:
            return current
        if not current.is_convex:
            raise ValueError("project requires a disequality-free constraint")
        exact = not current.approximate
        atoms = list(current.atoms)

        while True:
            pivot = _unit_pivot(atoms, kept)
            if pivot is None:
                break
            name, equality = pivot
            coef = equality.expression.coefficient(name)
            definition = LinearExpression(
                tuple(t for t in equality.expression.terms if t[0] != name),
                equality.expression.constant).scale(-coef)
            atoms = [a.substitute(name, definition) for a in atoms if a is not equality]
            reduced = LinearConstraint(tuple(atoms)).normalize()
            if reduced.is_false:
                return LinearConstraint.false()
            atoms = list(reduced.atoms)

        eliminated = sorted(set().union(*(a.variables for a in atoms)) - kept) if atoms else []
        if eliminated:
            split: List[AtomicConstraint] = []
            for atom in atoms:
                if atom.relation is Relation.EQ and atom.variables - kept:
                    split.append(AtomicConstraint(atom.expression, Relation.GE))
                    split.append(AtomicConstraint(-atom.expression, Relation.GE))
                else:
                    split.append(atom)
            atoms = split

        for name in eliminated:
            positive = [a for a in atoms if a.expression.coefficient(name) > 0]
            negative = [a for a in atoms if a.expression.coefficient(name) < 0]
            untouched = [a for a in atoms if a.expression.coefficient(name) == 0]
            if positive and negative:
                if any(abs(a.expression.coefficient(name)) != 1 for a in positive + negative):
                    exact = False
                combined = []
                for lower in positive:
                    for upper in negative:
                        a = lower.expression.coefficient(name)
                        b = -upper.expression.coefficient(name)
                        combined.append(AtomicConstraint(
                            lower.expression.scale(b) + upper.expression.scale(a), Relation.GE))
                untouched.extend(combined)
            reduced = LinearConstraint(tuple(untouched)).normalize()
            if reduced.is_false:
                return LinearConstraint.false()
            atoms = list(reduced.atoms)

        if not exact:
            logger.debug("Projection is approximate", keep=sorted(kept))
        return LinearConstraint(tuple(atoms), approximate=not exact).normalize()

    def reduce_equalities(self, priority: Sequence[str]) -> "LinearConstraint":
        """
        Rewrite the equalities in reduced echelon form.

        Pivots are chosen in `priority` order (unlisted variables afterwards,
        by name) and eliminated from every other conjunct, so that two
        constraints whose equalities span the same affine space end up with
        the same equality conjuncts.
        """
        normalized = self.normalize()
        if normalized.is_false:
            return normalized
        equalities = [a for a in normalized.atoms if a.relation is Relation.EQ]
        others = [a for a in normalized.atoms if a.relation is not Relation.EQ]
        if not equalities:
            return normalized

        order = list(priority) + sorted(normalized.variables - set(priority))
        rows = [({n: Fraction(c) for n, c in a.expression.terms}, Fraction(a.expression.constant))
                for a in equalities]
        pivots: Dict[str, int] = {}
        for name in order:
            candidate = next((i for i, (row, _) in enumerate(rows)
                              if i not in pivots.values() and row.get(name)), None)
            if candidate is None:
                continue
            row, constant = rows[candidate]
            factor = row[name]
            row = {n: c / factor for n, c in row.items()}
            constant = constant / factor
            rows[candidate] = (row, constant)
            for i, (other, other_constant) in enumerate(rows):
                if i == candidate or not other.get(name):
                    continue
                k = other[name]
                merged = dict(other)
                for n, c in row.items():
                    merged[n] = merged.get(n, Fraction(0)) - k * c
                rows[i] = ({n: c for n, c in merged.items() if c != 0}, other_constant - k * constant)
            pivots[name] = candidate

        reduced: List[AtomicConstraint] = [
            AtomicConstraint(_integral(row, constant), Relation.EQ) for row, constant in rows if row
        ]
        if any(not row and constant != 0 for row, constant in rows):
            return LinearConstraint.false()

        for atom in others:
            row = {n: Fraction(c) for n, c in atom.expression.terms}
            constant = Fraction(atom.expression.constant)
            for name, index in pivots.items():
                k = row.get(name)
                if not k:
                    continue
                pivot_row, pivot_constant = rows[index]
                for n, c in pivot_row.items():
                    row[n] = row.get(n, Fraction(0)) - k * c
                constant -= k * pivot_constant
                row = {n: c for n, c in row.items() if c != 0}
            reduced.append(AtomicConstraint(_integral(row, constant), atom.relation))

        return LinearConstraint(tuple(reduced), normalized.approximate).normalize()

    def __str__(self) -> str:
        return ", ".join(str(atom) for atom in self.atoms) if self.atoms else "true"


def _integral(row: Mapping[str, Fraction], constant: Fraction) -> LinearExpression:
    """Scale a rational row by the positive lcm of its denominators."""
    denominators = [c.denominator for c in row.values()] + [constant.denominator]
    scale = reduce(lambda a, b: a * b // gcd(a, b), denominators, 1)
    return LinearExpression.of({n: int(c * scale) for n, c in row.items()}, int(constant * scale))


def _unit_pivot(atoms: Sequence[AtomicConstraint],
                kept: FrozenSet[str]) -> Optional[Tuple[str, AtomicConstraint]]:
    """First (variable, equality) pair usable for exact substitution."""
    for atom in atoms:
        if atom.relation is not Relation.EQ:
            continue
        for name, coef in atom.expression.terms:
            if name not in kept and abs(coef) == 1:
                return name, atom
    return None


def normalize(constraint: LinearConstraint) -> LinearConstraint:
    return constraint.normalize()


def is_satisfiable(constraint: LinearConstraint) -> bool:
    return constraint.is_satisfiable()


def project(constraint: LinearConstraint, keep: Iterable[str]) -> LinearConstraint:
    return constraint.project(keep)
