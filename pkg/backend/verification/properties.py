"""
Temporal properties as chains of waypoints.

A property file is a single goal clause:

    false :- Ts=0, Tp>Ts, Te>Tp+9,
        reach(s([begins(start)],Ts), s([completes(p)],Tp)),
        reach(s([completes(p)],Tp), s([completes(end)],Te)).

It states that no run passes through the listed fluent sets, in order, at
times satisfying the constraint.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import FrozenSet, List, Optional, Tuple, Union
import structlog

from bpmn.model import BusinessProcessSpec
from chc.constraints import AtomicConstraint, LinearConstraint, LinearExpression, Relation
from chc.syntax import Comparison, Compound, Expression, read_clauses
from .fluents import Fluent, FluentSet, fluents_from_list, format_fluent_list

logger = structlog.get_logger()


class PropertyError(ValueError):
    """A property does not have the waypoint-chain shape."""


@dataclass(frozen=True)
class Waypoint:
    fluents: FluentSet
    time_variable: str


@dataclass(frozen=True)
class PropertySpec:
    """Waypoint fluent sets, their time variables and the violation constraint.

    `initial_variable` names T0, the time of the initial state, which is 0.
    """

    waypoints: Tuple[Waypoint, ...]
    violation: LinearConstraint
    initial_variable: str = "T0"
    initial_fluents: Optional[FluentSet] = None

    def __post_init__(self):
        if not self.waypoints:
            raise PropertyError("a property needs at least one waypoint")
        names = self.time_variables
        if len(set(names)) != len(names):
            raise PropertyError(f"time variables must be distinct: {', '.join(names)}")
        stray = self.violation.variables - set(names)
        if stray:
            raise PropertyError(f"violation mentions unknown variables: {', '.join(sorted(stray))}")

    @property
    def time_variables(self) -> List[str]:
        return [self.initial_variable] + [w.time_variable for w in self.waypoints]

    @property
    def segments(self) -> int:
        return len(self.waypoints)

    def anchored_violation(self) -> LinearConstraint:
        """The violation constraint together with T0 = 0."""
        return self.violation.conjoin(AtomicConstraint(
            LinearExpression.variable(self.initial_variable), Relation.EQ))

    def check_against(self, spec: BusinessProcessSpec) -> None:
        expected = frozenset({Fluent.begins(spec.start_event)})
        if self.initial_fluents is not None and self.initial_fluents != expected:
            raise PropertyError(f"the first reach must start from {format_fluent_list(expected)}")
        for waypoint in self.waypoints:
            for fluent in waypoint.fluents:
                for name in filter(None, (fluent.obj, fluent.target)):
                    spec.kind(name)

    def to_text(self) -> str:
        literals = [str(atom) for atom in self.violation.atoms]
        source = format_fluent_list(self.initial_fluents or frozenset())
        previous = (source, self.initial_variable)
        for waypoint in self.waypoints:
            target = (format_fluent_list(waypoint.fluents), waypoint.time_variable)
            literals.append(f"reach(s({previous[0]},{previous[1]}), s({target[0]},{target[1]}))")
            previous = target
        return "false :- " + ",\n    ".join(literals) + ".\n"


def _state_pattern(term) -> Tuple[FluentSet, str]:
    if not (isinstance(term, Compound) and term.name == "s" and len(term.args) == 2):
        raise PropertyError(f"line {term.line}: expected s([fluents], Time)")
    fluents, time = term.args
    if not (isinstance(time, Expression) and time.variable):
        raise PropertyError(f"line {term.line}: state time must be a variable")
    return fluents_from_list(fluents), time.variable


def parse_property(text: str) -> PropertySpec:
    """
    Read a property in goal-clause syntax.

    Raises:
        ParseError: on syntax errors.
        PropertyError: when the clause is not a chain of reach atoms starting
            at the initial state.
    """
    clauses = read_clauses(text)
    if len(clauses) != 1:
        raise PropertyError(f"expected exactly one goal clause, found {len(clauses)}")
    raw = clauses[0]
    if raw.head.name != "false" or raw.head.args:
        raise PropertyError("the property clause must have head false")

    atoms: List[AtomicConstraint] = []
    chain: List[Tuple[Tuple[FluentSet, str], Tuple[FluentSet, str]]] = []
    for literal in raw.body:
        if isinstance(literal, Comparison):
            atoms.append(literal.constraint)
        elif literal.name == "reach" and len(literal.args) == 2:
            chain.append((_state_pattern(literal.args[0]), _state_pattern(literal.args[1])))
        else:
            raise PropertyError(f"line {literal.line}: unexpected literal {literal.name}")
    if not chain:
        raise PropertyError("a property needs at least one reach atom")

    initial_fluents, initial_variable = chain[0][0]
    waypoints: List[Waypoint] = []
    previous = chain[0][0]
    for source, target in chain:
        if source != previous:
            raise PropertyError("each reach must start where the previous one ended")
        waypoints.append(Waypoint(target[0], target[1]))
        previous = target

    prop = PropertySpec(tuple(waypoints), LinearConstraint(tuple(atoms)),
                        initial_variable, initial_fluents)
    logger.debug("Parsed property", waypoints=len(waypoints), violation=str(prop.violation))
    return prop


def load_property(path: Union[str, Path]) -> PropertySpec:
    return parse_property(Path(path).read_text(encoding="utf-8"))


def response_time_property(spec: BusinessProcessSpec, source: FrozenSet[Fluent],
                           target: FrozenSet[Fluent], deadline: int) -> PropertySpec:
    """Whenever `target` follows `source`, it does so within `deadline` time units."""
    t0, t1, t2 = (LinearExpression.variable(n) for n in ("T0", "T1", "T2"))
    violation = LinearConstraint.of(
        AtomicConstraint.compare(t1, Relation.GT, t0),
        AtomicConstraint.compare(t2, Relation.GT, t1.shift(deadline)),
    )
    return PropertySpec((Waypoint(frozenset(source), "T1"), Waypoint(frozenset(target), "T2")),
                        violation, "T0", frozenset({Fluent.begins(spec.start_event)}))


def schedulability_property(spec: BusinessProcessSpec, target: FrozenSet[Fluent],
                            deadline: int) -> PropertySpec:
    """`target` is never reached later than `deadline`."""
    violation = LinearConstraint.of(AtomicConstraint.compare(
        LinearExpression.variable("T1"), Relation.GT, LinearExpression.number(deadline)))
    return PropertySpec((Waypoint(frozenset(target), "T1"),), violation, "T0",
                        frozenset({Fluent.begins(spec.start_event)}))
