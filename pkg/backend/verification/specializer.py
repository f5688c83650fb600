"""
Removal of the interpreter.

The process semantics is driven symbolically: fluent sets stay concrete
while the residual times of enacting tasks become integer variables. Every
state reached right before time must pass is folded into a predicate keyed
by its skeleton (the concrete fluents plus the objects of the symbolic
residuals) and by the property segment being searched. The result is a
clause set over integer variables only:

    false :- <violation>, T0=0, <segment 1 entry>(T0,T1), ..., <segment n entry>(Tn-1,Tn).

where a segment predicate p(R1,...,Rk,T,X) holds when the state with
residuals R1..Rk at time T can reach the segment's waypoint at time X.
"""

from collections import OrderedDict, deque
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple
import structlog

from bpmn.model import BusinessProcessSpec
from bpmn.wellformed import check_well_formed
from chc.clauses import Atom, ClauseSet, HornClause, normalize_clause
from chc.constraints import AtomicConstraint, LinearConstraint, LinearExpression, Relation
from .fluents import Fluent, FluentKind, FluentSet
from .properties import PropertySpec
from .semantics import Rule, initial_state, instantaneous_transitions

logger = structlog.get_logger()

Slot = Tuple[str, str]
Skeleton = Tuple[Tuple[Fluent, ...], Tuple[str, ...]]

ENTRY_TIME = "T"
EXIT_TIME = "X"
ADVANCED_TIME = "U"


class SpecializationError(ValueError):
    """The process cannot be specialized (ill-formed, or a closure diverged)."""


def _var(name: str) -> LinearExpression:
    return LinearExpression.variable(name)


def _eq(left: LinearExpression, right: LinearExpression) -> AtomicConstraint:
    return AtomicConstraint.compare(left, Relation.EQ, right)


def _ge(left: LinearExpression, right: LinearExpression) -> AtomicConstraint:
    return AtomicConstraint.compare(left, Relation.GE, right)


@dataclass(frozen=True)
class SymbolicState:
    """Concrete fluents plus enacting slots whose residuals are variables."""

    fixed: FluentSet
    slots: Tuple[Slot, ...] = ()
    guard: LinearConstraint = field(default_factory=LinearConstraint.true)

    @property
    def residuals(self) -> Tuple[str, ...]:
        return tuple(variable for _, variable in self.slots)

    @property
    def skeleton(self) -> Skeleton:
        return tuple(sorted(self.fixed)), tuple(obj for obj, _ in self.slots)

    @property
    def key(self) -> Tuple[FluentSet, Tuple[Slot, ...]]:
        return self.fixed, self.slots

    def __str__(self) -> str:
        return describe_skeleton(self.skeleton, self.residuals)


def describe_skeleton(skeleton: Skeleton, residuals: Optional[Sequence[str]] = None) -> str:
    fixed, objects = skeleton
    names = residuals or ["_"] * len(objects)
    items = [str(f) for f in fixed] + [f"enacting({o},{r})" for o, r in zip(objects, names)]
    return "{" + ", ".join(items) + "}"


@dataclass
class Definition:
    name: str
    skeleton: Skeleton
    segment: int
    entry: bool = False

    @property
    def arity(self) -> int:
        return 2 if self.entry else len(self.skeleton[1]) + 2

    def describe(self) -> str:
        what = "entry" if self.entry else describe_skeleton(self.skeleton)
        return f"{self.name}/{self.arity}: segment {self.segment}, {what}"


class DefinitionTable:
    """(skeleton, segment) -> generated predicate, named in discovery order."""

    def __init__(self):
        self._definitions: Dict[Tuple[Skeleton, int, bool], Definition] = OrderedDict()
        self._counter = 0

    def __len__(self) -> int:
        return len(self._definitions)

    def __iter__(self):
        return iter(self._definitions.values())

    def lookup(self, skeleton: Skeleton, segment: int, entry: bool = False) -> Tuple[Definition, bool]:
        key = (skeleton, segment, entry)
        if key in self._definitions:
            return self._definitions[key], False
        if entry:
            name = f"entry{segment}"
        else:
            self._counter += 1
            name = f"new{self._counter}"
        definition = Definition(name, skeleton, segment, entry)
        self._definitions[key] = definition
        return definition, True

    def rename(self, mapping: Dict[str, str]) -> None:
        """Keep the definitions in `mapping`, under their new names, in new-name order."""
        kept = [(key, d) for key, d in self._definitions.items() if d.name in mapping]
        for _, definition in kept:
            definition.name = mapping[definition.name]
        kept.sort(key=lambda item: int(item[1].name[3:]))
        self._definitions = OrderedDict(kept)

    def render(self) -> str:
        return "".join(f"% {d.describe()}\n" for d in self)


def _ordered_partitions(items: Sequence[str]) -> Iterable[List[List[str]]]:
    if not items:
        yield []
        return
    rest = list(items[1:])
    for size in range(len(rest) + 1):
        for chosen in _subsets(rest, size):
            block = [items[0]] + chosen
            remaining = [x for x in rest if x not in chosen]
            for tail in _ordered_partitions(remaining):
                for position in range(len(tail) + 1):
                    yield tail[:position] + [block] + tail[position:]


def _subsets(items: List[str], size: int) -> Iterable[List[str]]:
    if size == 0:
        yield []
        return
    for index, item in enumerate(items):
        for tail in _subsets(items[index + 1:], size - 1):
            yield [item] + tail


def separate_slots(state: SymbolicState) -> List[SymbolicState]:
    """
    Cases of a state where slots of one object are pairwise distinct.

    Slots of the same object with equal residuals are one fluent, so they
    are merged; the others are ordered by strictly increasing residual.
    """
    groups: Dict[str, List[str]] = OrderedDict()
    for obj, variable in state.slots:
        groups.setdefault(obj, []).append(variable)
    if all(len(v) == 1 for v in groups.values()):
        return [state]

    options: List[List[Tuple[List[AtomicConstraint], List[Slot]]]] = []
    for obj, variables in groups.items():
        cases = []
        for blocks in _ordered_partitions(variables):
            atoms = [_eq(_var(other), _var(block[0])) for block in blocks for other in block[1:]]
            atoms.extend(AtomicConstraint.compare(_var(a[0]), Relation.LT, _var(b[0]))
                         for a, b in zip(blocks, blocks[1:]))
            cases.append((atoms, [(obj, block[0]) for block in blocks]))
        options.append(cases)

    states = []
    for combination in product(*options):
        atoms = [a for case_atoms, _ in combination for a in case_atoms]
        slots = tuple(slot for _, case_slots in combination for slot in case_slots)
        guard = state.guard.conjoin(*atoms)
        if guard.is_satisfiable():
            states.append(SymbolicState(state.fixed, slots, guard))
    return states


def advance_time(state: SymbolicState, time: str = ENTRY_TIME,
                 advanced: str = ADVANCED_TIME) -> List[Tuple[LinearConstraint, SymbolicState]]:
    """
    Symbolic time step: one case per slot taken as the least residual.

    Case i constrains R_i >= 1 and R_i =< R_j for every other slot, gives
    the successor residuals S_j = R_j - R_i and sets `advanced` = `time` + R_i.

    Returns:
        (case constraint, successor state) pairs; the successor's guard is
        the state's guard together with the case constraint.
    """
    cases = []
    for i, (_, chosen) in enumerate(state.slots):
        atoms = [_ge(_var(chosen), LinearExpression.number(1))]
        slots: List[Slot] = []
        for j, (obj, other) in enumerate(state.slots):
            successor = f"S{j}"
            if j != i:
                atoms.append(_ge(_var(other), _var(chosen)))
            atoms.append(_eq(_var(successor), _var(other) - _var(chosen)))
            slots.append((obj, successor))
        atoms.append(_eq(_var(advanced), _var(time) + _var(chosen)))
        constraint = LinearConstraint(tuple(atoms))
        cases.append((constraint, SymbolicState(state.fixed, tuple(slots), state.guard & constraint)))
    return cases


class Specializer:
    """Compile one process and one property into an interpreter-free clause set."""

    def __init__(self, spec: BusinessProcessSpec, prop: PropertySpec,
                 max_closure_states: int = 200_000):
        self.spec = spec
        self.prop = prop
        self.max_closure_states = max_closure_states
        self.table = DefinitionTable()
        self._pending: deque = deque()
        self._definitions: Dict[str, List[HornClause]] = OrderedDict()

    def specialize(self) -> ClauseSet:
        violations = check_well_formed(self.spec)
        if violations:
            raise SpecializationError(
                "process is not well-formed: " + "; ".join(str(v) for v in violations))
        self.prop.check_against(self.spec)

        goal = self._goal()
        while self._pending:
            definition = self._pending.popleft()
            if definition.entry:
                clauses = self._define_entry(definition)
            else:
                clauses = self._define(definition)
            self._definitions[definition.name] = clauses
            logger.debug("Defined predicate", predicate=definition.describe(), clauses=len(clauses))

        generated = len(self._definitions)
        result = self._cleanup(goal)
        logger.info("Specialization completed", generated=generated,
                    predicates=len(result.defined_predicates), clauses=len(result))
        return result

    def instantaneous_closure(self, state: SymbolicState) -> List[SymbolicState]:
        """All states reachable from `state` by instantaneous rules, the state itself first."""
        seen: Dict[Tuple, SymbolicState] = OrderedDict([(state.key, state)])
        queue = deque([state])
        while queue:
            current = queue.popleft()
            for successor in self._moves(current):
                if successor.key in seen:
                    continue
                if len(seen) >= self.max_closure_states:
                    raise SpecializationError(
                        f"instantaneous closure exceeded {self.max_closure_states} states")
                seen[successor.key] = successor
                queue.append(successor)
        return list(seen.values())

    def fold(self, state: SymbolicState, segment: int, time: str = ENTRY_TIME) -> Atom:
        definition, created = self.table.lookup(state.skeleton, segment)
        if created:
            self._pending.append(definition)
        return Atom(definition.name, state.residuals + (time, EXIT_TIME))

    def _moves(self, state: SymbolicState) -> List[SymbolicState]:
        moves = []
        for move in instantaneous_transitions(self.spec, state.fixed, enumerate_durations=False):
            x = move.subject
            timed = move.rule == Rule.BEGIN and self.spec.is_task(x)
            if not timed or self.spec.duration_bounds(x)[1] == 0:
                moves.append(SymbolicState(move.fluents, state.slots, state.guard))
                continue
            low, high = self.spec.duration_bounds(x)
            if low == 0:
                moves.append(SymbolicState(move.fluents | {Fluent.enacting(x, 0)}, state.slots,
                                           state.guard))
            variable = f"D_{x}_{sum(1 for obj, _ in state.slots if obj == x)}"
            slots = tuple(sorted(state.slots + ((x, variable),)))
            moves.append(SymbolicState(move.fluents, slots,
                                       state.guard & LinearConstraint.between(variable, max(low, 1), high)))
        return moves

    def _goal(self) -> HornClause:
        names = self.prop.time_variables
        body = []
        for segment in range(1, self.prop.segments + 1):
            definition, created = self.table.lookup(((), ()), segment, entry=True)
            if created:
                self._pending.append(definition)
            body.append(Atom(definition.name, (names[segment - 1], names[segment])))
        return HornClause(None, self.prop.anchored_violation(), tuple(body))

    def _entry_fluents(self, segment: int) -> FluentSet:
        if segment == 1:
            return initial_state(self.spec).fluents
        return self.prop.waypoints[segment - 2].fluents

    def _define_entry(self, definition: Definition) -> List[HornClause]:
        fixed = []
        slots: List[Slot] = []
        atoms = []
        for fluent in sorted(self._entry_fluents(definition.segment)):
            if fluent.kind is FluentKind.ENACTING and fluent.residual > 0:
                variable = f"R{len(slots)}"
                slots.append((fluent.obj, variable))
                atoms.append(_eq(_var(variable), LinearExpression.number(fluent.residual)))
            else:
                fixed.append(fluent)
        root = SymbolicState(frozenset(fixed), tuple(slots), LinearConstraint(tuple(atoms)))
        head = Atom(definition.name, (ENTRY_TIME, EXIT_TIME))
        return self._expand(head, root, definition.segment, check_root=True)

    def _define(self, definition: Definition) -> List[HornClause]:
        fixed, objects = definition.skeleton
        residuals = [f"R{i}" for i in range(len(objects))]
        atoms = [_ge(_var(r), LinearExpression.number(0)) for r in residuals]
        for i in range(1, len(objects)):
            if objects[i] == objects[i - 1]:
                atoms.append(AtomicConstraint.compare(_var(residuals[i - 1]), Relation.LT,
                                                      _var(residuals[i])))
        root = SymbolicState(frozenset(fixed), tuple(zip(objects, residuals)),
                             LinearConstraint(tuple(atoms)))
        head = Atom(definition.name, tuple(residuals) + (ENTRY_TIME, EXIT_TIME))

        clauses = self._match_clauses(head, root, definition.segment, ENTRY_TIME)
        for zeros in product((True, False), repeat=len(residuals)):
            case = root.guard.conjoin(*[
                _eq(_var(r), LinearExpression.number(0)) if zero
                else _ge(_var(r), LinearExpression.number(1))
                for r, zero in zip(residuals, zeros)])
            if not case.is_satisfiable():
                continue
            if not any(zeros):
                for _, successor in advance_time(SymbolicState(root.fixed, root.slots, case)):
                    clauses.append(HornClause(head, successor.guard,
                                              (self.fold(successor, definition.segment, ADVANCED_TIME),)))
                continue
            zeroed = frozenset(Fluent.enacting(obj, 0)
                               for (obj, _), zero in zip(root.slots, zeros) if zero)
            kept = tuple(slot for slot, zero in zip(root.slots, zeros) if not zero)
            start = SymbolicState(root.fixed | zeroed, kept, case)
            clauses.extend(self._expand(head, start, definition.segment, check_root=False))
        return clauses

    def _expand(self, head: Atom, root: SymbolicState, segment: int,
                check_root: bool) -> List[HornClause]:
        clauses: List[HornClause] = []
        for state in self.instantaneous_closure(root):
            if not self._moves(state) and state.slots:
                for case in separate_slots(state):
                    clauses.append(HornClause(head, case.guard, (self.fold(case, segment),)))
                continue
            if state is root and not check_root:
                continue
            clauses.extend(self._match_clauses(head, state, segment, ENTRY_TIME))
        return clauses

    def _match_clauses(self, head: Atom, state: SymbolicState, segment: int,
                       time: str) -> List[HornClause]:
        waypoint = self.prop.waypoints[segment - 1].fluents
        clauses = []
        for equalities in match_alternatives(state, waypoint):
            constraint = state.guard.conjoin(*equalities, _eq(_var(EXIT_TIME), _var(time)))
            clauses.append(HornClause(head, constraint, ()))
        return clauses

    def _cleanup(self, goal: HornClause) -> ClauseSet:
        definitions = {name: [c for c in clauses if c.constraint.is_satisfiable()]
                       for name, clauses in self._definitions.items()}

        productive: Set[str] = set()
        changed = True
        while changed:
            changed = False
            for name, clauses in definitions.items():
                if name not in productive and any(
                        all(a.predicate in productive for a in c.body) for c in clauses):
                    productive.add(name)
                    changed = True
        definitions = {name: [c for c in clauses if all(a.predicate in productive for a in c.body)]
                       for name, clauses in definitions.items() if name in productive}
        open_predicates = {a.predicate for a in goal.body if a.predicate not in productive}
        for predicate in sorted(open_predicates):
            logger.warning("Waypoint is unreachable; goal calls a predicate with no derivations",
                           predicate=predicate)

        entries = {d.name for d in self.table if d.entry}
        for atom in goal.body:
            clauses = definitions.get(atom.predicate, [])
            if atom.predicate in entries and len(clauses) == 1:
                goal = _unfold(goal, atom, clauses[0])

        order = _reachable(goal, definitions)
        renaming = {name: f"new{index}" for index, name in enumerate(order, start=1)}
        self.table.rename(renaming)

        emitted: Dict[str, HornClause] = OrderedDict()
        for name in order:
            for clause in definitions.get(name, []):
                renamed = _rename_predicates(clause, renaming)
                canonical = normalize_clause(renamed)
                emitted.setdefault(str(canonical), canonical)
        final_goal = normalize_clause(_rename_predicates(goal, renaming))
        emitted.setdefault(str(final_goal), final_goal)
        opened = frozenset(renaming[p] for p in open_predicates if p in renaming)
        return ClauseSet(tuple(emitted.values()), opened)


def match_alternatives(state: SymbolicState, waypoint: FluentSet) -> List[List[AtomicConstraint]]:
    """
    Residual assignments under which `state` equals `waypoint`.

    Each alternative is a list of equalities slot-variable = residual.
    Slots of one object may take equal values (they are then one fluent),
    so every surjective assignment onto the waypoint's residuals counts.
    """
    if not state.fixed <= waypoint:
        return []
    rest = waypoint - state.fixed
    if any(f.kind is not FluentKind.ENACTING for f in rest):
        return []
    wanted: Dict[str, List[int]] = {}
    for fluent in rest:
        wanted.setdefault(fluent.obj, []).append(fluent.residual)
    have: Dict[str, List[str]] = {}
    for obj, variable in state.slots:
        have.setdefault(obj, []).append(variable)
    if set(wanted) != set(have):
        return []

    per_object = []
    for obj in sorted(have):
        values = sorted(wanted[obj])
        options = []
        for assignment in product(values, repeat=len(have[obj])):
            if set(assignment) == set(values):
                options.append([_eq(_var(v), LinearExpression.number(n))
                                for v, n in zip(have[obj], assignment)])
        per_object.append(options)
    return [[a for part in combination for a in part] for combination in product(*per_object)]


def _unfold(goal: HornClause, call: Atom, definition: HornClause) -> HornClause:
    prefix = f"{call.predicate}_"
    apart = definition.rename({v: prefix + v for v in definition.variables})
    binding = {param: arg for param, arg in zip(apart.head.args, call.args)}
    apart = apart.rename(binding)
    body = []
    replaced = False
    for atom in goal.body:
        if atom == call and not replaced:
            body.extend(apart.body)
            replaced = True
        else:
            body.append(atom)
    return HornClause(None, goal.constraint & apart.constraint, tuple(body))


def _reachable(goal: HornClause, definitions: Dict[str, List[HornClause]]) -> List[str]:
    order: List[str] = []
    queue = deque(a.predicate for a in goal.body)
    while queue:
        name = queue.popleft()
        if name in order:
            continue
        order.append(name)
        for clause in definitions.get(name, []):
            queue.extend(a.predicate for a in clause.body)
    return order


def _rename_predicates(clause: HornClause, renaming: Dict[str, str]) -> HornClause:
    head = clause.head.with_predicate(renaming[clause.head.predicate]) if clause.head else None
    return HornClause(head, clause.constraint,
                      tuple(a.with_predicate(renaming[a.predicate]) for a in clause.body))


def specialize(spec: BusinessProcessSpec, prop: PropertySpec,
               max_closure_states: int = 200_000) -> ClauseSet:
    """
    Compile `spec` and `prop` into a clause set that is satisfiable exactly
    when no run of the process violates the property.

    Raises:
        SpecializationError: when the process is not well-formed or an
            instantaneous closure grows past `max_closure_states`.
        PropertyError: when the property names unknown flow objects.
    """
    return Specializer(spec, prop, max_closure_states).specialize()
