"""
Explicit-state engine for the timed process semantics.

A state is a set of fluents together with an integer time. The seven rules
are applied to concrete states, enumerating every duration in a task's
bounds and every successor of an exclusive branch. `explore` searches the
state space for a run that passes through the waypoints of a property at
violating times; it is the reference the symbolic pipeline is checked
against.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, Mapping, Optional, Sequence, Set, Tuple
import numpy as np
import structlog

from bpmn.model import BusinessProcessSpec, FlowKind
from chc.constraints import LinearConstraint, LinearExpression
from .fluents import Fluent, FluentKind, FluentSet, format_fluents
from .properties import PropertySpec

logger = structlog.get_logger()


class Rule:
    """Transition rule names as they appear in traces."""

    BEGIN = "begin"  # begins(x) -> enacting(x, d)
    FORK = "fork"  # completes(x) of a parallel branch enables every successor
    FLOW = "flow"  # completes(x) enables one successor
    JOIN = "join"  # parallel merge fires once every predecessor enables it
    ENTER = "enter"  # enables(_, x) -> begins(x)
    FINISH = "finish"  # enacting(x, 0) -> completes(x)
    ELAPSE = "elapse"  # time advances by the least positive residual


INSTANTANEOUS_RULES = (Rule.FINISH, Rule.FORK, Rule.FLOW, Rule.JOIN, Rule.ENTER, Rule.BEGIN)


@dataclass(frozen=True)
class TimedState:
    fluents: FluentSet
    time: int = 0

    def __str__(self) -> str:
        return f"<{format_fluents(self.fluents)}, {self.time}>"


@dataclass(frozen=True)
class Transition:
    """One rule application; `duration` is nonzero only for the elapse rule."""

    rule: str
    subject: str
    fluents: FluentSet
    duration: int = 0


def initial_state(spec: BusinessProcessSpec) -> TimedState:
    return TimedState(frozenset({Fluent.begins(spec.start_event)}), 0)


def _update(fluents: FluentSet, removed, added) -> FluentSet:
    return (fluents - frozenset(removed)) | frozenset(added)


def instantaneous_transitions(spec: BusinessProcessSpec, fluents: FluentSet,
                              enumerate_durations: bool = True) -> List[Transition]:
    """
    Every instantaneous rule application to `fluents`, in rule order then fluent order.

    With `enumerate_durations` off, beginning a task that may take time yields a
    single transition that only removes begins(x); the caller supplies the
    enacting fluent.
    """
    found: Dict[str, List[Transition]] = {rule: [] for rule in INSTANTANEOUS_RULES}
    has_enables = False
    for fluent in sorted(fluents):
        x = fluent.obj
        if fluent.kind is FluentKind.BEGINS:
            low, high = spec.duration_bounds(x)
            if not enumerate_durations and high > 0:
                found[Rule.BEGIN].append(
                    Transition(Rule.BEGIN, x, _update(fluents, [fluent], [])))
                continue
            for d in range(low, high + 1):
                found[Rule.BEGIN].append(Transition(
                    Rule.BEGIN, x, _update(fluents, [fluent], [Fluent.enacting(x, d)])))
        elif fluent.kind is FluentKind.COMPLETES:
            if spec.kind(x) is FlowKind.PAR_BRANCH:
                found[Rule.FORK].append(Transition(
                    Rule.FORK, x, _update(fluents, [fluent],
                                     [Fluent.enables(x, s) for s in spec.successors(x)])))
            else:
                for s in spec.successors(x):
                    found[Rule.FLOW].append(Transition(
                        Rule.FLOW, x, _update(fluents, [fluent], [Fluent.enables(x, s)])))
        elif fluent.kind is FluentKind.ENABLES:
            has_enables = True
            if spec.not_par_merge(fluent.target):
                found[Rule.ENTER].append(Transition(
                    Rule.ENTER, fluent.target,
                    _update(fluents, [fluent], [Fluent.begins(fluent.target)])))
        elif fluent.residual == 0:
            found[Rule.FINISH].append(Transition(
                Rule.FINISH, x, _update(fluents, [fluent], [Fluent.completes(x)])))

    if has_enables:
        for merge in spec.objects_of(FlowKind.PAR_MERGE):
            required = [Fluent.enables(p, merge) for p in spec.predecessors(merge)]
            if required and all(f in fluents for f in required):
                found[Rule.JOIN].append(Transition(
                    Rule.JOIN, merge, _update(fluents, required, [Fluent.begins(merge)])))

    return [t for rule in INSTANTANEOUS_RULES for t in found[rule]]


def time_transition(fluents: FluentSet) -> Optional[Transition]:
    """Elapse: decrease every residual by the least one; None when it does not apply."""
    enacting = [f for f in fluents if f.kind is FluentKind.ENACTING]
    if not enacting:
        return None
    m = min(f.residual for f in enacting)
    if m <= 0:
        return None
    updated = [Fluent.enacting(f.obj, f.residual - m) for f in enacting]
    subject = min(f.obj for f in enacting)
    return Transition(Rule.ELAPSE, subject, _update(fluents, enacting, updated), m)


def transitions(spec: BusinessProcessSpec, fluents: FluentSet,
                priority: Optional[Sequence[str]] = None) -> List[Transition]:
    """
    Rule applications enabled in `fluents`.

    Args:
        spec: The process.
        fluents: Current fluent set.
        priority: When given, only the first rule in this order that applies
            fires, on its least triggering fluent; duration and successor
            alternatives of that single application are all kept.

    Returns:
        Instantaneous transitions, or the elapse transition when none applies.
    """
    instantaneous = instantaneous_transitions(spec, fluents)
    if instantaneous:
        if priority is None:
            return instantaneous
        for rule in priority:
            chosen = [t for t in instantaneous if t.rule == rule]
            if chosen:
                subject = chosen[0].subject
                return [t for t in chosen if t.subject == subject]
        return instantaneous
    tick = time_transition(fluents)
    return [tick] if tick is not None else []


def step(spec: BusinessProcessSpec, state: TimedState) -> Set[TimedState]:
    """All successors of `state` under the transition relation."""
    return {TimedState(t.fluents, state.time + t.duration) for t in transitions(spec, state.fluents)}


def match_waypoint(state: TimedState, waypoint: FrozenSet[Fluent]) -> bool:
    return state.fluents == waypoint


@dataclass(frozen=True)
class ExplorationBounds:
    max_states: int = 1_000_000
    max_offset: int = 50


@dataclass(frozen=True)
class TraceStep:
    time: int
    rule: str
    fluents: FluentSet

    def __str__(self) -> str:
        return f"t={self.time} {self.rule} {format_fluents(self.fluents)}"


class VerdictKind(str, Enum):
    VIOLATED = "violated"
    NO_VIOLATION = "no_violation_within_bounds"


@dataclass
class OracleVerdict:
    kind: VerdictKind
    exhaustive: bool
    trace: List[TraceStep] = field(default_factory=list)
    states: int = 0
    waypoint_times: List[int] = field(default_factory=list)
    reason: str = ""

    @property
    def violated(self) -> bool:
        return self.kind is VerdictKind.VIOLATED

    @property
    def definitive(self) -> bool:
        return self.violated or self.exhaustive

    def to_dict(self) -> Dict:
        return {
            "verdict": self.kind.value,
            "exhaustive": self.exhaustive,
            "states": self.states,
            "waypoint_times": list(self.waypoint_times),
            "trace": [str(s) for s in self.trace],
            "reason": self.reason,
        }


def render_trace(trace: Sequence[TraceStep]) -> str:
    return "\n".join(str(s) for s in trace) + ("\n" if trace else "")


def _difference_bound_cap(violation: LinearConstraint) -> Optional[int]:
    """
    Largest constant of a difference-bound violation constraint, or None.

    Every conjunct must mention at most two time variables with unit
    coefficients of opposite sign. Waypoint times are then only compared
    with each other up to this constant, so clamping gaps just above it
    loses nothing.
    """
    cap = 0
    for atom in violation.atoms:
        coefficients = sorted(coef for _, coef in atom.expression.terms)
        if coefficients not in ([], [1], [-1], [-1, 1]):
            return None
        cap = max(cap, abs(atom.expression.constant))
    return cap


def _clamp(value: int, cap: Optional[int]) -> int:
    return value if cap is None else min(value, cap + 1)


def _violation_holds(violation: LinearConstraint, names: Sequence[str], gaps: Sequence[int],
                     cap: Optional[int]) -> bool:
    def difference(i: int, j: int) -> int:
        # T_i - T_j from the (possibly clamped) gaps between consecutive waypoints
        if i == j:
            return 0
        low, high = sorted((i, j))
        span = _clamp(sum(gaps[low:high]), cap)
        return span if i > j else -span

    if cap is None:
        times = {name: sum(gaps[:position]) for position, name in enumerate(names)}
        return violation.evaluate(times)

    index = {name: position for position, name in enumerate(names)}
    for atom in violation.atoms:
        terms = atom.expression.terms
        if len(terms) == 2:
            (a, ca), (b, _) = terms
            i, j = (index[a], index[b]) if ca > 0 else (index[b], index[a])
            value = difference(i, j)
        elif len(terms) == 1:
            name, coef = terms[0]
            value = coef * difference(index[name], 0)
        else:
            value = 0
        if not atom.holds(value + atom.expression.constant):
            return False
    return True


def explore(spec: BusinessProcessSpec, prop: PropertySpec,
            bounds: ExplorationBounds = ExplorationBounds()) -> OracleVerdict:
    """
    Breadth-first search for a run violating `prop`.

    Nodes are (fluents, matched waypoints, gaps between matched waypoint
    times, time since the last match). Matching the next waypoint is a
    zero-time move available whenever the fluent set equals it, so a state
    may match several waypoints and the run may also continue past it.

    When the violation constraint is difference-bound, gaps are clamped just
    above its largest constant and the search is finite and exact.
    Otherwise nodes whose time since the last match exceeds
    `bounds.max_offset` are pruned and the verdict is not exhaustive.

    Returns:
        OracleVerdict: Violated with the trace of the first violating run
        found, or no violation, flagged exhaustive when no bound was hit.
    """
    names = prop.time_variables
    violation = prop.violation.substitute(
        {prop.initial_variable: LinearExpression.number(0)}).normalize()
    if not violation.is_satisfiable():
        logger.info("Violation constraint is unsatisfiable", violation=str(prop.violation))
        return OracleVerdict(VerdictKind.NO_VIOLATION, True, reason="violation constraint unsatisfiable")

    cap = _difference_bound_cap(violation)
    waypoints = [w.fluents for w in prop.waypoints]
    n = len(waypoints)

    Node = Tuple[FluentSet, int, Tuple[int, ...], int]
    start = initial_state(spec)
    root: Node = (start.fluents, 0, (), 0)
    parents: Dict[Node, Tuple[Optional[Node], TraceStep]] = {root: (None, TraceStep(0, "init", start.fluents))}
    times: Dict[Node, int] = {root: 0}
    queue = deque([root])
    pruned = False
    capped = False

    def trace_to(node: Node) -> List[TraceStep]:
        steps: List[TraceStep] = []
        current: Optional[Node] = node
        while current is not None:
            parent, entry = parents[current]
            steps.append(entry)
            current = parent
        return list(reversed(steps))

    while queue:
        node = queue.popleft()
        fluents, stage, gaps, delta = node
        now = times[node]

        if stage == n:
            if _violation_holds(violation, names, gaps, cap):
                trace = trace_to(node)
                matched = [s.time for s in trace if s.rule.startswith("waypoint")]
                logger.info("Violating run found", states=len(parents), length=len(trace))
                return OracleVerdict(VerdictKind.VIOLATED, True, trace, len(parents), matched)
            continue

        successors: List[Tuple[Node, TraceStep, int]] = []
        if fluents == waypoints[stage]:
            target: Node = (fluents, stage + 1, gaps + (delta,), 0)
            successors.append((target, TraceStep(now, f"waypoint {stage + 1}", fluents), now))
        for move in transitions(spec, fluents):
            offset = delta + move.duration
            if cap is None and offset > bounds.max_offset:
                pruned = True
                continue
            target = (move.fluents, stage, gaps, _clamp(offset, cap))
            successors.append((target, TraceStep(now + move.duration, move.rule, move.fluents),
                               now + move.duration))

        for target, entry, time in successors:
            if target in parents:
                continue
            if len(parents) >= bounds.max_states:
                capped = True
                queue.clear()
                break
            parents[target] = (node, entry)
            times[target] = time
            queue.append(target)

    exhaustive = not (pruned or capped)
    reason = "state limit reached" if capped else ("offset bound reached" if pruned else "")
    logger.info("Exploration finished without violation", states=len(parents),
                exhaustive=exhaustive, clamped=cap is not None)
    return OracleVerdict(VerdictKind.NO_VIOLATION, exhaustive, [], len(parents), reason=reason)


def completion_times(spec: BusinessProcessSpec, priority: Optional[Sequence[str]] = None,
                     max_time: int = 1000, max_states: int = 1_000_000) -> Set[int]:
    """Times at which {completes(end)} is reachable, optionally under a fixed rule priority."""
    goal = frozenset({Fluent.completes(e) for e in spec.end_events})
    start = initial_state(spec)
    seen = {start}
    queue = deque([start])
    found: Set[int] = set()
    while queue and len(seen) < max_states:
        state = queue.popleft()
        if state.fluents == goal:
            found.add(state.time)
        for move in transitions(spec, state.fluents, priority):
            successor = TimedState(move.fluents, state.time + move.duration)
            if successor.time <= max_time and successor not in seen:
                seen.add(successor)
                queue.append(successor)
    return found


class DurationPolicy(str, Enum):
    MIN = "min"
    MAX = "max"
    RANDOM = "random"


def simulate_run(spec: BusinessProcessSpec, policy: DurationPolicy = DurationPolicy.RANDOM,
                 seed: Optional[int] = None, max_steps: int = 10_000,
                 choices: Optional[Mapping[str, Sequence[str]]] = None) -> List[TraceStep]:
    """
    Produce one run from the initial state.

    Interleaving and branch choices come from a generator seeded with `seed`;
    task durations follow `policy`. `choices` scripts exclusive branches:
    the n-th time gateway g is left, the n-th entry of choices[g] is taken
    while entries remain.

    Returns:
        The trace, stopping at a state without transitions or after
        `max_steps` transitions.
    """
    rng = np.random.default_rng(seed)
    scripted: Dict[str, List[str]] = {k: list(v) for k, v in (choices or {}).items()}
    state = initial_state(spec)
    trace = [TraceStep(0, "init", state.fluents)]

    def pick(options: List[Transition]) -> Transition:
        return options[int(rng.integers(len(options)))]

    for _ in range(max_steps):
        moves = transitions(spec, state.fluents)
        if not moves:
            break
        move = pick(_collapse(moves, policy, scripted, pick))
        state = TimedState(move.fluents, state.time + move.duration)
        trace.append(TraceStep(state.time, move.rule, state.fluents))
    else:
        logger.warning("Simulation stopped at the step limit", max_steps=max_steps)
    return trace


def _collapse(moves: List[Transition], policy: DurationPolicy, scripted: Dict[str, List[str]],
              pick: Callable[[List[Transition]], Transition]) -> List[Transition]:
    """One candidate per rule application; durations and scripted branches resolved."""
    grouped: Dict[Tuple[str, str], List[Transition]] = {}
    for move in moves:
        grouped.setdefault((move.rule, move.subject), []).append(move)
    candidates: List[Transition] = []
    for (rule, subject), group in grouped.items():
        if rule == Rule.BEGIN and len(group) > 1:
            if policy is DurationPolicy.MIN:
                group = [group[0]]
            elif policy is DurationPolicy.MAX:
                group = [group[-1]]
            else:
                group = [pick(group)]
        elif rule == Rule.FLOW and len(group) > 1:
            queue = scripted.get(subject)
            if queue:
                wanted = Fluent.enables(subject, queue.pop(0))
                group = [m for m in group if wanted in m.fluents] or group
            group = [pick(group)]
        candidates.extend(group)
    return candidates
