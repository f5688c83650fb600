"""
Business process specifications: flow objects, sequence flows and duration
bounds, read from the fact syntax

    task(a).  exc_branch(g2).  seq(a,g2).
    duration(a, D) :- D>=1, D=<6.
    duration(X, D) :- not_task(X), D=0.
"""

from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Tuple, Union
import structlog

from chc.syntax import Compound, Comparison, Expression, ParseError, RawClause, read_clauses

logger = structlog.get_logger()


class ModelError(ValueError):
    """Semantic error in a process specification."""


class FlowKind(str, Enum):
    TASK = "task"
    START = "start"
    END = "end"
    PAR_BRANCH = "par_branch"
    PAR_MERGE = "par_merge"
    EXC_BRANCH = "exc_branch"
    EXC_MERGE = "exc_merge"

    @property
    def is_gateway(self) -> bool:
        return self in (FlowKind.PAR_BRANCH, FlowKind.PAR_MERGE, FlowKind.EXC_BRANCH, FlowKind.EXC_MERGE)

    @property
    def is_event(self) -> bool:
        return self in (FlowKind.START, FlowKind.END)


@dataclass(frozen=True, order=True)
class FlowObject:
    id: str
    kind: FlowKind


@dataclass(frozen=True)
class DurationBound:
    object: str
    d_min: int
    d_max: int


@dataclass(frozen=True)
class BusinessProcessSpec:
    """Immutable fact base with successor/predecessor indexes."""

    objects: Tuple[FlowObject, ...]
    flows: Tuple[Tuple[str, str], ...]
    durations: Tuple[DurationBound, ...]
    default_duration_clause: bool = False
    _kinds: Dict[str, FlowKind] = field(default_factory=dict, init=False, repr=False, compare=False)
    _successors: Dict[str, Tuple[str, ...]] = field(default_factory=dict, init=False, repr=False,
                                                    compare=False)
    _predecessors: Dict[str, Tuple[str, ...]] = field(default_factory=dict, init=False, repr=False,
                                                      compare=False)
    _bounds: Dict[str, Tuple[int, int]] = field(default_factory=dict, init=False, repr=False,
                                                compare=False)

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(sorted(self.objects)))
        object.__setattr__(self, "flows", tuple(sorted(set(self.flows))))
        object.__setattr__(self, "durations", tuple(sorted(self.durations, key=lambda d: d.object)))
        for item in self.objects:
            if item.id in self._kinds:
                raise ModelError(f"duplicate flow object {item.id!r}")
            self._kinds[item.id] = item.kind
        successors: Dict[str, List[str]] = {item.id: [] for item in self.objects}
        predecessors: Dict[str, List[str]] = {item.id: [] for item in self.objects}
        for source, target in self.flows:
            for endpoint in (source, target):
                if endpoint not in self._kinds:
                    raise ModelError(f"sequence flow ({source},{target}) names undeclared object "
                                     f"{endpoint!r}")
            successors[source].append(target)
            predecessors[target].append(source)
        self._successors.update({k: tuple(sorted(v)) for k, v in successors.items()})
        self._predecessors.update({k: tuple(sorted(v)) for k, v in predecessors.items()})
        for bound in self.durations:
            if bound.object not in self._kinds:
                raise ModelError(f"duration given for undeclared object {bound.object!r}")
            if bound.object in self._bounds:
                raise ModelError(f"duplicate duration for {bound.object!r}")
            self._bounds[bound.object] = (bound.d_min, bound.d_max)
        for item in self.objects:
            low, high = self._bounds.setdefault(item.id, (0, 0)) if item.kind is not FlowKind.TASK \
                else self._bounds.get(item.id, (None, None))
            if low is None:
                raise ModelError(f"task {item.id!r} has no duration")
            if low < 0 or high < low:
                raise ModelError(f"invalid duration bounds [{low},{high}] for {item.id!r}")
            if item.kind is not FlowKind.TASK and (low, high) != (0, 0):
                raise ModelError(f"{item.kind.value} {item.id!r} must be instantaneous")
            if item.kind is FlowKind.TASK and low == 0:
                logger.warning("Task may take zero time", task=item.id, d_max=high)

    @property
    def object_ids(self) -> List[str]:
        return [item.id for item in self.objects]

    def _require(self, x: str) -> None:
        if x not in self._kinds:
            raise ModelError(f"unknown flow object {x!r}")

    def kind(self, x: str) -> FlowKind:
        self._require(x)
        return self._kinds[x]

    def objects_of(self, *kinds: FlowKind) -> List[str]:
        return [item.id for item in self.objects if item.kind in kinds]

    @property
    def start_events(self) -> List[str]:
        return self.objects_of(FlowKind.START)

    @property
    def end_events(self) -> List[str]:
        return self.objects_of(FlowKind.END)

    @property
    def tasks(self) -> List[str]:
        return self.objects_of(FlowKind.TASK)

    @property
    def gateways(self) -> List[str]:
        return [item.id for item in self.objects if item.kind.is_gateway]

    @property
    def start_event(self) -> str:
        starts = self.start_events
        if len(starts) != 1:
            raise ModelError(f"expected exactly one start event, found {len(starts)}")
        return starts[0]

    def successors(self, x: str) -> List[str]:
        self._require(x)
        return list(self._successors[x])

    def predecessors(self, x: str) -> List[str]:
        self._require(x)
        return list(self._predecessors[x])

    def duration_bounds(self, x: str) -> Tuple[int, int]:
        self._require(x)
        return self._bounds[x]

    def is_task(self, x: str) -> bool:
        return self.kind(x) is FlowKind.TASK

    def not_task(self, x: str) -> bool:
        return self.kind(x) is not FlowKind.TASK

    def not_par_branch(self, x: str) -> bool:
        return self.kind(x) is not FlowKind.PAR_BRANCH

    def not_par_merge(self, x: str) -> bool:
        return self.kind(x) is not FlowKind.PAR_MERGE

    def duration_map(self) -> Dict[str, Tuple[int, int]]:
        return dict(self._bounds)

    def to_text(self) -> str:
        """Render the fact base back into the fact syntax."""
        lines = [f"{item.kind.value}({item.id})." for item in self.objects]
        lines.extend(f"seq({source},{target})." for source, target in self.flows)
        for task in self.tasks:
            low, high = self._bounds[task]
            lines.append(f"duration({task}, D) :- D>={low}, D=<{high}.")
        if self.default_duration_clause:
            lines.append("duration(X, D) :- not_task(X), D=0.")
        return "\n".join(lines) + "\n"

    def same_facts(self, other: "BusinessProcessSpec") -> bool:
        return (self.objects == other.objects and self.flows == other.flows
                and self.duration_map() == other.duration_map())


_KINDS = {kind.value: kind for kind in FlowKind}


def _identifier(raw: RawClause, arg) -> str:
    if isinstance(arg, Compound) and not arg.args:
        return arg.name
    line, column = getattr(arg, "line", raw.line), getattr(arg, "column", raw.column)
    raise ParseError("expected a flow object identifier", line, column)


def _duration_bounds(raw: RawClause, variable: str) -> Tuple[int, int]:
    low: Optional[int] = None
    high: Optional[int] = None
    for literal in raw.body:
        if not isinstance(literal, Comparison):
            raise ModelError(f"line {raw.line}: duration bounds must be comparisons on {variable}")
        expression = literal.constraint.expression
        relation = literal.constraint.relation.value
        coefficient = expression.coefficient(variable)
        if expression.variables != {variable} or abs(coefficient) != 1:
            raise ModelError(f"line {literal.line}: duration bound must compare {variable} "
                             f"with a constant")
        # normalize to  variable R value
        value = -expression.constant * coefficient
        if coefficient < 0:
            relation = {">=": "=<", "=<": ">=", ">": "<", "<": ">"}.get(relation, relation)
        if relation == ">=":
            low = value if low is None else max(low, value)
        elif relation == ">":
            low = value + 1 if low is None else max(low, value + 1)
        elif relation == "=<":
            high = value if high is None else min(high, value)
        elif relation == "<":
            high = value - 1 if high is None else min(high, value - 1)
        elif relation == "=":
            low = value if low is None else max(low, value)
            high = value if high is None else min(high, value)
        else:
            raise ModelError(f"line {literal.line}: unsupported duration bound")
    if low is None or high is None:
        raise ModelError(f"line {raw.line}: duration needs a lower and an upper bound")
    return low, high


def _is_default_clause(raw: RawClause) -> bool:
    subject, duration = raw.head.args
    if not (isinstance(subject, Expression) and subject.variable):
        return False
    if not (isinstance(duration, Expression) and duration.variable):
        return False
    guards = {lit.name for lit in raw.body if isinstance(lit, Compound)}
    zeros = [lit for lit in raw.body if isinstance(lit, Comparison)]
    return guards == {"not_task"} and len(zeros) == 1 and \
        zeros[0].constraint.expression.variables == {duration.variable}


def parse_bps(text: str) -> BusinessProcessSpec:
    """
    Parse a process specification in the fact syntax.

    Args:
        text: Fact source; `%` starts a comment.

    Returns:
        The frozen BusinessProcessSpec.

    Raises:
        ParseError: on syntax errors (with line and column).
        ModelError: on duplicate ids, kind clashes, duplicate or invalid
            durations, undeclared flow endpoints, or tasks without duration.
    """
    kinds: Dict[str, FlowKind] = {}
    flows: List[Tuple[str, str]] = []
    durations: Dict[str, DurationBound] = {}
    default_clause = False

    for raw in read_clauses(text):
        name, args = raw.head.name, raw.head.args
        if name in _KINDS and len(args) == 1:
            if raw.body:
                raise ModelError(f"line {raw.line}: {name} facts take no body")
            identifier = _identifier(raw, args[0])
            kind = _KINDS[name]
            if identifier in kinds:
                if kinds[identifier] is kind:
                    raise ModelError(f"line {raw.line}: duplicate id {identifier!r}")
                raise ModelError(f"line {raw.line}: {identifier!r} declared as both "
                                 f"{kinds[identifier].value} and {kind.value}")
            kinds[identifier] = kind
        elif name == "seq" and len(args) == 2:
            if raw.body:
                raise ModelError(f"line {raw.line}: seq facts take no body")
            flows.append((_identifier(raw, args[0]), _identifier(raw, args[1])))
        elif name == "duration" and len(args) == 2:
            if _is_default_clause(raw):
                default_clause = True
                continue
            identifier = _identifier(raw, args[0])
            variable = args[1].variable if isinstance(args[1], Expression) else None
            if variable is None:
                raise ParseError("expected a duration variable", raw.line, raw.column)
            if identifier in durations:
                raise ModelError(f"line {raw.line}: duplicate duration for {identifier!r}")
            low, high = _duration_bounds(raw, variable)
            if low < 0 or high < low:
                raise ModelError(f"line {raw.line}: invalid duration bounds [{low},{high}] "
                                 f"for {identifier!r}")
            durations[identifier] = DurationBound(identifier, low, high)
        else:
            raise ModelError(f"line {raw.line}: unknown fact {name}/{len(args)}")

    spec = BusinessProcessSpec(
        objects=tuple(FlowObject(identifier, kind) for identifier, kind in kinds.items()),
        flows=tuple(flows),
        durations=tuple(durations.values()),
        default_duration_clause=default_clause,
    )
    logger.debug("Parsed process specification", objects=len(spec.objects), flows=len(spec.flows))
    return spec


def load_bps(path: Union[str, Path]) -> BusinessProcessSpec:
    return parse_bps(Path(path).read_text(encoding="utf-8"))
