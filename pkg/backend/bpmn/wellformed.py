"""
Well-formedness of process specifications.

Conditions:
    1. exactly one start event and one end event
    2. every object lies on a path from the start event to the end event
    3. the start event has one successor and no predecessor
    4. the end event has one predecessor and no successor
    5. branch gateways have one predecessor, merge gateways one successor
    6. tasks have one predecessor and one successor
    7. no cycle made of gateways only
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Union
import numpy as np
import structlog

from .model import BusinessProcessSpec, FlowKind

logger = structlog.get_logger()

Condition = Union[int, str]

DISJOINTNESS = "disjointness"


@dataclass(frozen=True)
class Violation:
    condition: Condition
    witness: List[str] = field(default_factory=list)
    message: str = ""

    def to_dict(self) -> Dict:
        return {"condition": self.condition, "witness": list(self.witness), "message": self.message}

    def __str__(self) -> str:
        return f"condition {self.condition}: {self.message}"


def reachability_matrix(spec: BusinessProcessSpec) -> np.ndarray:
    """Boolean matrix R with R[i, j] iff seq*(objects[i], objects[j])."""
    ids = spec.object_ids
    index = {identifier: position for position, identifier in enumerate(ids)}
    closure = np.eye(len(ids), dtype=bool)
    for source, target in spec.flows:
        closure[index[source], index[target]] = True
    while True:
        step = closure | ((closure.astype(np.int64) @ closure.astype(np.int64)) > 0)
        if np.array_equal(step, closure):
            return closure
        closure = step


def gateway_only_cycle(spec: BusinessProcessSpec) -> Optional[List[str]]:
    """
    Depth-first search over gateway nodes for a cycle of gateways.

    Returns:
        [x0, ..., xk] with xk == x0, or None when every cycle passes
        through a task or an event.
    """
    gateways = set(spec.gateways)
    state: Dict[str, int] = {}  # 1 on stack, 2 done
    path: List[str] = []

    def visit(node: str) -> Optional[List[str]]:
        state[node] = 1
        path.append(node)
        for successor in spec.successors(node):
            if successor not in gateways:
                continue
            if state.get(successor) == 1:
                return path[path.index(successor):] + [successor]
            if successor not in state:
                found = visit(successor)
                if found:
                    return found
        path.pop()
        state[node] = 2
        return None

    for gateway in sorted(gateways):
        if gateway not in state:
            cycle = visit(gateway)
            if cycle:
                return cycle
    return None


def _cardinality(spec: BusinessProcessSpec, node: str, condition: int, label: str,
                 max_predecessors: Optional[int], max_successors: Optional[int]) -> List[Violation]:
    found = []
    predecessors = spec.predecessors(node)
    successors = spec.successors(node)
    if max_predecessors is not None and len(predecessors) > max_predecessors:
        found.append(Violation(condition, [node] + predecessors,
                               f"{label} {node} has {len(predecessors)} predecessors "
                               f"({', '.join(predecessors)})"))
    if max_successors is not None and len(successors) > max_successors:
        found.append(Violation(condition, [node] + successors,
                               f"{label} {node} has {len(successors)} successors "
                               f"({', '.join(successors)})"))
    return found


def check_well_formed(spec: BusinessProcessSpec) -> List[Violation]:
    """
    Evaluate conditions 1-7 on the fact base.

    Kind disjointness is enforced while parsing, so it never appears here.
    Condition 2 is evaluated against the unique start and end events and is
    skipped when condition 1 fails.

    Returns:
        Violations ordered by condition, then by witness.
    """
    violations: List[Violation] = []
    starts, ends = spec.start_events, spec.end_events

    if len(starts) != 1:
        violations.append(Violation(1, starts, f"expected one start event, found {len(starts)}"))
    if len(ends) != 1:
        violations.append(Violation(1, ends, f"expected one end event, found {len(ends)}"))

    if len(starts) == 1 and len(ends) == 1:
        ids = spec.object_ids
        closure = reachability_matrix(spec)
        start, end = ids.index(starts[0]), ids.index(ends[0])
        for position, identifier in enumerate(ids):
            from_start = bool(closure[start, position])
            to_end = bool(closure[position, end])
            if from_start and to_end:
                continue
            missing = []
            if not from_start:
                missing.append(f"not reachable from {starts[0]}")
            if not to_end:
                missing.append(f"cannot reach {ends[0]}")
            violations.append(Violation(2, [identifier], f"{identifier} is {' and '.join(missing)}"))

    for start in starts:
        if spec.predecessors(start):
            violations.append(Violation(3, [start] + spec.predecessors(start),
                                        f"start event {start} has predecessors "
                                        f"({', '.join(spec.predecessors(start))})"))
        violations.extend(_cardinality(spec, start, 3, "start event", None, 1))
    for end in ends:
        violations.extend(_cardinality(spec, end, 4, "end event", 1, None))
        if spec.successors(end):
            violations.append(Violation(4, [end] + spec.successors(end),
                                        f"end event {end} has successors "
                                        f"({', '.join(spec.successors(end))})"))

    for gateway in spec.gateways:
        kind = spec.kind(gateway)
        if kind in (FlowKind.PAR_BRANCH, FlowKind.EXC_BRANCH):
            violations.extend(_cardinality(spec, gateway, 5, kind.value, 1, None))
        else:
            violations.extend(_cardinality(spec, gateway, 5, kind.value, None, 1))

    for task in spec.tasks:
        violations.extend(_cardinality(spec, task, 6, "task", 1, 1))

    cycle = gateway_only_cycle(spec)
    if cycle:
        violations.append(Violation(7, cycle, f"gateway-only cycle {' -> '.join(cycle)}"))

    violations.sort(key=lambda v: (str(v.condition), v.witness, v.message))
    if violations:
        logger.info("Well-formedness violations found", count=len(violations),
                    conditions=sorted({str(v.condition) for v in violations}))
    return violations


def render_report(violations: List[Violation]) -> str:
    if not violations:
        return "well-formed\n"
    return "\n".join(str(v) for v in violations) + "\n"
