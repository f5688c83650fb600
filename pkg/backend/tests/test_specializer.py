"""
Test compiling processes and properties into interpreter-free clause sets
"""

from itertools import count

import numpy as np
import pytest

from bpmn.model import parse_bps
from bpmn.wellformed import check_well_formed
from chc.constraints import Relation
from verification.fluents import Fluent
from verification.minimizer import minimize
from verification.properties import parse_property, response_time_property, schedulability_property
from verification.semantics import explore
from verification.smtlib import emit_smtlib
from verification.solver import SolverOutcome, run_solver
from verification.specializer import (
    SpecializationError,
    Specializer,
    SymbolicState,
    advance_time,
    specialize,
)

from conftest import minimal_bps


def random_process(rng: np.random.Generator) -> str:
    """A well-formed process of one to three blocks: task, parallel, choice or loop."""
    facts = ["start(s).", "end(e)."]
    flows = []
    ids = count()

    def task() -> str:
        name = f"t{next(ids)}"
        low = int(rng.integers(1, 4))
        high = low + int(rng.integers(0, 3))
        facts.append(f"task({name}). duration({name}, D) :- D>={low}, D=<{high}.")
        return name

    def gateway(kind: str) -> str:
        name = f"g{next(ids)}"
        facts.append(f"{kind}({name}).")
        return name

    def block(entry: str) -> str:
        shape = int(rng.integers(4))
        if shape == 0:
            t = task()
            flows.append((entry, t))
            return t
        if shape in (1, 2):
            prefix = "par" if shape == 1 else "exc"
            branch, merge = gateway(f"{prefix}_branch"), gateway(f"{prefix}_merge")
            flows.append((entry, branch))
            for _ in range(2):
                t = task()
                flows.extend([(branch, t), (t, merge)])
            return merge
        merge, t, branch = gateway("exc_merge"), task(), gateway("exc_branch")
        flows.extend([(entry, merge), (merge, t), (t, branch), (branch, merge)])
        return branch

    node = "s"
    for _ in range(int(rng.integers(1, 4))):
        node = block(node)
    flows.append((node, "e"))
    facts.extend(f"seq({a},{b})." for a, b in flows)
    facts.append("duration(X, D) :- not_task(X), D=0.")
    return "\n".join(facts)


def random_case(seed: int, kind: str):
    rng = np.random.default_rng(seed)
    spec = parse_bps(random_process(rng))
    deadline = int(rng.integers(1, 12))
    end = frozenset({Fluent.completes("e")})
    if kind == "schedulability":
        return spec, schedulability_property(spec, end, deadline)
    first = frozenset({Fluent.completes(spec.tasks[0])})
    return spec, response_time_property(spec, first, end, deadline)


def unit_bounds(constraint) -> dict:
    """Lower and upper bounds per variable from single-variable conjuncts."""
    bounds = {}
    for atom in constraint.normalize().atoms:
        terms = atom.expression.terms
        if len(terms) != 1 or terms[0][1] not in (1, -1):
            continue
        name, coef = terms[0]
        value = -coef * atom.expression.constant
        low, high = bounds.get(name, (None, None))
        if atom.relation is Relation.EQ:
            low = high = value
        elif coef == 1:
            low = value
        else:
            high = value
        bounds[name] = (low, high)
    return bounds


def difference_constants(constraint) -> set:
    """Constants c of conjuncts X - Y - c >= 0."""
    return {-atom.expression.constant for atom in constraint.normalize().atoms
            if atom.relation is Relation.GE
            and sorted(c for _, c in atom.expression.terms) == [-1, 1]}


class TestOrderProcess:
    """Test the clause set produced for the order process."""

    def test_clauses_are_pure_integer_clauses(self, po_spec, deadline9):
        """Test one goal, pure heads, generated names and no open predicates."""
        clauses = specialize(po_spec, deadline9)
        assert clauses.is_pure
        assert len(clauses.goals) == 1
        assert not clauses.open_predicates
        assert all(p.startswith("new") for p in clauses.predicates)
        assert clauses.predicates[0] == "new1"

    def test_goal_carries_the_violation(self, po_spec, deadline9):
        """Test the goal anchors time zero, keeps the deadline and the entry duration ranges."""
        goal = specialize(po_spec, deadline9).goals[0]
        assert goal.body
        assert all(atom.predicate.startswith("new") for atom in goal.body)
        bounds = unit_bounds(goal.constraint)
        assert (0, 0) in bounds.values()
        # a runs 1..6 from the start; i runs 1..2 and o 3..5 after pay
        assert {(1, 6), (1, 2), (3, 5)} <= set(bounds.values())
        # Te > Tp + 9 over the integers
        assert 10 in difference_constants(goal.constraint)

    def test_listing_goal_has_the_same_ranges(self, specialized_clauses):
        """Test the 51-clause listing's goal carries the same duration ranges."""
        bounds = unit_bounds(specialized_clauses.goals[0].constraint)
        assert {(0, 0), (1, 6), (1, 2), (3, 5)} <= set(bounds.values())
        assert 10 in difference_constants(specialized_clauses.goals[0].constraint)

    def test_output_is_normalized(self, po_spec, deadline9):
        """Test renormalizing the output changes nothing."""
        clauses = specialize(po_spec, deadline9)
        assert clauses.normalized().to_text() == clauses.to_text()

    def test_deterministic(self, po_spec, deadline9):
        """Test two runs produce the same listing."""
        assert specialize(po_spec, deadline9).to_text() == specialize(po_spec, deadline9).to_text()

    def test_definition_table(self, po_spec, deadline9):
        """Test the table describes every emitted predicate."""
        specializer = Specializer(po_spec, deadline9)
        clauses = specializer.specialize()
        rendered = specializer.table.render()
        assert set(clauses.defined_predicates) <= {d.name for d in specializer.table}
        assert all(line.startswith("% new") for line in rendered.splitlines())
        assert "segment 2" in rendered

class TestSymbolicSteps:
    """Test the closure and time step on symbolic states."""

    def test_closure_after_pay(self, po_spec, deadline9):
        """Test completing pay reaches invoice and preparation with their duration guards."""
        start = SymbolicState(frozenset({Fluent.completes("p")}))
        closure = Specializer(po_spec, deadline9).instantaneous_closure(start)
        assert closure[0] == start
        running = [s for s in closure if not s.fixed]
        assert len(running) == 1
        state = running[0]
        assert [obj for obj, _ in state.slots] == ["i", "o"]
        di, do = state.residuals
        assert state.guard.evaluate({di: 2, do: 3})
        assert not state.guard.evaluate({di: 3, do: 3})
        assert not state.guard.evaluate({di: 1, do: 6})

    def test_running_task_is_a_fixpoint(self, po_spec, deadline9):
        """Test a state with only an enacting slot has no instantaneous move."""
        state = SymbolicState(frozenset(), (("a", "R"),))
        assert Specializer(po_spec, deadline9).instantaneous_closure(state) == [state]

    def test_advance_time_cases(self):
        """Test one case per slot, each taking that slot as the least residual."""
        state = SymbolicState(frozenset(), (("i", "A"), ("o", "B")))
        cases = advance_time(state)
        assert len(cases) == 2
        constraint, successor = cases[0]
        assert successor.slots == (("i", "S0"), ("o", "S1"))
        assert constraint.evaluate({"A": 1, "B": 3, "S0": 0, "S1": 2, "T": 4, "U": 5})
        assert not constraint.evaluate({"A": 2, "B": 1, "S0": 0, "S1": -1, "T": 0, "U": 2})
        assert not constraint.evaluate({"A": 0, "B": 0, "S0": 0, "S1": 0, "T": 0, "U": 0})

class TestSpecializationErrors:
    """Test inputs the specializer refuses."""

    def test_not_well_formed(self, deadline9):
        """Test an ill-formed process is rejected before compiling."""
        spec = parse_bps("start(s). end(e). end(e2). task(t). seq(s,t). seq(t,e). "
                         "duration(t, D) :- D=1. duration(X, D) :- not_task(X), D=0.")
        prop = parse_property("false :- T0=0, T1>5, reach(s([begins(s)],T0), s([completes(e)],T1)).")
        with pytest.raises(SpecializationError, match="not well-formed"):
            specialize(spec, prop)

    def test_unknown_object_in_property(self, po_spec):
        """Test waypoints must name objects of the process."""
        prop = parse_property("false :- T0=0, T1>5, "
                              "reach(s([begins(start)],T0), s([completes(zz)],T1)).")
        with pytest.raises(ValueError):
            specialize(po_spec, prop)

    def test_closure_limit(self, po_spec, deadline9):
        """Test a tiny closure budget stops the compilation."""
        with pytest.raises(SpecializationError, match="closure exceeded"):
            specialize(po_spec, deadline9, max_closure_states=2)

    def test_unreachable_waypoint_is_open(self, po_spec):
        """Test a waypoint no run matches leaves the goal calling an open predicate."""
        prop = parse_property("false :- T0=0, T1>0, "
                              "reach(s([begins(start)],T0), s([enables(g3,i)],T1)).")
        clauses = specialize(po_spec, prop)
        assert clauses.open_predicates
        assert not any(clauses.definitions(p) for p in clauses.open_predicates)

class TestMinimalProcess:
    """Test compilation of start -> t -> end."""

    @pytest.mark.parametrize("duration", [1, 3])
    def test_single_task(self, duration):
        """Test a one-task process compiles into a small pure clause set."""
        spec = parse_bps(minimal_bps(duration))
        prop = schedulability_property(spec, frozenset({Fluent.completes("e")}), duration)
        clauses = specialize(spec, prop)
        assert clauses.is_pure
        assert 1 <= len(clauses.defined_predicates) <= 3

class TestRandomProcesses:
    """Test compilation of generated processes without a solver."""

    @pytest.mark.parametrize("kind", ["schedulability", "response"])
    @pytest.mark.parametrize("seed", range(20))
    def test_compiled_shape(self, seed, kind):
        """Test each generated case compiles into pure, normalized integer clauses."""
        spec, prop = random_case(seed, kind)
        assert check_well_formed(spec) == []
        clauses = specialize(spec, prop)
        assert clauses.is_pure
        assert len(clauses.goals) == 1
        assert all(p.startswith("new") for p in clauses.predicates)
        for clause in clauses:
            atoms = clause.body if clause.head is None else (clause.head,) + tuple(clause.body)
            assert all(isinstance(arg, str) for atom in atoms for arg in atom.args)
        assert clauses.normalized().to_text() == clauses.to_text()

        minimized, _ = minimize(clauses)
        assert minimized.is_pure
        assert len(minimized) <= len(clauses)
        assert explore(spec, prop).definitive, spec.to_text()

@pytest.mark.solver
class TestAgainstOracle:
    """Test solver verdicts on compiled clauses agree with explicit exploration."""

    def test_order_process_deadlines(self, po_spec, deadline9, deadline8, solver_config):
        """Test the 9-unit deadline holds and the 8-unit deadline fails."""
        holds = run_solver(solver_config, emit_smtlib(specialize(po_spec, deadline9).normalized()))
        fails = run_solver(solver_config, emit_smtlib(specialize(po_spec, deadline8).normalized()))
        assert holds.outcome is SolverOutcome.SATISFIABLE
        assert fails.outcome is SolverOutcome.UNSATISFIABLE

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", ["schedulability", "response"])
    @pytest.mark.parametrize("seed", range(20))
    def test_random_processes(self, seed, kind, solver_config):
        """Test plain and minimized clause sets agree with the explorer."""
        spec, prop = random_case(seed, kind)
        oracle = explore(spec, prop)
        expected = SolverOutcome.UNSATISFIABLE if oracle.violated else SolverOutcome.SATISFIABLE

        clauses = specialize(spec, prop).normalized()
        minimized, _ = minimize(clauses)
        for candidate in (clauses, minimized):
            verdict = run_solver(solver_config, emit_smtlib(candidate))
            assert verdict.outcome is expected, spec.to_text()
