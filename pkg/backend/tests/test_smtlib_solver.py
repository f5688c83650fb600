"""
Test SMT-LIB emission and external solver invocation
"""

import sys

import pytest

from chc.clauses import parse_clauses
from chc.constraints import AtomicConstraint, LinearExpression, Relation
from verification.smtlib import EmissionError, SymbolTable, emit_smtlib, render_atomic
from verification.solver import (
    SolverConfig,
    SolverOutcome,
    classify_output,
    run_portfolio,
    run_solver,
)

SAT_SET = "p(X) :- X=0.\nfalse :- p(X), X>0."
UNSAT_SET = "p(X) :- X=0.\nfalse :- p(X)."


def fake_solver(code: str, timeout: float = 10.0, name: str = "") -> SolverConfig:
    """A python one-liner standing in for a solver; the script path is ignored."""
    return SolverConfig((sys.executable, "-c", code), timeout, name)


class TestEmission:
    """Test SMT-LIB script rendering."""

    def test_script_layout(self):
        """Test header, logic, declarations, one assertion per clause and check-sat."""
        script = emit_smtlib(parse_clauses(SAT_SET).normalized())
        lines = script.splitlines()
        assert lines[0] == "; 2 clauses, 1 predicates"
        assert lines[1] == "; p -> p"
        assert lines[2] == "(set-logic HORN)"
        assert lines[3] == "(declare-fun p (Int) Bool)"
        assert lines[4] == "(assert (forall ((A Int)) (=> (= A 0) (p A))))"
        assert lines[5] == "(assert (forall ((A Int)) (=> (and (>= A 1) (p A)) false)))"
        assert lines[-2:] == ["(check-sat)", "(exit)"]

    @pytest.mark.parametrize("text,rendered", [
        ("p(X) :- X>=-3.", "(>= (+ A 3) 0)"),
        ("p(X,Y) :- 2*X=<Y.", "(>= B (* 2 A))"),
        ("p(X,Y) :- X=Y+4.", "(= A (+ B 4))"),
    ])
    def test_constraint_rendering(self, text, rendered):
        """Test coefficients and constants land on the nonnegative side."""
        clauses = parse_clauses(text).normalized()
        assert rendered in emit_smtlib(clauses)

    def test_disequality_is_refused(self):
        """Test =\\= atoms cannot be rendered."""
        atom = AtomicConstraint(LinearExpression.of({"A": 1}, -1), Relation.NE)
        with pytest.raises(EmissionError, match="split"):
            render_atomic(atom, SymbolTable("v_"))

    @pytest.mark.parametrize("text,message", [
        ("p(0).", "pure"),
        ("p(X) :- X=\\=1.", "disequality"),
        ("p(X) :- X>0.", "normalized"),
    ])
    def test_preconditions(self, text, message):
        """Test unnormalized clause sets are rejected."""
        with pytest.raises(EmissionError, match=message):
            emit_smtlib(parse_clauses(text))

    def test_symbols(self):
        """Test reserved and unsafe names get a prefix and stay unique."""
        table = SymbolTable("p_")
        assert table.symbol("new1") == "new1"
        assert table.symbol("and") == "p_and"
        assert table.symbol("p_and") == "p_and_1"
        assert table.symbol("and") == "p_and"

    def test_reserved_predicate_name(self):
        """Test a predicate called like an SMT keyword is renamed consistently."""
        script = emit_smtlib(parse_clauses("exit(X) :- X=0.\nfalse :- exit(X), X>0.").normalized())
        assert "(declare-fun p_exit (Int) Bool)" in script
        assert "(p_exit A)" in script

    def test_emission_is_deterministic(self, minimized_clauses):
        """Test two emissions of the same set are identical."""
        normalized = minimized_clauses.normalized()
        first, second = emit_smtlib(normalized), emit_smtlib(normalized)
        assert first == second
        assert first.startswith("; 35 clauses, 8 predicates\n")
        assert first.count("(assert ") == 35

class TestSolverConfig:
    """Test solver configuration."""

    def test_presets(self):
        """Test preset names expand to their command lines."""
        z3 = SolverConfig.from_command("z3", timeout=5)
        assert z3.command == ("z3", "-smt2")
        assert z3.label == "z3"
        eld = SolverConfig.from_command("eldarica")
        assert eld.command[0] == "eld"

    def test_command_line(self):
        """Test free command lines are split and extended."""
        config = SolverConfig.from_command("/opt/bin/golem --engine spacer", extra_args=["-v"])
        assert config.command == ("/opt/bin/golem", "--engine", "spacer", "-v")
        assert config.label == "golem"

    @pytest.mark.parametrize("command,timeout", [((), 1.0), (("z3",), 0)])
    def test_invalid(self, command, timeout):
        """Test empty commands and non-positive timeouts are refused."""
        with pytest.raises(ValueError):
            SolverConfig(command, timeout)

    @pytest.mark.parametrize("stdout,outcome", [
        ("sat\n", SolverOutcome.SATISFIABLE),
        ("unsat\n(model)", SolverOutcome.UNSATISFIABLE),
        ("UNKNOWN", SolverOutcome.UNKNOWN),
        ("", None),
        ("(error \"line 1\")", None),
    ])
    def test_classify_output(self, stdout, outcome):
        """Test the first output token decides."""
        assert classify_output(stdout) is outcome

class TestRunSolver:
    """Test single runs and portfolios with stand-in solvers."""

    def test_verdict(self):
        """Test a sat answer is definitive."""
        verdict = run_solver(fake_solver("print('sat')", name="fake"), "(check-sat)\n")
        assert verdict.outcome is SolverOutcome.SATISFIABLE
        assert verdict.definitive
        assert verdict.to_dict()["solver"] == "fake"

    def test_missing_binary(self):
        """Test a solver that cannot be started is a solver error."""
        verdict = run_solver(SolverConfig(("/nonexistent/chc-solver",)), "(check-sat)\n")
        assert verdict.outcome is SolverOutcome.SOLVER_ERROR
        assert verdict.detail

    def test_output_without_verdict(self):
        """Test unexpected output is a solver error carrying the first line."""
        verdict = run_solver(fake_solver("print('parse error at 3')"), "")
        assert verdict.outcome is SolverOutcome.SOLVER_ERROR
        assert verdict.detail == "parse error at 3"

    def test_timeout(self):
        """Test a hanging solver is killed and reported as a timeout."""
        verdict = run_solver(fake_solver("import time; time.sleep(30)", timeout=0.5), "")
        assert verdict.outcome is SolverOutcome.TIMEOUT
        assert verdict.elapsed < 20

    def test_solver_reads_the_script(self):
        """Test the script path is passed as the last argument."""
        echo = fake_solver("import sys; print(open(sys.argv[-1]).read().split()[0])")
        assert run_solver(echo, "unsat\n").outcome is SolverOutcome.UNSATISFIABLE

    def test_portfolio_first_definitive_wins(self):
        """Test a fast definitive answer beats a hanging solver."""
        slow = fake_solver("import time; time.sleep(30)", name="slow")
        fast = fake_solver("print('unsat')", name="fast")
        verdict = run_portfolio([slow, fast], "")
        assert verdict.outcome is SolverOutcome.UNSATISFIABLE
        assert verdict.solver == "fast"
        assert verdict.elapsed < 20

    def test_portfolio_fallback_ranking(self):
        """Test unknown is preferred over a timeout and an error."""
        unknown = fake_solver("print('unknown')", name="u")
        hanging = fake_solver("import time; time.sleep(30)", timeout=0.5, name="t")
        broken = fake_solver("print('boom')", name="e")
        assert run_portfolio([broken, hanging, unknown], "").outcome is SolverOutcome.UNKNOWN
        assert run_portfolio([broken, hanging], "").outcome is SolverOutcome.TIMEOUT

    def test_empty_portfolio(self):
        """Test a portfolio needs a solver."""
        with pytest.raises(ValueError):
            run_portfolio([], "")

@pytest.mark.solver
class TestRealSolver:
    """Test scripts against the configured CHC solver."""

    def test_trivial_sets(self, solver_config):
        """Test a satisfiable and an unsatisfiable two-clause set."""
        sat = run_solver(solver_config, emit_smtlib(parse_clauses(SAT_SET).normalized()))
        unsat = run_solver(solver_config, emit_smtlib(parse_clauses(UNSAT_SET).normalized()))
        assert sat.outcome is SolverOutcome.SATISFIABLE
        assert unsat.outcome is SolverOutcome.UNSATISFIABLE

    def test_fixture_listings(self, solver_config, specialized_clauses, minimized_clauses):
        """Test both order process listings are satisfiable."""
        for clauses in (specialized_clauses, minimized_clauses):
            verdict = run_solver(solver_config, emit_smtlib(clauses.normalized()))
            assert verdict.outcome is SolverOutcome.SATISFIABLE
