"""
Test constrained Horn clauses, clause sets and the clause text syntax
"""

from itertools import product

import pytest
from hypothesis import assume, given, settings, strategies as st

from chc.clauses import (
    Atom,
    ClauseSet,
    ClauseSetError,
    HornClause,
    normalize_clause,
    parse_clauses,
    split_disequalities,
    variable_name,
)
from chc.constraints import AtomicConstraint, LinearConstraint, LinearExpression, Relation
from chc.syntax import ParseError

class TestParsing:
    """Test reading clause listings."""

    def test_fact_and_rule(self):
        """Test a fact, a rule and a goal are read with their parts."""
        clauses = parse_clauses("""
            p(X) :- X=0.
            p(X) :- X=Y+1, Y>=0, p(Y).
            false :- X>3, p(X).
        """)
        assert len(clauses) == 3
        fact, rule, goal = clauses
        assert fact.head == Atom("p", ("X",)) and not fact.body
        assert rule.body == (Atom("p", ("Y",)),)
        assert goal.is_goal and goal.head_predicate == "false"

    def test_comments_and_line_breaks(self):
        """Test % comments and clauses spread over several lines."""
        clauses = parse_clauses("% header\nq(A) :- A>=1, \n    A=<2. % trailing\n")
        assert len(clauses) == 1
        assert clauses.clauses[0].constraint.evaluate({"A": 2})

    def test_integer_arguments(self):
        """Test constants are accepted as atom arguments."""
        clause = parse_clauses("q(0).\nr(X) :- q(X), q(1).").clauses[1]
        assert clause.body[1] == Atom("q", (1,))

    def test_syntax_error_has_position(self):
        """Test a missing dot reports line and column."""
        with pytest.raises(ParseError) as info:
            parse_clauses("p(X) :- X=0\nq(Y) :- Y=1.")
        assert info.value.line >= 1

    def test_unknown_character(self):
        """Test stray characters are rejected."""
        with pytest.raises(ParseError):
            parse_clauses("p(X) :- X # 0.")

    def test_printing_reads_back(self):
        """Test printing a clause gives text that parses to the same clause."""
        text = "new1(A,B,C) :- D=0, E=A+B, A>0, new1(D,E,C)."
        clause = parse_clauses(text).clauses[0]
        assert parse_clauses(str(clause)).clauses[0] == clause

class TestClauseSet:
    """Test clause set invariants."""

    def test_arity_clash(self):
        """Test a predicate used with two arities is rejected."""
        with pytest.raises(ClauseSetError, match="arities"):
            parse_clauses("p(X) :- X=0.\nq(X) :- p(X,X).")

    def test_undefined_predicate(self):
        """Test a body predicate without definition must be declared open."""
        with pytest.raises(ClauseSetError, match="neither defined nor open"):
            parse_clauses("false :- r(X).")
        clauses = parse_clauses("false :- r(X).", open_predicates=["r"])
        assert clauses.open_predicates == frozenset({"r"})

    def test_predicates_in_first_use_order(self):
        """Test the predicate list excludes false and keeps first-use order."""
        clauses = parse_clauses("b(X) :- a(X).\na(X) :- X=1.\nfalse :- b(X).")
        assert clauses.predicates == ["b", "a"]
        assert clauses.arities() == {"b": 1, "a": 1}
        assert len(clauses.goals) == 1
        assert len(clauses.definitions("a")) == 1

    def test_to_text(self):
        """Test listing text ends every clause with a newline."""
        clauses = parse_clauses("p(X) :- X=0.\nfalse :- p(X), X>0.")
        assert clauses.to_text().count("\n") == 2
        assert ClauseSet(()).to_text() == ""

    def test_fixture_listing(self, specialized_clauses):
        """Test the 51-clause listing parses with 13 predicates, all pure."""
        assert len(specialized_clauses) == 51
        assert len(specialized_clauses.predicates) == 13
        assert specialized_clauses.is_pure
        assert specialized_clauses.arities()["new2"] == 4
        assert specialized_clauses.arities()["new44"] == 3
        assert len(specialized_clauses.normalized()) == 51

class TestNormalizeClause:
    """Test canonical clause forms."""

    def test_head_constants_are_lifted(self):
        """Test p(0,X) becomes p(A,B) with A=0."""
        clause = HornClause(Atom("p", (0, "X")), LinearConstraint.true(), (Atom("q", ("X",)),))
        normal = normalize_clause(clause)
        assert normal.is_pure
        assert normal.head == Atom("p", ("A", "B"))
        assert normal.constraint.evaluate({"A": 0, "B": 7})
        assert not normal.constraint.evaluate({"A": 1, "B": 7})

    def test_repeated_head_variable(self):
        """Test p(X,X) becomes p(A,B) with A=B."""
        normal = normalize_clause(HornClause(Atom("p", ("X", "X"))))
        assert normal.head == Atom("p", ("A", "B"))
        assert normal.constraint.evaluate({"A": 3, "B": 3})
        assert not normal.constraint.evaluate({"A": 3, "B": 4})

    def test_variable_equalities_are_substituted(self):
        """Test a local bound by Y=Z disappears from the clause."""
        clause = parse_clauses("p(X) :- Y=Z, Z>=X, q(Y), q(Z).\nq(X) :- X=0.").clauses[0]
        normal = normalize_clause(clause)
        assert normal.body[0] == normal.body[1]
        assert len(normal.variables) == 2

    def test_constraint_only_locals_are_projected(self):
        """Test p(X) :- X=Y+1, Y>=0 becomes p(A) :- A>=1."""
        normal = normalize_clause(parse_clauses("p(X) :- X=Y+1, Y>=0.").clauses[0])
        assert normal.variables == {"A"}
        assert str(normal) == "p(A) :- A>=1."

    def test_alpha_equivalent_clauses_coincide(self):
        """Test renamed variants normalize to the same text."""
        first = parse_clauses("r(U,V) :- U>V, U=<5, r(V,U).").clauses[0]
        second = parse_clauses("r(K,L) :- L<K, K=<5, r(L,K).").clauses[0]
        assert str(normalize_clause(first)) == str(normalize_clause(second))

    def test_split_disequalities(self):
        """Test X=\\=1 splits into X<1 and X>1 cases."""
        clause = parse_clauses("p(X) :- X=\\=1, X>=0.").clauses[0]
        cases = split_disequalities(clause)
        assert len(cases) == 2
        assert all(case.constraint.is_convex for case in cases)
        assert len(parse_clauses("p(X) :- X=\\=1.").normalized()) == 2

    def test_variable_names(self):
        """Test generated variable names run A..Z then A1.."""
        assert [variable_name(i) for i in (0, 1, 25, 26, 27)] == ["A", "B", "Z", "A1", "B1"]

    @settings(max_examples=150, deadline=None)
    @given(st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2),
                              st.integers(-3, 3),
                              st.sampled_from([Relation.GE, Relation.LE, Relation.GT,
                                               Relation.LT, Relation.NE])),
                    min_size=1, max_size=3))
    def test_ground_instances_are_preserved(self, rows):
        """Test every ground instance keeps its truth value after normalization."""
        atoms = tuple(AtomicConstraint(LinearExpression.of({"X": x, "Y": y, "Z": z}, c), r)
                      for x, y, z, c, r in rows)
        clause = HornClause(Atom("p", ("X", "Y")), LinearConstraint(atoms), (Atom("q", ("Z",)),))
        normal = normalize_clause(clause)
        assert normal.head == Atom("p", ("A", "B"))
        assume(normal.body == (Atom("q", ("C",)),))
        for x, y, z in product(range(-3, 4), repeat=3):
            assert clause.evaluate_body({"X": x, "Y": y, "Z": z}) == \
                normal.evaluate_body({"A": x, "B": y, "C": z})
