"""
Test predicate-equivalence minimization of clause sets
"""

import pytest

from chc.clauses import ClauseSetError, normalize_clause, parse_clauses
from verification.minimizer import (
    Partition,
    PartitionError,
    apply_renaming,
    bodies_equivalent,
    coarsest_cp_equivalence,
    least_name,
    minimize,
    natural_key,
    render_partition,
)

SMALL = """
p(X) :- X=0.
q(X) :- X>=0, X=<0.
r(X) :- p(X).
s(X) :- q(X).
false :- X>Y, r(X), s(Y).
"""


def _canonical(clauses):
    return {str(normalize_clause(c)) for c in clauses}


class TestOrderProcessListing:
    """Test minimization of the 51-clause order process listing."""

    def test_partition(self, specialized_clauses):
        """Test the three merged classes and their representatives."""
        partition = coarsest_cp_equivalence(specialized_clauses)
        assert set(partition.nontrivial) == {
            frozenset({"new44", "new17", "new11", "new10"}),
            frozenset({"new7", "new6"}),
            frozenset({"new5", "new4"}),
        }
        rename = partition.renaming()
        assert rename("new44") == "new10"
        assert rename("new7") == "new6"
        assert rename("new5") == "new4"
        assert rename("new21") == "new21"

    def test_minimized_listing(self, specialized_clauses, minimized_clauses):
        """Test the result is the 35-clause minimized listing."""
        result, _ = minimize(specialized_clauses)
        assert len(result) == 35
        assert set(result.predicates) == set(minimized_clauses.predicates)
        assert _canonical(result) == _canonical(minimized_clauses)

    def test_bodies_equivalent(self, specialized_clauses):
        """Test members of one class have equal bodies under the partition."""
        partition = coarsest_cp_equivalence(specialized_clauses)
        assert bodies_equivalent("new7", "new6", partition, specialized_clauses)
        assert bodies_equivalent("new44", "new10", partition, specialized_clauses)
        assert not bodies_equivalent("new1", "new2", partition, specialized_clauses)

    def test_minimizing_twice_merges_nothing(self, specialized_clauses):
        """Test the minimized listing is already minimal."""
        once, _ = minimize(specialized_clauses)
        twice, partition = minimize(once)
        assert partition.nontrivial == []
        assert len(twice) == len(once)

class TestSmallSets:
    """Test merging on hand-written clause sets."""

    def test_equivalence_modulo_constraints(self):
        """Test X=0 and 0=<X=<0 definitions merge, and so do their callers."""
        clauses = parse_clauses(SMALL)
        result, partition = minimize(clauses)
        assert partition.to_dict() == [["p", "q"], ["r", "s"]]
        assert result.predicates == ["p", "r"]
        assert len(result) == 3
        assert len(result.goals) == 1

    def test_projected_locals(self):
        """Test a definition through a local variable merges with its projection."""
        clauses = parse_clauses("p(X) :- Y=X+1, Y>=2.\nq(X) :- X>=1.\nfalse :- p(X), q(X).")
        _, partition = minimize(clauses)
        assert partition.nontrivial == [frozenset({"p", "q"})]

    def test_different_constraints_stay_apart(self):
        """Test X>=1 and X>=2 are not merged."""
        clauses = parse_clauses("p(X) :- X>=1.\nq(X) :- X>=2.\nfalse :- p(X), q(X).")
        _, partition = minimize(clauses)
        assert partition.nontrivial == []

    def test_recursive_predicates(self):
        """Test two identical counting loops are merged."""
        clauses = parse_clauses("""
            a(X) :- X=0.
            a(X) :- X=Y+1, a(Y).
            b(X) :- X=0.
            b(X) :- X=Y+1, b(Y).
            false :- X>Y, a(X), b(Y).
        """)
        result, partition = minimize(clauses)
        assert partition.nontrivial == [frozenset({"a", "b"})]
        assert result.predicates == ["a"]

    def test_clause_counts_must_match(self):
        """Test two bodies that become equal under renaming do not pair with a single body."""
        clauses = parse_clauses("""
            r(X) :- X=0.
            s(X) :- X=0.
            p(X) :- r(X).
            p(X) :- s(X).
            q(X) :- r(X).
            false :- p(X), q(X).
        """)
        partition = coarsest_cp_equivalence(clauses)
        assert partition.nontrivial == [frozenset({"r", "s"})]
        assert not bodies_equivalent("p", "q", partition, clauses)
        assert bodies_equivalent("r", "s", partition, clauses)

    def test_requires_pure_clauses(self):
        """Test non-pure heads are refused."""
        clauses = parse_clauses("p(0).\nfalse :- p(X).")
        with pytest.raises(ClauseSetError):
            coarsest_cp_equivalence(clauses)

class TestPartition:
    """Test partition validation and rendering."""

    @pytest.fixture
    def clauses(self):
        return parse_clauses(SMALL)

    @pytest.mark.parametrize("classes,representatives,message", [
        ([{"p", "q"}, {"r", "s"}], ["q", "t"], "outside its class"),
        ([{"p", "q"}, {"q", "r", "s"}], ["p", "r"], "two classes"),
        ([{"p", "q"}, {"r"}], ["p", "r"], "not covered"),
        ([{"p", "q"}, {"r", "s"}, {"z"}], ["p", "r", "z"], "unknown predicates"),
        ([set(), {"p", "q", "r", "s"}], ["", "p"], "nonempty"),
    ])
    def test_invalid_partitions(self, clauses, classes, representatives, message):
        """Test each invalid partition is rejected with a reason."""
        partition = Partition(tuple(frozenset(c) for c in classes), tuple(representatives))
        with pytest.raises(PartitionError, match=message):
            apply_renaming(clauses, partition)

    def test_mixed_arities(self):
        """Test a class may not mix arities."""
        clauses = parse_clauses("p(X) :- X=0.\nq(X,Y) :- X=Y.\nfalse :- p(X), q(X,Y).")
        partition = Partition.from_classes([["p", "q"]])
        with pytest.raises(PartitionError, match="mixes arities"):
            partition.validate(clauses)

    def test_identity_partition_keeps_everything(self, clauses):
        """Test singleton classes leave the set unchanged."""
        partition = Partition.from_classes([[p] for p in clauses.predicates])
        assert _canonical(apply_renaming(clauses, partition)) == _canonical(clauses)

    def test_natural_order(self):
        """Test new9 sorts before new10 and is the least name."""
        assert sorted(["new10", "new9", "new1"], key=natural_key) == ["new1", "new9", "new10"]
        assert least_name(["new44", "new17", "new11", "new10"]) == "new10"

    def test_render(self):
        """Test one line per class with the representative first."""
        partition = Partition.from_classes([["new7", "new6"], ["new1"]])
        assert render_partition(partition) == "{new1}\n{new6, new7}\n"
        assert partition.class_of("new7") == frozenset({"new6", "new7"})
        with pytest.raises(PartitionError):
            partition.class_of("new2")
