"""
Test waypoint-chain properties and the built-in templates
"""

from dataclasses import FrozenInstanceError

import pytest

from bpmn.model import ModelError
from chc.syntax import ParseError
from verification.fluents import Fluent, parse_fluent_set
from verification.properties import (
    PropertyError,
    PropertySpec,
    parse_property,
    response_time_property,
    schedulability_property,
)

from conftest import fixture_text


class TestParseProperty:
    """Test reading property goal clauses."""

    def test_deadline_property(self, deadline9):
        """Test the 9-unit deadline has two waypoints and Ts as initial time."""
        assert deadline9.initial_variable == "Ts"
        assert deadline9.time_variables == ["Ts", "Tp", "Te"]
        assert [w.fluents for w in deadline9.waypoints] == [
            frozenset({Fluent.completes("p")}), frozenset({Fluent.completes("end")})]
        assert deadline9.segments == 2
        assert deadline9.initial_fluents == frozenset({Fluent.begins("start")})

    def test_property_is_an_immutable_value(self, deadline9):
        """Test parsed properties are frozen and compare by value."""
        assert isinstance(deadline9, PropertySpec)
        assert deadline9 == parse_property(fixture_text("po_deadline9.prop"))
        with pytest.raises(FrozenInstanceError):
            deadline9.initial_variable = "T0"

    def test_violation_constraint(self, deadline9):
        """Test the violation holds exactly for late ends."""
        assert deadline9.violation.evaluate({"Ts": 0, "Tp": 2, "Te": 12})
        assert not deadline9.violation.evaluate({"Ts": 0, "Tp": 2, "Te": 11})
        assert deadline9.anchored_violation().evaluate({"Ts": 0, "Tp": 2, "Te": 12})
        assert not deadline9.anchored_violation().evaluate({"Ts": 1, "Tp": 2, "Te": 12})

    def test_text_reads_back(self, deadline8):
        """Test printing a property gives an equivalent property."""
        again = parse_property(deadline8.to_text())
        assert again.waypoints == deadline8.waypoints
        assert again.initial_fluents == deadline8.initial_fluents
        assert again.violation.normalize() == deadline8.violation.normalize()

    def test_matches_order_process(self, po_spec, deadline9):
        """Test every fluent names an object of the process."""
        deadline9.check_against(po_spec)

    @pytest.mark.parametrize("text,message", [
        ("p(X) :- X=0.", "head false"),
        ("false :- T0=0.", "at least one reach"),
        ("false :- q(X).", "unexpected literal"),
        ("false :- reach(s([begins(s)],T0), s([completes(a)],T1)), "
         "reach(s([completes(b)],T1), s([completes(c)],T2)).", "previous one ended"),
        ("false :- T2>0, reach(s([begins(s)],T0), s([completes(a)],T1)).", "unknown variables"),
        ("false :- reach(s([begins(s)],T0), s([completes(a)],T0)).", "distinct"),
        ("false :- reach(s([begins(s)],T0), s([completes(a)],1)).", "must be a variable"),
        ("false :- T0=0. false :- T0=1.", "exactly one goal clause"),
    ])
    def test_property_errors(self, text, message):
        """Test malformed property clauses are rejected with a reason."""
        with pytest.raises(PropertyError, match=message):
            parse_property(text)

    def test_unknown_fluent(self):
        """Test an unknown fluent name is a syntax error."""
        with pytest.raises(ParseError):
            parse_property("false :- reach(s([begins(s)],T0), s([started(a)],T1)).")

    def test_unknown_object(self, po_spec):
        """Test a waypoint naming an undeclared object fails the model check."""
        prop = parse_property("false :- reach(s([begins(start)],T0), s([completes(zz)],T1)).")
        with pytest.raises(ModelError):
            prop.check_against(po_spec)

    def test_wrong_initial_state(self, po_spec):
        """Test the chain must start from begins(start)."""
        prop = parse_property("false :- reach(s([begins(a)],T0), s([completes(p)],T1)).")
        with pytest.raises(PropertyError, match="must start"):
            prop.check_against(po_spec)

class TestTemplates:
    """Test the response-time and schedulability templates."""

    def test_response_time_matches_fixture(self, po_spec):
        """Test the template states the same deadline as the fixture file."""
        prop = response_time_property(po_spec, frozenset({Fluent.completes("p")}),
                                      frozenset({Fluent.completes("end")}), 9)
        fixture = parse_property(fixture_text("po_deadline9.prop"))
        assert [w.fluents for w in prop.waypoints] == [w.fluents for w in fixture.waypoints]
        for tp, te in [(1, 10), (1, 11), (3, 13)]:
            assert prop.anchored_violation().evaluate({"T0": 0, "T1": tp, "T2": te}) == \
                fixture.anchored_violation().evaluate({"Ts": 0, "Tp": tp, "Te": te})

    def test_schedulability(self, po_spec):
        """Test reaching the target after the deadline is the violation."""
        prop = schedulability_property(po_spec, frozenset({Fluent.completes("end")}), 20)
        assert prop.segments == 1
        assert prop.violation.evaluate({"T1": 21})
        assert not prop.violation.evaluate({"T1": 20})

class TestFluentText:
    """Test fluent set text forms."""

    @pytest.mark.parametrize("text", [
        "completes(p)", "[completes(p)]", "{completes(p)}",
    ])
    def test_single_fluent_forms(self, text):
        """Test bare, list and brace forms read the same set."""
        assert parse_fluent_set(text) == frozenset({Fluent.completes("p")})

    def test_mixed_set(self):
        """Test a set with enables and enacting fluents."""
        fluents = parse_fluent_set("[enables(g3,i), enacting(o,2)]")
        assert fluents == frozenset({Fluent.enables("g3", "i"), Fluent.enacting("o", 2)})
        assert str(Fluent.enacting("o", 2)) == "enacting(o,2)"

    def test_negative_residual(self):
        """Test residual times cannot be negative."""
        with pytest.raises(ParseError):
            parse_fluent_set("enacting(o,-1)")
