from __future__ import annotations

import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from riskdevs import (
    INFINITY,
    NoInternalTransitionError,
    NodeRole,
    ParseError,
    Scenario,
    ScheduledOccasion,
    SemanticError,
    TransitionDistribution,
    UnknownStateError,
    behavior_of,
    load_model,
    load_scenario,
    serialize_model,
    serialize_scenario,
    step_internal,
)
from riskdevs.rational import parse_duration


MINIMAL = json.dumps(
    {
        "states": [{"id": "A", "sigma": "1"}, {"id": "B", "sigma": "inf"}],
        "events": [],
        "initial": "A",
        "internal": [{"from": "A", "to": [{"target": "B", "p": "1"}]}],
        "external": [],
    }
)


def _patched(**changes):
    doc = json.loads(MINIMAL)
    doc.update(changes)
    return json.dumps(doc)


class TestLoadModel:
    def test_minimal_model(self):
        model = load_model(MINIMAL)
        assert set(model.states) == {"A", "B"}
        assert len(model.internal) == 1
        assert model.initial == "A"

    def test_probability_sum_rejected(self):
        bad = _patched(
            internal=[{"from": "A", "to": [{"target": "B", "p": "1/2"}, {"target": "A", "p": "2/5"}]}]
        )
        with pytest.raises(SemanticError, match="sum"):
            load_model(bad)

    def test_dangling_target_rejected(self):
        bad = _patched(internal=[{"from": "A", "to": [{"target": "Z", "p": "1"}]}])
        with pytest.raises(SemanticError, match="Z"):
            load_model(bad)

    def test_finite_sigma_needs_internal(self):
        bad = _patched(internal=[])
        with pytest.raises(SemanticError, match="finite sigma"):
            load_model(bad)

    def test_passive_state_must_not_have_internal(self):
        bad = _patched(
            internal=[
                {"from": "A", "to": [{"target": "B", "p": "1"}]},
                {"from": "B", "to": [{"target": "A", "p": "1"}]},
            ]
        )
        with pytest.raises(SemanticError, match="passive"):
            load_model(bad)

    def test_unknown_initial(self):
        with pytest.raises(SemanticError, match="initial"):
            load_model(_patched(initial="Z"))

    def test_float_probability_rejected(self):
        bad = _patched(internal=[{"from": "A", "to": [{"target": "B", "p": 0.3}]}])
        with pytest.raises(ParseError, match="float"):
            load_model(bad)

    def test_malformed_json(self):
        with pytest.raises(ParseError):
            load_model("{not json")

    def test_undeclared_event_in_external(self):
        bad = _patched(external=[{"from": "B", "events": ["woo"], "to": [{"target": "A", "p": "1"}]}])
        with pytest.raises(SemanticError, match="woo"):
            load_model(bad)

    def test_round_trip(self):
        doc = json.dumps(
            {
                "states": [
                    {"id": "A", "sigma": "3/2", "role": "attacker", "criticality_rate": 2.5,
                     "terminal_criticality": 1.0, "output": "beep"},
                    {"id": "B", "sigma": "inf"},
                ],
                "events": ["x", "y"],
                "initial": "A",
                "internal": [{"from": "A", "to": [{"target": "B", "p": "1"}]}],
                "external": [
                    {"from": "B", "events": ["y", "x"], "to": [{"target": "A", "p": "1"}]}
                ],
            }
        )
        model = load_model(doc)
        again = load_model(serialize_model(model))
        assert again == model
        assert serialize_model(again) == serialize_model(model)


class TestDurations:
    @pytest.mark.parametrize(
        "raw, expected",
        [("1/3", Fraction(1, 3)), ("0.25", Fraction(1, 4)), (2, Fraction(2)), ("inf", INFINITY)],
    )
    def test_parse(self, raw, expected):
        assert parse_duration(raw) == expected

    def test_negative_rejected(self):
        with pytest.raises(SemanticError):
            parse_duration("-1/2")

    @given(st.fractions(min_value=0, max_value=1000))
    def test_round_trip_text(self, value):
        assert parse_duration(str(value)) == value

    def test_infinity_compares_above_everything(self):
        assert INFINITY > Fraction(10**12)


class TestDistributionInvariants:
    def test_duplicate_targets_rejected(self):
        with pytest.raises(SemanticError, match="duplicate"):
            TransitionDistribution((("B", Fraction(1, 2)), ("B", Fraction(1, 2))))

    def test_empty_rejected(self):
        with pytest.raises(SemanticError):
            TransitionDistribution(())


class TestBehavior:
    def test_sigma_lookup(self):
        behavior = behavior_of(load_model(MINIMAL))
        assert behavior.sigma("A") == 1
        assert behavior.sigma("B") == INFINITY

    def test_unknown_state(self):
        behavior = behavior_of(load_model(MINIMAL))
        with pytest.raises(UnknownStateError):
            behavior.sigma("nope")

    def test_empty_event_set_is_ignored(self):
        behavior = behavior_of(load_model(MINIMAL))
        assert behavior.external_dist("A", Fraction(1, 2), frozenset()) is None
        assert behavior.external_dist("B", Fraction(0), frozenset()) is None

    def test_criticality_is_rate_times_dwell(self):
        doc = _patched(states=[{"id": "A", "sigma": "1", "criticality_rate": 2},
                               {"id": "B", "sigma": "inf"}])
        behavior = behavior_of(load_model(doc))
        assert behavior.criticality("A", Fraction(3, 2)) == 3.0

    def test_terminal_paid_only_at_full_positive_lifetime(self):
        doc = _patched(
            states=[
                {"id": "A", "sigma": "1", "criticality_rate": 1, "terminal_criticality": 10},
                {"id": "B", "sigma": "inf"},
            ]
        )
        behavior = behavior_of(load_model(doc))
        assert behavior.criticality("A", Fraction(1)) == 11.0
        assert behavior.criticality("A", Fraction(1, 2)) == 0.5
        assert behavior.criticality("A", Fraction(0)) == 0.0

    def test_zero_lifetime_state_accrues_nothing(self):
        doc = _patched(
            states=[
                {"id": "A", "sigma": "0", "terminal_criticality": 10},
                {"id": "B", "sigma": "inf"},
            ]
        )
        behavior = behavior_of(load_model(doc))
        assert behavior.criticality("A", Fraction(0)) == 0.0

    def test_referential_transparency(self):
        behavior = behavior_of(load_model(MINIMAL))
        assert behavior.internal_dist("A") == behavior.internal_dist("A")
        assert behavior.sigma("B") == behavior.sigma("B")


class TestStepInternal:
    def test_deterministic_chain(self):
        behavior = behavior_of(load_model(MINIMAL))
        assert step_internal(behavior, "A").entries == (("B", Fraction(1)),)

    def test_branching_passthrough(self, two_branch):
        _, behavior, _ = two_branch
        assert step_internal(behavior, "A").entries == (
            ("B", Fraction(3, 10)),
            ("C", Fraction(7, 10)),
        )

    def test_passive_state_has_no_internal_transition(self):
        behavior = behavior_of(load_model(MINIMAL))
        with pytest.raises(NoInternalTransitionError):
            step_internal(behavior, "B")


class TestScenario:
    def test_parse_and_serialize(self):
        doc = json.dumps(
            {
                "horizon": "3",
                "occasions": [
                    {"at": "1", "alternatives": [{"events": ["x"], "p": "1/4"},
                                                 {"events": [], "p": "3/4"}]},
                    {"at": "2", "alternatives": [{"events": [], "p": "1"}]},
                ],
            }
        )
        scenario = load_scenario(doc)
        assert scenario.horizon == 3
        assert load_scenario(serialize_scenario(scenario)) == scenario

    def test_alternative_probabilities_must_sum_to_one(self):
        with pytest.raises(SemanticError):
            ScheduledOccasion(at=Fraction(1), alternatives=((frozenset(), Fraction(1, 2)),))

    def test_occasions_strictly_increasing(self):
        occ = ScheduledOccasion(at=Fraction(1), alternatives=((frozenset(), Fraction(1)),))
        with pytest.raises(SemanticError, match="increasing"):
            Scenario(horizon=Fraction(3), occasions=(occ, occ))

    def test_occasion_beyond_horizon_rejected(self):
        occ = ScheduledOccasion(at=Fraction(4), alternatives=((frozenset(), Fraction(1)),))
        with pytest.raises(SemanticError, match="horizon"):
            Scenario(horizon=Fraction(3), occasions=(occ,))

    def test_with_horizon_drops_cut_occasions(self):
        occ1 = ScheduledOccasion(at=Fraction(1), alternatives=((frozenset(), Fraction(1)),))
        occ2 = ScheduledOccasion(at=Fraction(2), alternatives=((frozenset(), Fraction(1)),))
        scenario = Scenario(horizon=Fraction(3), occasions=(occ1, occ2))
        shrunk = scenario.with_horizon(Fraction(3, 2))
        assert shrunk.occasions == (occ1,)
        assert shrunk.horizon == Fraction(3, 2)
