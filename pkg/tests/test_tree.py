from __future__ import annotations

import json
import random
from fractions import Fraction

import pytest

from riskdevs import (
    ExplosionLimitError,
    IncompatibleEndpointsError,
    PathElement,
    PrefixNotFoundError,
    Scenario,
    ScheduledOccasion,
    SimulationPath,
    SplitIndexError,
    ZeroDelayCycleError,
    behavior_of,
    build_tree,
    concat,
    dump_tree,
    enumerate_paths,
    load_model,
    prefix_path,
    subset_with_prefix,
    successors,
    suffix_path,
    total_probability,
)

from .modelgen import random_model
from .oracle import probability_total


PASSIVE = json.dumps(
    {
        "states": [{"id": "idle", "sigma": "inf"}],
        "events": [],
        "initial": "idle",
        "internal": [],
        "external": [],
    }
)

CHAIN = json.dumps(
    {
        "states": [{"id": "A", "sigma": "1"}, {"id": "B", "sigma": "inf"}],
        "events": [],
        "initial": "A",
        "internal": [{"from": "A", "to": [{"target": "B", "p": "1"}]}],
        "external": [],
    }
)

# three consecutive fair binary branchings
DEPTH3 = json.dumps(
    {
        "states": [
            {"id": "n0", "sigma": "1"},
            {"id": "n1a", "sigma": "1"},
            {"id": "n1b", "sigma": "1"},
            {"id": "n2a", "sigma": "1"},
            {"id": "n2b", "sigma": "1"},
            {"id": "leafA", "sigma": "inf"},
            {"id": "leafB", "sigma": "inf"},
        ],
        "events": [],
        "initial": "n0",
        "internal": [
            {"from": "n0", "to": [{"target": "n1a", "p": "1/2"}, {"target": "n1b", "p": "1/2"}]},
            {"from": "n1a", "to": [{"target": "n2a", "p": "1/2"}, {"target": "n2b", "p": "1/2"}]},
            {"from": "n1b", "to": [{"target": "n2a", "p": "1/2"}, {"target": "n2b", "p": "1/2"}]},
            {"from": "n2a", "to": [{"target": "leafA", "p": "1/2"}, {"target": "leafB", "p": "1/2"}]},
            {"from": "n2b", "to": [{"target": "leafA", "p": "1/2"}, {"target": "leafB", "p": "1/2"}]},
        ],
        "external": [],
    }
)

EVENTFUL = json.dumps(
    {
        "states": [
            {"id": "calm", "sigma": "inf"},
            {"id": "hit", "sigma": "inf"},
        ],
        "events": ["x", "zz"],
        "initial": "calm",
        "internal": [],
        "external": [{"from": "calm", "events": ["x"], "to": [{"target": "hit", "p": "1"}]}],
    }
)


def _build(doc, scenario):
    model = load_model(doc)
    return build_tree(behavior_of(model), model.initial, scenario)


class TestBuildTree:
    def test_passive_model_single_leaf(self):
        language = _build(PASSIVE, Scenario(horizon=Fraction(5)))
        paths = list(enumerate_paths(language))
        assert len(paths) == 1
        assert paths[0].elements == ()
        assert paths[0].residual == 5

    def test_deterministic_chain(self):
        language = _build(CHAIN, Scenario(horizon=Fraction(3)))
        (path,) = enumerate_paths(language)
        assert path.elements == (PathElement("B", Fraction(1), frozenset()),)
        assert path.residual == 2

    def test_two_branch_probabilities(self, two_branch):
        _, behavior, scenario = two_branch
        language = build_tree(behavior, "A", scenario)
        paths = list(enumerate_paths(language))
        assert [p.final_state for p in paths] == ["B", "C"]
        assert [p._leaf.prob for p in paths] == [Fraction(3, 10), Fraction(7, 10)]

    def test_depth3_has_eight_paths(self):
        language = _build(DEPTH3, Scenario(horizon=Fraction(4)))
        paths = list(enumerate_paths(language))
        assert len(paths) == 8
        assert all(p._leaf.prob == Fraction(1, 8) for p in paths)

    def test_enumeration_is_deterministic(self, two_branch):
        _, behavior, scenario = two_branch
        a = [p.elements for p in enumerate_paths(build_tree(behavior, "A", scenario))]
        b = [p.elements for p in enumerate_paths(build_tree(behavior, "A", scenario))]
        assert a == b

    def test_horizon_exactness(self):
        for seed in range(25):
            model, scenario = random_model(random.Random(seed))
            language = build_tree(behavior_of(model), model.initial, scenario)
            for path in enumerate_paths(language):
                total = sum((e.lifetime for e in path.elements), Fraction(0))
                assert total + path.residual == scenario.horizon

    def test_partition_of_probability(self):
        for seed in range(25):
            model, scenario = random_model(random.Random(1000 + seed))
            behavior = behavior_of(model)
            language = build_tree(behavior, model.initial, scenario)
            assert total_probability(language) == 1
            assert probability_total(behavior, model.initial, scenario) == 1

    def test_ignored_event_passes_through(self):
        occ = ScheduledOccasion(
            at=Fraction(1),
            alternatives=((frozenset(("zz",)), Fraction(1, 4)), (frozenset(), Fraction(3, 4))),
        )
        language = _build(EVENTFUL, Scenario(horizon=Fraction(2), occasions=(occ,)))
        paths = list(enumerate_paths(language))
        # "calm" ignores zz: both alternatives dwell on without a transition
        assert len(paths) == 2
        assert all(p.elements == () for p in paths)
        assert total_probability(language) == 1

    def test_reacting_event_branches(self):
        occ = ScheduledOccasion(
            at=Fraction(1),
            alternatives=((frozenset(("x",)), Fraction(1, 4)), (frozenset(), Fraction(3, 4))),
        )
        language = _build(EVENTFUL, Scenario(horizon=Fraction(2), occasions=(occ,)))
        paths = list(enumerate_paths(language))
        hit = [p for p in paths if p.final_state == "hit"]
        assert len(hit) == 1
        assert hit[0].elements == (PathElement("hit", Fraction(1), frozenset(("x",))),)
        assert hit[0]._leaf.prob == Fraction(1, 4)

    def test_occasion_tie_processed_before_expiry(self):
        # expiry of "wait" and the occasion both land at t=1
        doc = json.dumps(
            {
                "states": [
                    {"id": "wait", "sigma": "1"},
                    {"id": "timed_out", "sigma": "inf"},
                    {"id": "interrupted", "sigma": "inf"},
                ],
                "events": ["x"],
                "initial": "wait",
                "internal": [{"from": "wait", "to": [{"target": "timed_out", "p": "1"}]}],
                "external": [
                    {"from": "wait", "events": ["x"], "to": [{"target": "interrupted", "p": "1"}]}
                ],
            }
        )
        occ = ScheduledOccasion(at=Fraction(1), alternatives=((frozenset(("x",)), Fraction(1)),))
        language = _build(doc, Scenario(horizon=Fraction(2), occasions=(occ,)))
        (path,) = enumerate_paths(language)
        assert path.final_state == "interrupted"

    def test_zero_delay_cycle_detected(self):
        doc = json.dumps(
            {
                "states": [{"id": "ping", "sigma": "0"}, {"id": "pong", "sigma": "0"}],
                "events": [],
                "initial": "ping",
                "internal": [
                    {"from": "ping", "to": [{"target": "pong", "p": "1"}]},
                    {"from": "pong", "to": [{"target": "ping", "p": "1"}]},
                ],
                "external": [],
            }
        )
        model = load_model(doc)
        with pytest.raises(ZeroDelayCycleError):
            build_tree(behavior_of(model), "ping", Scenario(horizon=Fraction(1)))

    def test_explosion_limit(self):
        model = load_model(DEPTH3)
        with pytest.raises(ExplosionLimitError):
            build_tree(behavior_of(model), "n0", Scenario(horizon=Fraction(4)), node_limit=5)

    def test_long_chains_do_not_hit_recursion_limits(self):
        # 1500 self-loop expiries: everything must stay iterative
        doc = json.dumps(
            {
                "states": [{"id": "tick", "sigma": "1", "criticality_rate": 1}],
                "events": [],
                "initial": "tick",
                "internal": [{"from": "tick", "to": [{"target": "tick", "p": "1"}]}],
                "external": [],
            }
        )
        model = load_model(doc)
        behavior = behavior_of(model)
        language = build_tree(behavior, "tick", Scenario(horizon=Fraction(1500)))
        (path,) = enumerate_paths(language)
        assert len(path.elements) == 1500
        from riskdevs import additive_criticality, aggregate_risk, minimax_risk

        c = additive_criticality(behavior)
        assert aggregate_risk(language, c).total_risk == 1500.0
        assert minimax_risk(language, c).total_risk == 1500.0

    def test_unknown_root_state(self, two_branch):
        from riskdevs import UnknownStateError

        _, behavior, scenario = two_branch
        with pytest.raises(UnknownStateError):
            build_tree(behavior, "nowhere", scenario)

    def test_occasion_beyond_overridden_horizon_never_fires(self):
        occ = ScheduledOccasion(at=Fraction(1), alternatives=((frozenset(("x",)), Fraction(1)),))
        scenario = Scenario(horizon=Fraction(2), occasions=(occ,)).with_horizon(Fraction(1, 2))
        language = _build(EVENTFUL, scenario)
        (path,) = enumerate_paths(language)
        assert path.elements == ()
        assert path.residual == Fraction(1, 2)


class TestPathAlgebra:
    def _three_step_path(self):
        return SimulationPath(
            initial="A",
            elements=(
                PathElement("B", Fraction(1), frozenset()),
                PathElement("C", Fraction(1), frozenset()),
                PathElement("D", Fraction(1), frozenset()),
            ),
            residual=Fraction(1),
            horizon=Fraction(4),
        )

    def test_concat_joins(self):
        first = SimulationPath(
            initial="A",
            elements=(PathElement("B", Fraction(1), frozenset()),),
            residual=Fraction(0),
            horizon=Fraction(1),
        )
        second = SimulationPath(
            initial="B",
            elements=(PathElement("C", Fraction(2), frozenset()),),
            residual=Fraction(1),
            horizon=Fraction(3),
        )
        joined = concat(first, second)
        assert joined.horizon == 4
        assert [e.state for e in joined.elements] == ["B", "C"]

    def test_concat_zero_horizon_identity(self):
        first = SimulationPath(
            initial="A",
            elements=(PathElement("B", Fraction(1), frozenset()),),
            residual=Fraction(0),
            horizon=Fraction(1),
        )
        empty = SimulationPath(initial="B", elements=(), residual=Fraction(0), horizon=Fraction(0))
        assert concat(first, empty) == first

    def test_concat_mismatched_endpoints(self):
        first = SimulationPath(
            initial="A",
            elements=(PathElement("B", Fraction(1), frozenset()),),
            residual=Fraction(0),
            horizon=Fraction(1),
        )
        wrong = SimulationPath(initial="C", elements=(), residual=Fraction(0), horizon=Fraction(0))
        with pytest.raises(IncompatibleEndpointsError):
            concat(first, wrong)

    def test_split_round_trips(self):
        path = self._three_step_path()
        assert concat(prefix_path(path, 2), suffix_path(path, 2)) == path

    def test_suffix_horizon_arithmetic(self):
        # lifetimes (1,1,1), total horizon 4, cut before the third element
        path = self._three_step_path()
        suffix = suffix_path(path, 3)
        assert suffix.horizon == 2
        assert suffix.initial == "C"
        assert [e.state for e in suffix.elements] == ["D"]

    def test_split_bounds(self):
        path = self._three_step_path()
        for bad in (0, 1, 4):
            with pytest.raises(SplitIndexError):
                suffix_path(path, bad)

    def test_successors(self, two_branch):
        _, behavior, scenario = two_branch
        language = build_tree(behavior, "A", scenario)
        children = successors(language.root)
        assert [c.state for c in children] == ["B", "C"]
        assert successors(children[0]) == []

    def test_subtree_counting_decomposition(self):
        # path counts per child subtree sum to the parent's count
        language = _build(DEPTH3, Scenario(horizon=Fraction(4)))
        total = language.leaf_count
        per_child = []
        for child in successors(language.root):
            count = 0
            stack = [child]
            while stack:
                node = stack.pop()
                if node.is_leaf:
                    count += 1
                stack.extend(e.child for e in node.edges)
            per_child.append(count)
        assert sum(per_child) == total


class TestSubsetWithPrefix:
    def test_empty_prefix_is_whole_language(self):
        language = _build(DEPTH3, Scenario(horizon=Fraction(4)))
        empty = SimulationPath(initial="n0", elements=(), residual=Fraction(0), horizon=Fraction(0))
        assert len(list(subset_with_prefix(language, empty))) == 8

    def test_full_path_prefix_is_singleton(self):
        language = _build(DEPTH3, Scenario(horizon=Fraction(4)))
        some_path = next(iter(enumerate_paths(language)))
        matches = list(subset_with_prefix(language, some_path))
        assert matches == [some_path]

    def test_half_split_on_binary_tree(self):
        language = _build(DEPTH3, Scenario(horizon=Fraction(4)))
        left = SimulationPath(
            initial="n0",
            elements=(PathElement("n1a", Fraction(1), frozenset()),),
            residual=Fraction(0),
            horizon=Fraction(1),
        )
        assert len(list(subset_with_prefix(language, left))) == 4

    def test_unknown_prefix(self):
        language = _build(DEPTH3, Scenario(horizon=Fraction(4)))
        stranger = SimulationPath(
            initial="n0",
            elements=(PathElement("leafA", Fraction(1), frozenset()),),
            residual=Fraction(0),
            horizon=Fraction(1),
        )
        with pytest.raises(PrefixNotFoundError):
            subset_with_prefix(language, stranger)


class TestDump:
    def test_dump_shape_and_determinism(self, two_branch):
        _, behavior, scenario = two_branch
        language = build_tree(behavior, "A", scenario)
        text = dump_tree(language)
        lines = text.strip().split("\n")
        assert lines[0].split("  ") == ["0", "A", "0", "-", "1"]
        assert len(lines) == language.node_count
        assert text == dump_tree(build_tree(behavior, "A", scenario))
