"""Seeded random model/scenario generator for property and acceptance tests."""

from __future__ import annotations

import random
from fractions import Fraction

from riskdevs.model import (
    NodeRole,
    ScheduledOccasion,
    Scenario,
    StateSpec,
    TabularModel,
    TransitionDistribution,
)
from riskdevs.rational import INFINITY

_SIGMAS = (Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2), Fraction(3))
_RATES = (0.0, 0.5, 1.0, 2.0, 5.0)
_TERMINALS = (0.0, 0.0, 1.0, 3.0)
_HORIZONS = (Fraction(2), Fraction(5, 2), Fraction(3), Fraction(7, 2))


def _distribution(rng: random.Random, targets: list) -> TransitionDistribution:
    count = rng.randint(1, min(3, len(targets)))
    chosen = rng.sample(targets, count)
    weights = [rng.randint(1, 5) for _ in chosen]
    total = sum(weights)
    entries = tuple((t, Fraction(w, total)) for t, w in zip(chosen, weights))
    return TransitionDistribution(entries)


def random_model(rng: random.Random, *, max_states: int = 6, decision_roles: bool = False):
    """A valid tabular model plus a matching scenario, fully seeded."""
    n = rng.randint(2, max_states)
    ids = [f"s{i}" for i in range(n)]
    events = [f"x{i}" for i in range(rng.randint(0, 2))]

    states = {}
    internal = {}
    for sid in ids:
        passive = rng.random() < 0.3
        sigma = INFINITY if passive else rng.choice(_SIGMAS)
        role = NodeRole.CHANCE
        if decision_roles and rng.random() < 0.4:
            role = rng.choice((NodeRole.ATTACKER, NodeRole.DEFENDER))
        states[sid] = StateSpec(
            id=sid,
            sigma=sigma,
            role=role,
            criticality_rate=rng.choice(_RATES),
            terminal_criticality=rng.choice(_TERMINALS),
        )
        if not passive:
            internal[sid] = _distribution(rng, ids)

    external = {}
    if events:
        subsets = [frozenset(s) for s in ([events[0]], events[:2], events[1:2]) if s]
        subsets = sorted(set(subsets), key=sorted)
        for sid in ids:
            for subset in subsets:
                if rng.random() < 0.5:
                    external[(sid, subset)] = _distribution(rng, ids)

    model = TabularModel(
        states=states,
        events=tuple(events),
        initial=ids[0],
        internal=internal,
        external=external,
    )

    horizon = rng.choice(_HORIZONS)
    occasions = []
    times = sorted(rng.sample((Fraction(1, 2), Fraction(1), Fraction(3, 2), Fraction(2)),
                              rng.randint(0, 2)))
    for at in times:
        if at > horizon:
            continue
        alt_events = [frozenset()]
        if events:
            alt_events.append(frozenset([rng.choice(events)]))
            if len(events) > 1 and rng.random() < 0.5:
                alt_events.append(frozenset(events))
        weights = [rng.randint(1, 4) for _ in alt_events]
        total = sum(weights)
        alternatives = tuple(
            (evs, Fraction(w, total)) for evs, w in zip(alt_events, weights)
        )
        occasions.append(ScheduledOccasion(at=at, alternatives=alternatives))
    scenario = Scenario(horizon=horizon, occasions=tuple(occasions))
    return model, scenario
