"""Stochastic discrete-event model core.

A model is a finite set of states, each with an exact-rational lifetime
(or INFINITY for passive states), a stochastic internal successor
distribution, and stochastic reactions to sets of external events.  The
tabular form is loadable from a JSON document; the abstract behavior
contract also admits programmatic implementations (see ``powergrid``).

States additionally carry a decision role (chance / attacker / defender)
and a criticality shape split into a duration-proportional rate plus a
terminal lump sum paid when a state runs out its full lifetime.
"""

from __future__ import annotations

import io
import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import IO, Iterable, Mapping, Optional, Union

from .errors import (
    NoInternalTransitionError,
    ParseError,
    SemanticError,
    UnknownStateError,
)
from .rational import (
    INFINITY,
    Duration,
    format_duration,
    format_fraction,
    is_infinite,
    parse_duration,
    parse_probability,
    parse_real,
)

StateId = str
EventId = str
EventSet = frozenset  # frozenset[EventId]

EMPTY_EVENTS: EventSet = frozenset()


class NodeRole(Enum):
    CHANCE = "chance"
    ATTACKER = "attacker"
    DEFENDER = "defender"


@dataclass(frozen=True)
class TotalState:
    """A state together with the time already spent in it."""

    state: StateId
    elapsed: Duration


@dataclass(frozen=True)
class TransitionDistribution:
    """Successor states with exact probabilities summing to 1."""

    entries: tuple  # tuple[(StateId, Fraction), ...]

    def __post_init__(self):
        if not self.entries:
            raise SemanticError("transition distribution must not be empty")
        targets = [t for t, _ in self.entries]
        if len(set(targets)) != len(targets):
            raise SemanticError(f"duplicate targets in distribution: {targets}")
        total = sum((p for _, p in self.entries), Fraction(0))
        if any(p < 0 for _, p in self.entries):
            raise SemanticError("negative probability in distribution")
        if total != 1:
            raise SemanticError(f"distribution probabilities sum to {total}, not 1")

    def targets(self) -> list:
        return [t for t, _ in self.entries]


@dataclass(frozen=True)
class StateSpec:
    """Static per-state attributes of a tabular model."""

    id: StateId
    sigma: Duration
    role: NodeRole = NodeRole.CHANCE
    criticality_rate: float = 0.0
    terminal_criticality: float = 0.0
    output: Optional[str] = None


@dataclass(frozen=True)
class TabularModel:
    """Finite-state model backed by explicit transition tables.

    Immutable after construction; safe to share across concurrent readers.
    """

    states: Mapping  # StateId -> StateSpec, insertion-ordered
    events: tuple  # tuple[EventId, ...]
    initial: StateId
    internal: Mapping  # StateId -> TransitionDistribution
    external: Mapping  # (StateId, EventSet) -> TransitionDistribution

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        known = set(self.states)
        events = set(self.events)
        if self.initial not in known:
            raise SemanticError(f"initial state {self.initial!r} not declared", path="initial")
        for sid, spec in self.states.items():
            if spec.criticality_rate < 0 or spec.terminal_criticality < 0:
                raise SemanticError("criticality must be non-negative", path=f"states[{sid}]")
            if not is_infinite(spec.sigma) and spec.sigma < 0:
                raise SemanticError("sigma must be >= 0", path=f"states[{sid}].sigma")
            if is_infinite(spec.sigma):
                if sid in self.internal:
                    raise SemanticError(
                        "passive state must not have an internal distribution",
                        path=f"internal[{sid}]",
                    )
            elif sid not in self.internal:
                raise SemanticError(
                    "state with finite sigma needs an internal distribution",
                    path=f"internal[{sid}]",
                )
        for sid, dist in self.internal.items():
            if sid not in known:
                raise SemanticError(f"unknown source state {sid!r}", path=f"internal[{sid}]")
            for target, _ in dist.entries:
                if target not in known:
                    raise SemanticError(
                        f"unknown target state {target!r}", path=f"internal[{sid}]"
                    )
        for (sid, evset), dist in self.external.items():
            where = f"external[{sid}, {sorted(evset)}]"
            if sid not in known:
                raise SemanticError(f"unknown source state {sid!r}", path=where)
            if not evset:
                raise SemanticError("external key needs a non-empty event set", path=where)
            if not evset <= events:
                raise SemanticError(f"undeclared events {sorted(evset - events)}", path=where)
            for target, _ in dist.entries:
                if target not in known:
                    raise SemanticError(f"unknown target state {target!r}", path=where)

    def spec_of(self, state: StateId) -> StateSpec:
        try:
            return self.states[state]
        except KeyError:
            raise UnknownStateError(f"state {state!r} is not part of the model") from None


@dataclass(frozen=True)
class ScheduledOccasion:
    """One instant at which external events may arrive.

    Alternatives branch the evolution; an empty event set means the
    occasion passes without anything happening.
    """

    at: Fraction
    alternatives: tuple  # tuple[(EventSet, Fraction), ...]

    def __post_init__(self):
        total = sum((p for _, p in self.alternatives), Fraction(0))
        if total != 1:
            raise SemanticError(f"alternative probabilities sum to {total}, not 1")
        if any(p < 0 for _, p in self.alternatives):
            raise SemanticError("negative alternative probability")


@dataclass(frozen=True)
class Scenario:
    """A finite schedule of event occasions and the look-ahead horizon."""

    horizon: Fraction
    occasions: tuple = ()  # tuple[ScheduledOccasion, ...]

    def __post_init__(self):
        if is_infinite(self.horizon) or self.horizon < 0:
            raise SemanticError("horizon must be finite and >= 0", path="horizon")
        last = None
        for i, occ in enumerate(self.occasions):
            if occ.at < 0:
                raise SemanticError("occasion time must be >= 0", path=f"occasions[{i}].at")
            if last is not None and occ.at <= last:
                raise SemanticError(
                    "occasion times must be strictly increasing", path=f"occasions[{i}].at"
                )
            if occ.at > self.horizon:
                raise SemanticError(
                    "occasion time exceeds the horizon", path=f"occasions[{i}].at"
                )
            last = occ.at

    def with_horizon(self, horizon: Fraction) -> "Scenario":
        """Shrink or extend the horizon, dropping occasions it cuts off."""
        kept = tuple(o for o in self.occasions if o.at <= horizon)
        return Scenario(horizon=horizon, occasions=kept)


class ModelBehavior(ABC):
    """The behavioral contract the engines consume.

    All methods are pure functions of their arguments; implementations
    must be immutable and safe for concurrent readers.
    """

    @property
    @abstractmethod
    def initial_state(self) -> StateId: ...

    @abstractmethod
    def sigma(self, state: StateId) -> Duration:
        """Lifetime of ``state``; INFINITY marks a passive state."""

    @abstractmethod
    def internal_dist(self, state: StateId) -> TransitionDistribution:
        """Successor distribution when the lifetime expires."""

    @abstractmethod
    def external_dist(
        self, state: StateId, elapsed: Duration, events: EventSet
    ) -> Optional[TransitionDistribution]:
        """Reaction to ``events`` after ``elapsed`` time in ``state``.

        ``None`` means the state ignores this event set and dwells on with
        its elapsed time advanced; the empty set is always ignored.
        """

    @abstractmethod
    def role(self, state: StateId) -> NodeRole: ...

    @abstractmethod
    def criticality(self, state: StateId, dwell: Duration) -> float:
        """Disadvantage accrued by ``state`` over ``dwell`` time units."""


class TabularBehavior(ModelBehavior):
    """Adapter exposing a TabularModel through the behavior contract."""

    def __init__(self, model: TabularModel):
        self._model = model

    @property
    def model(self) -> TabularModel:
        return self._model

    @property
    def initial_state(self) -> StateId:
        return self._model.initial

    def sigma(self, state: StateId) -> Duration:
        return self._model.spec_of(state).sigma

    def internal_dist(self, state: StateId) -> TransitionDistribution:
        spec = self._model.spec_of(state)
        if is_infinite(spec.sigma):
            raise NoInternalTransitionError(f"state {state!r} is passive")
        return self._model.internal[state]

    def external_dist(self, state, elapsed, events):
        self._model.spec_of(state)
        if not events:
            return None
        # The table is keyed on (state, event set) only; reactions do not
        # depend on elapsed time.  Time-dependent reactions require a
        # programmatic ModelBehavior.
        return self._model.external.get((state, frozenset(events)))

    def role(self, state: StateId) -> NodeRole:
        return self._model.spec_of(state).role

    def criticality(self, state: StateId, dwell: Duration) -> float:
        spec = self._model.spec_of(state)
        value = spec.criticality_rate * float(dwell)
        # Terminal lump sum is paid only when a state runs out a positive
        # lifetime; nothing accrues in zero time.
        if dwell > 0 and dwell == spec.sigma:
            value += spec.terminal_criticality
        return value

    def per_state_linear(self) -> dict:
        """Per-state (rate, terminal) pairs; enables the compiled sampler."""
        return {
            sid: (spec.criticality_rate, spec.terminal_criticality)
            for sid, spec in self._model.states.items()
        }


def behavior_of(model: TabularModel) -> TabularBehavior:
    return TabularBehavior(model)


def materialize(
    behavior: ModelBehavior,
    initial: StateId,
    event_sets: Iterable = (),
) -> TabularModel:
    """Flatten a programmatic behavior into an explicit tabular model.

    Walks every state reachable through internal transitions and through
    the given event sets.  Only valid for behaviors whose reactions do
    not depend on elapsed time (reactions are probed at elapsed 0); the
    per-state criticality must be purely rate-based, which holds for all
    behaviors built by this package.
    """
    probes = sorted({frozenset(e) for e in event_sets if e}, key=sorted)
    events = sorted({e for subset in probes for e in subset})
    zero = Fraction(0)

    states: dict = {}
    internal: dict = {}
    external: dict = {}
    queue = [initial]
    while queue:
        state = queue.pop()
        if state in states:
            continue
        sigma = behavior.sigma(state)
        # probe the rate away from the lifetime so no terminal sneaks in
        if not is_infinite(sigma) and sigma > 0:
            half = sigma / 2
            rate = behavior.criticality(state, half) / float(half)
            terminal = max(0.0, behavior.criticality(state, sigma) - rate * float(sigma))
        else:
            rate = behavior.criticality(state, Fraction(1))
            terminal = 0.0
        states[state] = StateSpec(
            id=state,
            sigma=sigma,
            role=behavior.role(state),
            criticality_rate=rate,
            terminal_criticality=terminal,
        )
        successors = []
        if not is_infinite(sigma):
            dist = behavior.internal_dist(state)
            internal[state] = dist
            successors.extend(dist.targets())
        for probe in probes:
            dist = behavior.external_dist(state, zero, probe)
            if dist is not None:
                external[(state, probe)] = dist
                successors.extend(dist.targets())
        queue.extend(s for s in successors if s not in states)

    return TabularModel(
        states=states,
        events=tuple(events),
        initial=initial,
        internal=internal,
        external=external,
    )


def step_internal(behavior: ModelBehavior, state: StateId) -> TransitionDistribution:
    """Distribution of successors entered when the lifetime of ``state`` expires."""
    return behavior.internal_dist(state)


# ---------------------------------------------------------------------------
# File format


_ROLES = {r.value: r for r in NodeRole}

Source = Union[str, bytes, IO]


def _read_document(source: Source) -> dict:
    if isinstance(source, (str, bytes)):
        text = source
    elif hasattr(source, "read"):
        text = source.read()
    else:
        raise ParseError(f"cannot read model from {type(source).__name__}")
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")
    return doc


def _require(doc: dict, key: str, kind, path: str):
    if key not in doc:
        raise SemanticError(f"missing required field {key!r}", path=path or None)
    value = doc[key]
    if not isinstance(value, kind):
        raise ParseError(
            f"field {key!r} must be {kind.__name__}, got {type(value).__name__}",
            path=path or None,
        )
    return value


def _parse_dist(raw: object, path: str) -> TransitionDistribution:
    if not isinstance(raw, list) or not raw:
        raise SemanticError("expected a non-empty list of {target, p} entries", path=path)
    entries = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ParseError("distribution entry must be an object", path=f"{path}[{i}]")
        target = _require(item, "target", str, f"{path}[{i}]")
        prob = parse_probability(item.get("p"), path=f"{path}[{i}].p")
        entries.append((target, prob))
    try:
        return TransitionDistribution(tuple(entries))
    except SemanticError as exc:
        raise SemanticError(str(exc), path=path) from None


def load_model(source: Source) -> TabularModel:
    """Parse and validate a model document; see the README for the schema."""
    doc = _read_document(source)

    states: dict = {}
    for i, raw in enumerate(_require(doc, "states", list, "")):
        where = f"states[{i}]"
        if not isinstance(raw, dict):
            raise ParseError("state entry must be an object", path=where)
        sid = _require(raw, "id", str, where)
        if sid in states:
            raise SemanticError(f"duplicate state id {sid!r}", path=where)
        role_raw = raw.get("role", "chance")
        if role_raw not in _ROLES:
            raise SemanticError(f"unknown role {role_raw!r}", path=f"{where}.role")
        states[sid] = StateSpec(
            id=sid,
            sigma=parse_duration(raw.get("sigma"), path=f"{where}.sigma"),
            role=_ROLES[role_raw],
            criticality_rate=float(parse_real(raw.get("criticality_rate", 0), path=f"{where}.criticality_rate")),
            terminal_criticality=float(
                parse_real(raw.get("terminal_criticality", 0), path=f"{where}.terminal_criticality")
            ),
            output=raw.get("output"),
        )

    events = []
    for i, ev in enumerate(doc.get("events", [])):
        if not isinstance(ev, str):
            raise ParseError("event ids must be strings", path=f"events[{i}]")
        if ev in events:
            raise SemanticError(f"duplicate event id {ev!r}", path=f"events[{i}]")
        events.append(ev)

    initial = _require(doc, "initial", str, "")

    internal: dict = {}
    for i, raw in enumerate(doc.get("internal", [])):
        where = f"internal[{i}]"
        if not isinstance(raw, dict):
            raise ParseError("internal entry must be an object", path=where)
        src = _require(raw, "from", str, where)
        if src in internal:
            raise SemanticError(f"duplicate internal entry for {src!r}", path=where)
        internal[src] = _parse_dist(raw.get("to"), f"{where}.to")

    external: dict = {}
    for i, raw in enumerate(doc.get("external", [])):
        where = f"external[{i}]"
        if not isinstance(raw, dict):
            raise ParseError("external entry must be an object", path=where)
        src = _require(raw, "from", str, where)
        evs = _require(raw, "events", list, where)
        key = (src, frozenset(evs))
        if key in external:
            raise SemanticError(
                f"duplicate external entry for {src!r} / {sorted(key[1])}", path=where
            )
        external[key] = _parse_dist(raw.get("to"), f"{where}.to")

    return TabularModel(
        states=states,
        events=tuple(events),
        initial=initial,
        internal=internal,
        external=external,
    )


def serialize_model(model: TabularModel) -> str:
    """Inverse of load_model: load_model(serialize_model(m)) == m."""

    def num(value) -> str:
        return format_duration(value)

    doc = {
        "states": [
            {
                "id": s.id,
                "sigma": num(s.sigma),
                "role": s.role.value,
                "criticality_rate": s.criticality_rate,
                "terminal_criticality": s.terminal_criticality,
                **({"output": s.output} if s.output is not None else {}),
            }
            for s in model.states.values()
        ],
        "events": list(model.events),
        "initial": model.initial,
        "internal": [
            {"from": src, "to": [{"target": t, "p": format_fraction(p)} for t, p in dist.entries]}
            for src, dist in model.internal.items()
        ],
        "external": [
            {
                "from": src,
                "events": sorted(evset),
                "to": [{"target": t, "p": format_fraction(p)} for t, p in dist.entries],
            }
            for (src, evset), dist in model.external.items()
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def load_scenario(source: Source) -> Scenario:
    doc = _read_document(source)
    horizon = parse_duration(_peek(doc, "horizon"), path="horizon")
    if is_infinite(horizon):
        raise SemanticError("horizon must be finite", path="horizon")
    occasions = []
    for i, raw in enumerate(doc.get("occasions", [])):
        where = f"occasions[{i}]"
        if not isinstance(raw, dict):
            raise ParseError("occasion must be an object", path=where)
        at = parse_duration(raw.get("at"), path=f"{where}.at")
        if is_infinite(at):
            raise SemanticError("occasion time must be finite", path=f"{where}.at")
        alternatives = []
        for j, alt in enumerate(_require(raw, "alternatives", list, where)):
            if not isinstance(alt, dict):
                raise ParseError("alternative must be an object", path=f"{where}.alternatives[{j}]")
            evs = alt.get("events", [])
            if not isinstance(evs, list):
                raise ParseError("events must be a list", path=f"{where}.alternatives[{j}].events")
            prob = parse_probability(alt.get("p"), path=f"{where}.alternatives[{j}].p")
            alternatives.append((frozenset(evs), prob))
        try:
            occasions.append(ScheduledOccasion(at=at, alternatives=tuple(alternatives)))
        except SemanticError as exc:
            raise SemanticError(str(exc), path=where) from None
    return Scenario(horizon=horizon, occasions=tuple(occasions))


def _peek(doc: dict, key: str):
    if key not in doc:
        raise SemanticError(f"missing required field {key!r}")
    return doc[key]


def serialize_scenario(scenario: Scenario) -> str:
    doc = {
        "horizon": format_duration(scenario.horizon),
        "occasions": [
            {
                "at": format_duration(o.at),
                "alternatives": [
                    {"events": sorted(evs), "p": format_fraction(p)}
                    for evs, p in o.alternatives
                ],
            }
            for o in scenario.occasions
        ],
    }
    return json.dumps(doc, indent=2) + "\n"
