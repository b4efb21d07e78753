"""Risk valuation of simulation paths and their aggregation.

A path's probability is the exact product of the local transition
probabilities along it (the conditional factors of the chain rule reduce
to these local probabilities because the engine's models are Markov in
the evolution tree).  Its criticality is computed by a pluggable
function over the path's effect sequence.  Per-path risk is probability
times criticality; the aggregate measure is the sum over every path of
the horizon-limited language, i.e. the expected criticality.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .errors import InvalidRuleError
from .model import ModelBehavior, Scenario, StateId
from .rational import Duration, format_duration, format_fraction
from .tree import Language, SimulationPath, build_tree, enumerate_paths, leaf_probability

MODE_EXACT = "EXACT"
MODE_MINIMAX = "MINIMAX"
MODE_MONTE_CARLO = "MONTE_CARLO"

DEFAULT_TOP_K = 20

#: One effect: a state that appeared on a path together with the recorded
#: duration of the path element that introduced it (the final state appears
#: once more with its residual dwell).
Effect = tuple  # (StateId, Fraction)
EffectSequence = tuple  # tuple[Effect, ...]


def effect_sequence(path: SimulationPath) -> EffectSequence:
    """Project a path onto the sequence of criticality-bearing effects."""
    effects = [(el.state, el.lifetime) for el in path.elements]
    effects.append((path.final_state, path.residual))
    return tuple(effects)


@dataclass(frozen=True)
class CriticalityFunction:
    """Non-negative valuation of an effect sequence.

    ``additive`` marks functions that decompose as a sum of independent
    per-effect terms; the adversarial recursion exploits this.
    ``per_state_linear`` optionally exposes per-state (rate, terminal)
    coefficients, which lets the Monte Carlo engine compile the whole
    evaluation into its sampling kernel.
    """

    evaluate: Callable[[EffectSequence], float]
    name: str
    params: tuple = ()
    additive: bool = False
    per_effect_term: Optional[Callable[[StateId, Fraction], float]] = None
    per_state_linear: Optional[dict] = None

    def __call__(self, effects: EffectSequence) -> float:
        return self.evaluate(effects)

    def descriptor(self) -> dict:
        return {"name": self.name, "params": list(self.params)}


def additive_criticality(behavior: ModelBehavior) -> CriticalityFunction:
    """Sum of the model's own per-state criticality over all effects."""

    def evaluate(effects: EffectSequence) -> float:
        total = 0.0
        for state, dwell in effects:
            total += behavior.criticality(state, dwell)
        return total

    linear = None
    per_state = getattr(behavior, "per_state_linear", None)
    if per_state is not None:
        linear = per_state()
    return CriticalityFunction(
        evaluate=evaluate,
        name="additive",
        additive=True,
        per_effect_term=behavior.criticality,
        per_state_linear=linear,
    )


MULTIPLY = "multiply"
ADD = "add"


@dataclass(frozen=True)
class CorrelationRule:
    """Adjusts path criticality when a set of states co-occurs.

    The rule matches when every listed state appears on the path with a
    positive dwell and, if ``max_separation`` is set, the first
    appearances lie within that time window.  ``MULTIPLY`` scales the
    running value (amplification above 1, mitigation below); ``ADD``
    shifts it, clamped at zero.
    """

    states: frozenset
    combinator: str
    amount: float
    max_separation: Optional[Duration] = None

    def matches(self, effects: EffectSequence) -> bool:
        first_seen: dict = {}
        start = Fraction(0)
        for state, dwell in effects:
            if state in self.states and dwell > 0 and state not in first_seen:
                first_seen[state] = start
            start += dwell
        if len(first_seen) != len(self.states):
            return False
        if self.max_separation is not None:
            times = first_seen.values()
            if max(times) - min(times) > self.max_separation:
                return False
        return True


def correlated_criticality(
    base: CriticalityFunction,
    rules: Sequence[CorrelationRule],
    *,
    known_states: Optional[Iterable[StateId]] = None,
) -> CriticalityFunction:
    """Wrap ``base`` with co-occurrence rules, applied in declared order."""
    universe = set(known_states) if known_states is not None else None
    for i, rule in enumerate(rules):
        if rule.combinator not in (MULTIPLY, ADD):
            raise InvalidRuleError(f"unknown combinator {rule.combinator!r}", path=f"rules[{i}]")
        if rule.combinator == MULTIPLY and rule.amount < 0:
            raise InvalidRuleError(
                f"multiply factor must be >= 0, got {rule.amount}", path=f"rules[{i}]"
            )
        if not rule.states:
            raise InvalidRuleError("rule needs at least one state", path=f"rules[{i}]")
        if universe is not None:
            unknown = rule.states - universe
            if unknown:
                raise InvalidRuleError(f"unknown states {sorted(unknown)}", path=f"rules[{i}]")

    rules = tuple(rules)

    def evaluate(effects: EffectSequence) -> float:
        value = base.evaluate(effects)
        for rule in rules:
            if rule.matches(effects):
                if rule.combinator == MULTIPLY:
                    value *= rule.amount
                else:
                    value = max(0.0, value + rule.amount)
        return value

    return CriticalityFunction(
        evaluate=evaluate,
        name="correlated",
        params=(base.name, len(rules)),
        additive=False,
    )


@dataclass(frozen=True)
class PathRisk:
    path: SimulationPath
    probability: Fraction
    criticality: float
    risk: float


@dataclass(frozen=True)
class Estimate:
    mean: float
    standard_error: float
    sample_count: int
    min_criticality: float
    max_criticality: float


@dataclass(frozen=True)
class RiskReport:
    """Aggregate risk with enough context to audit where it came from."""

    total_risk: float
    horizon: Fraction
    mode: str
    path_count: int
    top_contributors: tuple = ()
    estimator: Optional[Estimate] = None
    estimator_extra: tuple = ()  # extra (key, value) pairs for the estimator block
    assignment: Optional[tuple] = None
    metadata: tuple = ()  # deterministic (key, value) pairs
    language: Optional[Language] = field(default=None, compare=False, repr=False)

    def to_json_dict(self) -> dict:
        doc: dict = {
            "total_risk": self.total_risk,
            "horizon": format_duration(self.horizon),
            "mode": self.mode,
            "path_count": self.path_count,
            "top_contributors": [
                {
                    "probability": format_fraction(pr.probability),
                    "criticality": pr.criticality,
                    "risk": pr.risk,
                    "trace": _trace_dict(pr.path),
                }
                for pr in self.top_contributors
            ],
        }
        if self.estimator is not None:
            # min/max sampled criticality double as a rare-event alarm
            doc["estimator"] = {
                "mean": self.estimator.mean,
                "std_error": self.estimator.standard_error,
                "n": self.estimator.sample_count,
                "min_criticality": self.estimator.min_criticality,
                "max_criticality": self.estimator.max_criticality,
                **dict(self.estimator_extra),
            }
        if self.assignment is not None:
            doc["assignment"] = [
                {"node_trace": trace, "chosen": chosen} for trace, chosen in self.assignment
            ]
        if self.metadata:
            doc["engine"] = dict(self.metadata)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2) + "\n"


def _trace_dict(path: SimulationPath) -> dict:
    return {
        "initial": path.initial,
        "steps": [
            {
                "state": el.state,
                "lifetime": format_fraction(el.lifetime),
                "events": sorted(el.events),
            }
            for el in path.elements
        ],
        "residual": format_fraction(path.residual),
    }


def path_probability(language: Language, path: SimulationPath) -> Fraction:
    """Exact occurrence probability of ``path`` within ``language``."""
    return leaf_probability(language, path)


def path_risk(language: Language, path: SimulationPath, c: CriticalityFunction) -> PathRisk:
    probability = path_probability(language, path)
    criticality = c.evaluate(effect_sequence(path))
    return PathRisk(
        path=path,
        probability=probability,
        criticality=criticality,
        risk=float(probability) * criticality,
    )


def aggregate_risk(
    language: Language, c: CriticalityFunction, *, top_k: int = DEFAULT_TOP_K
) -> RiskReport:
    """Exact risk: the probability-weighted sum of criticality over all paths.

    Probabilities stay rational until each path's final multiplication;
    the total is a deterministic sequential sum in enumeration order.
    """
    total = 0.0
    count = 0
    worst: list = []  # min-heap of (risk, -index, PathRisk)
    for index, path in enumerate(enumerate_paths(language)):
        probability = path._leaf.prob
        criticality = c.evaluate(effect_sequence(path))
        risk = float(probability) * criticality
        total += risk
        count += 1
        if top_k > 0:
            item = (risk, -index, PathRisk(path, probability, criticality, risk))
            if len(worst) < top_k:
                heapq.heappush(worst, item)
            else:
                heapq.heappushpop(worst, item)
    top = tuple(pr for _, _, pr in sorted(worst, key=lambda it: (-it[0], -it[1])))
    return RiskReport(
        total_risk=total,
        horizon=language.horizon,
        mode=MODE_EXACT,
        path_count=count,
        top_contributors=top,
        metadata=(("criticality", c.name),),
        language=language,
    )


def initial_state_risk(
    behavior: ModelBehavior,
    state: StateId,
    scenario: Scenario,
    c: CriticalityFunction,
    *,
    top_k: int = DEFAULT_TOP_K,
    node_limit: int = None,
    zero_delay_limit: int = None,
) -> RiskReport:
    """Aggregate risk of the language rooted at ``state`` instead of the
    model's own initial state."""
    kwargs = {}
    if node_limit is not None:
        kwargs["node_limit"] = node_limit
    if zero_delay_limit is not None:
        kwargs["zero_delay_limit"] = zero_delay_limit
    language = build_tree(behavior, state, scenario, **kwargs)
    return aggregate_risk(language, c, top_k=top_k)


def total_probability(language: Language) -> Fraction:
    """Exact sum of all path probabilities; always 1 for a finite tree."""
    total = Fraction(0)
    stack = [language.root]
    while stack:
        node = stack.pop()
        if node.is_leaf:
            total += node.prob
        else:
            stack.extend(edge.child for edge in node.edges)
    return total
