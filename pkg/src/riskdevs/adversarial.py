"""Risk evaluation with intelligent deciders in the loop.

States may be annotated as attacker (risk-maximizing) or defender
(risk-minimizing) decision points.  The evaluator walks the evolution
tree bottom-up: chance branchings contribute probability-weighted sums,
decision branchings contribute the best (worst) child and receive the
0/1 transition probabilities of a pure strategy.  With no decision
states this reduces to the plain aggregate; with degenerate chance it is
the classical minimax over leaf criticalities.

At an occasion branching owned by a decider, the decider picks the
event alternative while any stochastic external reaction within the
chosen alternative stays chance-weighted.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import groupby
from typing import Callable, Optional

from .errors import NonAdditiveCriticalityError
from .model import NodeRole
from .rational import format_duration
from .risk import MODE_MINIMAX, CriticalityFunction, RiskReport, effect_sequence
from .tree import BRANCH_OCCASION, Language, PathElement, SimulationPath, TreeNode

UNIFORM = "uniform"  # bound_suite marker: decision treated as fair chance


@dataclass(frozen=True)
class DecisionAssignment:
    """Pure-strategy choice at every decision node of a tree."""

    choices: dict  # TreeNode -> (branching kind, chosen index, label)

    def serialized(self) -> tuple:
        items = []
        for node, (_, _, label) in self.choices.items():
            items.append((_node_trace(node), label))
        items.sort()
        return tuple(items)


@dataclass(frozen=True)
class MinimaxResult:
    total_risk: float
    assignment: DecisionAssignment
    principal_path: Optional[SimulationPath]

    def to_report(self, language: Language, c: CriticalityFunction) -> RiskReport:
        return RiskReport(
            total_risk=self.total_risk,
            horizon=language.horizon,
            mode=MODE_MINIMAX,
            path_count=language.leaf_count,
            top_contributors=(),
            assignment=self.assignment.serialized(),
            metadata=(("criticality", c.name),),
            language=language,
        )


def minimax_risk(
    language: Language,
    c: CriticalityFunction,
    *,
    leaf_attribution: bool = True,
    role_override: Optional[Callable] = None,
) -> MinimaxResult:
    """Tree value with deciders resolved to their optimal pure choices.

    Additive criticality uses the fast recursion over per-effect
    increments.  Other criticality functions are attributed at leaves
    (the full path value is computed per leaf, then folded upward),
    which stays exact because every node sees a unique history; set
    ``leaf_attribution=False`` to forbid that mode.
    """
    additive = c.additive and c.per_effect_term is not None
    if not additive and not leaf_attribution:
        raise NonAdditiveCriticalityError(
            f"criticality {c.name!r} is not additive and leaf attribution is disabled"
        )
    values, choices = _evaluate(language, c, additive, role_override)
    assignment = DecisionAssignment(choices)
    principal = _principal_path(language, choices)
    return MinimaxResult(
        total_risk=values[language.root],
        assignment=assignment,
        principal_path=principal,
    )


def bound_suite(language: Language, c: CriticalityFunction) -> tuple:
    """(all-defender, all-uniform-chance, all-attacker) bracket values.

    Every decision state is re-interpreted the same way in each run; the
    mixed-role minimax value always lies inside the bracket.
    """

    def overriding(role):
        def role_of(base_role):
            return role if base_role is not NodeRole.CHANCE else NodeRole.CHANCE

        return role_of

    low = minimax_risk(language, c, role_override=overriding(NodeRole.DEFENDER)).total_risk
    mid = minimax_risk(language, c, role_override=overriding(UNIFORM)).total_risk
    high = minimax_risk(language, c, role_override=overriding(NodeRole.ATTACKER)).total_risk
    return (low, mid, high)


def evaluate_assignment(language: Language, c: CriticalityFunction, assignment: DecisionAssignment) -> float:
    """Total risk with decision probabilities replaced by the assignment's
    0/1 choices; chance branchings keep their model probabilities."""
    total = 0.0
    stack = [(language.root, Fraction(1), [])]
    while stack:
        node, prob, elements = stack.pop()
        if node.is_leaf:
            effects = tuple((el.state, el.lifetime) for el in elements)
            effects += ((elements[-1].state if elements else language.initial, node.residual),)
            total += float(prob) * c.evaluate(effects)
            continue
        choice = assignment.choices.get(node)
        for position, edge in reversed(list(enumerate(node.edges))):
            if choice is not None:
                kind, index, _ = choice
                if kind == "internal" and position != index:
                    continue
                if kind == "occasion" and edge.alt_index != index:
                    continue
                factor = Fraction(1) if kind == "internal" else edge.cond
            else:
                factor = edge.probability
            extended = elements
            if edge.cause is not None:
                extended = elements + [
                    PathElement(edge.cause.target, edge.cause.lifetime, edge.cause.events)
                ]
            stack.append((edge.child, prob * factor, extended))
    return total


# ---------------------------------------------------------------------------
# Evaluation internals


def _evaluate(language, c, additive, role_override):
    behavior = language.behavior
    order = _postorder(language.root)
    values: dict = {}
    choices: dict = {}
    leaf_effects = None if additive else _leaf_effect_sequences(language)

    for node in order:
        if node.is_leaf:
            if additive:
                values[node] = c.per_effect_term(node.state, node.residual)
            else:
                values[node] = c.evaluate(leaf_effects[node])
            continue

        role = behavior.role(node.state)
        if role_override is not None:
            role = role_override(role)

        def contribution(edge) -> float:
            value = values[edge.child]
            if additive and edge.cause is not None:
                value = value + c.per_effect_term(edge.cause.target, edge.cause.lifetime)
            return value

        if role is NodeRole.CHANCE:
            values[node] = sum(float(e.probability) * contribution(e) for e in node.edges)
            continue

        if node.branching == BRANCH_OCCASION:
            groups = [
                (alt, tuple(edges))
                for alt, edges in groupby(node.edges, key=lambda e: e.alt_index)
            ]
            scored = [
                (sum(float(e.cond) * contribution(e) for e in edges), alt, edges)
                for alt, edges in groups
            ]
        else:
            scored = [(contribution(edge), i, (edge,)) for i, edge in enumerate(node.edges)]

        if role == UNIFORM:
            values[node] = sum(s for s, _, _ in scored) / len(scored)
            continue

        best = None
        for value, index, edges in scored:
            if best is None:
                best = (value, index, edges)
            elif role is NodeRole.ATTACKER and value > best[0]:
                best = (value, index, edges)
            elif role is NodeRole.DEFENDER and value < best[0]:
                best = (value, index, edges)
            elif value == best[0] and _choice_label(node, index) < _choice_label(node, best[1]):
                best = (value, index, edges)
        values[node] = best[0]
        choices[node] = (node.branching, best[1], _choice_label(node, best[1]))
    return values, choices


def _choice_label(node, index) -> str:
    if node.branching == BRANCH_OCCASION:
        for edge in node.edges:
            if edge.alt_index == index:
                return "+".join(sorted(edge.events)) if edge.events else "(none)"
        raise AssertionError("alternative index not present")
    edge = node.edges[index]
    return edge.cause.target


def _postorder(root) -> list:
    order = []
    stack = [root]
    while stack:
        node = stack.pop()
        order.append(node)
        stack.extend(edge.child for edge in node.edges)
    order.reverse()
    return order


def _leaf_effect_sequences(language) -> dict:
    out = {}
    stack = [(language.root, [])]
    while stack:
        node, effects = stack.pop()
        if node.is_leaf:
            final = effects[-1][0] if effects else language.initial
            out[node] = tuple(effects) + ((final, node.residual),)
            continue
        for edge in node.edges:
            if edge.cause is None:
                stack.append((edge.child, effects))
            else:
                stack.append((edge.child, effects + [(edge.cause.target, edge.cause.lifetime)]))
    return out


def _principal_path(language, choices) -> Optional[SimulationPath]:
    node = language.root
    elements = []
    while not node.is_leaf:
        choice = choices.get(node)
        if choice is None:
            candidates = node.edges
        else:
            kind, index, _ = choice
            if kind == "internal":
                candidates = (node.edges[index],)
            else:
                candidates = tuple(e for e in node.edges if e.alt_index == index)
        if len(candidates) != 1:
            return None  # residual chance keeps the play non-deterministic
        edge = candidates[0]
        if edge.cause is not None:
            elements.append(PathElement(edge.cause.target, edge.cause.lifetime, edge.cause.events))
        node = edge.child
    return SimulationPath(
        initial=language.initial,
        elements=tuple(elements),
        residual=node.residual,
        horizon=language.horizon,
        _leaf=node,
    )


def _node_trace(node: TreeNode) -> str:
    parts = []
    current = node
    while current is not None:
        parts.append(f"{current.state}@{format_duration(current.at)}")
        current = current.parent
    return "/".join(reversed(parts))
