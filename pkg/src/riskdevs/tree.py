"""Exhaustive enumeration of system evolutions up to a time horizon.

``build_tree`` unrolls a model against an event schedule into the finite
tree of every possible evolution.  Each root-to-leaf walk is one
simulation path; lifetimes along a path, including the final residual
dwell, sum exactly to the horizon (rational arithmetic, no rounding).

Branchings come in two kinds:

* internal: a state's lifetime expires and its successor distribution
  fans out;
* occasion: a scheduled instant arrives and its event alternatives fan
  out, each alternative either triggering an external transition or
  passing through a state that ignores it (the state dwells on, elapsed
  time advanced; no transition is recorded).

When a lifetime expiry and an occasion coincide, the occasion is
processed first: external transitions are allowed up to and including
the full lifetime.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional

from .errors import (
    ExplosionLimitError,
    IncompatibleEndpointsError,
    PathNotInLanguageError,
    PrefixNotFoundError,
    SplitIndexError,
    ZeroDelayCycleError,
)
from .model import EMPTY_EVENTS, EventSet, ModelBehavior, Scenario, StateId, TotalState
from .rational import INFINITY, format_duration, format_fraction, is_infinite

DEFAULT_NODE_LIMIT = 5_000_000
DEFAULT_ZERO_DELAY_LIMIT = 1000

BRANCH_INTERNAL = "internal"
BRANCH_OCCASION = "occasion"


@dataclass(frozen=True, slots=True)
class PathElement:
    """One recorded transition: the state entered, the time spent in the
    predecessor state before the transition, and the triggering events
    (empty set means the predecessor's lifetime expired)."""

    state: StateId
    lifetime: Fraction
    events: EventSet = EMPTY_EVENTS


@dataclass(frozen=True, slots=True)
class Cause:
    """A single state transition with its trigger; carries probability."""

    source: StateId
    lifetime: Fraction
    events: EventSet
    target: StateId


@dataclass(frozen=True)
class SimulationPath:
    """One complete evolution up to the horizon.

    ``residual`` is the time spent in the final state after the last
    transition, so lifetimes plus residual always equal the horizon.
    """

    initial: StateId
    elements: tuple  # tuple[PathElement, ...]
    residual: Fraction
    horizon: Fraction
    _leaf: Optional["TreeNode"] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        total = sum((e.lifetime for e in self.elements), Fraction(0)) + self.residual
        if total != self.horizon:
            raise ValueError(
                f"lifetimes + residual = {total} but horizon = {self.horizon}"
            )

    @property
    def final_state(self) -> StateId:
        return self.elements[-1].state if self.elements else self.initial

    def causes(self) -> list:
        """The transition sequence as Cause records."""
        out = []
        prev = self.initial
        for el in self.elements:
            out.append(Cause(prev, el.lifetime, el.events, el.state))
            prev = el.state
        return out


class TreeNode:
    """A situation in the evolution tree: a state at an absolute time.

    ``entered_at`` is when the state was entered; ``at`` is when this
    node was created (later than ``entered_at`` only after an occasion
    passed without triggering a transition).
    """

    __slots__ = (
        "state",
        "entered_at",
        "at",
        "occ_index",
        "parent",
        "incoming",
        "edges",
        "branching",
        "residual",
        "prob",
        "_zero_run",
    )

    def __init__(self, state, entered_at, at, occ_index, parent, incoming, prob, zero_run):
        self.state = state
        self.entered_at = entered_at
        self.at = at
        self.occ_index = occ_index
        self.parent = parent
        self.incoming = incoming
        self.edges: tuple = ()
        self.branching: Optional[str] = None
        self.residual: Optional[Fraction] = None
        self.prob = prob  # exact probability of reaching this node
        self._zero_run = zero_run

    @property
    def total(self) -> TotalState:
        return TotalState(self.state, self.at - self.entered_at)

    @property
    def is_leaf(self) -> bool:
        return self.residual is not None

    def __repr__(self):
        return f"TreeNode({self.state!r} at {self.at}, p={self.prob})"


@dataclass(frozen=True, slots=True)
class Edge:
    """A branch taken out of a node.

    ``cause`` is None when an occasion alternative passed through a state
    that ignores it: probability still applies but no transition happened.
    ``cond`` is the probability conditional on the occasion alternative
    (equal to ``probability`` for internal branches).
    """

    cause: Optional[Cause]
    events: EventSet
    probability: Fraction
    cond: Fraction
    alt_index: Optional[int]
    child: TreeNode


class Language:
    """The set of all simulation paths of a model within a horizon."""

    def __init__(self, root, behavior, scenario, initial, node_count, leaf_count, has_pass_edges):
        self.root = root
        self.behavior = behavior
        self.scenario = scenario
        self.initial = initial
        self.horizon = scenario.horizon
        self.node_count = node_count
        self.leaf_count = leaf_count
        self.has_pass_edges = has_pass_edges

    @property
    def paths(self) -> Iterator[SimulationPath]:
        return enumerate_paths(self)

    def __repr__(self):
        return (
            f"Language({self.initial!r}, horizon={self.horizon}, "
            f"nodes={self.node_count}, paths={self.leaf_count})"
        )


def build_tree(
    behavior: ModelBehavior,
    initial: StateId,
    scenario: Scenario,
    *,
    node_limit: int = DEFAULT_NODE_LIMIT,
    zero_delay_limit: int = DEFAULT_ZERO_DELAY_LIMIT,
) -> Language:
    """Unroll every possible evolution of ``behavior`` from ``initial``."""
    horizon = scenario.horizon
    occasions = scenario.occasions
    behavior.sigma(initial)  # fail fast on unknown states

    zero = Fraction(0)
    root = TreeNode(initial, zero, zero, 0, None, None, Fraction(1), 0)
    node_count = 1
    leaf_count = 0
    has_pass_edges = False

    pending = [root]
    while pending:
        node = pending.pop()
        state = node.state
        sigma = behavior.sigma(state)
        expiry = INFINITY if is_infinite(sigma) else node.entered_at + sigma
        occ = occasions[node.occ_index] if node.occ_index < len(occasions) else None

        edges = []
        if occ is not None and occ.at <= horizon and occ.at <= expiry:
            node.branching = BRANCH_OCCASION
            elapsed = occ.at - node.entered_at
            for alt_index, (events, alt_p) in enumerate(occ.alternatives):
                dist = behavior.external_dist(state, elapsed, events) if events else None
                if dist is None:
                    child = _child(node, state, node.entered_at, occ.at, node.occ_index + 1, alt_p)
                    edges.append(Edge(None, events, alt_p, Fraction(1), alt_index, child))
                    has_pass_edges = True
                else:
                    cause_base = (state, elapsed, events)
                    for target, p in dist.entries:
                        child = _child(node, target, occ.at, occ.at, node.occ_index + 1, alt_p * p)
                        edges.append(
                            Edge(Cause(*cause_base, target), events, alt_p * p, p, alt_index, child)
                        )
        elif expiry <= horizon:
            node.branching = BRANCH_INTERNAL
            dist = behavior.internal_dist(state)
            for target, p in dist.entries:
                child = _child(node, target, expiry, expiry, node.occ_index, p)
                edges.append(
                    Edge(Cause(state, sigma, EMPTY_EVENTS, target), EMPTY_EVENTS, p, p, None, child)
                )
        else:
            node.residual = horizon - node.entered_at
            leaf_count += 1
            continue

        for edge in edges:
            child = edge.child
            if child.at == node.at:
                child._zero_run = node._zero_run + 1
                if child._zero_run > zero_delay_limit:
                    raise ZeroDelayCycleError(
                        f"{zero_delay_limit} consecutive steps without time advancing "
                        f"(around state {state!r} at t={node.at})"
                    )
            node_count += 1
        if node_count > node_limit:
            raise ExplosionLimitError(
                f"evolution tree exceeds {node_limit} nodes; "
                "raise the limit or switch to Monte Carlo estimation"
            )
        node.edges = tuple(edges)
        # reversed so that depth-first expansion visits children in order
        pending.extend(edge.child for edge in reversed(edges))

    return Language(root, behavior, scenario, initial, node_count, leaf_count, has_pass_edges)


def _child(parent, state, entered_at, at, occ_index, p):
    return TreeNode(state, entered_at, at, occ_index, parent, None, parent.prob * p, 0)


def enumerate_paths(language: Language) -> Iterator[SimulationPath]:
    """Yield every root-to-leaf path once, depth-first in declared order."""
    elements: list = []
    stack = [(language.root, -1, False)]  # (node, next edge index, pushed element)
    while stack:
        node, idx, pushed = stack.pop()
        if idx == -1:
            if node.is_leaf:
                yield SimulationPath(
                    initial=language.initial,
                    elements=tuple(elements),
                    residual=node.residual,
                    horizon=language.horizon,
                    _leaf=node,
                )
                if pushed:
                    elements.pop()
                continue
            idx = 0
        if idx >= len(node.edges):
            if pushed:
                elements.pop()
            continue
        edge = node.edges[idx]
        stack.append((node, idx + 1, pushed))
        if edge.cause is not None:
            elements.append(PathElement(edge.cause.target, edge.cause.lifetime, edge.cause.events))
            stack.append((edge.child, -1, True))
        else:
            stack.append((edge.child, -1, False))


def successors(node: TreeNode) -> list:
    """Nodes reachable from ``node`` by one branch; empty for leaves."""
    return [edge.child for edge in node.edges]


def concat(first: SimulationPath, second: SimulationPath) -> SimulationPath:
    """Join two paths; the second must start where the first ended."""
    if first.residual != 0:
        raise IncompatibleEndpointsError(
            f"first path has residual dwell {first.residual}, expected 0"
        )
    if second.initial != first.final_state:
        raise IncompatibleEndpointsError(
            f"second path starts in {second.initial!r} but first ends in "
            f"{first.final_state!r}"
        )
    return SimulationPath(
        initial=first.initial,
        elements=first.elements + second.elements,
        residual=second.residual,
        horizon=first.horizon + second.horizon,
    )


def prefix_path(path: SimulationPath, index: int) -> SimulationPath:
    """The sub-evolution up to (excluding) the transition at 1-based ``index``."""
    _check_split_index(path, index)
    head = path.elements[: index - 1]
    consumed = sum((e.lifetime for e in head), Fraction(0))
    return SimulationPath(initial=path.initial, elements=head, residual=Fraction(0), horizon=consumed)


def suffix_path(path: SimulationPath, index: int) -> SimulationPath:
    """The remaining evolution from the transition at 1-based ``index`` on.

    The suffix starts in the state reached just before that transition and
    its horizon is the original horizon minus the time the prefix consumed,
    so ``concat(prefix_path(p, i), suffix_path(p, i)) == p``.
    """
    _check_split_index(path, index)
    head = path.elements[: index - 1]
    consumed = sum((e.lifetime for e in head), Fraction(0))
    start = head[-1].state if head else path.initial
    return SimulationPath(
        initial=start,
        elements=path.elements[index - 1 :],
        residual=path.residual,
        horizon=path.horizon - consumed,
    )


def _check_split_index(path: SimulationPath, index: int) -> None:
    # the trailing residual record counts as one more position
    if not 1 < index <= len(path.elements):
        raise SplitIndexError(
            f"split index must satisfy 1 < index <= {len(path.elements)}, got {index}"
        )


def subset_with_prefix(language: Language, prefix: SimulationPath) -> Iterator[SimulationPath]:
    """Yield exactly the paths of ``language`` that extend ``prefix``."""
    if prefix.initial != language.initial:
        raise PrefixNotFoundError(
            f"prefix starts in {prefix.initial!r}, language in {language.initial!r}"
        )
    anchors = _match_descend(language.root, prefix.elements)
    if not anchors:
        raise PrefixNotFoundError("prefix does not occur in this tree")

    def walk():
        for anchor, elements in anchors:
            yield from _paths_below(language, anchor, elements)

    return walk()


def _match_descend(root, wanted):
    """All (node, elements) pairs where the element sequence ``wanted`` has
    been fully consumed; pass-through edges consume nothing."""
    out = []
    stack = [(root, 0, [])]
    while stack:
        node, pos, elements = stack.pop()
        if pos == len(wanted):
            out.append((node, elements))
            continue
        target = wanted[pos]
        for edge in node.edges:
            if edge.cause is None:
                stack.append((edge.child, pos, elements))
            else:
                el = PathElement(edge.cause.target, edge.cause.lifetime, edge.cause.events)
                if el == target:
                    stack.append((edge.child, pos + 1, elements + [el]))
    out.reverse()  # restore declared-order traversal
    return out


def _paths_below(language, anchor, elements):
    stack = [(anchor, list(elements))]
    while stack:
        node, elems = stack.pop()
        if node.is_leaf:
            yield SimulationPath(
                initial=language.initial,
                elements=tuple(elems),
                residual=node.residual,
                horizon=language.horizon,
                _leaf=node,
            )
            continue
        for edge in reversed(node.edges):
            if edge.cause is None:
                stack.append((edge.child, elems))
            else:
                stack.append(
                    (edge.child, elems + [PathElement(edge.cause.target, edge.cause.lifetime, edge.cause.events)])
                )


def leaf_probability(language: Language, path: SimulationPath) -> Fraction:
    """Exact probability mass of the evolutions matching ``path``.

    A path enumerated from this language resolves through its leaf; a
    structurally equal path built elsewhere is located by matching, and
    when occasion pass-throughs make several leaves observationally
    identical their masses are summed.
    """
    leaf = path._leaf
    if leaf is not None and not language.has_pass_edges:
        root = leaf
        while root.parent is not None:
            root = root.parent
        if root is language.root:
            return leaf.prob
    total = Fraction(0)
    found = False
    for anchor, _ in _match_descend(language.root, path.elements):
        # Pass-through edges below the anchor complete the same record.
        for node in _pass_closure(anchor):
            if node.is_leaf and node.residual == path.residual:
                total += node.prob
                found = True
    if not found:
        raise PathNotInLanguageError("no leaf of the language matches this path")
    return total


def _pass_closure(node):
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        for edge in current.edges:
            if edge.cause is None:
                stack.append(edge.child)


def dump_tree(language: Language) -> str:
    """Line-oriented tree dump: depth, state, elapsed, trigger, probability."""
    lines = []
    stack = [(language.root, 0, "-")]
    while stack:
        node, depth, trigger = stack.pop()
        total = node.total
        lines.append(
            "  ".join(
                (
                    str(depth),
                    node.state,
                    format_duration(total.elapsed),
                    trigger,
                    format_fraction(node.prob),
                )
            )
        )
        for edge in reversed(node.edges):
            if edge.cause is None:
                label = "pass(" + "+".join(sorted(edge.events)) + ")"
            elif edge.events:
                label = "+".join(sorted(edge.events))
            else:
                label = "."
            stack.append((edge.child, depth + 1, label))
    return "\n".join(lines) + "\n"
