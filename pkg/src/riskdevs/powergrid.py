"""Cascading-failure model of a power grid with an attack surface.

The grid is a combinatorial network: nodes produce or consume power,
undirected transmission edges carry it, and demand is routed greedily
over surviving edges (shortest path by hop count, preferring routes
that keep the worst load/capacity ratio low, then lexicographic edge
order).  There is deliberately no electrical physics here: overload is
allowed and punished probabilistically, because a loaded edge's chance
of failing in the next time cycle grows once its load exceeds capacity.

An information network overlays the grid.  Each info edge, when
compromised, lets an attacker switch one power edge off.  Compiled
models come in two flavors: stochastic (compromises fire as scheduled
chance events with their own probabilities) and adversarial (an
attacker state chooses the kill, and defender states choose among
equally good reroutings).

Compilation produces a programmatic behavior whose states are reachable
grid configurations; each cycle every risky surviving edge fails
independently, giving a product-measure branching over failure subsets.
Unserved consumers accrue criticality per unit outage time; correlation
groups multiply a path's criticality when a whole group is unserved at
once.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .errors import (
    GridSpecError,
    ModeMismatchError,
    NonpositiveCapacityError,
    ParseError,
    UnknownStateError,
)
from .model import (
    EventSet,
    ModelBehavior,
    NodeRole,
    ScheduledOccasion,
    Scenario,
    StateId,
    TransitionDistribution,
)
from .rational import Duration, is_infinite, parse_probability, parse_real
from .risk import MODE_EXACT, CriticalityFunction, RiskReport
from .tree import Language

STOCHASTIC = "stochastic"
ADVERSARIAL = "adversarial"

ATTACK_WINDOW = "attack-window"

DEFAULT_PRUNE_FLOOR = Fraction(1, 10**12)
MAX_ROUTING_PROFILES = 8
MAX_SHORTEST_PATHS = 512


@dataclass(frozen=True)
class GridNode:
    id: str
    balance: Fraction  # > 0 produces, < 0 consumes
    criticality_rate: float = 0.0
    group: Optional[str] = None


@dataclass(frozen=True)
class PowerEdge:
    id: str
    a: str
    b: str
    capacity: Fraction
    p_base: Fraction
    k: Fraction  # failure-probability slope per unit of relative overload


@dataclass(frozen=True)
class InfoEdge:
    id: str
    a: str
    b: str
    p_f: Fraction
    kills: str  # power edge the attacker can switch off


@dataclass(frozen=True)
class CycleParams:
    cycle_length: Fraction

    def __post_init__(self):
        if is_infinite(self.cycle_length) or self.cycle_length <= 0:
            raise GridSpecError("cycle_length must be finite and > 0")


@dataclass(frozen=True)
class GridSpec:
    nodes: dict  # id -> GridNode
    power_edges: dict  # id -> PowerEdge
    info_edges: dict  # id -> InfoEdge
    cycle_length: Fraction
    group_factors: dict  # group label -> float multiplier

    def __post_init__(self):
        for edge in self.power_edges.values():
            if edge.a not in self.nodes or edge.b not in self.nodes:
                raise GridSpecError(f"power edge {edge.id!r} references unknown node")
            if edge.capacity <= 0:
                raise GridSpecError(f"power edge {edge.id!r} needs capacity > 0")
            if edge.k < 0:
                raise GridSpecError(f"power edge {edge.id!r} needs slope k >= 0")
        for info in self.info_edges.values():
            if info.a not in self.nodes or info.b not in self.nodes:
                raise GridSpecError(f"info edge {info.id!r} references unknown node")
            if info.kills not in self.power_edges:
                raise GridSpecError(
                    f"info edge {info.id!r} kills unknown power edge {info.kills!r}"
                )
        groups = {n.group for n in self.nodes.values() if n.group is not None}
        missing = groups - set(self.group_factors)
        if missing:
            raise GridSpecError(f"groups without a declared factor: {sorted(missing)}")
        CycleParams(self.cycle_length)

    def group_members(self) -> dict:
        members: dict = {}
        for node in self.nodes.values():
            if node.group is not None:
                members.setdefault(node.group, set()).add(node.id)
        return {g: frozenset(ms) for g, ms in sorted(members.items())}


@dataclass(frozen=True)
class GridState:
    """A solved grid configuration: what failed, what flows, who is served.

    ``loads`` accumulates routed demand magnitudes (what stresses an
    edge); ``flows`` is the signed net transfer, positive in the edge's
    declared from->to direction (what conservation laws see).
    """

    failed_power_edges: frozenset
    compromised_info_edges: frozenset
    loads: dict  # power edge id -> Fraction
    flows: dict  # power edge id -> signed Fraction
    served: dict  # node id -> bool

    def unserved(self) -> frozenset:
        return frozenset(n for n, ok in self.served.items() if not ok)

    def node_balance(self, spec: "GridSpec", node: str) -> Fraction:
        """Net inflow at ``node`` under the solved flows (negative: outflow)."""
        total = Fraction(0)
        for eid, flow in self.flows.items():
            edge = spec.power_edges[eid]
            if edge.b == node:
                total += flow
            if edge.a == node:
                total -= flow
        return total


def load_grid(source) -> GridSpec:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParseError("top-level JSON value must be an object")

    nodes: dict = {}
    for i, raw in enumerate(doc.get("nodes", [])):
        where = f"nodes[{i}]"
        nid = raw.get("id")
        if not isinstance(nid, str):
            raise ParseError("node id must be a string", path=where)
        if nid in nodes:
            raise GridSpecError(f"duplicate node id {nid!r}", path=where)
        nodes[nid] = GridNode(
            id=nid,
            balance=parse_real(raw.get("balance", 0), path=f"{where}.balance"),
            criticality_rate=float(
                parse_real(raw.get("criticality_rate", 0), path=f"{where}.criticality_rate")
            ),
            group=raw.get("group"),
        )

    power: dict = {}
    for i, raw in enumerate(doc.get("power_edges", [])):
        where = f"power_edges[{i}]"
        eid = raw.get("id")
        if not isinstance(eid, str):
            raise ParseError("edge id must be a string", path=where)
        if eid in power:
            raise GridSpecError(f"duplicate power edge id {eid!r}", path=where)
        power[eid] = PowerEdge(
            id=eid,
            a=raw.get("from"),
            b=raw.get("to"),
            capacity=parse_real(raw.get("capacity", 0), path=f"{where}.capacity"),
            p_base=parse_probability(raw.get("p_base", 0), path=f"{where}.p_base"),
            k=parse_real(raw.get("k", 0), path=f"{where}.k"),
        )

    info: dict = {}
    for i, raw in enumerate(doc.get("info_edges", [])):
        where = f"info_edges[{i}]"
        fid = raw.get("id")
        if not isinstance(fid, str):
            raise ParseError("edge id must be a string", path=where)
        if fid in info:
            raise GridSpecError(f"duplicate info edge id {fid!r}", path=where)
        info[fid] = InfoEdge(
            id=fid,
            a=raw.get("from"),
            b=raw.get("to"),
            p_f=parse_probability(raw.get("p_f", 0), path=f"{where}.p_f"),
            kills=raw.get("kills"),
        )

    factors = {}
    for label, raw in doc.get("group_factors", {}).items():
        factors[label] = float(parse_real(raw, path=f"group_factors[{label}]"))

    cycle = parse_real(doc.get("cycle_length", 1), path="cycle_length")
    return GridSpec(
        nodes=nodes,
        power_edges=power,
        info_edges=info,
        cycle_length=cycle,
        group_factors=factors,
    )


def failure_probability(
    load: Fraction, capacity: Fraction, p_base: Fraction, k: Fraction
) -> Fraction:
    """Chance an edge fails in the next cycle, given its current load.

    Base probability below and at capacity; above it, a linear penalty in
    the relative overload, clamped to 1.  Monotone non-decreasing in load.
    """
    if capacity <= 0:
        raise NonpositiveCapacityError(f"capacity must be > 0, got {capacity}")
    if load <= capacity:
        return p_base
    p = p_base + k * (Fraction(load) / Fraction(capacity) - 1)
    return min(p, Fraction(1))


# ---------------------------------------------------------------------------
# Flow solving


def _adjacency(spec: GridSpec, failed: frozenset) -> dict:
    adj: dict = {n: [] for n in spec.nodes}
    for edge in spec.power_edges.values():
        if edge.id in failed:
            continue
        adj[edge.a].append((edge.b, edge.id))
        adj[edge.b].append((edge.a, edge.id))
    for neighbors in adj.values():
        neighbors.sort(key=lambda pair: pair[1])  # lexicographic edge order
    return adj


def _shortest_paths(adj: dict, sources: list, target: str) -> list:
    """All hop-minimal edge-id paths from any source to ``target``,
    in lexicographic edge-sequence order, capped for safety."""
    dist = {s: 0 for s in sources}
    frontier = deque(sources)
    while frontier:
        node = frontier.popleft()
        for neighbor, _ in adj[node]:
            if neighbor not in dist:
                dist[neighbor] = dist[node] + 1
                frontier.append(neighbor)
    if target not in dist:
        return []

    paths: list = []

    def grow(node, acc):
        if len(paths) >= MAX_SHORTEST_PATHS:
            return
        if dist[node] == 0:
            paths.append(tuple(reversed(acc)))
            return
        for neighbor, eid in adj[node]:
            if dist.get(neighbor) == dist[node] - 1:
                acc.append(eid)
                grow(neighbor, acc)
                acc.pop()

    grow(target, [])
    paths.sort()
    return paths


def _route_candidates(spec: GridSpec, adj, sources, consumer, demand, loads) -> list:
    """Best routes for one demand: hop-minimal, then smallest resulting
    max load ratio; returns every tied candidate in lexicographic order."""
    paths = _shortest_paths(adj, sources, consumer)
    if not paths:
        return []
    scored = []
    for path in paths:
        worst = max(
            (loads[eid] + demand) / spec.power_edges[eid].capacity for eid in path
        )
        scored.append((worst, path))
    best = min(w for w, _ in scored)
    return [path for w, path in scored if w == best]


def _solve(spec: GridSpec, failed: frozenset, choices: tuple = ()) -> tuple:
    """Route all demands; ``choices`` forces candidate indexes in consumer
    order.  Returns (loads, flows, served, per-consumer candidate counts)."""
    adj = _adjacency(spec, failed)
    producers = sorted(n.id for n in spec.nodes.values() if n.balance > 0)
    loads = {eid: Fraction(0) for eid in spec.power_edges}
    flows = {eid: Fraction(0) for eid in spec.power_edges}
    served = {}
    tie_counts = []
    consumer_index = 0
    for nid in sorted(spec.nodes):
        node = spec.nodes[nid]
        if node.balance >= 0:
            served[nid] = True
            continue
        demand = -node.balance
        candidates = _route_candidates(spec, adj, producers, nid, demand, loads)
        if not candidates:
            served[nid] = False
            tie_counts.append(1)
            consumer_index += 1
            continue
        pick = 0
        if consumer_index < len(choices):
            pick = choices[consumer_index]
        path = candidates[min(pick, len(candidates) - 1)]
        current = nid  # orient the path by walking back from the consumer
        for eid in reversed(path):
            edge = spec.power_edges[eid]
            upstream = edge.a if edge.b == current else edge.b
            flows[eid] += demand if edge.b == current else -demand
            loads[eid] += demand
            current = upstream
        served[nid] = True
        tie_counts.append(len(candidates))
        consumer_index += 1
    return loads, flows, served, tuple(tie_counts)


def solve_flow(
    spec: GridSpec,
    failed_power_edges=frozenset(),
    compromised_info_edges: frozenset = frozenset(),
) -> GridState:
    """Deterministically route every demand over the surviving edges.

    Accepts either a set of failed power edges or a previous GridState
    (whose failure and compromise sets are re-solved from scratch)."""
    if isinstance(failed_power_edges, GridState):
        compromised_info_edges = failed_power_edges.compromised_info_edges
        failed_power_edges = failed_power_edges.failed_power_edges
    failed = frozenset(failed_power_edges)
    unknown = failed - set(spec.power_edges)
    if unknown:
        raise GridSpecError(f"unknown power edges {sorted(unknown)}")
    loads, flows, served, _ = _solve(spec, failed)
    return GridState(
        failed_power_edges=failed,
        compromised_info_edges=frozenset(compromised_info_edges),
        loads=loads,
        flows=flows,
        served=served,
    )


def _routing_profiles(spec: GridSpec, failed: frozenset) -> list:
    """Distinct equal-cost routings as (loads, served) pairs, profile 0
    being the default greedy pick; capped at MAX_ROUTING_PROFILES."""
    profiles = []
    seen = set()
    pending = deque([()])
    while pending and len(profiles) < MAX_ROUTING_PROFILES:
        choices = pending.popleft()
        loads, flows, served, tie_counts = _solve(spec, failed, choices)
        key = (tuple(sorted(loads.items())), tuple(sorted(served.items())))
        if key not in seen:
            seen.add(key)
            profiles.append((loads, flows, served))
        # branch on the first consumer with remaining untried alternatives
        for i, count in enumerate(tie_counts):
            if i >= len(choices) and count > 1:
                for alternative in range(1, count):
                    pending.append(tuple(choices) + (0,) * (i - len(choices)) + (alternative,))
                break
    return profiles


# ---------------------------------------------------------------------------
# Compilation into a behavior


class GridBehavior(ModelBehavior):
    """Programmatic model whose states are reachable grid configurations.

    Operational states last one cycle and roll independent edge failures;
    zero-lifetime choice states host attacker kills and defender
    rerouting decisions in adversarial mode.  States are materialized on
    demand and cached; the cache is write-once per key, so concurrent
    readers at worst recompute identical values.
    """

    def __init__(self, spec: GridSpec, params: CycleParams, attack_mode: str,
                 prune_floor: Fraction = DEFAULT_PRUNE_FLOOR):
        if attack_mode not in (STOCHASTIC, ADVERSARIAL):
            raise GridSpecError(f"unknown attack mode {attack_mode!r}")
        self.spec = spec
        self.params = params
        self.attack_mode = attack_mode
        self.prune_floor = prune_floor
        self.pruned_mass_max = Fraction(0)
        self._profiles_cache: dict = {}
        self._states: dict = {}  # state id -> descriptor tuple
        self._internal_cache: dict = {}
        self._rate_cache: dict = {}
        self._initial = self._successor_id(frozenset())

    # -- state bookkeeping

    def _profiles(self, failed: frozenset) -> list:
        if failed not in self._profiles_cache:
            self._profiles_cache[failed] = _routing_profiles(self.spec, failed)
        return self._profiles_cache[failed]

    @staticmethod
    def _fmt(failed: frozenset) -> str:
        return ",".join(sorted(failed))

    def _op_id(self, failed: frozenset, rid: int) -> StateId:
        sid = f"grid[{self._fmt(failed)}]r{rid}"
        self._states.setdefault(sid, ("op", failed, rid))
        return sid

    def _atk_id(self, failed: frozenset, rid: int) -> StateId:
        sid = f"attack[{self._fmt(failed)}]r{rid}"
        self._states.setdefault(sid, ("atk", failed, rid))
        return sid

    def _def_id(self, failed: frozenset) -> StateId:
        sid = f"choose[{self._fmt(failed)}]"
        self._states.setdefault(sid, ("def", failed))
        return sid

    def _successor_id(self, failed: frozenset) -> StateId:
        if self.attack_mode == ADVERSARIAL and len(self._profiles(failed)) > 1:
            return self._def_id(failed)
        return self._op_id(failed, 0)

    def _descriptor(self, state: StateId):
        try:
            return self._states[state]
        except KeyError:
            raise UnknownStateError(f"state {state!r} was never materialized") from None

    # -- views

    def grid_state(self, state: StateId) -> GridState:
        kind, failed, *rest = self._descriptor(state)
        rid = rest[0] if kind in ("op", "atk") else 0
        loads, flows, served = self._profiles(failed)[min(rid, len(self._profiles(failed)) - 1)]
        return GridState(
            failed_power_edges=failed,
            compromised_info_edges=frozenset(),
            loads=dict(loads),
            flows=dict(flows),
            served=dict(served),
        )

    def failed_edges_of(self, state: StateId) -> frozenset:
        return self._descriptor(state)[1]

    def is_operational(self, state: StateId) -> bool:
        return self._descriptor(state)[0] == "op"

    def unserved_of(self, state: StateId) -> frozenset:
        kind, failed, *rest = self._descriptor(state)
        rid = rest[0] if rest else 0
        profiles = self._profiles(failed)
        served = profiles[min(rid, len(profiles) - 1)][2]
        return frozenset(n for n, ok in served.items() if not ok)

    def edge_failure_probabilities(self, state: StateId) -> dict:
        """Per-surviving-edge failure probability in this configuration."""
        kind, failed, *rest = self._descriptor(state)
        rid = rest[0] if rest else 0
        profiles = self._profiles(failed)
        loads = profiles[min(rid, len(profiles) - 1)][0]
        out = {}
        for eid in sorted(self.spec.power_edges):
            if eid in failed:
                continue
            edge = self.spec.power_edges[eid]
            out[eid] = failure_probability(loads[eid], edge.capacity, edge.p_base, edge.k)
        return out

    # -- behavior contract

    @property
    def initial_state(self) -> StateId:
        return self._initial

    def sigma(self, state: StateId) -> Duration:
        kind = self._descriptor(state)[0]
        return self.params.cycle_length if kind == "op" else Fraction(0)

    def role(self, state: StateId) -> NodeRole:
        kind = self._descriptor(state)[0]
        if kind == "atk":
            return NodeRole.ATTACKER
        if kind == "def":
            return NodeRole.DEFENDER
        return NodeRole.CHANCE

    def criticality(self, state: StateId, dwell: Duration) -> float:
        rate = self._rate_cache.get(state)
        if rate is None:
            if self._descriptor(state)[0] != "op":
                rate = 0.0
            else:
                rate = 0.0
                for nid in sorted(self.unserved_of(state)):
                    rate += self.spec.nodes[nid].criticality_rate
            self._rate_cache[state] = rate
        return rate * float(dwell)

    def internal_dist(self, state: StateId) -> TransitionDistribution:
        if state not in self._internal_cache:
            self._internal_cache[state] = self._build_internal(state)
        return self._internal_cache[state]

    def _build_internal(self, state: StateId) -> TransitionDistribution:
        kind, failed, *rest = self._descriptor(state)
        if kind == "def":
            options = [self._op_id(failed, rid) for rid in range(len(self._profiles(failed)))]
            share = Fraction(1, len(options))
            return TransitionDistribution(tuple((o, share) for o in options))
        if kind == "atk":
            rid = rest[0]
            targets = [self._op_id(failed, rid)]  # waive the attack
            for fid in sorted(self.spec.info_edges):
                victim = self.spec.info_edges[fid].kills
                if victim in failed:
                    continue
                target = self._successor_id(failed | {victim})
                if target not in targets:
                    targets.append(target)
            share = Fraction(1, len(targets))
            return TransitionDistribution(tuple((t, share) for t in targets))

        rid = rest[0]
        risky = [
            (eid, p)
            for eid, p in self.edge_failure_probabilities(state).items()
            if p > 0
        ]
        if not risky:
            return TransitionDistribution(((state, Fraction(1)),))
        entries: dict = {}
        pruned = Fraction(0)
        for pattern in itertools.product((False, True), repeat=len(risky)):
            prob = Fraction(1)
            subset = []
            for (eid, p), fails in zip(risky, pattern):
                if fails:
                    prob *= p
                    subset.append(eid)
                else:
                    prob *= 1 - p
            if prob == 0:
                continue
            if prob < self.prune_floor:
                pruned += prob
                continue
            target = state if not subset else self._successor_id(failed | frozenset(subset))
            entries[target] = entries.get(target, Fraction(0)) + prob
        if pruned > self.pruned_mass_max:
            self.pruned_mass_max = pruned
        keep = Fraction(1) - pruned
        return TransitionDistribution(tuple((t, p / keep) for t, p in entries.items()))

    def external_dist(self, state, elapsed, events: EventSet):
        if not events:
            return None
        kind, failed, *rest = self._descriptor(state)
        if kind != "op":
            return None
        rid = rest[0]
        if self.attack_mode == ADVERSARIAL:
            if events == frozenset((ATTACK_WINDOW,)):
                return TransitionDistribution(((self._atk_id(failed, rid), Fraction(1)),))
            return None
        kills = {
            self.spec.info_edges[fid].kills
            for fid in events
            if fid in self.spec.info_edges
        }
        grown = failed | kills
        if grown == failed:
            return None
        return TransitionDistribution(((self._successor_id(grown), Fraction(1)),))


def compile_grid(
    spec: GridSpec,
    params: Optional[CycleParams] = None,
    attack_mode: str = STOCHASTIC,
    *,
    prune_floor: Fraction = DEFAULT_PRUNE_FLOOR,
) -> tuple:
    """(behavior, scenario factory, criticality) for a grid description.

    The scenario factory takes a horizon and optional explicit attack
    instants (defaults to every cycle boundary before the horizon) and
    builds the matching occasion schedule for the chosen attack mode.
    """
    if params is None:
        params = CycleParams(spec.cycle_length)
    behavior = GridBehavior(spec, params, attack_mode, prune_floor=prune_floor)

    def scenario_for(horizon: Fraction, times=None) -> Scenario:
        horizon = Fraction(horizon)
        if times is None:
            times = []
            step = params.cycle_length
            at = step
            while at < horizon:
                times.append(at)
                at += step
        occasions = tuple(
            ScheduledOccasion(at=Fraction(at), alternatives=_attack_alternatives(spec, attack_mode))
            for at in times
        )
        return Scenario(horizon=horizon, occasions=occasions)

    criticality = _grid_criticality(spec, behavior)
    return behavior, scenario_for, criticality


def _attack_alternatives(spec: GridSpec, attack_mode: str) -> tuple:
    if attack_mode == ADVERSARIAL:
        return ((frozenset((ATTACK_WINDOW,)), Fraction(1)),)
    info_ids = sorted(spec.info_edges)
    alternatives = []
    for pattern in itertools.product((False, True), repeat=len(info_ids)):
        prob = Fraction(1)
        chosen = []
        for fid, fire in zip(info_ids, pattern):
            p = spec.info_edges[fid].p_f
            if fire:
                prob *= p
                chosen.append(fid)
            else:
                prob *= 1 - p
        if prob > 0:
            alternatives.append((frozenset(chosen), prob))
    return tuple(alternatives)


def _grid_criticality(spec: GridSpec, behavior: GridBehavior) -> CriticalityFunction:
    groups = spec.group_members()

    def base(effects) -> float:
        total = 0.0
        for state, dwell in effects:
            total += behavior.criticality(state, dwell)
        return total

    if not groups:
        return CriticalityFunction(
            evaluate=base,
            name="grid-additive",
            additive=True,
            per_effect_term=behavior.criticality,
        )

    labels = sorted(groups)

    def evaluate(effects) -> float:
        value = base(effects)
        for label in labels:
            members = groups[label]
            for state, dwell in effects:
                if dwell > 0 and behavior.is_operational(state) and members <= behavior.unserved_of(state):
                    value *= spec.group_factors[label]
                    break
        return value

    return CriticalityFunction(
        evaluate=evaluate,
        name="grid-correlated",
        params=tuple(labels),
        additive=False,
    )


def cascade_depth(report: RiskReport) -> dict:
    """Probability mass of paths by how many follow-up failure steps they
    contain (a step counts when new edges fail while some already had)."""
    if report.mode != MODE_EXACT or report.language is None:
        raise ModeMismatchError("cascade depths need an EXACT report built from a grid model")
    behavior = report.language.behavior
    if not isinstance(behavior, GridBehavior):
        raise ModeMismatchError("report was not produced from a compiled grid model")

    histogram: dict = {}
    stack = [(report.language.root, 0)]
    while stack:
        node, depth = stack.pop()
        if node.is_leaf:
            histogram[depth] = histogram.get(depth, Fraction(0)) + node.prob
            continue
        for edge in node.edges:
            step = depth
            if edge.cause is not None:
                before = behavior.failed_edges_of(edge.cause.source)
                after = behavior.failed_edges_of(edge.cause.target)
                if before and after > before:
                    step += 1
            stack.append((edge.child, step))
    return dict(sorted(histogram.items()))
