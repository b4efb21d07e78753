"""Compilation of a tabular model into flat sampling tables.

Exact rational times are rescaled to integer ticks over the least common
denominator, so the sampling loop needs only integer compares to stay
exact about when lifetimes expire and occasions fire.  Probabilities
become cumulative float thresholds computed from exact partial sums
(each threshold is the correctly rounded value of the exact prefix sum,
so both executor lanes select identically).

Returns ``None`` whenever the model cannot be flattened (non-tabular
behavior, no per-state linear criticality, or tick overflow); the caller
then samples through the generic object-level walker instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional

import numpy as np

from ..model import NodeRole, Scenario, TabularBehavior
from ..rational import is_infinite

_TICK_LIMIT = 1 << 62


@dataclass
class SamplingPlan:
    """Flat tables consumed by the sampling executors."""

    state_ids: list
    initial: int
    horizon_ticks: int
    tick_len: float  # float(1/denominator), one tick in model time units
    sigma_ticks: np.ndarray  # int64, -1 marks a passive state
    chance_only: np.ndarray  # uint8, 0 marks attacker/defender states
    rate: np.ndarray  # float64 criticality rate per state
    terminal: np.ndarray  # float64 terminal lump sum per state
    # internal distributions, CSR over states
    int_off: np.ndarray  # int32, len n_states + 1
    int_target: np.ndarray  # int32
    int_cum: np.ndarray  # float64 cumulative thresholds
    # occasions: alternatives CSR, cumulative alternative thresholds
    occ_ticks: np.ndarray  # int64
    alt_off: np.ndarray  # int32, len n_occasions + 1
    alt_cum: np.ndarray  # float64
    # reaction of each (global alternative, state): slot into ext CSR or -1
    react: np.ndarray  # int32, shape (n_alts_total * n_states,)
    ext_off: np.ndarray  # int32, len n_slots + 1
    ext_target: np.ndarray  # int32
    ext_cum: np.ndarray  # float64

    _lists: Optional[dict] = None

    def as_lists(self) -> dict:
        """Plain-list mirror of the arrays for the pure-Python executor."""
        if self._lists is None:
            self._lists = {
                name: getattr(self, name).tolist()
                for name in (
                    "sigma_ticks",
                    "chance_only",
                    "rate",
                    "terminal",
                    "int_off",
                    "int_target",
                    "int_cum",
                    "occ_ticks",
                    "alt_off",
                    "alt_cum",
                    "react",
                    "ext_off",
                    "ext_target",
                    "ext_cum",
                )
            }
        return self._lists


def _cumulative(probs) -> list:
    acc = Fraction(0)
    out = []
    for p in probs:
        acc += p
        out.append(float(acc))
    return out


def build_plan(behavior, initial, scenario: Scenario, per_state_linear) -> Optional[SamplingPlan]:
    if not isinstance(behavior, TabularBehavior) or per_state_linear is None:
        return None
    model = behavior.model
    state_ids = list(model.states)
    index = {sid: i for i, sid in enumerate(state_ids)}
    if initial not in index:
        return None
    if any(sid not in per_state_linear for sid in state_ids):
        return None

    denom = scenario.horizon.denominator
    for spec in model.states.values():
        if not is_infinite(spec.sigma):
            denom = lcm(denom, spec.sigma.denominator)
    for occ in scenario.occasions:
        denom = lcm(denom, occ.at.denominator)

    def ticks(value: Fraction) -> int:
        return int(value * denom)

    horizon_ticks = ticks(scenario.horizon)
    if denom >= _TICK_LIMIT or horizon_ticks >= _TICK_LIMIT:
        return None

    n = len(state_ids)
    sigma_ticks = np.full(n, -1, dtype=np.int64)
    chance_only = np.zeros(n, dtype=np.uint8)
    rate = np.zeros(n, dtype=np.float64)
    terminal = np.zeros(n, dtype=np.float64)
    for sid, spec in model.states.items():
        i = index[sid]
        if not is_infinite(spec.sigma):
            value = ticks(spec.sigma)
            if value >= _TICK_LIMIT:
                return None
            sigma_ticks[i] = value
        chance_only[i] = 1 if spec.role is NodeRole.CHANCE else 0
        rate[i], terminal[i] = per_state_linear[sid]

    int_off = [0]
    int_target: list = []
    int_cum: list = []
    for sid in state_ids:
        dist = model.internal.get(sid)
        if dist is not None:
            int_target.extend(index[t] for t, _ in dist.entries)
            int_cum.extend(_cumulative(p for _, p in dist.entries))
        int_off.append(len(int_target))

    # external reaction slots, deduplicated per (state, event set)
    slots: dict = {}
    ext_off = [0]
    ext_target: list = []
    ext_cum: list = []

    def slot_for(sid, events) -> int:
        key = (sid, events)
        if key in slots:
            return slots[key]
        dist = model.external.get(key)
        if dist is None:
            slots[key] = -1
            return -1
        ext_target.extend(index[t] for t, _ in dist.entries)
        ext_cum.extend(_cumulative(p for _, p in dist.entries))
        ext_off.append(len(ext_target))
        slots[key] = len(ext_off) - 2
        return slots[key]

    occ_ticks: list = []
    alt_off = [0]
    alt_cum: list = []
    react: list = []
    for occ in scenario.occasions:
        occ_ticks.append(ticks(occ.at))
        alt_cum.extend(_cumulative(p for _, p in occ.alternatives))
        for events, _ in occ.alternatives:
            if events:
                react.extend(slot_for(sid, events) for sid in state_ids)
            else:
                react.extend([-1] * n)
        alt_off.append(alt_off[-1] + len(occ.alternatives))

    return SamplingPlan(
        state_ids=state_ids,
        initial=index[initial],
        horizon_ticks=horizon_ticks,
        tick_len=float(Fraction(1, denom)),
        sigma_ticks=sigma_ticks,
        chance_only=chance_only,
        rate=rate,
        terminal=terminal,
        int_off=np.asarray(int_off, dtype=np.int32),
        int_target=np.asarray(int_target, dtype=np.int32),
        int_cum=np.asarray(int_cum, dtype=np.float64),
        occ_ticks=np.asarray(occ_ticks, dtype=np.int64),
        alt_off=np.asarray(alt_off, dtype=np.int32),
        alt_cum=np.asarray(alt_cum, dtype=np.float64),
        react=np.asarray(react, dtype=np.int32),
        ext_off=np.asarray(ext_off, dtype=np.int32),
        ext_target=np.asarray(ext_target, dtype=np.int32),
        ext_cum=np.asarray(ext_cum, dtype=np.float64),
    )
