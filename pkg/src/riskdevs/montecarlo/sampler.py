"""Pure-Python executor for compiled sampling plans.

This is the fallback twin of the Cython kernel; both walk the same flat
tables, draw from the same splitmix64 stream in the same order, and
accumulate criticality with the same floating-point association, so a
given (plan, stream, count) produces bit-identical results on either
lane.  Keep every arithmetic step in sync with ``_kernel.pyx``.
"""

from __future__ import annotations

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV_2POW53 = 1.1102230246251565e-16

OK = 0
ERR_DECISION = 1
ERR_GUARD = 2


def run_block(plan, stream_state: int, count: int, max_transitions: int):
    """Sample ``count`` paths; returns (criticalities, status, bad_state)."""
    tables = plan.as_lists()
    sigma_ticks = tables["sigma_ticks"]
    chance_only = tables["chance_only"]
    rate = tables["rate"]
    terminal = tables["terminal"]
    int_off = tables["int_off"]
    int_target = tables["int_target"]
    int_cum = tables["int_cum"]
    occ_ticks = tables["occ_ticks"]
    alt_off = tables["alt_off"]
    alt_cum = tables["alt_cum"]
    react = tables["react"]
    ext_off = tables["ext_off"]
    ext_target = tables["ext_target"]
    ext_cum = tables["ext_cum"]

    n_states = len(sigma_ticks)
    n_occ = len(occ_ticks)
    horizon = plan.horizon_ticks
    tick_len = plan.tick_len
    initial = plan.initial

    state = stream_state & _MASK
    out = []

    if not chance_only[initial]:
        return out, ERR_DECISION, initial

    for _ in range(count):
        s = initial
        t_entry = 0
        k = 0
        m = 0
        crit = 0.0
        while True:
            sig = sigma_ticks[s]
            t_occ = occ_ticks[k] if k < n_occ else -1
            if t_occ >= 0 and t_occ <= horizon and (sig < 0 or t_occ <= t_entry + sig):
                # occasion fires first, ties included
                state = (state + _GOLDEN) & _MASK
                z = ((state ^ (state >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
                z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
                u = ((z ^ (z >> 31)) >> 11) * _INV_2POW53
                ga = alt_off[k]
                last = alt_off[k + 1] - 1
                while ga < last and u >= alt_cum[ga]:
                    ga += 1
                slot = react[ga * n_states + s]
                if slot < 0:
                    k += 1
                    continue
                state = (state + _GOLDEN) & _MASK
                z = ((state ^ (state >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
                z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
                u = ((z ^ (z >> 31)) >> 11) * _INV_2POW53
                j = ext_off[slot]
                last = ext_off[slot + 1] - 1
                while j < last and u >= ext_cum[j]:
                    j += 1
                target = ext_target[j]
                dwell = t_occ - t_entry
                crit += rate[target] * (dwell * tick_len)
                if dwell > 0 and dwell == sigma_ticks[target]:
                    crit += terminal[target]
                s = target
                t_entry = t_occ
                k += 1
            elif sig >= 0 and t_entry + sig <= horizon:
                state = (state + _GOLDEN) & _MASK
                z = ((state ^ (state >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
                z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
                u = ((z ^ (z >> 31)) >> 11) * _INV_2POW53
                j = int_off[s]
                last = int_off[s + 1] - 1
                while j < last and u >= int_cum[j]:
                    j += 1
                target = int_target[j]
                crit += rate[target] * (sig * tick_len)
                if sig > 0 and sig == sigma_ticks[target]:
                    crit += terminal[target]
                s = target
                t_entry = t_entry + sig
            else:
                residual = horizon - t_entry
                crit += rate[s] * (residual * tick_len)
                if residual > 0 and residual == sigma_ticks[s]:
                    crit += terminal[s]
                break
            if not chance_only[s]:
                return out, ERR_DECISION, s
            m += 1
            if m > max_transitions:
                return out, ERR_GUARD, s
        out.append(crit)
    return out, OK, -1
