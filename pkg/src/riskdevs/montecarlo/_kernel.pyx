# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled executor for sampling plans.

Twin of ``sampler.run_block``: identical splitmix64 stream, identical
draw order, identical float association (the extension is compiled with
contraction disabled so no FMA sneaks in).  Any change here must be
mirrored in the pure-Python lane.
"""

from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t

import numpy as np

OK = 0
ERR_DECISION = 1
ERR_GUARD = 2

cdef int _OK = 0
cdef int _ERR_DECISION = 1
cdef int _ERR_GUARD = 2

cdef double _INV_2POW53 = 1.1102230246251565e-16
cdef uint64_t _GOLDEN = ((<uint64_t> 0x9E3779B9) << 32) | (<uint64_t> 0x7F4A7C15)
cdef uint64_t _MIX1 = ((<uint64_t> 0xBF58476D) << 32) | (<uint64_t> 0x1CE4E5B9)
cdef uint64_t _MIX2 = ((<uint64_t> 0x94D049BB) << 32) | (<uint64_t> 0x133111EB)


cdef inline double _next_double(uint64_t *state) nogil:
    cdef uint64_t z
    state[0] = state[0] + _GOLDEN
    z = state[0]
    z = (z ^ (z >> 30)) * _MIX1
    z = (z ^ (z >> 27)) * _MIX2
    z = z ^ (z >> 31)
    return <double> (z >> 11) * _INV_2POW53


def run_block(plan, stream_state, count, max_transitions):
    """Sample ``count`` paths; returns (criticalities, status, bad_state)."""
    cdef int64_t[::1] sigma_ticks = plan.sigma_ticks
    cdef uint8_t[::1] chance_only = plan.chance_only
    cdef double[::1] rate = plan.rate
    cdef double[::1] terminal = plan.terminal
    cdef int32_t[::1] int_off = plan.int_off
    cdef int32_t[::1] int_target = plan.int_target
    cdef double[::1] int_cum = plan.int_cum
    cdef int64_t[::1] occ_ticks = plan.occ_ticks
    cdef int32_t[::1] alt_off = plan.alt_off
    cdef double[::1] alt_cum = plan.alt_cum
    cdef int32_t[::1] react = plan.react
    cdef int32_t[::1] ext_off = plan.ext_off
    cdef int32_t[::1] ext_target = plan.ext_target
    cdef double[::1] ext_cum = plan.ext_cum

    cdef Py_ssize_t n_states = sigma_ticks.shape[0]
    cdef Py_ssize_t n_occ = occ_ticks.shape[0]
    cdef int64_t horizon = plan.horizon_ticks
    cdef double tick_len = plan.tick_len
    cdef int32_t initial = plan.initial

    cdef uint64_t state = <uint64_t> stream_state
    cdef int64_t n = count
    cdef int64_t guard = max_transitions

    crit_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] crit_out = crit_arr

    cdef int status = _OK
    cdef int32_t bad_state = -1
    cdef int64_t produced = 0

    cdef int64_t i, t_entry, sig, t_occ, dwell, residual, m
    cdef int32_t s, target, slot
    cdef Py_ssize_t k, ga, j, last
    cdef double u, crit

    if not chance_only[initial]:
        return [], ERR_DECISION, <int> initial

    with nogil:
        for i in range(n):
            s = initial
            t_entry = 0
            k = 0
            m = 0
            crit = 0.0
            while True:
                sig = sigma_ticks[s]
                t_occ = occ_ticks[k] if k < n_occ else -1
                if t_occ >= 0 and t_occ <= horizon and (sig < 0 or t_occ <= t_entry + sig):
                    u = _next_double(&state)
                    ga = alt_off[k]
                    last = alt_off[k + 1] - 1
                    while ga < last and u >= alt_cum[ga]:
                        ga += 1
                    slot = react[ga * n_states + s]
                    if slot < 0:
                        k += 1
                        continue
                    u = _next_double(&state)
                    j = ext_off[slot]
                    last = ext_off[slot + 1] - 1
                    while j < last and u >= ext_cum[j]:
                        j += 1
                    target = ext_target[j]
                    dwell = t_occ - t_entry
                    crit += rate[target] * (<double> dwell * tick_len)
                    if dwell > 0 and dwell == sigma_ticks[target]:
                        crit += terminal[target]
                    s = target
                    t_entry = t_occ
                    k += 1
                elif sig >= 0 and t_entry + sig <= horizon:
                    u = _next_double(&state)
                    j = int_off[s]
                    last = int_off[s + 1] - 1
                    while j < last and u >= int_cum[j]:
                        j += 1
                    target = int_target[j]
                    crit += rate[target] * (<double> sig * tick_len)
                    if sig > 0 and sig == sigma_ticks[target]:
                        crit += terminal[target]
                    s = target
                    t_entry = t_entry + sig
                else:
                    residual = horizon - t_entry
                    crit += rate[s] * (<double> residual * tick_len)
                    if residual > 0 and residual == sigma_ticks[s]:
                        crit += terminal[s]
                    break
                if not chance_only[s]:
                    status = _ERR_DECISION
                    bad_state = s
                    break
                m += 1
                if m > guard:
                    status = _ERR_GUARD
                    bad_state = s
                    break
            if status != _OK:
                break
            crit_out[i] = crit
            produced += 1

    if status != _OK:
        return crit_arr[:produced].tolist(), status, <int> bad_state
    return crit_arr.tolist(), OK, -1
