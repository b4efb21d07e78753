#!/usr/bin/env python3
"""Compare the compiled sampling kernel against its pure-Python twin.

Builds a mid-size tabular model with occasions and external reactions,
compiles it to a sampling plan, and times both executor lanes on the
same stream.  The two lanes must agree bit for bit; the printout shows
paths/second and the speedup.

Run:  python benchmarks/bench_sampling.py [N_SAMPLES]
"""

from __future__ import annotations

import sys
import time
from fractions import Fraction

from riskdevs import (
    Scenario,
    ScheduledOccasion,
    additive_criticality,
    behavior_of,
    load_model,
)
from riskdevs.montecarlo import build_plan, derive_stream
from riskdevs.montecarlo import sampler as py_sampler

try:
    from riskdevs.montecarlo import _kernel
except ImportError:
    _kernel = None


def _model():
    import json

    n_layers = 12
    states = []
    internal = []
    for layer in range(n_layers):
        for slot in range(3):
            sid = f"l{layer}s{slot}"
            states.append(
                {"id": sid, "sigma": "1/2", "criticality_rate": (layer % 4) * 0.25,
                 "terminal_criticality": 0.5 if slot == 2 else 0}
            )
            nxt = (layer + 1) % n_layers
            internal.append(
                {
                    "from": sid,
                    "to": [
                        {"target": f"l{nxt}s0", "p": "1/2"},
                        {"target": f"l{nxt}s1", "p": "1/3"},
                        {"target": f"l{nxt}s2", "p": "1/6"},
                    ],
                }
            )
    external = [
        {"from": f"l{layer}s0", "events": ["kick"], "to": [{"target": "l0s2", "p": "1"}]}
        for layer in range(n_layers)
    ]
    doc = {
        "states": states,
        "events": ["kick"],
        "initial": "l0s0",
        "internal": internal,
        "external": external,
    }
    return load_model(json.dumps(doc))


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 200_000
    model = _model()
    behavior = behavior_of(model)
    occasions = tuple(
        ScheduledOccasion(
            at=Fraction(2 * k + 1, 4),
            alternatives=((frozenset(("kick",)), Fraction(1, 10)), (frozenset(), Fraction(9, 10))),
        )
        for k in range(6)
    )
    scenario = Scenario(horizon=Fraction(20), occasions=occasions)
    c = additive_criticality(behavior)
    plan = build_plan(behavior, model.initial, scenario, c.per_state_linear)
    assert plan is not None, "model failed to compile to a sampling plan"
    stream = derive_stream(20240810, 0)

    def bench(run, label):
        started = time.perf_counter()
        values, status, _ = run(plan, stream, n, 1_000_000)
        elapsed = time.perf_counter() - started
        assert status == 0
        rate = n / elapsed
        print(f"{label:>10}: {elapsed:8.3f}s  {rate:12,.0f} paths/s")
        return values, elapsed

    print(f"sampling {n:,} paths, ~40 transitions each")
    py_values, py_time = bench(py_sampler.run_block, "python")
    if _kernel is None:
        print("compiled kernel not available; nothing to compare")
        return 0
    c_values, c_time = bench(_kernel.run_block, "cython")
    identical = py_values == c_values
    print(f"bit-identical results: {identical}")
    print(f"speedup: {py_time / c_time:,.1f}x")
    return 0 if identical else 1


if __name__ == "__main__":
    sys.exit(main())
