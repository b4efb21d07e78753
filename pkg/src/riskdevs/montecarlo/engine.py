"""Monte Carlo estimation of the aggregate risk.

Paths are sampled proportionally to their probability, so the sample
mean of path criticality is an unbiased estimate of the exact
probability-weighted sum.  Tabular models with per-state linear
criticality are compiled to flat tables and executed by the fastest
available lane (Cython kernel, else its pure-Python twin, bit-identical
either way); everything else walks the behavior objects directly.

Attacker and defender states are refused: silently randomizing an
adversary would misstate the risk.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from ..errors import DecisionNodeInSamplingError, ZeroDelayCycleError
from ..model import ModelBehavior, NodeRole, Scenario, StateId
from ..rational import is_infinite
from ..risk import (
    MODE_MONTE_CARLO,
    CriticalityFunction,
    Estimate,
    RiskReport,
    effect_sequence,
)
from ..tree import PathElement, SimulationPath
from . import sampler
from .plan import build_plan
from .rng import ALGORITHM, SplitMix64, derive_stream

try:
    from . import _kernel
except ImportError:  # pragma: no cover - build-dependent
    _kernel = None

DEFAULT_MAX_TRANSITIONS = 10_000


def active_kernel() -> str:
    """Which executor lane compiled plans will run on."""
    return "cython" if _kernel is not None else "python"


@dataclass(frozen=True)
class SamplerConfig:
    sample_count: int
    seed: int
    max_path_transitions: int = DEFAULT_MAX_TRANSITIONS
    workers: int = 1

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        if not 0 <= self.seed < 1 << 64:
            raise ValueError("seed must fit in 64 bits")
        if self.max_path_transitions < 1:
            raise ValueError("max_path_transitions must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


def sample_path(
    behavior: ModelBehavior,
    initial: StateId,
    scenario: Scenario,
    rng: SplitMix64,
    *,
    max_transitions: int = DEFAULT_MAX_TRANSITIONS,
) -> SimulationPath:
    """Roll one evolution, drawing every stochastic branch from ``rng``."""
    horizon = scenario.horizon
    occasions = scenario.occasions
    _refuse_decisions(behavior, initial)

    state = initial
    entered_at = Fraction(0)
    k = 0
    transitions = 0
    elements = []
    while True:
        sigma = behavior.sigma(state)
        expiry = None if is_infinite(sigma) else entered_at + sigma
        occ = occasions[k] if k < len(occasions) else None
        if occ is not None and occ.at <= horizon and (expiry is None or occ.at <= expiry):
            elapsed = occ.at - entered_at
            events = _draw(rng, occ.alternatives)
            dist = behavior.external_dist(state, elapsed, events) if events else None
            if dist is None:
                k += 1
                continue
            target = _draw(rng, dist.entries)
            elements.append(PathElement(target, elapsed, events))
            state = target
            entered_at = occ.at
            k += 1
        elif expiry is not None and expiry <= horizon:
            target = _draw(rng, behavior.internal_dist(state).entries)
            elements.append(PathElement(target, sigma, frozenset()))
            state = target
            entered_at = expiry
        else:
            return SimulationPath(
                initial=initial,
                elements=tuple(elements),
                residual=horizon - entered_at,
                horizon=horizon,
            )
        _refuse_decisions(behavior, state)
        transitions += 1
        if transitions > max_transitions:
            raise ZeroDelayCycleError(
                f"sampled path exceeded {max_transitions} transitions; "
                "suspected zero-delay cycle"
            )


def _draw(rng: SplitMix64, weighted):
    """Pick an entry by its exact cumulative threshold, one uniform draw."""
    u = rng.next_double()
    acc = Fraction(0)
    last = len(weighted) - 1
    for i, (value, p) in enumerate(weighted):
        if i == last:
            return value
        acc += p
        if u < float(acc):
            return value
    raise AssertionError("unreachable")


def _refuse_decisions(behavior, state):
    if behavior.role(state) is not NodeRole.CHANCE:
        raise DecisionNodeInSamplingError(
            f"state {state!r} is a decision point; sampling would misstate "
            "adversarial risk (use minimax mode)"
        )


def estimate_risk(
    behavior: ModelBehavior,
    initial: StateId,
    scenario: Scenario,
    c: CriticalityFunction,
    config: SamplerConfig,
) -> RiskReport:
    """Sample-mean estimate of the aggregate risk with its standard error."""
    plan = build_plan(behavior, initial, scenario, c.per_state_linear)
    if plan is not None:
        values = _run_plan(plan, config)
    else:
        values = _run_generic(behavior, initial, scenario, c, config)

    n = len(values)
    mean = math.fsum(values) / n
    if n > 1:
        variance = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
        std_error = math.sqrt(variance / n)
    else:
        std_error = 0.0
    estimate = Estimate(
        mean=mean,
        standard_error=std_error,
        sample_count=n,
        min_criticality=min(values),
        max_criticality=max(values),
    )
    return RiskReport(
        total_risk=mean,
        horizon=scenario.horizon,
        mode=MODE_MONTE_CARLO,
        path_count=n,
        estimator=estimate,
        estimator_extra=(("seed", config.seed), ("rng", ALGORITHM)),
        metadata=(
            ("criticality", c.name),
            ("rng", ALGORITHM),
            ("workers", config.workers),
        ),
    )


def _partition(total: int, workers: int) -> list:
    base, rem = divmod(total, workers)
    return [base + (1 if w < rem else 0) for w in range(workers)]


def _run_plan(plan, config: SamplerConfig) -> list:
    run = _kernel.run_block if _kernel is not None else sampler.run_block
    counts = _partition(config.sample_count, config.workers)
    jobs = [
        (derive_stream(config.seed, w), count)
        for w, count in enumerate(counts)
        if count > 0
    ]
    if len(jobs) > 1 and _kernel is not None:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            results = list(
                pool.map(
                    lambda job: run(plan, job[0], job[1], config.max_path_transitions), jobs
                )
            )
    else:
        results = [run(plan, s, n, config.max_path_transitions) for s, n in jobs]

    values: list = []
    for block, status, bad in results:
        if status == sampler.ERR_DECISION:
            raise DecisionNodeInSamplingError(
                f"state {plan.state_ids[bad]!r} is a decision point; sampling "
                "would misstate adversarial risk (use minimax mode)"
            )
        if status == sampler.ERR_GUARD:
            raise ZeroDelayCycleError(
                f"sampled path exceeded {config.max_path_transitions} transitions; "
                "suspected zero-delay cycle"
            )
        values.extend(block)
    return values


def _run_generic(behavior, initial, scenario, c, config: SamplerConfig) -> list:
    values = []
    for w, count in enumerate(_partition(config.sample_count, config.workers)):
        rng = SplitMix64(derive_stream(config.seed, w))
        for _ in range(count):
            path = sample_path(
                behavior,
                initial,
                scenario,
                rng,
                max_transitions=config.max_path_transitions,
            )
            values.append(c.evaluate(effect_sequence(path)))
    return values
