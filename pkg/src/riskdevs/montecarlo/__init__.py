"""Monte Carlo risk estimation: seeded, reproducible path sampling."""

from .engine import (
    DEFAULT_MAX_TRANSITIONS,
    SamplerConfig,
    active_kernel,
    estimate_risk,
    sample_path,
)
from .plan import SamplingPlan, build_plan
from .rng import ALGORITHM, SplitMix64, derive_stream, mix64

__all__ = [
    "ALGORITHM",
    "DEFAULT_MAX_TRANSITIONS",
    "SamplerConfig",
    "SamplingPlan",
    "SplitMix64",
    "active_kernel",
    "build_plan",
    "derive_stream",
    "estimate_risk",
    "mix64",
    "sample_path",
]
