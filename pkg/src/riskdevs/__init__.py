"""riskdevs: stochastic discrete-event risk assessment.

Models a system as states with exact-rational lifetimes and stochastic
transitions, enumerates every possible evolution up to a time horizon,
and aggregates per-path probability times criticality into a single
risk value.  Attacker/defender decision states switch the aggregation
to minimax; large trees can be estimated by seeded Monte Carlo instead.
A power-grid cascading-failure model builder is included.
"""

from .adversarial import (
    DecisionAssignment,
    MinimaxResult,
    bound_suite,
    evaluate_assignment,
    minimax_risk,
)
from .errors import (
    DecisionNodeInSamplingError,
    ExplosionLimitError,
    GridSpecError,
    IncompatibleEndpointsError,
    InvalidRuleError,
    ModeMismatchError,
    NoInternalTransitionError,
    NonAdditiveCriticalityError,
    NonpositiveCapacityError,
    ParseError,
    PathNotInLanguageError,
    PrefixNotFoundError,
    RiskEngineError,
    SemanticError,
    SplitIndexError,
    UnknownStateError,
    ZeroDelayCycleError,
)
from .model import (
    ModelBehavior,
    NodeRole,
    ScheduledOccasion,
    Scenario,
    StateSpec,
    TabularBehavior,
    TabularModel,
    TotalState,
    TransitionDistribution,
    behavior_of,
    load_model,
    load_scenario,
    materialize,
    serialize_model,
    serialize_scenario,
    step_internal,
)
from .montecarlo import SamplerConfig, active_kernel, estimate_risk, sample_path
from .powergrid import (
    ADVERSARIAL,
    STOCHASTIC,
    CycleParams,
    GridBehavior,
    GridSpec,
    GridState,
    cascade_depth,
    compile_grid,
    failure_probability,
    load_grid,
    solve_flow,
)
from .rational import INFINITY, Duration, parse_duration
from .risk import (
    ADD,
    MULTIPLY,
    CorrelationRule,
    CriticalityFunction,
    Estimate,
    PathRisk,
    RiskReport,
    additive_criticality,
    aggregate_risk,
    correlated_criticality,
    effect_sequence,
    initial_state_risk,
    path_probability,
    path_risk,
    total_probability,
)
from .tree import (
    Cause,
    Language,
    PathElement,
    SimulationPath,
    TreeNode,
    build_tree,
    concat,
    dump_tree,
    enumerate_paths,
    prefix_path,
    subset_with_prefix,
    successors,
    suffix_path,
)

__version__ = "0.1.0"


def demo_grid_path() -> str:
    """Path of the bundled eight-node demonstration grid."""
    import os

    return os.path.join(os.path.dirname(__file__), "fixtures", "demo_grid.json")
