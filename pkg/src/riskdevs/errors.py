"""Exception types raised by the risk engine.

Every exception carries a stable ``code`` string so CLI diagnostics and
tests can match on the failure kind rather than on message wording.
"""

from __future__ import annotations


class RiskEngineError(Exception):
    """Base class for all engine errors."""

    code = "ERROR"

    def __init__(self, message: str, *, path: str | None = None):
        # path: dotted location inside an input document, when applicable
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class ParseError(RiskEngineError):
    """Input document is not syntactically valid."""

    code = "PARSE_ERROR"


class SemanticError(RiskEngineError):
    """Input document parses but violates a model invariant."""

    code = "SEMANTIC_ERROR"


class UnknownStateError(RiskEngineError):
    code = "UNKNOWN_STATE"


class NoInternalTransitionError(RiskEngineError):
    """Requested the internal successor of a passive state."""

    code = "NO_INTERNAL_TRANSITION"


class ZeroDelayCycleError(RiskEngineError):
    """Too many consecutive transitions without time advancing."""

    code = "ZERO_DELAY_CYCLE"


class ExplosionLimitError(RiskEngineError):
    """Evolution tree exceeded the configured node budget."""

    code = "EXPLOSION_LIMIT"


class IncompatibleEndpointsError(RiskEngineError):
    code = "INCOMPATIBLE_ENDPOINTS"


class SplitIndexError(RiskEngineError):
    code = "INDEX_OUT_OF_RANGE"


class PrefixNotFoundError(RiskEngineError):
    code = "PREFIX_NOT_FOUND"


class PathNotInLanguageError(RiskEngineError):
    code = "PATH_NOT_IN_LANGUAGE"


class InvalidRuleError(RiskEngineError):
    code = "INVALID_RULE"


class NonAdditiveCriticalityError(RiskEngineError):
    """Correlated criticality requested where only the additive recursion works."""

    code = "NON_ADDITIVE_CRITICALITY_UNSUPPORTED"


class DecisionNodeInSamplingError(RiskEngineError):
    """Attacker/defender states cannot be sampled as if they were chance."""

    code = "DECISION_NODE_IN_SAMPLING_MODE"


class NonpositiveCapacityError(RiskEngineError):
    code = "NONPOSITIVE_CAPACITY"


class GridSpecError(RiskEngineError):
    code = "SPEC_ERROR"


class ModeMismatchError(RiskEngineError):
    code = "MODE_MISMATCH"
