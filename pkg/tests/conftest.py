from __future__ import annotations

import json
from fractions import Fraction

import pytest

from riskdevs import Scenario, behavior_of, load_model


TWO_BRANCH_DOC = json.dumps(
    {
        "states": [
            {"id": "A", "sigma": "1", "criticality_rate": 0},
            {"id": "B", "sigma": "inf", "criticality_rate": 2},
            {"id": "C", "sigma": "inf", "criticality_rate": "1/2"},
        ],
        "events": [],
        "initial": "A",
        "internal": [
            {"from": "A", "to": [{"target": "B", "p": "3/10"}, {"target": "C", "p": "7/10"}]}
        ],
        "external": [],
    }
)

# one fault branch: tenth of the mass runs through a loss-rate-5 state
FOUR_STATE_DOC = json.dumps(
    {
        "states": [
            {"id": "run", "sigma": "1", "criticality_rate": 0},
            {"id": "ok2", "sigma": "1", "criticality_rate": 0},
            {"id": "fail", "sigma": "1", "criticality_rate": 5},
            {"id": "done", "sigma": "inf", "criticality_rate": 0},
        ],
        "events": [],
        "initial": "run",
        "internal": [
            {
                "from": "run",
                "to": [{"target": "ok2", "p": "9/10"}, {"target": "fail", "p": "1/10"}],
            },
            {"from": "ok2", "to": [{"target": "done", "p": "1"}]},
            {"from": "fail", "to": [{"target": "done", "p": "1"}]},
        ],
        "external": [],
    }
)
FOUR_STATE_EXACT_RISK = 0.5  # 1/10 of paths dwell one unit in the rate-5 state


@pytest.fixture
def two_branch():
    model = load_model(TWO_BRANCH_DOC)
    return model, behavior_of(model), Scenario(horizon=Fraction(2))


@pytest.fixture
def four_state():
    model = load_model(FOUR_STATE_DOC)
    return model, behavior_of(model), Scenario(horizon=Fraction(2))
