"""Shared fixtures for the expensive study runs.

The classification table and the convergence curves are reused by both
their unit tests and the acceptance suite, so they are computed once per
session.
"""

import pytest

from casereg.asymptotics import equivalence_curve
from casereg.simulate import ClassificationScenario, run_classification_study

TABLE_SEPARATIONS = ("easy", "intermediate", "hard")
TABLE_FLIPS = (0.0, 0.05, 0.10)


@pytest.fixture(scope="session")
def classification_studies():
    out = {}
    for sep in TABLE_SEPARATIONS:
        for flip in TABLE_FLIPS:
            scenario = ClassificationScenario(
                separation=sep, flip_fraction=flip, seed=0
            )
            out[sep, flip] = run_classification_study(scenario, replicates=400)
    return out


@pytest.fixture(scope="session")
def equivalence_curves():
    return {
        alpha: equivalence_curve(0.3, alpha, seed=5, replicates=200)
        for alpha in (0.4, 0.0, 0.5)
    }
